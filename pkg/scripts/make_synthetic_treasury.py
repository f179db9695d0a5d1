"""Regenerate the bundled synthetic 10-year-rate sample.

The series is a simulated two-regime threshold OU path, rounded to two
decimals and laid on consecutive business days. It stands in for the
public daily 10-year constant-maturity series, which is not shipped.
"""

import argparse
import datetime as dt
from pathlib import Path

import numpy as np

from thresholdou.ingest import atomic_write_text
from thresholdou.model import ThresholdOUModel
from thresholdou.simulate import SimulationPlan, euler_simulate

MODEL = ThresholdOUModel((3.51,), (0.018, 0.062), (0.058, 0.215), (0.254, 0.280))
START, END = dt.date(2002, 1, 2), dt.date(2022, 9, 16)


def business_days(start, end):
    day = start
    while day <= end:
        if day.weekday() < 5:
            yield day
        day += dt.timedelta(days=1)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=20221)
    parser.add_argument("--x0", type=float, default=5.03)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1]
                                             / "src/thresholdou/data/treasury10y_synthetic.csv"))
    args = parser.parse_args()
    days = list(business_days(START, END))
    path = euler_simulate(SimulationPlan(MODEL, args.x0, len(days) - 1, 0.046, args.seed))
    lines = ["DATE,DGS10_SYNTHETIC"]
    lines += [f"{d.isoformat()},{v:.2f}" for d, v in zip(days, np.round(path.values, 2))]
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote {len(days)} rows to {args.out}")


if __name__ == "__main__":
    main()
