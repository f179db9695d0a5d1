"""Collects one PASS/FAIL line per acceptance criterion."""

LINES = []


def record(label: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    LINES.append(line)
    print(line)
