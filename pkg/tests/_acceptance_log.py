"""Shared sink for acceptance-criterion verdicts, printed at session end."""

RESULTS = []


def record(number: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" [{detail}]" if detail else ""
    RESULTS.append(f"criterion {number} ({name}): {status}{suffix}")
