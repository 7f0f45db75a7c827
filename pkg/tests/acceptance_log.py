"""Shared record of acceptance verdicts, printed at the end of the pytest run."""

RESULTS: dict[int, str] = {}


def record(num: int, ok: bool, detail: str) -> bool:
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[num] = line
    print(line, flush=True)
    return ok
