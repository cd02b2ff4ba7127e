#!/usr/bin/env python3
"""Run the nine acceptance checks and print one PASS/FAIL line each.

Exit status is 0 only if every criterion passes.
"""
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

import test_acceptance as acc  # noqa: E402


def main() -> int:
    tests = sorted((name, fn) for name, fn in vars(acc).items() if name.startswith("test_"))
    for name, fn in tests:
        try:
            fn()
        except AssertionError:
            pass  # the verdict line was already printed
    failed = [line for line in acc.RESULTS.values() if " FAIL " in line]
    print(f"{len(tests) - len(failed)}/{len(tests)} criteria pass")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
