"""Slow companion to the acceptance gate: exhaustive selector sweep n <= 16.

Run with ``pytest -m slow``.  The claim under test is the full-strength one:
at every admissible order n up to 16, every member cell must clear the n/30
integral bound with a nonempty selector.  The sweep asserts exactly that and
reports one line per order, so a genuinely failing order fails the test — by
design there is no allow-list softening the verdict.
"""

from __future__ import annotations

import time

import pytest

from walshdiv.counterexample import verify_lemma2


@pytest.mark.slow
def test_selector_integral_bound_full_sweep(capsys) -> None:
    failing: list[int] = []
    with capsys.disabled():
        print(flush=True)
        for n in range(1, 17):
            t0 = time.perf_counter()
            report = verify_lemma2(n)
            elapsed = time.perf_counter() - t0
            if not report.ok:
                failing.append(n)
            bad = [r.assertion for r in report.rows if r.verdict == "fail"]
            print(
                f"[{'PASS' if report.ok else 'FAIL'}] selector sweep n={n:2d} "
                f"({elapsed:.1f}s)" + (f" -- {'; '.join(bad)}" if bad else ""),
                flush=True,
            )
            assert elapsed < 300.0, f"n={n} exceeded the 5-minute budget"
    assert not failing, f"integral bound fails at n in {failing}"
