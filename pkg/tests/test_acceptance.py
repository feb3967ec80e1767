"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test prints a single ``[PASS]``/``[FAIL]`` line with the worst
residual/tolerance ratio over the criterion's sub-checks.
"""

from __future__ import annotations

import time

import pytest

from muband.checks import ACCEPTANCE, FAIL, run_criterion


@pytest.mark.parametrize("criterion", ACCEPTANCE, ids=lambda c: f"{c.number:02d}_{c.name}")
def test_acceptance_criterion(criterion, capsys):
    start = time.perf_counter()
    rec, subs = run_criterion(criterion)
    elapsed = time.perf_counter() - start
    failing = [s for s in subs if s.status == FAIL]
    line = (f"[{'PASS' if rec.passed else 'FAIL'}] {criterion.number} {criterion.name} "
            f"worst={rec.residual:.3g} ({len(subs)} sub-checks, {elapsed:.1f}s)")
    with capsys.disabled():
        print("\n" + line)
        for s in failing:
            print(f"    {s.name}: residual={s.residual:.3e} tol={s.tolerance:.1e} {s.detail}")
    assert subs, "criterion produced no sub-checks"
    assert rec.passed, "; ".join(s.name for s in failing)
    assert elapsed < 10.0
