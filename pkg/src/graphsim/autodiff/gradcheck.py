from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tape, Tensor


# Denominator floor for the relative error.  Central differences of a loss of
# order 1 carry roundoff near eps / h ~ 1e-11, so exactly-zero analytic
# gradients would otherwise score as large relative errors.
REL_FLOOR = 1e-6


def finite_diff_gradcheck(loss_fn: Callable[[], Tensor], params: Sequence[Tensor],
                          h: float = 1e-5, floor: float = REL_FLOOR) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``loss_fn`` is re-evaluated after in-place perturbation of each parameter
    entry.  The relative error of an entry is ``|a - n| / max(|a|, |n|, floor)``.
    """
    errors = gradcheck_report(loss_fn, params, h, floor)
    return max(errors.values(), default=0.0)


def gradcheck_report(loss_fn: Callable[[], Tensor], params: Sequence[Tensor],
                     h: float = 1e-5, floor: float = REL_FLOOR) -> dict[str, float]:
    """Per-parameter max relative error, keyed by parameter name (or position)."""
    with Tape() as tape:
        loss = loss_fn()
    analytic = tape.gradient(loss, params)
    report = {}
    for k, (p, a) in enumerate(zip(params, analytic)):
        flat = p.value.reshape(-1)
        a = a.reshape(-1)
        worst = 0.0
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = float(loss_fn().value)
            flat[idx] = orig - h
            down = float(loss_fn().value)
            flat[idx] = orig
            num = (up - down) / (2.0 * h)
            err = abs(a[idx] - num) / max(abs(a[idx]), abs(num), floor)
            worst = max(worst, err)
        report[p.name or f"param{k}"] = worst
    return report
