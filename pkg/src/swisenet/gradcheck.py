"""Finite-difference verification of the analytic gradients.

Central differences in double precision: for each checked parameter
element p, compares the tape gradient against
(f(p+eps) - f(p-eps)) / (2*eps) with eps = base_eps * max(1, |p|).
"""

import numpy as np

from .tensor import Tape, backward


def grad_check(build, params, base_eps=1e-4, max_elements=None, seed=0,
               min_grad=0.0):
    """Return the maximum relative gradient error over the given parameters.

    build: callable(tape) -> scalar loss Tensor; must be deterministic and
    re-evaluate the whole program from the current parameter values.
    max_elements: optional per-parameter cap; elements are then sampled
    with the given seed (full sweep when None).
    min_grad: elements where both the analytic and the numeric gradient
    fall below this magnitude count as agreeing; central differences
    cannot resolve gradients under the ~|loss|*1e-16/eps noise floor.
    """
    report = grad_check_report(build, params, base_eps, max_elements, seed,
                               min_grad)
    return max(report.values()) if report else 0.0


def grad_check_report(build, params, base_eps=1e-4, max_elements=None, seed=0,
                      min_grad=0.0):
    """Per-parameter max relative error, as a name -> float dict."""
    tape = Tape()
    loss = build(tape)
    backward(tape, loss)
    analytic = {}
    for p in params:
        g = p.tensor.grad
        analytic[p.name] = (
            g.copy() if g is not None else np.zeros_like(p.tensor.data)
        )
    rng = np.random.default_rng(seed)
    report = {}
    for p in params:
        flat = p.tensor.data.reshape(-1)
        ana = analytic[p.name].reshape(-1)
        n = flat.size
        if max_elements is not None and n > max_elements:
            indices = rng.choice(n, size=max_elements, replace=False)
        else:
            indices = range(n)
        worst = 0.0
        for i in indices:
            orig = flat[i]
            eps = base_eps * max(1.0, abs(orig))
            flat[i] = orig + eps
            lp = build(None).item()
            flat[i] = orig - eps
            lm = build(None).item()
            flat[i] = orig
            num = (lp - lm) / (2.0 * eps)
            if abs(ana[i]) < min_grad and abs(num) < min_grad:
                continue
            rel = abs(ana[i] - num) / max(abs(ana[i]), abs(num), 1e-8)
            worst = max(worst, rel)
        report[p.name] = worst
    return report
