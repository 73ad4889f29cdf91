"""Derivative-free simplex minimizer used by the CRPS trainer.

A standard Nelder-Mead reflect/expand/contract/shrink loop with the
termination rule the trainer contracts to: stop once the spread of
objective values across the simplex falls under ``ftol`` (no step in a full
iteration can improve the incumbent by that much) or the evaluation budget
``max_evals`` is exhausted. Fully deterministic for a given start point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    n_evals: int
    converged: bool
    trace: list = field(default_factory=list)  # best value after each iteration


def nelder_mead(
    func,
    x0,
    ftol: float = 1e-8,
    max_evals: int | None = None,
    initial_step: float = 0.1,
    steps=None,
) -> SimplexResult:
    """Minimize ``func`` from ``x0``; budget defaults to 500 per dimension.

    ``steps`` sets explicit per-coordinate initial simplex offsets (e.g.
    parameter standard errors); otherwise offsets are relative to |x0|.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if max_evals is None:
        max_evals = 500 * n

    sim = np.tile(x0, (n + 1, 1))
    for i in range(n):
        if steps is not None:
            step = float(steps[i])
        else:
            step = initial_step * abs(x0[i]) if x0[i] != 0.0 else 0.1 * initial_step
        sim[i + 1, i] += step
    fx = np.array([func(p) for p in sim])
    n_evals = n + 1
    trace = [float(fx.min())]
    converged = False

    while n_evals < max_evals:
        order = np.argsort(fx, kind="stable")
        sim, fx = sim[order], fx[order]
        if fx[-1] - fx[0] < ftol:
            converged = True
            break

        centroid = sim[:-1].mean(axis=0)
        xr = 2.0 * centroid - sim[-1]
        fr = func(xr)
        n_evals += 1
        if fr < fx[0]:
            xe = centroid + 2.0 * (centroid - sim[-1])
            fe = func(xe)
            n_evals += 1
            if fe < fr:
                sim[-1], fx[-1] = xe, fe
            else:
                sim[-1], fx[-1] = xr, fr
        elif fr < fx[-2]:
            sim[-1], fx[-1] = xr, fr
        else:
            if fr < fx[-1]:
                xc = centroid + 0.5 * (xr - centroid)  # outside contraction
                fc = func(xc)
                n_evals += 1
                if fc <= fr:
                    sim[-1], fx[-1] = xc, fc
                else:
                    sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
                    fx[1:] = [func(p) for p in sim[1:]]
                    n_evals += n
            else:
                xc = centroid + 0.5 * (sim[-1] - centroid)  # inside contraction
                fc = func(xc)
                n_evals += 1
                if fc < fx[-1]:
                    sim[-1], fx[-1] = xc, fc
                else:
                    sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
                    fx[1:] = [func(p) for p in sim[1:]]
                    n_evals += n
        trace.append(min(trace[-1], float(fx.min())))

    best = int(np.argmin(fx))
    return SimplexResult(sim[best].copy(), float(fx[best]), n_evals, converged, trace)
