"""Input-magnitude thresholds for opinion cascades.

The default route bisects on the input scale along a fixed direction,
integrating from the neutral state and testing the cascade verdict.  The
fold of the coupled equilibrium branch is available as an independent
cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cascades import CascadeCriteria, simulate_cascade
from .continuation import CoupledInputProblem, continue_branch
from .dynamics import AttentionParams, CoupledField, ModelParams, SystemState, _adj
from .graphs import Graph, compute_spectrum
from .integrate import IntegratorConfig, NewtonError, newton_equilibrium
from .reduction import critical_attention

__all__ = ["ThresholdError", "SaddleNodeResult", "find_cascade_threshold", "fold_threshold"]


class ThresholdError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SaddleNodeResult:
    direction: np.ndarray
    threshold_p: float
    bracket: tuple[float, float]
    equilibrium_at_fold: SystemState
    bisection_steps: int = 0

    def project(self, v_c) -> float:
        return abs(float(np.asarray(v_c) @ self.direction)) * self.threshold_p


def find_cascade_threshold(g, p: ModelParams, ap: AttentionParams, direction, bracket_hi: float,
                           crit: CascadeCriteria | None = None, rel_width: float = 1e-3,
                           integrator: IntegratorConfig | None = None) -> SaddleNodeResult:
    """Bisect the smallest input scale along ``direction`` that ignites a cascade.

    Both ends of the returned bracket are verified: below it the run from
    ``x = u = 0`` ends without a cascade, above it with one.
    """
    a = _adj(g)
    direction = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    crit = crit or CascadeCriteria()
    s = compute_spectrum(g if isinstance(g, Graph) else a)
    u_c = critical_attention(s, p).u_star
    if not ap.u_low < u_c:
        raise ThresholdError(f"u_low={ap.u_low:.6g} >= u_c={u_c:.6g}: the neutral state is not bistable-stable")

    def cascades(m):
        return simulate_cascade(a, p, ap, crit, m * direction, integrator=integrator)

    hi_out = cascades(bracket_hi)
    if not hi_out.cascaded:
        raise ThresholdError(f"no cascade at the bracket top {bracket_hi:.6g}; threshold above bracket or unreachable")
    lo, hi = 0.0, float(bracket_hi)
    lo_out = cascades(lo)
    if lo_out.cascaded:
        raise ThresholdError("cascade at zero input; no sign change in bracket")
    steps = 0
    while hi - lo > rel_width * hi:
        mid = 0.5 * (lo + hi)
        out = cascades(mid)
        if out.cascaded:
            hi = mid
        else:
            lo, lo_out = mid, out
        steps += 1

    # the run just below threshold lingers near the fold; polish it only if Newton stays close,
    # since past the fold the nearest equilibrium is on the cascaded branch
    f = CoupledField(p.with_input(lo * direction), ap, a)
    at_fold = lo_out.final_state
    try:
        eq = newton_equilibrium(f, f.jacobian, lo_out.final_state).as_state()
        if np.abs(eq.x - at_fold.x).max() < 0.05:
            at_fold = eq
    except NewtonError:
        pass
    return SaddleNodeResult(direction, hi, (lo, hi), at_fold, steps)


def fold_threshold(g, p: ModelParams, ap: AttentionParams, direction, m_max: float, v_c=None,
                   ds_max: float = 5e-3) -> float:
    """First fold in the input scale when continuing the low branch from ``b = 0``.

    Raises :class:`ThresholdError` if the branch reaches ``m_max`` without folding.
    """
    a = _adj(g)
    n = a.shape[0]
    problem = CoupledInputProblem(p, ap, a, direction, v_c)
    start = SystemState.neutral(n, ap.u_low).as_vector()
    branch = continue_branch(problem, start, 0.0, (-1e-12, m_max), ds=1e-4, ds_max=ds_max)
    if not branch.folds:
        raise ThresholdError(f"no fold on the low branch up to input scale {m_max:.6g}")
    return branch.folds[0].parameter_value
