"""Trajectory integration, Newton equilibria and linear stability."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import SystemState, Trajectory

__all__ = [
    "Method",
    "Stability",
    "IntegratorConfig",
    "Equilibrium",
    "DivergenceError",
    "StepUnderflowError",
    "NewtonError",
    "SingularJacobianError",
    "integrate",
    "integrate_final",
    "newton_equilibrium",
    "classify_stability",
    "stability_from_eigenvalues",
]

DIVERGENCE_LIMIT = 1e6
STABILITY_MARGIN = 1e-7


class Method(str, enum.Enum):
    RK4_FIXED = "rk4_fixed"
    RK45_ADAPTIVE = "rk45_adaptive"


class Stability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


class DivergenceError(ArithmeticError):
    pass


class StepUnderflowError(ArithmeticError):
    pass


class NewtonError(ArithmeticError):
    pass


class SingularJacobianError(NewtonError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    ``sample_dt`` (adaptive only) records on a uniform grid instead of at
    every ``record_stride``-th accepted step.
    """

    method: Method = Method.RK45_ADAPTIVE
    step: float = 0.01
    rtol: float = 1e-6
    atol: float = 1e-9
    t_end: float = 500.0
    record_stride: int = 1
    sample_dt: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")


def _as_vector(s0):
    if isinstance(s0, SystemState):
        return s0.as_vector(), True
    return np.asarray(s0, dtype=float).copy(), False


def _rk4(f, y0, cfg):
    nsteps = int(np.ceil(cfg.t_end / cfg.step - 1e-9))
    h = cfg.t_end / nsteps
    y = y0
    ts, ys = [0.0], [y0.copy()]
    for k in range(1, nsteps + 1):
        t = (k - 1) * h
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > DIVERGENCE_LIMIT:
            raise DivergenceError(f"state norm exceeded {DIVERGENCE_LIMIT:g} at t={k * h:.6g}")
        if k % cfg.record_stride == 0 or k == nsteps:
            ts.append(k * h)
            ys.append(y.copy())
    return np.array(ts), np.array(ys)


def _rk45(f, y0, cfg):
    def blowup(t, y):
        return DIVERGENCE_LIMIT - np.max(np.abs(y))

    blowup.terminal = True
    t_eval = None
    if cfg.sample_dt is not None:
        t_eval = np.arange(0.0, cfg.t_end, cfg.sample_dt)
        t_eval = np.append(t_eval, cfg.t_end)
    sol = solve_ivp(f, (0.0, cfg.t_end), y0, method="RK45", rtol=cfg.rtol, atol=cfg.atol,
                    t_eval=t_eval, events=blowup)
    if sol.status == 1:
        raise DivergenceError(f"state norm exceeded {DIVERGENCE_LIMIT:g} at t={sol.t_events[0][0]:.6g}")
    if sol.status != 0:
        raise StepUnderflowError(sol.message)
    ts, ys = sol.t, sol.y.T
    if t_eval is None and cfg.record_stride > 1:
        keep = np.arange(0, ts.size, cfg.record_stride)
        if keep[-1] != ts.size - 1:
            keep = np.append(keep, ts.size - 1)
        ts, ys = ts[keep], ys[keep]
    return ts, ys


def _integrate_arrays(rhs, y0, cfg):
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")

    def f(t, y):
        return rhs(y)

    if cfg.method is Method.RK4_FIXED:
        return _rk4(f, y0, cfg)
    return _rk45(f, y0, cfg)


def integrate(rhs: Callable[[np.ndarray], np.ndarray], s0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate ``dy/dt = rhs(y)`` from ``s0`` over ``[0, cfg.t_end]``.

    ``rhs`` acts on flat vectors.  A :class:`SystemState` start is flattened
    as ``(x, u)`` and the trajectory holds SystemStates; a plain vector start
    gives a trajectory whose states carry the vector as ``x`` and an all-zero
    ``u``.
    """
    y0, is_state = _as_vector(s0)
    ts, ys = _integrate_arrays(rhs, y0, cfg)
    if is_state:
        states = [SystemState.from_vector(y) for y in ys]
    else:
        states = [SystemState(y, np.zeros_like(y)) for y in ys]
    return Trajectory(ts, states)


def integrate_final(rhs, s0, cfg: IntegratorConfig) -> np.ndarray:
    """Final flat state only; skips building the Trajectory."""
    y0, _ = _as_vector(s0)
    cfg_final = IntegratorConfig(cfg.method, cfg.step, cfg.rtol, cfg.atol, cfg.t_end,
                                 record_stride=10**9 if cfg.method is Method.RK4_FIXED else 1)
    _, ys = _integrate_arrays(rhs, y0, cfg_final)
    return ys[-1]


# ---------------------------------------------------------------------------
# equilibria


def stability_from_eigenvalues(eigs, margin: float = STABILITY_MARGIN) -> Stability:
    lead = np.max(np.real(eigs))
    if lead < -margin:
        return Stability.STABLE
    if lead > margin:
        return Stability.UNSTABLE
    return Stability.MARGINAL


@dataclass(frozen=True)
class Equilibrium:
    state: np.ndarray
    residual_norm: float
    jacobian_eigenvalues: np.ndarray
    stability: Stability
    leading_eigenvalue: complex
    iterations: int = 0
    residual_history: tuple[float, ...] = ()

    def as_state(self) -> SystemState:
        return SystemState.from_vector(self.state)


def classify_stability(eq: Equilibrium, margin: float = STABILITY_MARGIN) -> Stability:
    return stability_from_eigenvalues(eq.jacobian_eigenvalues, margin)


def _solve(jac, r):
    # LAPACK happily solves numerically singular systems; guard on conditioning
    cond = np.linalg.cond(jac)
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularJacobianError(f"Jacobian is singular to working precision (cond={cond:.3g}); near a fold?")
    return np.linalg.solve(jac, r)


def equilibrium_at(y, rhs, jacobian, margin: float = STABILITY_MARGIN, iterations: int = 0, history=()) -> Equilibrium:
    y = np.asarray(y, dtype=float)
    eigs = np.linalg.eigvals(jacobian(y))
    lead = eigs[np.argmax(np.real(eigs))]
    return Equilibrium(y, float(np.max(np.abs(rhs(y)))), eigs, stability_from_eigenvalues(eigs, margin),
                       lead, iterations, tuple(history))


def newton_equilibrium(rhs, jacobian, guess, tol: float = 1e-10, max_iter: int = 50,
                       margin: float = STABILITY_MARGIN) -> Equilibrium:
    """Damped Newton iteration for ``rhs(y) = 0``.

    A step that increases the residual is halved up to 20 times.  Raises
    :class:`SingularJacobianError` when the linear solve is ill-posed and
    :class:`NewtonError` after ``max_iter`` iterations.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    y, _ = _as_vector(guess)
    r = rhs(y)
    res = float(np.max(np.abs(r)))
    history = [res]
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NewtonError(f"no convergence in {max_iter} iterations (residual {res:.3e})")
        dy = _solve(jacobian(y), -r)
        lam = 1.0
        for _ in range(21):
            y_try = y + lam * dy
            r_try = rhs(y_try)
            res_try = float(np.max(np.abs(r_try)))
            if np.isfinite(res_try) and (res_try < res or res_try <= tol):
                break
            lam *= 0.5
        else:
            raise NewtonError(f"damping failed to reduce residual {res:.3e}")
        y, r, res = y_try, r_try, res_try
        history.append(res)
        it += 1
    return equilibrium_at(y, rhs, jacobian, margin, it, history)
