"""Critical attention values and the reduced (Lyapunov-Schmidt) pitchfork model.

At ``u* = d / (alpha + lambda gamma)`` the Jacobian of the fixed-attention
dynamics at the origin has a single zero eigenvalue along ``v``.  Projecting
onto the left null vector ``w`` gives the scalar model::

    dz/dt = k1 (alpha + lambda gamma) u_hat z - 2 k2 d (alpha + lambda gamma)^2 z^3 + <w, b>

with ``k1 = <w, v>``, ``k2 = <w, v^3>`` and ``u_hat = u - u*``.  The cubic
coefficient is the third derivative of the projected field; the matching
Taylor coefficient is one sixth of it (``ReducedModel.taylor_cubic``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dynamics import ModelParams, SystemState, saturation_d2, interaction_matrix
from .graphs import Regime, Spectrum, SpectrumError, extreme_eigenpairs

__all__ = [
    "Criticality",
    "Unfolding",
    "CriticalPoint",
    "ReducedModel",
    "critical_attention",
    "critical_attention_any",
    "ls_coefficients",
    "reduced_rhs",
    "reduced_roots",
    "unfolding_direction",
    "predict_small_input_equilibrium",
    "ip_condition_diagnostic",
]

DEGENERATE_TOL = 1e-12


class Criticality(str, enum.Enum):
    SUPERCRITICAL = "supercritical"
    SUBCRITICAL = "subcritical"
    DEGENERATE = "degenerate"


class Unfolding(str, enum.Enum):
    SYMMETRIC = "symmetric"
    UPPER = "upper_branch"
    LOWER = "lower_branch"


@dataclass(frozen=True)
class CriticalPoint:
    eigenvalue: float
    u_star: float
    regime: str  # "agreement", "disagreement" or "other"
    simple: bool
    index: int = -1


def critical_attention_any(lam: float, p: ModelParams) -> float:
    """``u* = d / (alpha + lambda gamma)`` for any eigenvalue; may be negative."""
    denom = p.alpha + lam * p.gamma
    if abs(denom) <= DEGENERATE_TOL:
        raise ZeroDivisionError(f"alpha + lambda*gamma = {denom:.3g}; no critical attention value")
    return p.d / denom


def critical_attention(s: Spectrum, p: ModelParams) -> CriticalPoint:
    """``u_a`` (gamma > 0, from lambda_max) or ``u_d`` (gamma < 0, from lambda_min)."""
    agree, disagree = extreme_eigenpairs(s)
    pair, regime = (agree, Regime.AGREEMENT) if p.gamma > 0 else (disagree, Regime.DISAGREEMENT)
    if not pair.simple:
        raise SpectrumError(f"{regime.value} eigenvalue {np.real(pair.eigenvalue):.12g} is not simple")
    lam = float(np.real(pair.eigenvalue))
    return CriticalPoint(lam, critical_attention_any(lam, p), regime.value, True, pair.index)


def regime_of(p: ModelParams) -> Regime:
    return Regime.AGREEMENT if p.gamma > 0 else Regime.DISAGREEMENT


@dataclass(frozen=True)
class ReducedModel:
    eigenvalue: float
    u_star: float
    k1: float
    k2: float
    linear_gain: float
    cubic_coef: float
    input_gains: np.ndarray
    criticality: Criticality
    kernel: np.ndarray  # right null vector v

    @property
    def taylor_cubic(self) -> float:
        """Coefficient of z^3 in the Taylor expansion of the projected field."""
        return self.cubic_coef / 6.0


def ls_coefficients(s: Spectrum, lambda_index: int, p: ModelParams) -> ReducedModel:
    if not s.is_simple(lambda_index):
        raise SpectrumError(f"eigenvalue #{lambda_index} is not simple; reduction refused")
    lam = s.eigenvalues[lambda_index]
    if abs(np.imag(lam)) > s.gap_tolerance:
        raise SpectrumError(f"eigenvalue #{lambda_index} = {lam} is complex; reduction refused")
    lam = float(np.real(lam))
    v = np.real(s.right_eigenvectors[lambda_index])
    w = np.real(s.left_eigenvectors[lambda_index])
    k1 = float(w @ v)
    if k1 < 0:  # keep <w, v> > 0
        v = -v
        k1 = -k1
    k2 = float(w @ v**3)
    c = p.alpha + lam * p.gamma
    u_star = critical_attention_any(lam, p)
    if abs(k2) <= DEGENERATE_TOL:
        crit = Criticality.DEGENERATE
    elif np.sign(k2 / k1) * c > 0:
        crit = Criticality.SUPERCRITICAL
    else:
        crit = Criticality.SUBCRITICAL
    return ReducedModel(lam, u_star, k1, k2, k1 * c, -2.0 * k2 * p.d * c**2, w.copy(), crit, v.copy())


def reduced_rhs(z, u_hat, b, rm: ReducedModel):
    b = np.asarray(b, dtype=float)
    forcing = float(rm.input_gains @ b) if b.size else 0.0
    return rm.linear_gain * u_hat * z + rm.cubic_coef * z**3 + forcing


def reduced_roots(u_hat: float, b, rm: ReducedModel, taylor: bool = False) -> np.ndarray:
    """Real equilibria of the reduced cubic, ascending.

    ``taylor=True`` uses the Taylor-normalized cubic coefficient.
    """
    b = np.asarray(b, dtype=float)
    forcing = float(rm.input_gains @ b) if b.size else 0.0
    cubic = rm.taylor_cubic if taylor else rm.cubic_coef
    roots = np.roots([cubic, 0.0, rm.linear_gain * u_hat, forcing])
    real = np.real(roots[np.abs(np.imag(roots)) <= 1e-10 * max(1.0, np.max(np.abs(roots)))])
    return np.sort(real)


def unfolding_direction(b, rm: ReducedModel, tol: float = DEGENERATE_TOL) -> Unfolding:
    ip = float(rm.input_gains @ np.asarray(b, dtype=float))
    if abs(ip) <= tol:
        return Unfolding.SYMMETRIC
    return Unfolding.UPPER if ip > 0 else Unfolding.LOWER


def predict_small_input_equilibrium(s: Spectrum, p: ModelParams, u_low: float, b=None) -> np.ndarray:
    """Linear response ``x_s = -J_x^{-1} b`` of the neutral state, ``J_x = -d I + u_low (alpha I + gamma A)``.

    Undirected graphs use the eigen-expansion
    ``sum_i <v_i, b> v_i / (d - u_low (alpha + lambda_i gamma))``; directed
    graphs a direct solve.
    """
    b = p.input_for(s.size) if b is None else np.asarray(b, dtype=float)
    mu = p.d - u_low * (p.alpha + np.real(s.eigenvalues) * p.gamma)
    if np.any(np.abs(mu) <= 1e-12):
        raise ZeroDivisionError("u_low sits at a critical attention value; J_x is singular")
    if not s.directed:
        v = s.right_eigenvectors
        return ((v @ b) / mu) @ v
    jx = -p.d * np.eye(s.size) + u_low * interaction_matrix(p, s.adjacency)
    return -np.linalg.solve(jx, b)


def ip_condition_diagnostic(state, s: Spectrum, i: int, p: ModelParams, critical_index: int | None = None) -> float:
    """``<v_c, u ∘ v_c ∘ v_i ∘ S''((alpha I + gamma A) x)>`` at an equilibrium.

    ``state`` is a SystemState, an Equilibrium, or a flat ``(x, u)`` vector.
    """
    if hasattr(state, "as_state"):
        state = state.as_state()
    elif not isinstance(state, SystemState):
        state = SystemState.from_vector(state)
    if critical_index is None:
        agree, disagree = extreme_eigenpairs(s)
        critical_index = agree.index if p.gamma > 0 else disagree.index
    if abs(s.eigenvalues[i] - s.eigenvalues[critical_index]) <= s.gap_tolerance:
        raise ValueError(f"index {i} is the critical eigenvalue; the condition needs lambda_i != lambda_c")
    vc = np.real(s.right_eigenvectors[critical_index])
    vi = np.real(s.right_eigenvectors[i])
    s2 = saturation_d2(interaction_matrix(p, s.adjacency) @ state.x)
    return float(vc @ (state.u * vc * vi * s2))
