"""Opinion dynamics with fixed or feedback-driven attention.

Opinion update for agent i::

    dx_i/dt = -d x_i + u_i S(alpha x_i + gamma sum_k a_ik x_k) + b_i

with ``S = tanh``.  With attention feedback each agent also runs::

    tau_u du_i/dt = -u_i + S_u(x_i^2 + sum_k (a_ik x_k)^2)

where ``S_u`` is a Hill activation between ``u_low`` and ``u_high``.
Everything here is a pure function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .graphs import Graph, adjacency_matrix

__all__ = [
    "ModelParams",
    "AttentionParams",
    "SystemState",
    "Trajectory",
    "saturation",
    "saturation_d1",
    "saturation_d2",
    "hill",
    "hill_d1",
    "interaction_matrix",
    "rhs_fixed",
    "rhs_coupled",
    "jacobian_fixed",
    "jacobian_coupled",
    "CoupledField",
]


def _adj(g) -> np.ndarray:
    return adjacency_matrix(g) if isinstance(g, Graph) else np.asarray(g, dtype=float)


@dataclass(frozen=True)
class ModelParams:
    d: float = 1.0
    alpha: float = 1.0
    gamma: float = 1.0
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"damping d must be positive, got {self.d}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if self.gamma == 0:
            raise ValueError("gamma must be nonzero")
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if not np.all(np.isfinite(b)):
            raise ValueError("input vector b must be finite")
        object.__setattr__(self, "b", b)

    def with_input(self, b) -> "ModelParams":
        return replace(self, b=np.asarray(b, dtype=float))

    def input_for(self, n: int) -> np.ndarray:
        """The input vector, with an empty ``b`` meaning zero input."""
        if self.b.size == 0:
            return np.zeros(n)
        if self.b.size != n:
            raise ValueError(f"input vector has length {self.b.size}, graph has {n} vertices")
        return self.b


@dataclass(frozen=True)
class AttentionParams:
    u_low: float
    u_high: float
    y_th: float = 0.4
    hill_n: int = 3
    tau_u: float = 10.0

    def __post_init__(self):
        if not self.u_low > 0:
            raise ValueError(f"u_low must be positive, got {self.u_low}")
        if not self.u_high > self.u_low:
            raise ValueError(f"u_high ({self.u_high}) must exceed u_low ({self.u_low})")
        if not self.y_th > 0:
            raise ValueError(f"y_th must be positive, got {self.y_th}")
        if int(self.hill_n) != self.hill_n or self.hill_n < 1:
            raise ValueError(f"hill_n must be a positive integer, got {self.hill_n}")
        if not self.tau_u > 0:
            raise ValueError(f"tau_u must be positive, got {self.tau_u}")

    def check_critical(self, u_c: float) -> None:
        """Require ``u_high > u_c >= u_low``."""
        if not (self.u_high > u_c >= self.u_low):
            raise ValueError(
                f"attention bounds must satisfy u_high > u_c >= u_low; "
                f"got u_low={self.u_low:.12g}, u_c={u_c:.12g}, u_high={self.u_high:.12g}"
            )

    @classmethod
    def around(cls, u_c: float, below: float = 0.01, above: float = 0.6, **kw) -> "AttentionParams":
        """Bounds placed relative to a critical attention value, e.g. ``u_a - 0.01``."""
        return cls(u_low=u_c - below, u_high=u_c + above, **kw)


@dataclass(frozen=True)
class SystemState:
    x: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        u = np.asarray(self.u, dtype=float).reshape(-1)
        if u.size == 1 and x.size != 1:
            u = np.full(x.size, u[0])
        if x.size != u.size:
            raise ValueError(f"opinion and attention vectors differ in length ({x.size} vs {u.size})")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
            raise ValueError("state has non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.x.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.u])

    @classmethod
    def from_vector(cls, y) -> "SystemState":
        y = np.asarray(y, dtype=float)
        n = y.size // 2
        return cls(y[:n], y[n:])

    @classmethod
    def neutral(cls, n: int, u: float = 0.0) -> "SystemState":
        return cls(np.zeros(n), np.full(n, float(u)))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: tuple[SystemState, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size != len(self.states):
            raise ValueError("times and states differ in length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if len({s.n for s in self.states}) > 1:
            raise ValueError("inconsistent state dimensions in trajectory")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def final(self) -> SystemState:
        return self.states[-1]

    @property
    def x(self) -> np.ndarray:
        return np.array([s.x for s in self.states])

    @property
    def u(self) -> np.ndarray:
        return np.array([s.u for s in self.states])


# ---------------------------------------------------------------------------
# saturations


def saturation(z):
    return np.tanh(z)


def saturation_d1(z):
    return 1.0 - np.tanh(z) ** 2


def saturation_d2(z):
    t = np.tanh(z)
    return -2.0 * t * (1.0 - t**2)


def hill(y, ap: AttentionParams):
    """Hill activation ``u_low + (u_high - u_low) y^n / (y_th^n + y^n)`` for y >= 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("Hill activation is defined for nonnegative arguments only")
    r = (y / ap.y_th) ** ap.hill_n
    frac = np.where(np.isinf(r), 1.0, r / (1.0 + r))
    out = ap.u_low + (ap.u_high - ap.u_low) * frac
    return out if out.ndim else float(out)


def hill_d1(y, ap: AttentionParams):
    y = np.asarray(y, dtype=float)
    n = ap.hill_n
    r = (y / ap.y_th) ** n
    # d/dy [r/(1+r)] = n r / (y (1+r)^2); written via y^(n-1) to stay finite at y=0
    dr = n * y ** (n - 1) / ap.y_th**n
    out = (ap.u_high - ap.u_low) * dr / (1.0 + r) ** 2
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# vector fields


def interaction_matrix(p: ModelParams, a: np.ndarray) -> np.ndarray:
    """``alpha I + gamma A``."""
    return p.alpha * np.eye(a.shape[0]) + p.gamma * a


def _check_dims(x, a):
    if x.ndim != 1 or x.size != a.shape[0]:
        raise ValueError(f"state has length {x.size}, graph has {a.shape[0]} vertices")


def rhs_fixed(x, u, p: ModelParams, g) -> np.ndarray:
    a = _adj(g)
    x = np.asarray(x, dtype=float)
    _check_dims(x, a)
    u = np.broadcast_to(np.asarray(u, dtype=float), x.shape)
    return -p.d * x + u * saturation(interaction_matrix(p, a) @ x) + p.input_for(x.size)


def rhs_coupled(s: SystemState, p: ModelParams, ap: AttentionParams, g) -> SystemState:
    """Time derivative of the coupled opinion/attention state, as a SystemState."""
    a = _adj(g)
    _check_dims(s.x, a)
    dx = rhs_fixed(s.x, s.u, p, a)
    drive = s.x**2 + (a**2) @ s.x**2
    du = (-s.u + hill(drive, ap)) / ap.tau_u
    return SystemState(dx, du)


def jacobian_fixed(x, u, p: ModelParams, g) -> np.ndarray:
    a = _adj(g)
    x = np.asarray(x, dtype=float)
    _check_dims(x, a)
    u = np.broadcast_to(np.asarray(u, dtype=float), x.shape)
    m = interaction_matrix(p, a)
    return -p.d * np.eye(x.size) + (u * saturation_d1(m @ x))[:, None] * m


def jacobian_coupled(s: SystemState, p: ModelParams, ap: AttentionParams, g) -> np.ndarray:
    """Jacobian of the coupled field in the ordering ``(x, u)``.

    The lower-right block is ``-I / tau_u`` and the lower-left block is the
    derivative of the attention drive divided by ``tau_u``.
    """
    a = _adj(g)
    _check_dims(s.x, a)
    n = s.n
    m = interaction_matrix(p, a)
    mx = m @ s.x
    a2 = a**2
    drive = s.x**2 + a2 @ s.x**2
    jxx = -p.d * np.eye(n) + (s.u * saturation_d1(mx))[:, None] * m
    jxu = np.diag(saturation(mx))
    # d drive_i / d x_k = 2 (I + A∘A)_ik x_k
    jux = (hill_d1(drive, ap)[:, None] * 2.0 * (np.eye(n) + a2) * s.x[None, :]) / ap.tau_u
    juu = -np.eye(n) / ap.tau_u
    return np.block([[jxx, jxu], [jux, juu]])


class CoupledField:
    """Flat-vector view of the coupled dynamics for integrators and solvers.

    Precomputes the matrices once; ``__call__`` and ``jacobian`` act on
    ``y = (x, u)`` of length ``2N``.
    """

    def __init__(self, p: ModelParams, ap: AttentionParams, g):
        self.a = _adj(g)
        self.n = self.a.shape[0]
        self.p = p
        self.ap = ap
        self.m = interaction_matrix(p, self.a)
        self.a2 = self.a**2
        self.b = p.input_for(self.n)

    def __call__(self, y, t=None):
        n = self.n
        x, u = y[:n], y[n:]
        ap = self.ap
        dx = -self.p.d * x + u * np.tanh(self.m @ x) + self.b
        drive = x * x + self.a2 @ (x * x)
        r = (drive / ap.y_th) ** ap.hill_n
        du = (-u + ap.u_low + (ap.u_high - ap.u_low) * r / (1.0 + r)) / ap.tau_u
        return np.concatenate([dx, du])

    def jacobian(self, y):
        n = self.n
        return jacobian_coupled(SystemState(y[:n], y[n:]), self.p, self.ap, self.a)

    def with_input(self, b) -> "CoupledField":
        return CoupledField(self.p.with_input(b), self.ap, self.a)
