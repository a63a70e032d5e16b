"""Pseudo-arclength continuation of equilibrium branches.

Two one-parameter problems are provided:

* :class:`FixedAttentionProblem`: opinions only, parameter is the common
  attention ``u``.
* :class:`CoupledInputProblem`: opinions and attention, parameter is the
  input scale ``m`` with ``b = m * direction``.

Branches are traced with a secant predictor and a Newton corrector
constrained to the hyperplane orthogonal to the current tangent, so folds
are passed without special handling.  Folds (sign change of the parameter
component of the tangent) and stability changes are located by bisection
along the arc.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import AttentionParams, CoupledField, ModelParams, interaction_matrix, _adj
from .integrate import STABILITY_MARGIN, Stability, stability_from_eigenvalues

__all__ = [
    "ContinuationError",
    "BranchPoint",
    "BranchEvent",
    "Branch",
    "FixedAttentionProblem",
    "CoupledInputProblem",
    "continue_branch",
    "seed_off_branch",
    "correct_at_parameter",
    "input_direction",
    "branch_to_csv",
    "read_branch_csv",
    "branch_summary",
    "write_branch",
    "fixed_attention_diagram",
    "coupled_input_diagram",
]


class ContinuationError(ArithmeticError):
    def __init__(self, msg, last_point=None):
        super().__init__(msg)
        self.last_point = last_point


class FixedAttentionProblem:
    """``F(x, u) = -d x + u S((alpha I + gamma A) x) + b`` with parameter ``u``."""

    kind = "fixed_u"

    def __init__(self, p: ModelParams, g, v_c=None):
        self.a = _adj(g)
        self.n = self.a.shape[0]
        self.p = p
        self.m = interaction_matrix(p, self.a)
        self.b = p.input_for(self.n)
        self.dim = self.n
        self.v_c = None if v_c is None else np.asarray(v_c, dtype=float)

    def residual(self, y, lam):
        return -self.p.d * y + lam * np.tanh(self.m @ y) + self.b

    def jac_y(self, y, lam):
        return -self.p.d * np.eye(self.n) + (lam * (1.0 - np.tanh(self.m @ y) ** 2))[:, None] * self.m

    def jac_lam(self, y, lam):
        return np.tanh(self.m @ y)

    def embed(self, x):
        return np.asarray(x, dtype=float)

    def projection(self, y):
        return float(self.v_c @ y[: self.n]) if self.v_c is not None else float("nan")

    def columns(self):
        return [f"x_{i}" for i in range(self.n)]


class CoupledInputProblem:
    """Coupled opinion/attention equilibria with parameter ``m``, ``b = m * direction``."""

    kind = "coupled_input"

    def __init__(self, p: ModelParams, ap: AttentionParams, g, direction, v_c=None):
        self.a = _adj(g)
        self.n = self.a.shape[0]
        self.direction = np.asarray(direction, dtype=float)
        self.field = CoupledField(p.with_input(np.zeros(self.n)), ap, self.a)
        self.dim = 2 * self.n
        self.v_c = None if v_c is None else np.asarray(v_c, dtype=float)

    def residual(self, y, lam):
        r = self.field(y)
        r[: self.n] += lam * self.direction
        return r

    def jac_y(self, y, lam):
        return self.field.jacobian(y)

    def jac_lam(self, y, lam):
        return np.concatenate([self.direction, np.zeros(self.n)])

    def embed(self, x):
        return np.concatenate([np.asarray(x, dtype=float), np.zeros(self.n)])

    def projection(self, y):
        return float(self.v_c @ y[: self.n]) if self.v_c is not None else float("nan")

    def columns(self):
        return [f"x_{i}" for i in range(self.n)] + [f"u_{i}" for i in range(self.n)]


def input_direction(v_c, alignment: float, v_perp) -> np.ndarray:
    """Unit vector with ``<v_c, b> = alignment``, completed along ``v_perp``."""
    v_c = np.asarray(v_c, dtype=float)
    q = np.asarray(v_perp, dtype=float) - (v_c @ v_perp) * v_c
    q /= np.linalg.norm(q)
    return alignment * v_c + np.sqrt(max(0.0, 1.0 - alignment**2)) * q


@dataclass(frozen=True)
class BranchPoint:
    parameter_value: float
    state: np.ndarray
    stability: Stability
    tangent: np.ndarray
    leading_real: float = float("nan")
    residual: float = 0.0


@dataclass(frozen=True)
class BranchEvent:
    kind: str  # "fold" or "stability_change"
    parameter_value: float
    state: np.ndarray
    projection: float


@dataclass
class Branch:
    problem: object
    points: list[BranchPoint] = field(default_factory=list)
    events: list[BranchEvent] = field(default_factory=list)
    status: str = "ok"

    @property
    def folds(self) -> list[BranchEvent]:
        return [e for e in self.events if e.kind == "fold"]

    @property
    def stability_changes(self) -> list[BranchEvent]:
        return [e for e in self.events if e.kind == "stability_change"]

    @property
    def parameters(self) -> np.ndarray:
        return np.array([pt.parameter_value for pt in self.points])

    @property
    def states(self) -> np.ndarray:
        return np.array([pt.state for pt in self.points])

    @property
    def projections(self) -> np.ndarray:
        return np.array([self.problem.projection(pt.state) for pt in self.points])


# ---------------------------------------------------------------------------
# core numerics on the extended vector Y = (y, lam)


def _ext_jac(problem, Y):
    y, lam = Y[:-1], Y[-1]
    return np.hstack([problem.jac_y(y, lam), problem.jac_lam(y, lam)[:, None]])


def _tangent(problem, Y, orient):
    """Unit null vector of the extended Jacobian with ``<t, orient> > 0``."""
    jac = _ext_jac(problem, Y)
    bordered = np.vstack([jac, orient[None, :]])
    rhs = np.zeros(Y.size)
    rhs[-1] = 1.0
    try:
        t = np.linalg.solve(bordered, rhs)
    except np.linalg.LinAlgError:
        t = np.linalg.lstsq(bordered, rhs, rcond=None)[0]
    t /= np.linalg.norm(t)
    return t if t @ orient >= 0 else -t


def _correct(problem, Y_pred, t, tol, max_iter=12):
    """Newton on ``[F(Y); t.(Y - Y_pred)] = 0``.  Returns (Y, iterations) or None."""
    Y = Y_pred.copy()
    for it in range(1, max_iter + 1):
        y, lam = Y[:-1], Y[-1]
        r = np.append(problem.residual(y, lam), t @ (Y - Y_pred))
        jac = np.vstack([_ext_jac(problem, Y), t[None, :]])
        try:
            dY = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            return None
        Y = Y + dY
        if not np.all(np.isfinite(Y)):
            return None
        res = np.max(np.abs(problem.residual(Y[:-1], Y[-1])))
        if res <= tol and np.max(np.abs(dY)) <= 1e-8 * (1.0 + np.max(np.abs(Y))):
            return Y, it
    return None


def _leading_real(problem, Y):
    return float(np.max(np.real(np.linalg.eigvals(problem.jac_y(Y[:-1], Y[-1])))))


def _make_point(problem, Y, t, margin):
    eigs = np.linalg.eigvals(problem.jac_y(Y[:-1], Y[-1]))
    return BranchPoint(float(Y[-1]), Y[:-1].copy(), stability_from_eigenvalues(eigs, margin), t.copy(),
                       float(np.max(np.real(eigs))), float(np.max(np.abs(problem.residual(Y[:-1], Y[-1])))))


def _bisect_arc(problem, Y0, t0, ds, func, f0, tol, iters=48):
    """Find the arclength in (0, ds) where ``func`` changes sign from ``f0``."""
    lo, hi = 0.0, ds
    Y_best, t_best = Y0, t0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        out = _correct(problem, Y0 + mid * t0, t0, tol)
        if out is None:
            break
        Ym = out[0]
        tm = _tangent(problem, Ym, t0)
        if np.sign(func(Ym, tm)) == np.sign(f0):
            lo = mid
        else:
            hi = mid
        Y_best, t_best = Ym, tm
        if hi - lo < 1e-12:
            break
    return Y_best


def correct_at_parameter(problem, y_guess, lam, tol=1e-10, max_iter=50):
    """Newton solve of ``F(y, lam) = 0`` at a fixed parameter value."""
    y = np.asarray(y_guess, dtype=float).copy()
    for _ in range(max_iter):
        r = problem.residual(y, lam)
        if np.max(np.abs(r)) <= tol:
            return y
        try:
            y = y + np.linalg.solve(problem.jac_y(y, lam), -r)
        except np.linalg.LinAlgError:
            raise ContinuationError(f"singular Jacobian in fixed-parameter Newton at parameter {lam:.12g}") from None
    if np.max(np.abs(problem.residual(y, lam))) <= tol:
        return y
    raise ContinuationError(f"fixed-parameter Newton did not converge at parameter {lam:.12g}")


def continue_branch(problem, start, param0: float, param_range: tuple[float, float], *,
                    direction: float = 1.0, tangent0=None, ds: float = 1e-3, ds_min: float = 1e-6,
                    ds_max: float = 5e-2, max_points: int = 20000, tol: float = 1e-10,
                    margin: float = STABILITY_MARGIN, include_start: bool = True) -> Branch:
    """Trace an equilibrium branch from ``(start, param0)`` until the parameter leaves ``param_range``.

    ``start`` is a state vector (or an object with a ``state`` attribute)
    that must already be an equilibrium to within 1e-8 after a Newton
    polish.  The initial tangent is oriented along ``tangent0`` if given,
    otherwise so the parameter moves in ``direction``.
    """
    y0 = np.asarray(getattr(start, "state", start), dtype=float)
    if y0.size != problem.dim:
        y0 = problem.embed(y0) if y0.size * 2 == problem.dim else y0
    Y = np.append(y0, float(param0))
    if np.max(np.abs(problem.residual(Y[:-1], Y[-1]))) > 1e-8:
        Y[:-1] = correct_at_parameter(problem, Y[:-1], Y[-1], tol)
    if tangent0 is None:
        orient = np.zeros(Y.size)
        orient[-1] = np.sign(direction) or 1.0
    else:
        orient = np.asarray(tangent0, dtype=float)
        orient = orient / np.linalg.norm(orient)
    t = _tangent(problem, Y, orient)

    lo, hi = param_range
    branch = Branch(problem)
    if include_start:
        branch.points.append(_make_point(problem, Y, t, margin))
    Y_prev = None
    lead_prev = _leading_real(problem, Y)
    h = ds
    while len(branch.points) < max_points:
        if Y_prev is not None:
            sec = Y - Y_prev
            pred_dir = sec / np.linalg.norm(sec)
        else:
            pred_dir = t
        out = _correct(problem, Y + h * pred_dir, pred_dir, tol)
        if out is None:
            h *= 0.5
            if h < 1e-10:
                branch.status = f"corrector failed below step 1e-10 at parameter {Y[-1]:.12g}"
                raise ContinuationError(branch.status, branch.points[-1] if branch.points else None)
            continue
        Y_new, iters = out
        t_new = _tangent(problem, Y_new, t)
        lead_new = _leading_real(problem, Y_new)

        fold = np.sign(t_new[-1]) != np.sign(t[-1]) and t[-1] != 0.0
        if fold:
            Yf = _bisect_arc(problem, Y, t, float(np.linalg.norm(Y_new - Y)) * 1.05,
                             lambda Yx, tx: tx[-1], t[-1], tol)
            branch.events.append(BranchEvent("fold", float(Yf[-1]), Yf[:-1].copy(), problem.projection(Yf[:-1])))
        elif np.sign(lead_new) != np.sign(lead_prev) and lead_prev != 0.0:
            Ys = _bisect_arc(problem, Y, t, float(np.linalg.norm(Y_new - Y)) * 1.05,
                             lambda Yx, tx: _leading_real(problem, Yx), lead_prev, tol)
            branch.events.append(
                BranchEvent("stability_change", float(Ys[-1]), Ys[:-1].copy(), problem.projection(Ys[:-1])))

        if not (lo <= Y_new[-1] <= hi):
            break
        branch.points.append(_make_point(problem, Y_new, t_new, margin))
        Y_prev, Y, t, lead_prev = Y, Y_new, t_new, lead_new
        if iters <= 2:
            h = min(h * 1.5, ds_max)
        elif iters >= 6:
            h = max(h * 0.5, ds_min)
        h = min(max(h, ds_min), ds_max)
    return branch


def seed_off_branch(problem, y_bp, param_bp: float, v_c, eps: float = 1e-4, tol: float = 1e-10):
    """Land on the two nontrivial branches crossing a symmetric branch point.

    Corrects ``y_bp +/- eps * v_c`` on the hyperplane orthogonal to
    ``(v_c, 0)``.  Returns ``[(state, param, tangent_guess), ...]`` with the
    tangent guess pointing away from the branch point.
    """
    vc_ext = np.append(problem.embed(np.asarray(v_c, dtype=float)), 0.0)
    vc_ext /= np.linalg.norm(vc_ext)
    base = np.append(np.asarray(y_bp, dtype=float), float(param_bp))
    seeds = []
    for sgn in (1.0, -1.0):
        out = _correct(problem, base + sgn * eps * vc_ext, vc_ext, tol)
        if out is None:
            raise ContinuationError(f"could not land on the {'+' if sgn > 0 else '-'} branch")
        Y = out[0]
        seeds.append((Y[:-1], float(Y[-1]), sgn * vc_ext))
    return seeds


# ---------------------------------------------------------------------------
# CSV: "param,stability,x_0..x_{N-1}[,u_0..u_{N-1}],proj_vc"


def _f(v: float) -> str:
    return format(float(v), ".17g")


def branch_to_csv(branch: Branch) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "stability", *branch.problem.columns(), "proj_vc"])
    for pt in branch.points:
        w.writerow([_f(pt.parameter_value), pt.stability.value, *map(_f, pt.state),
                    _f(branch.problem.projection(pt.state))])
    return buf.getvalue()


def branch_summary(branch: Branch, label: str = "branch") -> str:
    lines = [f"# {label}: {len(branch.points)} points, {len(branch.folds)} fold(s), status={branch.status}"]
    for e in branch.events:
        lines.append(f"{e.kind} param={_f(e.parameter_value)} proj_vc={_f(e.projection)}")
    return "\n".join(lines) + "\n"


def read_branch_csv(text_or_path) -> dict:
    """Parse a branch CSV into ``{"param", "stability", "states", "proj_vc", "columns"}``."""
    text = Path(text_or_path).read_text() if isinstance(text_or_path, Path) else text_or_path
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    return {
        "columns": header[2:-1],
        "param": np.array([float(r[0]) for r in body]),
        "stability": [Stability(r[1]) for r in body],
        "states": np.array([[float(v) for v in r[2:-1]] for r in body]),
        "proj_vc": np.array([float(r[-1]) for r in body]),
    }


def write_branch(branch: Branch, path: str | Path, label: str = "branch") -> tuple[Path, Path]:
    path = Path(path)
    path.write_text(branch_to_csv(branch))
    summary = path.with_suffix(".summary.txt")
    summary.write_text(branch_summary(branch, label))
    return path, summary


# ---------------------------------------------------------------------------
# whole diagrams


def fixed_attention_diagram(p: ModelParams, g, u_range: tuple[float, float], v_c, *,
                            ds_max: float = 5e-2, seed_eps: float = 1e-4) -> dict[str, Branch]:
    """Equilibrium branches of the fixed-attention dynamics over ``u_range``.

    The primary branch is continued from the linear response at
    ``u_range[0]``.  If it loses stability without folding (a symmetric
    pitchfork), both nontrivial branches are seeded off that point.
    Otherwise a Newton solve from the mirror image of the primary branch's
    far end looks for a disconnected (folded) branch.
    """
    a = _adj(g)
    problem = FixedAttentionProblem(p, a, v_c)
    lo, hi = u_range
    y0 = correct_at_parameter(problem, np.zeros(problem.n), lo)
    branches = {"primary": continue_branch(problem, y0, lo, u_range, ds_max=ds_max)}
    primary = branches["primary"]
    if primary.stability_changes and not primary.folds:
        bp = primary.stability_changes[0]
        for name, (y, lam, tg) in zip(("upper", "lower"), seed_off_branch(problem, bp.state, bp.parameter_value,
                                                                          v_c, seed_eps)):
            branches[name] = continue_branch(problem, y, lam, u_range, tangent0=tg, ds=1e-3, ds_max=ds_max)
    else:
        far = primary.points[-1]
        try:
            y1 = correct_at_parameter(problem, -far.state, far.parameter_value)
        except ContinuationError:
            y1 = None
        if y1 is not None and np.linalg.norm(y1 - far.state) > 1e-6:
            branches["disconnected"] = continue_branch(problem, y1, far.parameter_value, u_range,
                                                       direction=-1.0, ds_max=ds_max)
    return branches


def coupled_input_diagram(p: ModelParams, ap: AttentionParams, g, direction, m_max: float, v_c, *,
                          ds_max: float = 5e-3) -> Branch:
    """Branch of coupled equilibria from ``(0, u_low)`` at zero input as the input scale grows."""
    a = _adj(g)
    problem = CoupledInputProblem(p, ap, a, direction, v_c)
    start = np.concatenate([np.zeros(problem.n), np.full(problem.n, ap.u_low)])
    return continue_branch(problem, start, 0.0, (-1e-12, m_max), ds=1e-4, ds_max=ds_max)
