"""Graphs, adjacency spectra and agreement/disagreement centrality.

Undirected graphs go through the symmetric eigensolver (real eigenvalues,
orthonormal eigenvectors, left = right).  Directed graphs use the general
eigensolver with both left and right eigenvectors, paired and aligned so
that ``<w, v> > 0`` for real eigenvalues.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

__all__ = [
    "Regime",
    "Graph",
    "Spectrum",
    "ExtremePair",
    "CentralityVector",
    "GraphError",
    "SpectrumError",
    "build_graph",
    "adjacency_matrix",
    "compute_spectrum",
    "extreme_eigenpairs",
    "centrality",
    "parse_graph",
    "read_graph",
    "format_graph",
    "path_graph",
    "complete_graph",
]

DEFAULT_GAP_TOLERANCE = 1e-8


class Regime(str, enum.Enum):
    AGREEMENT = "agreement"
    DISAGREEMENT = "disagreement"


class GraphError(ValueError):
    """Invalid graph construction or malformed graph file."""


class SpectrumError(ArithmeticError):
    """Eigenproblem failure or a required eigenvalue that is not simple."""


@dataclass(frozen=True)
class Graph:
    num_vertices: int
    edges: frozenset[tuple[int, int]]
    directed: bool = False

    @property
    def adjacency(self) -> np.ndarray:
        return adjacency_matrix(self)

    def is_connected(self) -> bool:
        """Weak connectivity (edge direction ignored)."""
        n = self.num_vertices
        nbrs: dict[int, set[int]] = {i: set() for i in range(n)}
        for i, k in self.edges:
            nbrs[i].add(k)
            nbrs[k].add(i)
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for k in nbrs[i] - seen:
                seen.add(k)
                stack.append(k)
        return len(seen) == n


def build_graph(num_vertices: int, edges, directed: bool = False) -> Graph:
    """Validate an edge list and build a :class:`Graph`.

    Undirected edges are symmetrized; listing both ``(i, k)`` and ``(k, i)``
    for an undirected graph counts as a duplicate.
    """
    if int(num_vertices) != num_vertices or num_vertices < 1:
        raise GraphError(f"num_vertices must be a positive integer, got {num_vertices!r}")
    n = int(num_vertices)
    seen: set[tuple[int, int]] = set()
    out: set[tuple[int, int]] = set()
    for e in edges:
        i, k = (int(e[0]), int(e[1]))
        if not (0 <= i < n and 0 <= k < n):
            raise GraphError(f"edge {(i, k)} has a vertex index outside [0, {n})")
        if i == k:
            raise GraphError(f"self-loop at vertex {i}")
        key = (i, k) if directed else (min(i, k), max(i, k))
        if key in seen:
            raise GraphError(f"duplicate edge {(i, k)}")
        seen.add(key)
        out.add((i, k))
        if not directed:
            out.add((k, i))
    return Graph(n, frozenset(out), bool(directed))


def adjacency_matrix(g: Graph) -> np.ndarray:
    a = np.zeros((g.num_vertices, g.num_vertices))
    for i, k in g.edges:
        a[i, k] = 1.0
    return a


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, k) for i in range(n) for k in range(i + 1, n)])


# ---------------------------------------------------------------------------
# spectra


def _sign_normalize(vec: np.ndarray) -> np.ndarray:
    """Rotate/flip so the (first) largest-magnitude entry is real positive."""
    mags = np.abs(vec)
    idx = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
    phase = vec[idx] / mags[idx]
    out = vec / phase
    if np.isrealobj(vec) or np.allclose(out.imag, 0.0, atol=1e-14):
        out = out.real if np.iscomplexobj(out) else out
    return out


@dataclass(frozen=True)
class Spectrum:
    """Full eigendecomposition of an adjacency matrix.

    Eigenpairs are ordered by descending real part.  ``right_eigenvectors[i]``
    and ``left_eigenvectors[i]`` are unit vectors for ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray  # row i is v_i
    left_eigenvectors: np.ndarray  # row i is w_i
    gap_tolerance: float = DEFAULT_GAP_TOLERANCE
    adjacency: np.ndarray = field(default=None, repr=False)
    directed: bool = False

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def is_simple(self, i: int) -> bool:
        """Simple iff its real part is separated from every other eigenvalue's."""
        re = np.real(self.eigenvalues)
        others = np.delete(re, i)
        if others.size == 0:
            return True
        return bool(np.min(np.abs(others - re[i])) > self.gap_tolerance)

    @property
    def real(self) -> bool:
        return bool(np.all(np.abs(np.imag(self.eigenvalues)) <= self.gap_tolerance))

    def residuals(self) -> tuple[np.ndarray, np.ndarray]:
        """Infinity-norm residuals ``|A v - lam v|`` and ``|w A - lam w|``."""
        a = self.adjacency
        lam = self.eigenvalues[:, None]
        v = self.right_eigenvectors
        w = self.left_eigenvectors
        r_right = np.abs(v @ a.T - lam * v).max(axis=1)
        r_left = np.abs(w @ a - lam * w).max(axis=1)
        return r_right, r_left


def _merge_defective(a, lam, vl, vr, radius=1e-3, parallel=1 - 1e-4):
    """Collapse the split copies of a defective eigenvalue.

    A Jordan block of size m comes back from a backward-stable solver as m
    eigenvalues scattered by ~eps**(1/m) with nearly parallel eigenvectors.
    Their mean is accurate to O(eps), and the null vectors of ``A - mean I``
    (smallest singular pair) restore residuals at machine precision.
    """
    n = len(lam)
    scale = max(1.0, np.abs(a).sum(axis=1).max())
    vn = vr / np.linalg.norm(vr, axis=0)
    parent = list(range(n))

    def root(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(lam[i] - lam[j]) <= radius * scale and abs(np.vdot(vn[:, i], vn[:, j])) >= parallel:
                parent[root(j)] = root(i)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(root(i), []).append(i)
    lam, vl, vr = lam.copy(), vl.copy(), vr.copy()
    for members in groups.values():
        if len(members) < 2:
            continue
        mean = lam[members].mean()
        if abs(mean.imag) <= 1e-12 * scale:
            mean = mean.real
        u, _, vh = np.linalg.svd(a - mean * np.eye(n))
        for i in members:
            lam[i] = mean
            vr[:, i] = vh[-1].conj()
            vl[:, i] = u[:, -1]
    return lam, vl, vr


def compute_spectrum(g: Graph | np.ndarray, gap_tolerance: float = DEFAULT_GAP_TOLERANCE) -> Spectrum:
    if isinstance(g, Graph):
        a = adjacency_matrix(g)
        directed = g.directed
    else:
        a = np.asarray(g, dtype=float)
        directed = not np.array_equal(a, a.T)
    if a.shape[0] < 1:
        raise SpectrumError("empty graph has no spectrum")

    try:
        if not directed:
            lam, vecs = np.linalg.eigh(a)
            order = np.argsort(-lam, kind="stable")
            lam = lam[order]
            right = np.array([_sign_normalize(vecs[:, j]) for j in order])
            left = right.copy()
        else:
            lam, vl, vr = scipy.linalg.eig(a, left=True, right=True)
            lam, vl, vr = _merge_defective(a, lam, vl, vr)
            order = np.lexsort((-np.imag(lam), -np.real(lam)))
            lam = lam[order]
            right, left = [], []
            for j in order:
                w = vl[:, j].conj()  # row vector with w A = lam w
                v = vr[:, j]
                w = _sign_normalize(w / np.linalg.norm(w))
                v = v / np.linalg.norm(v)
                ip = np.vdot(w.conj(), v) if np.iscomplexobj(v) else w @ v
                if abs(ip) > 0:
                    v = v * (abs(ip) / ip)  # align so <w, v> is real positive
                if np.allclose(np.imag(v), 0.0, atol=1e-14):
                    v = np.real(v)
                right.append(v)
                left.append(w)
            if np.all(np.abs(np.imag(lam)) <= gap_tolerance):
                lam = np.real(lam)
                right = [np.real(v) for v in right]
                left = [np.real(w) for w in left]
            dtype = complex if np.iscomplexobj(lam) else float
            right = np.array(right, dtype=dtype)
            left = np.array(left, dtype=dtype)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SpectrumError(f"eigensolver did not converge (LAPACK default iteration budget): {exc}") from exc

    return Spectrum(lam, right, left, gap_tolerance, a, directed)


@dataclass(frozen=True)
class ExtremePair:
    index: int
    eigenvalue: complex | float
    right: np.ndarray
    left: np.ndarray
    simple: bool


def extreme_eigenpairs(s: Spectrum) -> tuple[ExtremePair, ExtremePair]:
    """Eigenpairs with the largest and smallest real part: (agreement, disagreement)."""
    re = np.real(s.eigenvalues)
    imax = int(np.argmax(re))
    imin = int(np.argmin(re))

    def pair(i):
        return ExtremePair(i, s.eigenvalues[i], s.right_eigenvectors[i], s.left_eigenvectors[i], s.is_simple(i))

    return pair(imax), pair(imin)


def regime_pair(s: Spectrum, regime: Regime | str) -> ExtremePair:
    agree, disagree = extreme_eigenpairs(s)
    return agree if Regime(regime) is Regime.AGREEMENT else disagree


@dataclass(frozen=True)
class CentralityVector:
    regime: Regime
    entries: np.ndarray
    eigenvalue: float


def centrality(s: Spectrum, regime: Regime | str) -> CentralityVector:
    """Left eigenvector of the extreme eigenvalue for ``regime``.

    Raises :class:`SpectrumError` when that eigenvalue is not simple; no basis
    vector of a degenerate eigenspace is picked silently.
    """
    regime = Regime(regime)
    p = regime_pair(s, regime)
    if not p.simple:
        mult = int(np.sum(np.abs(np.real(s.eigenvalues) - np.real(p.eigenvalue)) <= s.gap_tolerance))
        raise SpectrumError(
            f"{regime.value} eigenvalue {np.real(p.eigenvalue):.12g} is not simple "
            f"(multiplicity {mult} at gap tolerance {s.gap_tolerance:g})"
        )
    if abs(np.imag(p.eigenvalue)) > s.gap_tolerance:
        raise SpectrumError(f"{regime.value} eigenvalue {p.eigenvalue} is complex")
    w = np.real(p.left)
    return CentralityVector(regime, _sign_normalize(w / np.linalg.norm(w)), float(np.real(p.eigenvalue)))


# ---------------------------------------------------------------------------
# text format: header "N <n> <directed|undirected>", then "i j" per line


def parse_graph(text: str, source: str = "<string>") -> Graph:
    header = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 3 or parts[0] != "N" or parts[2] not in ("directed", "undirected"):
                raise GraphError(f"{source}:{lineno}: expected header 'N <num_vertices> <directed|undirected>'")
            try:
                header = (int(parts[1]), parts[2] == "directed")
            except ValueError:
                raise GraphError(f"{source}:{lineno}: vertex count {parts[1]!r} is not an integer") from None
            continue
        if len(parts) != 2:
            raise GraphError(f"{source}:{lineno}: expected edge line 'i j', got {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise GraphError(f"{source}:{lineno}: non-integer vertex index in {line!r}") from None
    if header is None:
        raise GraphError(f"{source}: missing header line")
    n, directed = header
    if not directed:
        # tolerate files listing both orientations of an undirected edge
        uniq, dup = [], set()
        for i, k in edges:
            key = (min(i, k), max(i, k))
            if key in dup and (k, i) in edges:
                continue
            dup.add(key)
            uniq.append((i, k))
        edges = uniq
    try:
        return build_graph(n, edges, directed)
    except GraphError as exc:
        raise GraphError(f"{source}: {exc}") from None


def read_graph(path: str | Path) -> Graph:
    path = Path(path)
    return parse_graph(path.read_text(), source=str(path))


def format_graph(g: Graph) -> str:
    kind = "directed" if g.directed else "undirected"
    lines = [f"N {g.num_vertices} {kind}"]
    edges = sorted(g.edges) if g.directed else sorted((i, k) for i, k in g.edges if i < k)
    lines += [f"{i} {k}" for i, k in edges]
    return "\n".join(lines) + "\n"
