"""Cascade detection and seeded Monte Carlo sweeps over input magnitude and alignment."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .dynamics import AttentionParams, CoupledField, ModelParams, SystemState, Trajectory, _adj
from .graphs import Graph, Regime, centrality, compute_spectrum
from .integrate import IntegratorConfig, integrate_final
from .reduction import critical_attention

__all__ = [
    "CascadeCriteria",
    "CascadeOutcome",
    "SweepConfig",
    "HeatmapGrid",
    "RunRecord",
    "classify_state",
    "detect_cascade",
    "random_input",
    "run_seed",
    "simulate_cascade",
    "run_sweep",
    "sign_pattern_match",
    "heatmap_to_csv",
    "read_heatmap_csv",
    "bin_threshold_magnitudes",
    "count_inversions",
]


@dataclass(frozen=True)
class CascadeCriteria:
    theta_x: float = 0.1
    attention_fraction: float = 0.5
    t_end: float = 500.0

    def __post_init__(self):
        if not self.theta_x > 0:
            raise ValueError("theta_x must be positive")
        if not 0 < self.attention_fraction < 1:
            raise ValueError("attention_fraction must lie in (0, 1)")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")


@dataclass(frozen=True)
class CascadeOutcome:
    cascaded: bool
    final_state: SystemState
    sign_pattern: np.ndarray
    classification: str  # "agreement", "disagreement" or "none"
    input_magnitude: float = 0.0
    input_alignment: float = 0.0


def _alignment(b, v_c) -> float:
    nb = float(np.linalg.norm(b))
    if nb == 0.0 or v_c is None:
        return 0.0
    return float(np.clip(np.asarray(v_c) @ b / nb, -1.0, 1.0))


def classify_state(state: SystemState, crit: CascadeCriteria, ap: AttentionParams, b=None, v_c=None) -> CascadeOutcome:
    """Cascade verdict for a final state.

    Cascaded iff every ``|x_i| > theta_x`` and every ``u_i`` exceeds
    ``u_low + attention_fraction * (u_high - u_low)``.
    """
    if not (np.all(np.isfinite(state.x)) and np.all(np.isfinite(state.u))):
        raise ArithmeticError("trajectory diverged")
    u_gate = ap.u_low + crit.attention_fraction * (ap.u_high - ap.u_low)
    cascaded = bool(np.min(np.abs(state.x)) > crit.theta_x and np.min(state.u) > u_gate)
    signs = np.where(np.abs(state.x) > crit.theta_x, np.sign(state.x), 0.0).astype(int)
    if not cascaded:
        label = "none"
    else:
        nz = signs[signs != 0]
        label = "agreement" if np.all(nz == nz[0]) else "disagreement"
    b = np.zeros(state.n) if b is None else np.asarray(b, dtype=float)
    return CascadeOutcome(cascaded, state, signs, label, float(np.linalg.norm(b)), _alignment(b, v_c))


def detect_cascade(traj: Trajectory, crit: CascadeCriteria, ap: AttentionParams, b=None, v_c=None) -> CascadeOutcome:
    if traj.times[-1] < crit.t_end - 1e-9:
        raise ValueError(f"trajectory ends at t={traj.times[-1]:.6g}, before the horizon t_end={crit.t_end:.6g}")
    return classify_state(traj.final, crit, ap, b, v_c)


def random_input(rng: np.random.Generator, magnitude: float, n: int) -> np.ndarray:
    """Gaussian direction rescaled to Euclidean norm ``magnitude``."""
    if magnitude < 0:
        raise ValueError("magnitude must be nonnegative")
    b = rng.standard_normal(n)
    if magnitude == 0:
        return np.zeros(n)
    return b * (magnitude / np.linalg.norm(b))


def run_seed(master_seed: int, run_index: int) -> int:
    """Per-run seed: master seed XOR global run index, kept in 64 bits."""
    return (int(master_seed) ^ int(run_index)) & 0xFFFFFFFFFFFFFFFF


def simulate_cascade(g, p: ModelParams, ap: AttentionParams, crit: CascadeCriteria, b, v_c=None,
                     s0: SystemState | None = None, integrator: IntegratorConfig | None = None) -> CascadeOutcome:
    """Integrate the coupled dynamics from ``s0`` (default x = u = 0) and classify."""
    a = _adj(g)
    n = a.shape[0]
    cfg = integrator or IntegratorConfig(t_end=crit.t_end)
    if cfg.t_end != crit.t_end:
        cfg = IntegratorConfig(cfg.method, cfg.step, cfg.rtol, cfg.atol, crit.t_end, cfg.record_stride)
    f = CoupledField(p.with_input(b), ap, a)
    s0 = s0 or SystemState.neutral(n)
    y = integrate_final(f, s0, cfg)
    return classify_state(SystemState.from_vector(y), crit, ap, b, v_c)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepConfig:
    magnitudes: tuple[float, ...] = tuple(np.linspace(0.0, 0.1, 8))
    runs_per_magnitude: int = 50
    alignment_bins: int = 10
    rng_seed: int = 0
    regime: Regime = Regime.AGREEMENT

    def __post_init__(self):
        mags = tuple(float(m) for m in np.atleast_1d(self.magnitudes))
        if not mags:
            raise ValueError("magnitude grid is empty")
        if any(m < 0 for m in mags):
            raise ValueError("magnitudes must be nonnegative")
        if self.runs_per_magnitude < 1 or self.alignment_bins < 1:
            raise ValueError("runs_per_magnitude and alignment_bins must be positive")
        object.__setattr__(self, "magnitudes", mags)
        object.__setattr__(self, "regime", Regime(self.regime))
        object.__setattr__(self, "rng_seed", int(self.rng_seed) & 0xFFFFFFFFFFFFFFFF)


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    magnitude: float
    alignment: float
    cascaded: bool
    classification: str
    sign_match: float  # agreement of sign pattern with v_c (NaN when no cascade)


@dataclass(frozen=True)
class HeatmapGrid:
    """Run counts and no-cascade fractions on an (|alignment| bin, magnitude) grid."""

    alignment_edges: np.ndarray
    magnitudes: np.ndarray
    counts: np.ndarray  # (bins, magnitudes) int
    no_cascade: np.ndarray  # (bins, magnitudes) int
    records: tuple[RunRecord, ...] = field(default=(), repr=False, compare=False)

    @property
    def fractions(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.no_cascade / np.maximum(self.counts, 1), np.nan)

    @property
    def total_runs(self) -> int:
        return int(self.counts.sum())


def _alignment_bin(a: float, edges: np.ndarray) -> int:
    k = int(np.searchsorted(edges, abs(a), side="right")) - 1
    return min(max(k, 0), edges.size - 2)


def sign_pattern_match(outcome: CascadeOutcome, cv) -> float:
    """Fraction of nodes whose opinion sign matches the centrality sign, best over a global flip."""
    if not outcome.cascaded:
        raise ValueError("sign pattern comparison needs a cascaded outcome")
    entries = getattr(cv, "entries", cv)
    ref = np.sign(np.asarray(entries, dtype=float))
    sx = np.sign(outcome.final_state.x)
    same = float(np.mean(sx == ref))
    flipped = float(np.mean(sx == -ref))
    return max(same, flipped)


def _sweep_worker(args):
    a, p, ap, crit, seed, run_index, magnitude, v_c, integrator = args
    rng = np.random.default_rng(run_seed(seed, run_index))
    b = random_input(rng, magnitude, a.shape[0])
    out = simulate_cascade(a, p, ap, crit, b, v_c, integrator=integrator)
    match = sign_pattern_match(out, v_c) if out.cascaded else float("nan")
    return RunRecord(run_index, magnitude, out.input_alignment, out.cascaded, out.classification, match)


def run_sweep(g, p: ModelParams, ap: AttentionParams, crit: CascadeCriteria, cfg: SweepConfig,
              threads: int = 1, integrator: IntegratorConfig | None = None,
              progress: Callable[[int, float, int], None] | None = None) -> HeatmapGrid:
    """Monte Carlo cascade sweep; bit-identical for a given ``cfg`` whatever ``threads`` is.

    Run ``r`` at magnitude index ``j`` has global index ``j * runs + r`` and
    draws its input from ``default_rng(seed XOR index)``.  Every run starts
    from ``x = u = 0``.
    """
    a = _adj(g)
    s = compute_spectrum(g if isinstance(g, Graph) else a)
    cp = critical_attention(s, p)
    if not ap.u_low < cp.u_star:
        raise ValueError(f"u_low={ap.u_low:.12g} must be below the critical attention u_c={cp.u_star:.12g}")
    v_c = centrality(s, cfg.regime).entries
    p0 = p.with_input(np.zeros(0))

    edges = np.linspace(0.0, 1.0, cfg.alignment_bins + 1)
    mags = np.array(cfg.magnitudes)
    counts = np.zeros((cfg.alignment_bins, mags.size), dtype=int)
    no_casc = np.zeros_like(counts)
    records: list[RunRecord] = []

    pool = ProcessPoolExecutor(max_workers=threads) if threads and threads > 1 else None
    try:
        for j, m in enumerate(mags):
            jobs = [(a, p0, ap, crit, cfg.rng_seed, j * cfg.runs_per_magnitude + r, float(m), v_c, integrator)
                    for r in range(cfg.runs_per_magnitude)]
            results = list(pool.map(_sweep_worker, jobs, chunksize=max(1, len(jobs) // (4 * threads)))) \
                if pool else [_sweep_worker(job) for job in jobs]
            for rec in results:
                k = _alignment_bin(rec.alignment, edges)
                counts[k, j] += 1
                no_casc[k, j] += not rec.cascaded
                records.append(rec)
            if progress is not None:
                progress(j, float(m), int(sum(not r.cascaded for r in results)))
    finally:
        if pool is not None:
            pool.shutdown()
    return HeatmapGrid(edges, mags, counts, no_casc, tuple(records))


def default_threads() -> int:
    return max(1, min(8, os.cpu_count() or 1))


# ---------------------------------------------------------------------------
# heatmap CSV: "alignment_bin_lo,alignment_bin_hi,magnitude,count,no_cascade_fraction"


def _f(v: float) -> str:
    return format(float(v), ".17g")


def heatmap_to_csv(grid: HeatmapGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alignment_bin_lo", "alignment_bin_hi", "magnitude", "count", "no_cascade_fraction"])
    fr = grid.fractions
    for k in range(grid.counts.shape[0]):
        for j, m in enumerate(grid.magnitudes):
            c = int(grid.counts[k, j])
            w.writerow([_f(grid.alignment_edges[k]), _f(grid.alignment_edges[k + 1]), _f(m), c,
                        "NA" if c == 0 else _f(fr[k, j])])
    return buf.getvalue()


def read_heatmap_csv(text_or_path) -> HeatmapGrid:
    text = Path(text_or_path).read_text() if isinstance(text_or_path, Path) else text_or_path
    rows = list(csv.DictReader(io.StringIO(text)))
    los = sorted({float(r["alignment_bin_lo"]) for r in rows})
    his = sorted({float(r["alignment_bin_hi"]) for r in rows})
    mags = sorted({float(r["magnitude"]) for r in rows})
    edges = np.array(los + [his[-1]])
    counts = np.zeros((len(los), len(mags)), dtype=int)
    no_casc = np.zeros_like(counts)
    for r in rows:
        k = los.index(float(r["alignment_bin_lo"]))
        j = mags.index(float(r["magnitude"]))
        c = int(r["count"])
        counts[k, j] = c
        if c:
            no_casc[k, j] = int(round(float(r["no_cascade_fraction"]) * c))
    return HeatmapGrid(edges, np.array(mags), counts, no_casc)


# ---------------------------------------------------------------------------
# shape checks on a heatmap


def count_inversions(seq, increasing: bool = False) -> int:
    """Adjacent violations of monotonicity, NaNs skipped (default: non-increasing)."""
    vals = [v for v in seq if not np.isnan(v)]
    bad = 0
    for prev, cur in zip(vals, vals[1:]):
        if (cur < prev) if increasing else (cur > prev):
            bad += 1
    return bad


def bin_threshold_magnitudes(grid: HeatmapGrid, level: float = 0.5) -> np.ndarray:
    """Smallest magnitude per alignment bin with no-cascade fraction <= ``level``.

    ``inf`` if the bin never reaches it; ``nan`` for a bin with no data.
    """
    fr = grid.fractions
    out = np.full(fr.shape[0], np.nan)
    for k in range(fr.shape[0]):
        if grid.counts[k].sum() == 0:
            continue
        hit = np.flatnonzero(fr[k] <= level)
        out[k] = grid.magnitudes[hit[0]] if hit.size else np.inf
    return out
