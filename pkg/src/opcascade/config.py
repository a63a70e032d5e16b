"""Run configuration: flat ``key = value`` text with ``[section]`` headers.

Keys before the first section header (``graph``, ``output_dir``, ``seed``)
belong to the run itself.  Attention bounds are given as offsets from the
critical attention value, which is always computed from the graph::

    graph = p3.txt
    seed = 7

    [model]
    d = 1
    alpha = 1
    gamma = 1
    b = 0.05, 0, -0.05     # explicit input
    b_centrality = 0.1     # adds 0.1 * v_c
    b_sigma = 0            # adds N(0, sigma^2) entries drawn from the seed
    x0_sigma = 0           # random initial opinions for `simulate`

    [attention]
    u_low_offset = 0.01    # u_low = u_c - 0.01
    u_high_offset = 0.6    # u_high = u_c + 0.6
    y_th = 0.4
    hill_n = 3
    tau_u = 10
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cascades import CascadeCriteria, SweepConfig
from .dynamics import AttentionParams, ModelParams
from .graphs import Graph, Regime, centrality, compute_spectrum, read_graph
from .integrate import IntegratorConfig
from .reduction import critical_attention

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    pass


def _floats(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.replace(",", " ").split()])


def parse_magnitudes(text: str) -> tuple[float, ...]:
    """``lo:hi:count`` (inclusive linspace) or a comma/space separated list."""
    if ":" in text:
        lo, hi, count = text.split(":")
        return tuple(np.linspace(float(lo), float(hi), int(count)))
    return tuple(_floats(text))


@dataclass
class RunConfig:
    graph_path: Path | None = None
    output_dir: Path = Path("out")
    seed: int = 0
    model: dict = field(default_factory=dict)
    attention: dict = field(default_factory=dict)
    integrator: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    cascade: dict = field(default_factory=dict)
    bifurcate: dict = field(default_factory=dict)
    threshold: dict = field(default_factory=dict)

    # -- typed views -------------------------------------------------------

    def graph(self) -> Graph:
        if self.graph_path is None:
            raise ConfigError("no graph file given (use --graph or 'graph = ...')")
        if not Path(self.graph_path).exists():
            raise ConfigError(f"graph file {self.graph_path} does not exist")
        return read_graph(self.graph_path)

    def base_params(self) -> ModelParams:
        m = self.model
        try:
            return ModelParams(float(m.get("d", 1.0)), float(m.get("alpha", 1.0)), float(m.get("gamma", 1.0)))
        except ValueError as exc:
            raise ConfigError(f"[model]: {exc}") from None

    def regime(self) -> Regime:
        return Regime.AGREEMENT if self.base_params().gamma > 0 else Regime.DISAGREEMENT

    def input_vector(self, g: Graph, rng: np.random.Generator | None = None) -> np.ndarray:
        m = self.model
        n = g.num_vertices
        b = np.zeros(n)
        if "b" in m:
            explicit = _floats(m["b"])
            if explicit.size != n:
                raise ConfigError(f"[model] b has {explicit.size} entries, graph has {n} vertices")
            b = b + explicit
        if float(m.get("b_centrality", 0.0)):
            v_c = centrality(compute_spectrum(g), self.regime()).entries
            b = b + float(m["b_centrality"]) * v_c
        if float(m.get("b_sigma", 0.0)):
            rng = rng or np.random.default_rng(self.seed)
            b = b + rng.normal(0.0, float(m["b_sigma"]), n)
        return b

    def params(self, g: Graph, rng=None) -> ModelParams:
        return self.base_params().with_input(self.input_vector(g, rng))

    def critical_value(self, g: Graph) -> float:
        return critical_attention(compute_spectrum(g), self.base_params()).u_star

    def attention_params(self, g: Graph) -> AttentionParams:
        a = self.attention
        u_c = self.critical_value(g)
        try:
            ap = AttentionParams(
                u_low=u_c - float(a.get("u_low_offset", 0.01)),
                u_high=u_c + float(a.get("u_high_offset", 0.6)),
                y_th=float(a.get("y_th", 0.4)),
                hill_n=int(a.get("hill_n", 3)),
                tau_u=float(a.get("tau_u", 10.0)),
            )
            ap.check_critical(u_c)
        except ValueError as exc:
            raise ConfigError(f"[attention]: {exc}") from None
        return ap

    def integrator_config(self, t_end: float | None = None) -> IntegratorConfig:
        i = self.integrator
        try:
            return IntegratorConfig(
                method=i.get("method", "rk45_adaptive"),
                step=float(i.get("step", 0.01)),
                rtol=float(i.get("rtol", 1e-6)),
                atol=float(i.get("atol", 1e-9)),
                t_end=float(t_end if t_end is not None else i.get("t_end", 500.0)),
                record_stride=int(i.get("record_stride", 1)),
            )
        except ValueError as exc:
            raise ConfigError(f"[integrator]: {exc}") from None

    def criteria(self, t_end: float | None = None) -> CascadeCriteria:
        c = self.cascade
        try:
            return CascadeCriteria(
                theta_x=float(c.get("theta_x", 0.1)),
                attention_fraction=float(c.get("attention_fraction", 0.5)),
                t_end=float(t_end if t_end is not None else self.integrator.get("t_end", 500.0)),
            )
        except ValueError as exc:
            raise ConfigError(f"[cascade]: {exc}") from None

    def sweep_config(self) -> SweepConfig:
        s = self.sweep
        try:
            return SweepConfig(
                magnitudes=parse_magnitudes(s.get("magnitudes", "0:0.1:8")),
                runs_per_magnitude=int(s.get("runs_per_magnitude", 50)),
                alignment_bins=int(s.get("alignment_bins", 10)),
                rng_seed=int(self.seed),
                regime=Regime(s.get("regime", self.regime().value)),
            )
        except ValueError as exc:
            raise ConfigError(f"[sweep]: {exc}") from None


_SECTIONS = ("model", "attention", "integrator", "sweep", "cascade", "bifurcate", "threshold")


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    unknown = set(cp.sections()) - set(_SECTIONS) - {"run"}
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    run = dict(cp["run"])
    cfg = RunConfig(**{name: dict(cp[name]) if cp.has_section(name) else {} for name in _SECTIONS})
    if "graph" in run:
        gp = Path(run["graph"])
        cfg.graph_path = gp if gp.is_absolute() or base_dir is None else base_dir / gp
    if "output_dir" in run:
        cfg.output_dir = Path(run["output_dir"])
    if "seed" in run:
        try:
            cfg.seed = int(run["seed"])
        except ValueError:
            raise ConfigError(f"seed must be an integer, got {run['seed']!r}") from None
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config(path.read_text(), base_dir=path.parent)
