"""Command-line entry point: ``opcascade {spectrum,simulate,bifurcate,sweep,threshold}``.

Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import continuation as cont
from .cascades import detect_cascade, heatmap_to_csv, run_sweep
from .config import ConfigError, RunConfig, load_config, parse_config
from .dynamics import CoupledField, ModelParams, SystemState
from .graphs import GraphError, Regime, SpectrumError, centrality, compute_spectrum, extreme_eigenpairs
from .integrate import integrate
from .reduction import critical_attention_any
from .threshold import find_cascade_threshold, fold_threshold

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _f(v) -> str:
    return format(float(v), ".17g")


def _num(v):
    """JSON-safe float (17 significant digits survive the round trip)."""
    v = float(v)
    return v if np.isfinite(v) else None


def _dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    if args.graph:
        cfg.graph_path = Path(args.graph)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out_dir:
        cfg.output_dir = Path(args.out_dir)
    for item in args.set or []:
        key, _, value = item.partition("=")
        section, _, name = key.partition(".")
        if not name or not hasattr(cfg, section) or not isinstance(getattr(cfg, section), dict):
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        getattr(cfg, section)[name] = value
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg


def _direction(cfg: RunConfig, section: dict, g, regime: Regime):
    s = compute_spectrum(g)
    v_c = centrality(s, regime).entries
    text = section.get("direction", "centrality").strip()
    if text != "centrality":
        d = np.array([float(t) for t in text.replace(",", " ").split()])
        if d.size != g.num_vertices:
            raise ConfigError(f"direction has {d.size} entries, graph has {g.num_vertices} vertices")
        return d / np.linalg.norm(d), v_c
    alignment = float(section.get("alignment", 1.0))
    if not 0 <= alignment <= 1:
        raise ConfigError("alignment must lie in [0, 1]")
    if alignment == 1.0:
        return v_c.copy(), v_c
    # complete with the neighbouring eigenvector of the same regime
    agree, disagree = extreme_eigenpairs(s)
    idx = agree.index + 1 if regime is Regime.AGREEMENT else disagree.index - 1
    return cont.input_direction(v_c, alignment, np.real(s.right_eigenvectors[idx])), v_c


# ---------------------------------------------------------------------------


def cmd_spectrum(cfg: RunConfig, args) -> int:
    g = cfg.graph()
    s = compute_spectrum(g)
    p = cfg.base_params()
    agree, disagree = extreme_eigenpairs(s)
    out = {
        "num_vertices": g.num_vertices,
        "directed": g.directed,
        "eigenvalues": [_num(np.real(v)) for v in s.eigenvalues],
        "eigenvalues_imag": [_num(np.imag(v)) for v in s.eigenvalues],
        "params": {"d": p.d, "alpha": p.alpha, "gamma": p.gamma},
        "warnings": [],
    }
    for regime, pair, key, sgn in ((Regime.AGREEMENT, agree, "u_a", 1.0), (Regime.DISAGREEMENT, disagree, "u_d", -1.0)):
        entry = {"eigenvalue": _num(np.real(pair.eigenvalue)), "simple": pair.simple}
        try:
            entry["centrality"] = [_num(v) for v in centrality(s, regime).entries]
        except SpectrumError as exc:
            entry["centrality"] = None
            out["warnings"].append(str(exc))
        try:
            signed = ModelParams(p.d, p.alpha, sgn * abs(p.gamma))
            entry[key] = _num(critical_attention_any(float(np.real(pair.eigenvalue)), signed)) if pair.simple else None
        except ZeroDivisionError as exc:
            entry[key] = None
            out["warnings"].append(str(exc))
        out[regime.value] = entry
    u_key = "u_a" if p.gamma > 0 else "u_d"
    out["u_c"] = out[Regime.AGREEMENT.value if p.gamma > 0 else Regime.DISAGREEMENT.value][u_key]

    print(f"graph: N={g.num_vertices} {'directed' if g.directed else 'undirected'}")
    print("eigenvalues: " + " ".join(f"{np.real(v):.12g}" for v in s.eigenvalues))
    for regime in (Regime.AGREEMENT, Regime.DISAGREEMENT):
        e = out[regime.value]
        cent = "refused (not simple)" if e["centrality"] is None else " ".join(f"{v:.6f}" for v in e["centrality"])
        key = "u_a" if regime is Regime.AGREEMENT else "u_d"
        crit = "n/a" if e[key] is None else f"{e[key]:.12g}"
        print(f"{regime.value}: lambda={e['eigenvalue']:.12g} simple={e['simple']} {key}={crit}")
        print(f"  centrality: {cent}")
    for w in out["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    _dump(out, cfg.output_dir / "spectrum.json")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    g = cfg.graph()
    rng = np.random.default_rng(cfg.seed)
    p = cfg.params(g, rng)
    ap = cfg.attention_params(g)
    icfg = cfg.integrator_config(args.t_end)
    crit = cfg.criteria(icfg.t_end)
    x0 = rng.normal(0.0, float(cfg.model.get("x0_sigma", 0.0)), g.num_vertices) \
        if float(cfg.model.get("x0_sigma", 0.0)) else np.zeros(g.num_vertices)
    s0 = SystemState(x0, np.zeros(g.num_vertices))
    traj = integrate(CoupledField(p, ap, g), s0, icfg)
    v_c = centrality(compute_spectrum(g), cfg.regime()).entries
    verdict = detect_cascade(traj, crit, ap, p.b, v_c)
    n = g.num_vertices
    with open(cfg.output_dir / "trajectory.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *[f"x_{i}" for i in range(n)], *[f"u_{i}" for i in range(n)]])
        for t, st in zip(traj.times, traj.states):
            w.writerow([_f(t), *map(_f, st.x), *map(_f, st.u)])
    result = {
        "cascaded": verdict.cascaded,
        "classification": verdict.classification,
        "sign_pattern": [int(v) for v in verdict.sign_pattern],
        "final_state": {"x": [_num(v) for v in verdict.final_state.x], "u": [_num(v) for v in verdict.final_state.u]},
        "input": [_num(v) for v in p.b],
        "input_alignment": _num(verdict.input_alignment),
        "t_end": icfg.t_end,
    }
    _dump(result, cfg.output_dir / "verdict.json")
    print(f"cascaded={verdict.cascaded} classification={verdict.classification}")
    return EXIT_OK


def cmd_bifurcate(cfg: RunConfig, args) -> int:
    g = cfg.graph()
    bc = cfg.bifurcate
    mode = args.mode or bc.get("mode", "fixed_u")
    regime = cfg.regime()
    s = compute_spectrum(g)
    v_c = centrality(s, regime).entries
    ds_max = float(bc.get("ds_max", 5e-2 if mode == "fixed_u" else 5e-3))
    written = []
    try:
        if mode == "fixed_u":
            p = cfg.params(g)
            u_range = (float(bc.get("u_min", 0.2)), float(bc.get("u_max", 0.8)))
            branches = cont.fixed_attention_diagram(p, g, u_range, v_c, ds_max=ds_max)
        elif mode == "coupled_input":
            p = cfg.base_params()
            ap = cfg.attention_params(g)
            direction, v_c = _direction(cfg, bc, g, regime)
            branches = {"input": cont.coupled_input_diagram(p, ap, g, direction, float(bc.get("m_max", 0.1)), v_c,
                                                            ds_max=ds_max)}
        else:
            raise ConfigError(f"unknown bifurcation mode {mode!r} (fixed_u or coupled_input)")
    except cont.ContinuationError as exc:
        last = exc.last_point
        where = "" if last is None else f"; last good point at parameter {last.parameter_value:.12g}"
        print(f"continuation failed: {exc}{where}", file=sys.stderr)
        return EXIT_NUMERIC
    for name, br in branches.items():
        csv_path, summary = cont.write_branch(br, cfg.output_dir / f"branch_{name}.csv", label=name)
        written.append(csv_path.name)
        for e in br.events:
            print(f"{name}: {e.kind} at param={e.parameter_value:.10g} proj_vc={e.projection:.6g}")
    print("wrote " + ", ".join(written))
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    g = cfg.graph()
    p = cfg.base_params()
    ap = cfg.attention_params(g)
    crit = cfg.criteria(args.t_end)
    sc = cfg.sweep_config()
    icfg = cfg.integrator_config(crit.t_end)
    threads = args.threads or 1

    def progress(j, m, no):
        print(f"magnitude {j + 1}/{len(sc.magnitudes)} ({m:.6g}): {sc.runs_per_magnitude - no} cascades "
              f"of {sc.runs_per_magnitude}", file=sys.stderr)

    grid = run_sweep(g, p, ap, crit, sc, threads=threads, integrator=icfg, progress=progress)
    path = cfg.output_dir / "heatmap.csv"
    path.write_text(heatmap_to_csv(grid))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_threshold(cfg: RunConfig, args) -> int:
    g = cfg.graph()
    p = cfg.base_params()
    ap = cfg.attention_params(g)
    crit = cfg.criteria(args.t_end)
    tc = cfg.threshold
    direction, v_c = _direction(cfg, tc, g, cfg.regime())
    bracket_hi = float(tc.get("bracket_hi", 0.1))
    res = find_cascade_threshold(g, p, ap, direction, bracket_hi, crit, integrator=cfg.integrator_config(crit.t_end))
    out = {
        "threshold": res.threshold_p,
        "bracket": list(res.bracket),
        "direction": [_num(v) for v in direction],
        "alignment": _num(v_c @ direction),
        "projected_threshold": res.project(v_c),
        "equilibrium_below": {"x": [_num(v) for v in res.equilibrium_at_fold.x],
                              "u": [_num(v) for v in res.equilibrium_at_fold.u]},
    }
    if args.fold_check:
        out["fold_threshold"] = fold_threshold(g, p, ap, direction, bracket_hi, v_c)
    _dump(out, cfg.output_dir / "threshold.json")
    print(f"threshold={res.threshold_p:.8g} bracket=({res.bracket[0]:.8g}, {res.bracket[1]:.8g})")
    if "fold_threshold" in out:
        print(f"fold (continuation) at {out['fold_threshold']:.8g}")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "bifurcate": cmd_bifurcate,
    "sweep": cmd_sweep,
    "threshold": cmd_threshold,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="graph file ('N <n> <directed|undirected>' then 'i j' lines)")
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--seed", type=int, default=None, help="master random seed")
    common.add_argument("--out-dir", default=None, help="output directory")
    common.add_argument("--t-end", type=float, default=None, help="integration horizon")
    common.add_argument("--threads", type=int, default=None, help="worker processes for sweeps")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config entry")

    parser = argparse.ArgumentParser(prog="opcascade", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="eigenvalues, centralities, critical attention")
    sub.add_parser("simulate", parents=[common], help="integrate the coupled dynamics and judge the cascade")
    b = sub.add_parser("bifurcate", parents=[common], help="continue equilibrium branches to CSV")
    b.add_argument("--mode", choices=["fixed_u", "coupled_input"], default=None)
    sub.add_parser("sweep", parents=[common], help="Monte Carlo cascade heatmap")
    t = sub.add_parser("threshold", parents=[common], help="bisect the cascade input threshold")
    t.add_argument("--fold-check", action="store_true", help="also locate the fold by continuation")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = _load(args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
