import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import U_A_P3
from opcascade.cascades import (
    CascadeCriteria,
    CascadeOutcome,
    HeatmapGrid,
    SweepConfig,
    bin_threshold_magnitudes,
    classify_state,
    count_inversions,
    detect_cascade,
    heatmap_to_csv,
    random_input,
    read_heatmap_csv,
    run_seed,
    run_sweep,
    sign_pattern_match,
    simulate_cascade,
)
from opcascade.config import load_config
from opcascade.dynamics import AttentionParams, CoupledField, ModelParams, SystemState
from opcascade.graphs import build_graph, centrality, compute_spectrum
from opcascade.integrate import IntegratorConfig, integrate
from opcascade.reduction import critical_attention

CRIT = CascadeCriteria()


def scenario(configs_dir, name):
    """Build a run exactly as ``opcascade simulate`` does."""
    cfg = load_config(configs_dir / name)
    g = cfg.graph()
    rng = np.random.default_rng(cfg.seed)
    p = cfg.params(g, rng)
    ap = cfg.attention_params(g)
    x0 = rng.normal(0.0, float(cfg.model["x0_sigma"]), g.num_vertices)
    icfg = cfg.integrator_config()
    traj = integrate(CoupledField(p, ap, g), SystemState(x0, 0.0), icfg)
    v_c = centrality(compute_spectrum(g), cfg.regime()).entries
    return detect_cascade(traj, cfg.criteria(icfg.t_end), ap, p.b, v_c), v_c


def test_agreement_cascade_scenario(configs_dir):
    out, v_c = scenario(configs_dir, "cascade_agreement.cfg")
    assert out.cascaded and out.classification == "agreement"
    assert sign_pattern_match(out, v_c) == 1.0


def test_disagreement_cascade_scenario(configs_dir):
    out, v_min = scenario(configs_dir, "cascade_disagreement.cfg")
    assert out.cascaded and out.classification == "disagreement"
    assert sign_pattern_match(out, v_min) == 1.0


def test_zero_input_from_neutral_never_cascades(p3):
    ap = AttentionParams.around(U_A_P3)
    out = simulate_cascade(p3, ModelParams(), ap, CRIT, np.zeros(3))
    assert not out.cascaded and out.classification == "none"
    assert not out.final_state.x.any()
    assert out.input_magnitude == 0.0 and out.input_alignment == 0.0


def test_detect_requires_full_horizon(p3):
    ap = AttentionParams.around(U_A_P3)
    traj = integrate(CoupledField(ModelParams(), ap, p3), SystemState.neutral(3), IntegratorConfig(t_end=10.0))
    with pytest.raises(ValueError, match="horizon"):
        detect_cascade(traj, CascadeCriteria(t_end=20.0), ap)


def test_classify_state_thresholds():
    ap = AttentionParams(0.4, 1.0)
    gate = 0.4 + 0.5 * 0.6
    high = SystemState([0.5, -0.3, 0.2], [gate + 0.01] * 3)
    out = classify_state(high, CRIT, ap)
    assert out.cascaded and out.classification == "disagreement"
    assert list(out.sign_pattern) == [1, -1, 1]
    assert classify_state(SystemState([0.5, 0.3, 0.2], [gate + 0.01] * 3), CRIT, ap).classification == "agreement"
    assert not classify_state(SystemState([0.5, 0.3, 0.05], [gate + 0.01] * 3), CRIT, ap).cascaded
    assert not classify_state(SystemState([0.5, 0.3, 0.2], [gate, 1.0, 1.0]), CRIT, ap).cascaded
    weak = classify_state(SystemState([0.5, 0.05, -0.02], [1.0] * 3), CRIT, ap)
    assert list(weak.sign_pattern) == [1, 0, 0]


def test_criteria_validation():
    for kw in (dict(theta_x=0.0), dict(attention_fraction=1.0), dict(t_end=0.0)):
        with pytest.raises(ValueError):
            CascadeCriteria(**kw)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1), st.booleans())
def test_zero_input_runs_never_cascade(n, seed, cooperative):
    rng = np.random.default_rng(seed)
    pairs = [(i, k) for i in range(n) for k in range(i + 1, n)]
    g = build_graph(n, [e for e, keep in zip(pairs, rng.random(len(pairs)) < 0.6) if keep])
    p = ModelParams(gamma=1.0 if cooperative else -1.0)
    s = compute_spectrum(g)
    try:
        u_c = critical_attention(s, p).u_star
    except (ArithmeticError, ZeroDivisionError):
        return
    if u_c <= 0.02:
        return
    ap = AttentionParams.around(u_c, below=0.01)
    out = simulate_cascade(g, p, ap, CascadeCriteria(t_end=50.0), np.zeros(n))
    assert not out.cascaded


# -- random inputs -----------------------------------------------------------------------


@given(st.integers(0, 2**63 - 1), st.floats(0.0, 10.0), st.integers(1, 20))
def test_random_input_norm(seed, magnitude, n):
    b = random_input(np.random.default_rng(seed), magnitude, n)
    assert b.shape == (n,)
    assert np.linalg.norm(b) == pytest.approx(magnitude, abs=1e-12 * max(1.0, magnitude))


def test_random_input_reproducible():
    a = random_input(np.random.default_rng(42), 0.1, 3)
    b = random_input(np.random.default_rng(42), 0.1, 3)
    assert a.tobytes() == b.tobytes()
    assert not random_input(np.random.default_rng(42), 0.0, 3).any()
    with pytest.raises(ValueError):
        random_input(np.random.default_rng(0), -1.0, 3)


def test_run_seed():
    assert run_seed(2021, 0) == 2021
    assert run_seed(2021, 5) == 2021 ^ 5
    assert run_seed(-1, 0) == 2**64 - 1


# -- sign patterns -------------------------------------------------------------------------


def _outcome(x):
    x = np.asarray(x, dtype=float)
    return CascadeOutcome(True, SystemState(x, 1.0), np.sign(x).astype(int), "agreement")


def test_sign_pattern_match_examples(v_max_p3, v_min_p3):
    assert sign_pattern_match(_outcome([0.5, 0.7, 0.5]), v_max_p3) == 1.0
    assert sign_pattern_match(_outcome([-0.5, -0.7, -0.5]), v_max_p3) == 1.0
    assert sign_pattern_match(_outcome([0.4, -0.6, 0.4]), v_min_p3) == 1.0
    assert sign_pattern_match(_outcome([0.4, 0.6, -0.4]), v_min_p3) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        sign_pattern_match(CascadeOutcome(False, SystemState([0.0], 0.0), np.zeros(1), "none"), [1.0])


def test_sign_pattern_match_chance_level():
    rng = np.random.default_rng(7)
    ref = rng.choice([-1.0, 1.0], 400)
    vals = [sign_pattern_match(_outcome(rng.choice([-1.0, 1.0], 400)), ref) for _ in range(50)]
    assert 0.5 <= np.mean(vals) < 0.56


# -- sweeps -----------------------------------------------------------------------------------


def test_zero_magnitude_grid(p3):
    ap = AttentionParams.around(U_A_P3, y_th=0.2)
    grid = run_sweep(p3, ModelParams(), ap, CascadeCriteria(t_end=100.0), SweepConfig(magnitudes=(0.0,), runs_per_magnitude=12))
    assert grid.total_runs == 12
    fr = grid.fractions
    assert np.all(fr[grid.counts > 0] == 1.0)
    assert np.all(np.isnan(fr[grid.counts == 0]))


def test_large_aligned_input_always_cascades(p3, v_max_p3):
    ap = AttentionParams.around(U_A_P3, y_th=0.2)
    for m in (0.05, 0.1):
        out = simulate_cascade(p3, ModelParams(), ap, CRIT, m * v_max_p3, v_max_p3)
        assert out.cascaded and out.input_alignment == pytest.approx(1.0)
    grid = run_sweep(p3, ModelParams(), ap, CRIT, SweepConfig(magnitudes=(0.1,), runs_per_magnitude=30, rng_seed=5))
    aligned = grid.counts[5:, 0] > 0
    assert aligned.any()
    assert np.all(grid.fractions[5:, 0][aligned] == 0.0)


def test_sweep_rejects_supercritical_floor(p3):
    ap = AttentionParams(U_A_P3 + 0.01, 1.0)
    with pytest.raises(ValueError, match="below the critical"):
        run_sweep(p3, ModelParams(), ap, CRIT, SweepConfig(magnitudes=(0.0,), runs_per_magnitude=1))


@pytest.mark.parametrize("gamma, name", [(1.0, "agreement"), (-1.0, "disagreement")])
def test_cascaded_sign_patterns(p3, gamma, name):
    ap = AttentionParams.around(U_A_P3, y_th=0.2)
    cfg = SweepConfig(magnitudes=(0.05, 0.1), runs_per_magnitude=20, rng_seed=11, regime=name)
    grid = run_sweep(p3, ModelParams(gamma=gamma), ap, CRIT, cfg)
    cascaded = [r for r in grid.records if r.cascaded]
    assert len(cascaded) >= 10
    if gamma > 0:
        assert np.mean([r.classification == "agreement" for r in cascaded]) >= 0.95
    else:
        assert np.mean([r.sign_match == 1.0 for r in cascaded]) >= 0.90


def test_sweep_determinism_across_workers(p3):
    ap = AttentionParams.around(U_A_P3, y_th=0.2)
    cfg = SweepConfig(magnitudes=(0.02, 0.06), runs_per_magnitude=8, rng_seed=99)
    one = run_sweep(p3, ModelParams(), ap, CascadeCriteria(t_end=200.0), cfg, threads=1)
    two = run_sweep(p3, ModelParams(), ap, CascadeCriteria(t_end=200.0), cfg, threads=2)
    assert heatmap_to_csv(one) == heatmap_to_csv(two)
    assert [repr(r) for r in one.records] == [repr(r) for r in two.records]


# -- heatmap I/O and shape checks ---------------------------------------------------------------


def _grid():
    counts = np.array([[2, 0, 3], [1, 4, 0]])
    no = np.array([[2, 0, 1], [1, 0, 0]])
    return HeatmapGrid(np.array([0.0, 0.5, 1.0]), np.array([0.0, 0.05, 0.1]), counts, no)


def test_heatmap_csv_roundtrip(tmp_path):
    g = _grid()
    text = heatmap_to_csv(g)
    lines = text.splitlines()
    assert lines[0] == "alignment_bin_lo,alignment_bin_hi,magnitude,count,no_cascade_fraction"
    assert "0,0.5,0.050000000000000003,0,NA" in lines
    path = tmp_path / "h.csv"
    path.write_text(text)
    back = read_heatmap_csv(path)
    assert np.array_equal(back.counts, g.counts) and np.array_equal(back.no_cascade, g.no_cascade)
    assert np.array_equal(back.magnitudes, g.magnitudes)
    assert heatmap_to_csv(back) == text


def test_fractions_and_thresholds():
    g = _grid()
    fr = g.fractions
    assert fr[0, 0] == 1.0 and np.isnan(fr[0, 1]) and fr[0, 2] == pytest.approx(1 / 3)
    thr = bin_threshold_magnitudes(g)
    assert thr[0] == 0.1 and thr[1] == 0.05
    assert count_inversions([1.0, 0.8, np.nan, 0.9, 0.2]) == 1
    assert count_inversions([np.inf, 0.06, 0.04, 0.05], increasing=False) == 1
    assert count_inversions([0.1, 0.2, 0.15], increasing=True) == 1


def test_sweep_config_validation():
    for kw in (dict(magnitudes=()), dict(magnitudes=(-0.1,)), dict(runs_per_magnitude=0), dict(regime="other")):
        with pytest.raises(ValueError):
            SweepConfig(**kw)
