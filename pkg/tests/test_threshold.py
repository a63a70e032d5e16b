import numpy as np
import pytest

from conftest import U_A_P3
from opcascade.cascades import CascadeCriteria, classify_state, count_inversions, simulate_cascade
from opcascade.continuation import input_direction
from opcascade.dynamics import AttentionParams, ModelParams
from opcascade.graphs import centrality, compute_spectrum
from opcascade.reduction import critical_attention
from opcascade.threshold import ThresholdError, find_cascade_threshold, fold_threshold

CRIT = CascadeCriteria()


def setup(g, gamma):
    p = ModelParams(gamma=gamma)
    s = compute_spectrum(g)
    ap = AttentionParams.around(critical_attention(s, p).u_star, y_th=0.1)
    v_c = centrality(s, "agreement" if gamma > 0 else "disagreement").entries
    return p, ap, v_c, s


def assert_bracket_verified(g, p, ap, res):
    lo, hi = res.bracket
    assert 0 <= lo < hi == res.threshold_p
    assert (hi - lo) <= 1e-3 * hi
    assert not simulate_cascade(g, p, ap, CRIT, lo * res.direction).cascaded
    assert simulate_cascade(g, p, ap, CRIT, hi * res.direction).cascaded


def test_threshold_along_centrality(p3):
    p, ap, v_c, _ = setup(p3, 1.0)
    res = find_cascade_threshold(p3, p, ap, v_c, 0.1)
    assert 0 < res.threshold_p <= 0.1
    assert_bracket_verified(p3, p, ap, res)
    assert res.threshold_p == pytest.approx(0.0043549, rel=2e-3)
    assert res.project(v_c) == pytest.approx(res.threshold_p)
    # just below threshold the run has not reached the cascaded state
    assert not classify_state(res.equilibrium_at_fold, CRIT, ap).cascaded


@pytest.mark.parametrize("graph", ["p3", "er10"])
@pytest.mark.parametrize("gamma", [1.0, -1.0])
def test_random_directions_have_verified_brackets(graph, gamma, request):
    g = request.getfixturevalue(graph)
    p, ap, v_c, _ = setup(g, gamma)
    rng = np.random.default_rng(0)
    for _ in range(5):
        d = rng.standard_normal(g.num_vertices)
        d /= np.linalg.norm(d)
        res = find_cascade_threshold(g, p, ap, d, 0.5)
        assert_bracket_verified(g, p, ap, res)


def test_threshold_non_increasing_in_alignment(p3):
    p, ap, v_c, s = setup(p3, 1.0)
    alignments = np.linspace(0.1, 1.0, 10)
    thresholds = [
        find_cascade_threshold(p3, p, ap, input_direction(v_c, a, s.right_eigenvectors[1]), 0.1).threshold_p
        for a in alignments
    ]
    assert count_inversions(thresholds) <= 1
    assert thresholds[0] > 5 * thresholds[-1]


def test_orthogonal_direction_needs_larger_input(p3):
    p, ap, v_c, s = setup(p3, 1.0)
    d = s.right_eigenvectors[1] + s.right_eigenvectors[2]
    d /= np.linalg.norm(d)
    assert abs(d @ v_c) < 1e-12
    aligned = find_cascade_threshold(p3, p, ap, v_c, 0.1)
    m = 1.5 * aligned.threshold_p
    assert simulate_cascade(p3, p, ap, CRIT, m * v_c).cascaded
    assert not simulate_cascade(p3, p, ap, CRIT, m * d).cascaded
    orth = find_cascade_threshold(p3, p, ap, d, 0.5)
    assert orth.threshold_p > 10 * aligned.threshold_p


def test_no_sign_change_errors(p3):
    p = ModelParams()
    _, _, v_c, _ = setup(p3, 1.0)
    weak = AttentionParams(0.1, 0.2, y_th=0.1)
    with pytest.raises(ThresholdError, match="no cascade"):
        find_cascade_threshold(p3, p, weak, v_c, 0.1)
    with pytest.raises(ThresholdError, match="u_c"):
        find_cascade_threshold(p3, p, AttentionParams(U_A_P3 + 0.01, 1.0), v_c, 0.1)
    with pytest.raises(ValueError, match="unit"):
        find_cascade_threshold(p3, p, weak, 2 * v_c, 0.1)


def test_fold_cross_check(p3):
    p, ap, v_c, _ = setup(p3, 1.0)
    res = find_cascade_threshold(p3, p, ap, v_c, 0.1)
    fold = fold_threshold(p3, p, ap, v_c, 0.1, v_c)
    # the fold is where the low equilibrium vanishes; a finite-horizon run needs a bit more input
    assert fold <= res.threshold_p
    assert fold == pytest.approx(res.threshold_p, rel=0.05)
    with pytest.raises(ThresholdError, match="no fold"):
        fold_threshold(p3, p, ap, v_c, 0.5 * fold, v_c)
