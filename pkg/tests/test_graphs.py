import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graph_families import all_undirected_graphs, directed_graphs
from oracles import (
    charpoly_int,
    complete_graph_spectrum,
    eigenvalues_oracle,
    match_multisets,
    path_graph_eigenpairs,
)
from opcascade.graphs import (
    GraphError,
    SpectrumError,
    adjacency_matrix,
    build_graph,
    centrality,
    complete_graph,
    compute_spectrum,
    extreme_eigenpairs,
    format_graph,
    parse_graph,
    path_graph,
    read_graph,
)

SQ2 = np.sqrt(2.0)


# -- construction --------------------------------------------------------------


def test_path_graph_adjacency(p3):
    assert np.array_equal(adjacency_matrix(p3), [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    assert p3 == build_graph(3, [(0, 1), (1, 2)], False)


def test_edgeless_and_complete():
    assert not adjacency_matrix(build_graph(2, [], False)).any()
    a = adjacency_matrix(complete_graph(4))
    assert np.array_equal(a, np.ones((4, 4)) - np.eye(4))
    assert np.array_equal(a, a.T)


@pytest.mark.parametrize(
    "n, edges, directed",
    [(3, [(0, 0)], False), (3, [(0, 3)], False), (3, [(-1, 1)], True), (3, [(0, 1), (1, 0)], False),
     (3, [(0, 1), (0, 1)], True), (0, [], False)],
)
def test_build_graph_rejects(n, edges, directed):
    with pytest.raises(GraphError):
        build_graph(n, edges, directed)


def test_directed_pairs_are_distinct():
    g = build_graph(2, [(0, 1), (1, 0)], directed=True)
    assert np.array_equal(g.adjacency, [[0, 1], [1, 0]])
    assert np.array_equal(build_graph(2, [(0, 1)], True).adjacency, [[0, 1], [0, 0]])


# -- spectra against closed forms ----------------------------------------------


def test_p3_spectrum(p3_spectrum):
    assert np.allclose(p3_spectrum.eigenvalues, [SQ2, 0.0, -SQ2], atol=1e-12)
    assert np.allclose(p3_spectrum.right_eigenvectors[0], [0.5, 1 / SQ2, 0.5], atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 5, 8, 13])
def test_path_graph_closed_form(n):
    lam, vecs = path_graph_eigenpairs(n)
    s = compute_spectrum(path_graph(n))
    assert np.allclose(s.eigenvalues, lam, atol=1e-12)
    for k in range(n):
        # eigenvectors agree up to sign
        assert min(np.abs(s.right_eigenvectors[k] - vecs[k]).max(), np.abs(s.right_eigenvectors[k] + vecs[k]).max()) < 1e-10


@pytest.mark.parametrize("n", [2, 4, 6])
def test_complete_graph_closed_form(n):
    s = compute_spectrum(complete_graph(n))
    assert np.allclose(s.eigenvalues, complete_graph_spectrum(n), atol=1e-12)


def test_k4_extremes(k4):
    agree, disagree = extreme_eigenpairs(compute_spectrum(k4))
    assert agree.eigenvalue == pytest.approx(3.0, abs=1e-12) and agree.simple
    assert disagree.eigenvalue == pytest.approx(-1.0, abs=1e-12) and not disagree.simple


def test_degenerate_small_cases():
    s = compute_spectrum(build_graph(2, [], False))
    assert np.allclose(s.eigenvalues, 0.0)
    assert not s.is_simple(0)
    agree, disagree = extreme_eigenpairs(compute_spectrum(build_graph(1, [], False)))
    assert agree.eigenvalue == 0.0 == disagree.eigenvalue
    assert agree.simple


# -- centrality ------------------------------------------------------------------


def test_p3_centrality(p3_spectrum):
    assert np.allclose(centrality(p3_spectrum, "agreement").entries, [0.5, 1 / SQ2, 0.5], atol=1e-12)
    assert np.allclose(centrality(p3_spectrum, "disagreement").entries, [-0.5, 1 / SQ2, -0.5], atol=1e-12)


def test_k4_centrality(k4):
    s = compute_spectrum(k4)
    assert np.allclose(centrality(s, "agreement").entries, 0.5, atol=1e-12)
    with pytest.raises(SpectrumError, match="multiplicity 3"):
        centrality(s, "disagreement")


def test_directed_centrality_uses_left_vector():
    # 0 -> 1, 1 -> 2, 2 -> 0, 0 -> 2: not symmetric, so left != right
    g = build_graph(3, [(0, 1), (1, 2), (2, 0), (0, 2)], directed=True)
    s = compute_spectrum(g)
    agree, _ = extreme_eigenpairs(s)
    a = g.adjacency
    w = centrality(s, "agreement").entries
    assert np.allclose(w @ a, agree.eigenvalue * w, atol=1e-10)
    assert not np.allclose(np.abs(w), np.abs(agree.right), atol=1e-3)
    assert np.real(agree.left @ agree.right) > 0


# -- invariants --------------------------------------------------------------------


@st.composite
def random_graphs(draw, max_n=64):
    n = draw(st.integers(1, max_n))
    directed = draw(st.booleans())
    density = draw(st.floats(0.0, 1.0))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    if directed:
        pairs = [(i, k) for i in range(n) for k in range(n) if i != k]
    else:
        pairs = list(itertools.combinations(range(n), 2))
    keep = rng.random(len(pairs)) < density
    return build_graph(n, [e for e, k in zip(pairs, keep) if k], directed)


@settings(max_examples=60, deadline=None)
@given(random_graphs())
def test_eigenpair_residuals(g):
    s = compute_spectrum(g)
    a = g.adjacency
    bound = 1e-8 * max(1.0, np.abs(a).sum(axis=1).max())
    r_right, r_left = s.residuals()
    assert r_right.max() <= bound
    if not g.directed:
        assert r_left.max() <= bound
        assert np.array_equal(s.left_eigenvectors, s.right_eigenvectors)


@settings(max_examples=60, deadline=None)
@given(random_graphs(max_n=30))
def test_agreement_centrality_positive_when_connected(g):
    if g.directed or not g.is_connected() or g.num_vertices < 2:
        return
    s = compute_spectrum(g)
    cv = centrality(s, "agreement")
    assert np.all(cv.entries > 0)
    assert np.linalg.norm(cv.entries) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_undirected_eigenvalues_match_charpoly_oracle(n):
    worst = 0.0
    for g in all_undirected_graphs(n):
        worst = max(worst, match_multisets(compute_spectrum(g).eigenvalues, eigenvalues_oracle(g.adjacency)))
    assert worst < 1e-6


@pytest.mark.parametrize("n, limit", [(2, None), (3, None), (4, 300), (5, 150)])
def test_directed_eigenvalues_match_charpoly_oracle(n, limit):
    worst = 0.0
    for g in directed_graphs(n, limit):
        worst = max(worst, match_multisets(compute_spectrum(g).eigenvalues, eigenvalues_oracle(g.adjacency)))
    assert worst < 1e-6


def test_charpoly_oracle_known_values():
    assert charpoly_int([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) == (1, 0, -2, 0)
    assert charpoly_int(np.ones((4, 4)) - np.eye(4)) == (1, 0, -6, -8, -3)


# -- file format -----------------------------------------------------------------------


def test_graph_file_roundtrip(tmp_path, er10):
    text = format_graph(er10)
    assert parse_graph(text) == er10
    path = tmp_path / "g.txt"
    path.write_text("# comment\n" + text)
    assert read_graph(path) == er10
    assert er10.is_connected()


def test_graph_file_both_orientations_tolerated():
    g = parse_graph("N 3 undirected\n0 1\n1 0\n1 2\n")
    assert g == path_graph(3)


@pytest.mark.parametrize(
    "text, fragment",
    [("0 1\n", "header"), ("N 3 undirected\n0 x\n", ":2: non-integer"), ("N 3 undirected\n0 1 2\n", ":2: expected edge"),
     ("N 3 sideways\n", "header"), ("N 2 undirected\n0 5\n", "outside"), ("# only comments\n", "missing header")],
)
def test_graph_file_errors(text, fragment):
    with pytest.raises(GraphError, match=fragment):
        parse_graph(text, source="g.txt")


def test_defective_eigenvalue_is_merged_and_not_simple():
    # charpoly (x + 1)^3 (x^2 - 3x + 1) with a Jordan block at -1
    edges = [(0, 1), (0, 3), (0, 4), (1, 0), (1, 3), (1, 4), (2, 0), (2, 3), (3, 0), (3, 1), (3, 2), (3, 4), (4, 0)]
    g = build_graph(5, edges, directed=True)
    assert charpoly_int(g.adjacency) == (1, 0, -5, -5, 0, 1)
    s = compute_spectrum(g)
    phi = (3 + np.sqrt(5)) / 2
    assert np.allclose(np.sort(np.real(s.eigenvalues)), [-1, -1, -1, 1 / phi, phi], atol=1e-12)
    _, disagree = extreme_eigenpairs(s)
    assert not disagree.simple
    r_right, r_left = s.residuals()
    assert max(r_right.max(), r_left.max()) < 1e-12
