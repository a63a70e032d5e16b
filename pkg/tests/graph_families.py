"""Graph enumerators shared by the unit and acceptance tests."""

import itertools

import numpy as np

from opcascade.graphs import build_graph


def all_undirected_graphs(n):
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(2 ** len(pairs)):
        yield build_graph(n, [e for b, e in enumerate(pairs) if mask >> b & 1])


def directed_graphs(n, limit=None, seed=0):
    pairs = [(i, k) for i in range(n) for k in range(n) if i != k]
    total = 2 ** len(pairs)
    masks = range(total) if limit is None else np.random.default_rng(seed).integers(0, total, limit)
    for mask in masks:
        yield build_graph(n, [e for b, e in enumerate(pairs) if int(mask) >> b & 1], directed=True)


def random_graph(rng, n, directed=False):
    pairs = [(i, k) for i in range(n) for k in range(n) if i != k and (directed or i < k)]
    keep = rng.random(len(pairs)) < 0.5
    return build_graph(n, [e for e, kk in zip(pairs, keep) if kk], directed)
