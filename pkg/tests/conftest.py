from pathlib import Path

import numpy as np
import pytest

from opcascade.graphs import centrality, complete_graph, compute_spectrum, path_graph, read_graph

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
U_A_P3 = 1.0 / (1.0 + np.sqrt(2.0))


@pytest.fixture(scope="session")
def configs_dir():
    return CONFIGS


@pytest.fixture(scope="session")
def p3():
    return path_graph(3)


@pytest.fixture(scope="session")
def k4():
    return complete_graph(4)


@pytest.fixture(scope="session")
def er10():
    return read_graph(CONFIGS / "er10.txt")


@pytest.fixture(scope="session")
def p3_spectrum(p3):
    return compute_spectrum(p3)


@pytest.fixture(scope="session")
def v_max_p3(p3_spectrum):
    return centrality(p3_spectrum, "agreement").entries


@pytest.fixture(scope="session")
def v_min_p3(p3_spectrum):
    return centrality(p3_spectrum, "disagreement").entries
