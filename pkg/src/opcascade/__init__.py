"""Networked nonlinear opinion dynamics with attention feedback: spectra, bifurcations and cascades."""

from .graphs import Graph, Regime, Spectrum, build_graph, centrality, compute_spectrum, path_graph, complete_graph
from .dynamics import AttentionParams, ModelParams, SystemState, Trajectory
from .integrate import Equilibrium, IntegratorConfig, Stability, integrate, newton_equilibrium
from .reduction import critical_attention, ls_coefficients
from .cascades import CascadeCriteria, SweepConfig, run_sweep

__version__ = "0.1.0"
