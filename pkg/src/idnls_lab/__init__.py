"""Defocusing Ablowitz-Ladik lattice: simulation, scattering and long-time asymptotics."""
from .errors import *  # noqa: F401,F403
from .lattice import LatticeState, conserved_functional, evolve, integrate
from .scattering import ReflectionSamples, scatter
from .phase import classify_region, saddle_points
from .painleve import StokesData, solve_p2
from .asymptotics import region_b_predict, time_shift
from .harness import ExperimentConfig

__version__ = "0.1.0"
