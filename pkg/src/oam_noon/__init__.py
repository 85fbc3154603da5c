"""Simulation of OAM-entangled photon pairs and heralded multi-mode N00N states.

Modules
-------
lg_engine
    Laguerre-Gauss modes, overlap integrals and coincidence tables.
fock
    Sparse multimode Fock states and linear mode transformations.
optics
    Down-conversion, beam splitters, coincidence filtering and heralding.
protocol
    The two-crystal device pipeline and closed-form templates.
analysis
    Spiral spectra, Schmidt decomposition and N00N fidelities.
search
    Derivative-free search over projector weights.
"""

from .analysis import *  # noqa: F401,F403
from .errors import (
    ConfigError,
    ContractError,
    ConvergenceError,
    DegenerateProjectorError,
    DegenerateStateError,
    OamNoonError,
)
from .fock import *  # noqa: F401,F403
from .lg_engine import *  # noqa: F401,F403
from .optics import *  # noqa: F401,F403
from .protocol import *  # noqa: F401,F403
from .search import *  # noqa: F401,F403

__version__ = "0.1.0"
