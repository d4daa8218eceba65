"""Dissipative preparation of flat-band states in lattice models.

Build a lattice (``lattice``), attach bond dissipation (``dissipation``),
assemble the Lindblad generator (``liouvillian``) and extract and analyse
its steady states (``steadystate``); ``manybody`` covers the two-particle
interacting ladder.
"""

__version__ = "0.1.0"

from .dissipation import (
    DissipationChannel,
    JumpOperator,
    channels_from_unit_cells,
    dark_state,
    jump_operators,
    make_channel,
    validate_fb_conditions,
    verify_dark,
)
from .lattice import (
    ModelSpec,
    band_windows,
    build_model,
    build_twisted_bilayer,
    cls_states,
    eigendecompose,
    superlattice_sites,
)
from .liouvillian import apply_lindblad, assemble_superoperator, superoperator_spectrum
from .steadystate import (
    fb_occupation,
    fidelity,
    occupation_P,
    project_eigenbasis,
    purity_spectrum,
    solve,
    steady_state_direct,
    steady_state_evolve,
    steady_state_spectral,
)

__all__ = [
    "DissipationChannel",
    "JumpOperator",
    "channels_from_unit_cells",
    "dark_state",
    "jump_operators",
    "make_channel",
    "validate_fb_conditions",
    "verify_dark",
    "ModelSpec",
    "band_windows",
    "build_model",
    "build_twisted_bilayer",
    "cls_states",
    "eigendecompose",
    "superlattice_sites",
    "apply_lindblad",
    "assemble_superoperator",
    "superoperator_spectrum",
    "fb_occupation",
    "fidelity",
    "occupation_P",
    "project_eigenbasis",
    "purity_spectrum",
    "solve",
    "steady_state_direct",
    "steady_state_evolve",
    "steady_state_spectral",
]
