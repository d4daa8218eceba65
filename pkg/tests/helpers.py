"""Cached model solves shared by the unit and acceptance tests."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from flatband_dissipation.dissipation import channels_from_unit_cells, jump_operators, make_channel
from flatband_dissipation.lattice import ModelSpec, band_windows, build_model, eigendecompose
from flatband_dissipation.manybody import interacting_pipeline
from flatband_dissipation.steadystate import project_eigenbasis, solve


@lru_cache(maxsize=None)
def system(kind: str, size: tuple, boundary: str = "obc", params: tuple = ()):
    return build_model(ModelSpec(kind, size, boundary, dict(params)))


@lru_cache(maxsize=None)
def eig(kind: str, size: tuple, boundary: str = "obc", params: tuple = ()):
    return eigendecompose(system(kind, size, boundary, params))


def fb_window(E: np.ndarray, e_fb: float, tol: float = 1e-8) -> tuple[int, int]:
    idx = np.flatnonzero(np.abs(E - e_fb) < tol)
    assert len(idx) and np.all(np.diff(idx) == 1)
    return int(idx[0]), int(idx[-1])


@lru_cache(maxsize=None)
def unit_cell_solve(kind: str, L: int, kappa: int, a: float, method: str = "spectral", gammas: tuple = ()):
    """Steady state with ``q = kappa U`` cells on the default chains (or given gammas)."""
    s = system(kind, (L,))
    g = dict(gammas) if gammas else 1.0
    ch = channels_from_unit_cells(s, kappa, a, g)
    J = jump_operators(s, ch)
    ss = solve(s.hamiltonian, J, method=method)
    e = eig(kind, (L,))
    return s, ch, J, ss, e, project_eigenbasis(ss.state, e)


@lru_cache(maxsize=None)
def site_channel_solve(kind: str, size: tuple, boundary: str, chains: tuple, method: str = "auto"):
    """Steady state for explicit ``(chain, q_sites, a)`` channels."""
    s = system(kind, size, boundary)
    ch = [make_channel(s, c, q, a) for c, q, a in chains]
    J = jump_operators(s, ch)
    ss = solve(s.hamiltonian, J, method=method)
    e = eig(kind, size, boundary)
    return s, ch, J, ss, e, project_eigenbasis(ss.state, e)


@lru_cache(maxsize=None)
def bilayer(a: float, direction: str):
    s, ch, J, ss, e, rmn = site_channel_solve("twisted_bilayer", (7,), "obc", ((direction, 1, a),), "direct")
    win = band_windows(e, {"gap": 1.0, "fb": "top"})
    return s, ss, e, rmn, win


@lru_cache(maxsize=None)
def interacting(V: float, statistics: str = "fermion"):
    return interacting_pipeline({"V": V, "statistics": statistics})
