"""Fixed-particle-number Fock space for the interacting cross-stitch ladder.

Modes are the flat site indices.  A basis state is an occupation bit pattern
(bit ``k`` set when site ``k`` is occupied); patterns are ordered as
ascending integers.  For fermions ``c_k`` carries the Jordan-Wigner string
``(-1)**(number of occupied modes below k)``; hard-core bosons use the same
patterns without signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .dissipation import DissipationChannel, channels_from_unit_cells
from .errors import BadCount, DimensionMismatch, IndexOutOfRange, InvalidParam
from .lattice import ModelSpec, SingleParticleSystem, band_windows, build_model, eigendecompose
from .steadystate import SteadyStateSet, occupation_P, project_eigenbasis, purity_spectrum, solve

__all__ = [
    "FockBasis",
    "ManyBodyOperatorMatrix",
    "ManyBodyConfig",
    "fock_basis",
    "one_body_operator",
    "mb_hamiltonian",
    "mb_jump_operators",
    "noninteracting_top_count",
    "interacting_pipeline",
]

STATISTICS = ("fermion", "hardcore_boson")


@dataclass(frozen=True)
class FockBasis:
    n_sites: int
    n_particles: int
    states: tuple[int, ...]
    index_of: Mapping[int, int]

    @property
    def size(self) -> int:
        return len(self.states)

    def occupations(self) -> np.ndarray:
        """``(size, n_sites)`` array of 0/1 occupation numbers."""
        s = np.array(self.states, dtype=np.int64)
        return ((s[:, None] >> np.arange(self.n_sites)) & 1).astype(np.int8)


@dataclass(frozen=True)
class ManyBodyOperatorMatrix:
    matrix: np.ndarray
    basis: FockBasis
    gamma: float = 1.0

    @property
    def dense(self) -> np.ndarray:
        return self.matrix


def fock_basis(n_sites: int, n_particles: int) -> FockBasis:
    if not 0 < n_particles <= n_sites:
        raise BadCount(f"need 0 < N <= D, got N={n_particles}, D={n_sites}")
    if comb(n_sites, n_particles) > 200_000:
        raise BadCount(f"sector dimension binomial({n_sites}, {n_particles}) too large")
    states = sorted(sum(1 << i for i in c) for c in combinations(range(n_sites), n_particles))
    return FockBasis(n_sites, n_particles, tuple(states), {s: k for k, s in enumerate(states)})


def _popcount_below(s: np.ndarray, k: int) -> np.ndarray:
    x = s & ((1 << k) - 1)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x >>= 1
    return count


def _hop(basis: FockBasis, i: int, j: int, statistics: str) -> sp.csr_matrix:
    """Matrix of ``c_i^dagger c_j`` in the sector."""
    s = np.array(basis.states, dtype=np.int64)
    n = basis.size
    if i == j:
        occ = (s >> i) & 1
        return sp.diags(occ.astype(float), format="csr")
    has_j = ((s >> j) & 1) == 1
    s2 = s ^ (1 << j)
    ok = has_j & (((s2 >> i) & 1) == 0)
    src = np.flatnonzero(ok)
    new = s2[ok] | (1 << i)
    rows = np.array([basis.index_of[int(x)] for x in new], dtype=np.int64)
    if statistics == "fermion":
        parity = _popcount_below(s2[ok], j) + _popcount_below(s2[ok], i)
        vals = np.where(parity % 2 == 0, 1.0, -1.0)
    else:
        vals = np.ones(len(src))
    return sp.csr_matrix((vals, (rows, src)), shape=(n, n))


def one_body_operator(M: np.ndarray, basis: FockBasis, statistics: str = "fermion") -> np.ndarray:
    """Second quantisation ``sum_kl M_kl c_k^dagger c_l`` restricted to the sector."""
    if statistics not in STATISTICS:
        raise InvalidParam(f"statistics must be one of {STATISTICS}, got {statistics!r}")
    M = np.asarray(M)
    if M.shape != (basis.n_sites, basis.n_sites):
        raise DimensionMismatch(f"operator shape {M.shape} for {basis.n_sites} modes")
    out = sp.csr_matrix((basis.size, basis.size), dtype=complex)
    for k, l in np.argwhere(M != 0):
        out = out + M[k, l] * _hop(basis, int(k), int(l), statistics)
    return out.toarray()


def nearest_neighbor_pairs(n_sites: int) -> list[tuple[int, int]]:
    """Consecutive flat indices ``(j, j + 1)``."""
    return [(j, j + 1) for j in range(n_sites - 1)]


def mb_hamiltonian(
    system: SingleParticleSystem | np.ndarray,
    V: float,
    basis: FockBasis,
    statistics: str = "fermion",
    pairs: Sequence[tuple[int, int]] | None = None,
) -> ManyBodyOperatorMatrix:
    """Hopping part of ``system`` plus ``V n_i n_j`` on each interaction pair."""
    H1 = system.hamiltonian if hasattr(system, "hamiltonian") else np.asarray(system)
    if H1.shape[0] != basis.n_sites:
        raise DimensionMismatch(f"system has {H1.shape[0]} sites, basis {basis.n_sites}")
    H = one_body_operator(H1, basis, statistics)
    if V != 0:
        occ = basis.occupations()
        if pairs is None:
            pairs = nearest_neighbor_pairs(basis.n_sites)
        e_int = np.zeros(basis.size)
        for i, j in pairs:
            e_int += occ[:, i] * occ[:, j]
        H = H + np.diag(V * e_int)
    if np.abs(H.imag).max() == 0:
        H = H.real
    return ManyBodyOperatorMatrix(H, basis)


def mb_jump_operators(
    channels: Sequence[DissipationChannel], basis: FockBasis, statistics: str = "fermion"
) -> list[ManyBodyOperatorMatrix]:
    """``(c_j^dagger + a c_k^dagger)(c_j - a c_k)`` for every channel pair."""
    out = []
    D = basis.n_sites
    for ch in channels:
        if ch.gamma == 0:
            continue
        for j, k in ch.site_list:
            if not (0 <= j < D and 0 <= k < D) or j == k:
                raise IndexOutOfRange(f"pair ({j}, {k}) invalid for {D} modes")
            v = np.zeros(D)
            w = np.zeros(D)
            v[j], v[k] = 1.0, ch.a
            w[j], w[k] = 1.0, -ch.a
            M = one_body_operator(np.outer(v, w), basis, statistics).real
            out.append(ManyBodyOperatorMatrix(M, basis, ch.gamma))
    return out


def noninteracting_top_count(H0: np.ndarray, gap: float = 1.0) -> int:
    """Number of states in the highest band cluster of a V = 0 spectrum."""
    eig = eigendecompose(H0)
    lo, hi = band_windows(eig, {"gap": gap, "fb": "top"}).fb
    return hi - lo + 1


@dataclass(frozen=True)
class ManyBodyConfig:
    cells: int = 6
    particles: int = 2
    t0: float = 10.0
    t1: float = 1.0
    V: float = 0.5
    kappa: int = 2
    a: float = 1.0
    gamma: float = 1.0
    statistics: str = "fermion"
    solver: str = "auto"
    zero_tol: float = 1e-8
    gap: float = 1.0
    boundary: str = "obc"
    extra: Mapping = field(default_factory=dict)


def interacting_pipeline(config: ManyBodyConfig | Mapping) -> dict:
    """Many-body Hamiltonian -> jumps -> steady state -> ``P``.

    ``N_p`` is the size of the top cluster of the V = 0 spectrum, held fixed
    for the interacting run.
    """
    if isinstance(config, Mapping):
        config = ManyBodyConfig(**config)
    spec = ModelSpec("cross_stitch", (config.cells,), config.boundary, {"t0": config.t0, "t1": config.t1})
    system = build_model(spec)
    basis = fock_basis(system.dim, config.particles)
    channels = channels_from_unit_cells(spec, config.kappa, config.a, config.gamma)
    H0 = mb_hamiltonian(system, 0.0, basis, config.statistics).matrix
    N_p = noninteracting_top_count(H0, config.gap)
    H = mb_hamiltonian(system, config.V, basis, config.statistics).matrix
    jumps = mb_jump_operators(channels, basis, config.statistics)
    ss: SteadyStateSet = solve(H, jumps, method=config.solver, zero_tol=config.zero_tol)
    eig = eigendecompose(H)
    rho_mn = project_eigenbasis(ss.state, eig)
    return {
        "rho_mn": rho_mn,
        "P": occupation_P(rho_mn, N_p),
        "N_p": N_p,
        "energies": eig.energies,
        "eigensystem": eig,
        "steady": ss,
        "purity": purity_spectrum(ss.state).eigenvalues,
        "basis": basis,
        "hamiltonian": H,
        "jumps": jumps,
        "system": system,
        "channels": channels,
    }
