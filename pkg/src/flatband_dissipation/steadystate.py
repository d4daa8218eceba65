"""Steady-state extraction and the diagnostics computed from it.

Three solvers are available:

``spectral``
    full dense eigendecomposition of the superoperator; handles degenerate
    steady subspaces.
``direct``
    sparse LU solve of ``L vec(rho) = 0`` with one equation replaced by the
    trace condition; assumes a unique steady state.
``evolve``
    fixed-step RK4 integration of the master equation.

:func:`solve` picks one from the Hilbert-space dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    BadWindow,
    DimensionMismatch,
    InvalidParam,
    NoZeroEigenvalue,
    NotConverged,
    NotPure,
    NumericalFailure,
)
from .lattice import BandWindows, EigenSystem
from .liouvillian import (
    Superoperator,
    _apply,
    _Jumps,
    apply_lindblad,
    assemble_superoperator,
    superoperator_spectrum,
    unvec,
    vec,
)

__all__ = [
    "DensityMatrix",
    "SteadyStateSet",
    "PuritySpectrum",
    "steady_state_spectral",
    "steady_state_direct",
    "steady_state_evolve",
    "solve",
    "select_method",
    "default_dt",
    "initial_state",
    "project_eigenbasis",
    "fb_occupation",
    "occupation_P",
    "purity_spectrum",
    "realspace_profile",
    "unitary_diagonal_drift",
    "unitary_evolve_eigenbasis",
    "fidelity",
    "dark_coefficients",
    "outside_window_weight",
]

ZERO_TOL = 1e-8


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def check(self, herm_tol: float = 1e-10, trace_tol: float = 1e-10, psd_tol: float = 1e-8) -> None:
        m = self.matrix
        if np.abs(m - m.conj().T).max() > herm_tol:
            raise NumericalFailure("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > trace_tol:
            raise NumericalFailure(f"density matrix trace {np.trace(m)} differs from 1")
        if np.linalg.eigvalsh(m).min() < -psd_tol:
            raise NumericalFailure("density matrix has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class SteadyStateSet:
    """Steady states of a Lindbladian.

    ``count`` is the number of Liouvillian eigenvalues with ``|Re| < zero_tol``
    (spectral method; 1 is assumed by the other solvers).  ``states`` are
    density matrices spanning the stationary subspace, ``basis`` a
    Hilbert-Schmidt orthonormal Hermitian basis of it, and ``limit`` the
    stationary projection of the initial state when one was supplied.
    """

    count: int
    states: tuple[DensityMatrix, ...]
    method: str
    residual: tuple[float, ...]
    liouvillian_eigs: np.ndarray | None = None
    basis: tuple[np.ndarray, ...] = field(default_factory=tuple)
    limit: DensityMatrix | None = None

    @property
    def state(self) -> DensityMatrix:
        """The unique steady state, or the projected initial state."""
        if self.limit is not None:
            return self.limit
        return self.states[0]


@dataclass(frozen=True)
class PuritySpectrum:
    eigenvalues: np.ndarray
    pure: bool


def _hermitize(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + x.conj().T)


def _to_density(x: np.ndarray) -> np.ndarray:
    x = _hermitize(x)
    tr = np.real(np.trace(x))
    if abs(tr) < 1e-14:
        raise NumericalFailure("stationary operator has vanishing trace")
    return x / tr


def _hs_orthonormalize(mats: Sequence[np.ndarray], tol: float = 1e-8) -> list[np.ndarray]:
    basis: list[np.ndarray] = []
    for m in mats:
        x = m.copy()
        for _ in range(2):
            for b in basis:
                x = x - np.vdot(b, x).real * b
        n = np.linalg.norm(x)
        if n > tol * max(1.0, np.linalg.norm(m)):
            basis.append(x / n)
    return basis


def _density_span(basis: Sequence[np.ndarray], rank: int) -> list[np.ndarray]:
    """Density matrices spanning the same real space as a Hermitian basis.

    Positive and negative parts of a stationary Hermitian operator are
    themselves stationary, so each basis element is split into its positive
    and negative parts and a linearly independent subset is kept.
    """
    cands = []
    for b in basis:
        w, U = np.linalg.eigh(b)
        scale = np.abs(w).max()
        for part in (w > 1e-9 * scale, w < -1e-9 * scale):
            if part.any():
                X = (U[:, part] * np.abs(w[part])) @ U[:, part].conj().T
                cands.append(X / np.real(np.trace(X)))
    chosen: list[np.ndarray] = []
    ortho: list[np.ndarray] = []
    for c in cands:
        nxt = _hs_orthonormalize(ortho + [c])
        if len(nxt) > len(ortho):
            ortho = nxt
            chosen.append(_hermitize(c))
        if len(chosen) == rank:
            break
    return chosen


def _residual(H, J: _Jumps, M, rho) -> float:
    return float(np.linalg.norm(_apply(H, J, M, rho)))


def steady_state_spectral(
    superop: Superoperator,
    zero_tol: float = ZERO_TOL,
    rho0: np.ndarray | None = None,
    H: np.ndarray | None = None,
    jumps: Sequence | None = None,
) -> SteadyStateSet:
    """Steady states from the near-zero eigenvectors of the superoperator.

    For a degenerate stationary subspace, ``rho0`` (default: the maximally
    mixed state) is projected onto it along the decaying eigenmodes, giving
    the long-time limit of the evolution from ``rho0``.
    ``H`` and ``jumps`` are used only to report residuals with the direct
    Lindblad action; without them the superoperator itself is used.
    """
    D = superop.dim
    spec = superoperator_spectrum(superop, vectors=True)
    ev = spec.eigenvalues
    count = int(np.sum(np.abs(ev.real) < zero_tol))
    if count == 0:
        raise NoZeroEigenvalue(
            f"smallest |Re| of the Liouvillian spectrum is {np.abs(ev.real).min():.3e} > zero_tol={zero_tol}"
        )
    kernel = np.flatnonzero(np.abs(ev) < zero_tol)
    if len(kernel) == 0:
        raise NoZeroEigenvalue("no eigenvalue with |lambda| < zero_tol (only oscillating modes)")
    raw = [unvec(spec.right[:, k], D) for k in kernel]
    herm = []
    for x in raw:
        herm.append(_hermitize(x))
        herm.append(_hermitize(-1j * x))
    basis = _hs_orthonormalize(herm)
    rank = len(basis)
    if rank == 1:
        dens = [_to_density(basis[0])]
    else:
        dens = _density_span(basis, rank)
    res_fn = _residual_fn(superop, H, jumps)
    states = tuple(DensityMatrix(d) for d in dens)
    limit = None
    if rank > 1:
        if rho0 is None:
            rho0 = np.eye(D) / D
        limit = DensityMatrix(_to_density(_project_initial(spec.right, kernel, rho0)))
    residual = tuple(res_fn(s.matrix) for s in states)
    return SteadyStateSet(count, states, "spectral", residual, ev, tuple(basis), limit)


def _project_initial(R: np.ndarray, kernel: np.ndarray, rho0: np.ndarray) -> np.ndarray:
    """Kernel component of ``vec(rho0)`` in the right-eigenvector expansion.

    Solving ``R c = vec(rho0)`` gives the coefficients; keeping only the
    kernel ones equals the biorthogonal projector ``R_k (L_k^H R_k)^-1 L_k^H``
    built from the left eigenvectors.
    """
    D = int(round(np.sqrt(R.shape[0])))
    c = np.linalg.solve(R, vec(rho0))
    return unvec(R[:, kernel] @ c[kernel], D)


def _residual_fn(superop, H, jumps):
    if H is not None and jumps is not None:
        J = _Jumps(jumps, H.shape[0])
        M = J.decay_matrix()
        return lambda rho: _residual(H, J, M, rho)
    return lambda rho: float(np.linalg.norm(superop.apply(rho)))


def steady_state_direct(H, jumps: Sequence, superop: Superoperator | None = None) -> SteadyStateSet:
    """Unique steady state from a sparse LU solve with the trace condition."""
    H = np.asarray(H)
    D = H.shape[0]
    if superop is None:
        superop = assemble_superoperator(H, jumps, sparse=True)
    A = sp.lil_matrix(superop.matrix) if superop.is_sparse else sp.lil_matrix(superop.matrix)
    trace_row = np.zeros(D * D, dtype=complex)
    trace_row[:: D + 1] = 1.0
    A[0, :] = trace_row
    b = np.zeros(D * D, dtype=complex)
    b[0] = 1.0
    try:
        x = spla.splu(A.tocsc()).solve(b)
    except RuntimeError as exc:
        raise NumericalFailure(f"steady-state LU solve failed (degenerate steady subspace?): {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise NumericalFailure("steady-state LU solve produced non-finite entries")
    rho = _to_density(unvec(x, D))
    J = _Jumps(jumps, D)
    res = _residual(H, J, J.decay_matrix(), rho)
    return SteadyStateSet(1, (DensityMatrix(rho),), "direct", (res,))


def default_dt(H, jumps) -> float:
    J = _Jumps(jumps, np.asarray(H).shape[0])
    return 0.05 / max(J.gamma_total, float(np.abs(H).max()), 1e-12)


def steady_state_evolve(
    H,
    jumps: Sequence,
    rho0: np.ndarray,
    dt: float | None = None,
    t_max: float = 1e4,
    conv_tol: float = 1e-10,
    propagator_max_dim: int = 40,
) -> DensityMatrix:
    """Integrate the master equation with classical RK4 until stationary.

    For ``D <= propagator_max_dim`` the exact one-step RK4 map is formed as a
    ``D^2 x D^2`` matrix and raised to successive powers of two, which gives
    the same iterates as stepping but in logarithmically many products.
    Larger systems are stepped with the factored Lindblad action.
    """
    H = np.asarray(H)
    D = H.shape[0]
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (D, D):
        raise DimensionMismatch(f"rho0 has shape {rho0.shape}, Hamiltonian dimension {D}")
    if dt is None:
        dt = default_dt(H, jumps)
    if not dt > 0:
        raise InvalidParam(f"dt must be positive, got {dt}")
    J = _Jumps(jumps, D)
    M = J.decay_matrix()

    def res(r):
        return float(np.linalg.norm(_apply(H, J, M, r)))

    rho = rho0.copy()
    r = res(rho)
    if r < conv_tol:
        return DensityMatrix(rho)
    t = 0.0
    if D <= propagator_max_dim:
        L = assemble_superoperator(H, jumps, max_dim=propagator_max_dim).matrix
        hL = dt * L
        P = np.eye(D * D, dtype=complex)
        term = np.eye(D * D, dtype=complex)
        for k in range(1, 5):
            term = term @ hL / k
            P = P + term
        x = vec(rho)
        steps = 1
        while t < t_max:
            x = P @ x
            t += steps * dt
            x = x / np.sum(x[:: D + 1])
            rho = unvec(x, D)
            r = res(rho)
            if r < conv_tol:
                return DensityMatrix(_hermitize(rho))
            P = P @ P
            steps *= 2
    else:
        check_every = 50
        n = 0
        while t < t_max:
            k1 = _apply(H, J, M, rho)
            k2 = _apply(H, J, M, rho + 0.5 * dt * k1)
            k3 = _apply(H, J, M, rho + 0.5 * dt * k2)
            k4 = _apply(H, J, M, rho + dt * k3)
            rho = rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += dt
            n += 1
            if n % check_every == 0:
                rho = _hermitize(rho)
                rho /= np.real(np.trace(rho))
                r = res(rho)
                if r < conv_tol:
                    return DensityMatrix(rho)
    raise NotConverged(f"residual {r:.3e} > conv_tol={conv_tol} at t_max={t_max}")


def select_method(D: int) -> str:
    if D <= 60:
        return "spectral"
    if D <= 100:
        return "direct"
    return "evolve"


def initial_state(D: int, kind: str = "mixed", seed: int | None = 0) -> np.ndarray:
    """``I/D`` or a seeded Haar-ish random pure state."""
    if kind == "mixed":
        return np.eye(D, dtype=complex) / D
    if kind == "random_pure":
        rng = np.random.default_rng(seed)
        psi = rng.normal(size=D) + 1j * rng.normal(size=D)
        psi /= np.linalg.norm(psi)
        return np.outer(psi, psi.conj())
    raise InvalidParam(f"unknown initial state {kind!r}")


def solve(
    H,
    jumps: Sequence,
    method: str = "auto",
    zero_tol: float = ZERO_TOL,
    rho0: np.ndarray | None = None,
    dt: float | None = None,
    t_max: float = 1e4,
    conv_tol: float = 1e-10,
) -> SteadyStateSet:
    """Run the chosen steady-state solver and wrap the result."""
    H = np.asarray(H)
    D = H.shape[0]
    if method == "auto":
        method = select_method(D)
    if method == "spectral":
        S = assemble_superoperator(H, jumps, max_dim=max(D, 1))
        return steady_state_spectral(S, zero_tol, rho0=rho0, H=H, jumps=jumps)
    if method == "direct":
        return steady_state_direct(H, jumps)
    if method == "evolve":
        if rho0 is None:
            rho0 = initial_state(D)
        rho = steady_state_evolve(H, jumps, rho0, dt=dt, t_max=t_max, conv_tol=conv_tol)
        r = float(np.linalg.norm(apply_lindblad(H, jumps, rho.matrix)))
        return SteadyStateSet(1, (rho,), "evolve", (r,))
    raise InvalidParam(f"unknown solver method {method!r}")


def project_eigenbasis(rho, eig: EigenSystem) -> np.ndarray:
    """``rho_mn = <Psi_m| rho |Psi_n>`` in the ascending-energy eigenbasis."""
    rho = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    V = eig.states
    if rho.shape != (V.shape[0], V.shape[0]):
        raise DimensionMismatch(f"rho has shape {rho.shape}, eigenbasis dimension {V.shape[0]}")
    return V.conj().T @ rho @ V


def fb_occupation(rho_mn: np.ndarray, windows: BandWindows) -> float:
    lo, hi = windows.fb
    raw = float(np.real(np.trace(rho_mn[lo : hi + 1, lo : hi + 1])))
    clipped = min(max(raw, 0.0), 1.0)
    if abs(raw - clipped) > 1e-8:
        raise NumericalFailure(f"flat-band occupation {raw} lies outside [0, 1]")
    return clipped


def outside_window_weight(rho_mn: np.ndarray, lo: int, hi: int) -> float:
    """Total ``|rho_mn|`` over elements with ``m`` or ``n`` outside ``[lo, hi]``."""
    mask = np.ones(rho_mn.shape, dtype=bool)
    mask[lo : hi + 1, lo : hi + 1] = False
    return float(np.abs(rho_mn[mask]).sum())


def occupation_P(rho_mn: np.ndarray, N_p: int) -> float:
    """Sum of ``|rho_ii|`` over the ``N_p`` highest-energy eigenstates."""
    D = rho_mn.shape[0]
    if not 0 < N_p <= D:
        raise BadWindow(f"N_p={N_p} outside 1..{D}")
    return float(np.abs(np.diagonal(rho_mn)[D - N_p :]).sum())


def purity_spectrum(rho, pure_tol: float = 1e-6) -> PuritySpectrum:
    rho = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    w = np.linalg.eigvalsh(_hermitize(rho))[::-1]
    return PuritySpectrum(w, bool(w[0] >= 1 - pure_tol))


def _phase_fix(psi: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    first = np.flatnonzero(np.abs(psi) > tol * np.abs(psi).max())[0]
    return psi * np.exp(-1j * np.angle(psi[first]))


def realspace_profile(state_or_rho, amplitudes: bool | None = None) -> np.ndarray:
    """Per-site amplitudes of a pure state or occupations of a mixed one.

    A 1D input is a state vector.  For a density matrix, ``amplitudes=True``
    returns the leading eigenvector (requires purity) and ``None`` picks
    amplitudes exactly when the state is pure.  Amplitudes are phased so that
    the first significant entry is real and positive and are returned as real
    numbers when the imaginary parts vanish.
    """
    x = state_or_rho.matrix if isinstance(state_or_rho, DensityMatrix) else np.asarray(state_or_rho)
    if x.ndim == 1:
        psi = _phase_fix(x / np.linalg.norm(x))
    else:
        ps = purity_spectrum(x)
        if amplitudes is None:
            amplitudes = ps.pure
        if not amplitudes:
            return np.real(np.diagonal(x)).copy()
        if not ps.pure:
            raise NotPure(f"largest density-matrix eigenvalue {ps.eigenvalues[0]:.6f} < 1 - 1e-6")
        w, U = np.linalg.eigh(_hermitize(x))
        psi = _phase_fix(U[:, -1])
    if np.abs(psi.imag).max() < 1e-10:
        return psi.real.copy()
    return psi


def unitary_evolve_eigenbasis(rho_mn: np.ndarray, energies: np.ndarray, t: float) -> np.ndarray:
    """Dissipation-free evolution in the eigenbasis: ``rho_mn e^{-i (E_m - E_n) t}``."""
    E = np.asarray(energies)
    phase = np.exp(-1j * np.subtract.outer(E, E) * t)
    return rho_mn * phase


def unitary_diagonal_drift(rho_mn: np.ndarray, eig: EigenSystem | np.ndarray, t_samples) -> float:
    E = eig.energies if isinstance(eig, EigenSystem) else np.asarray(eig)
    d0 = np.diagonal(rho_mn)
    drift = 0.0
    for t in np.atleast_1d(t_samples):
        dt = np.diagonal(unitary_evolve_eigenbasis(rho_mn, E, float(t)))
        drift = max(drift, float(np.abs(dt - d0).max()))
    return drift


def fidelity(rho, target) -> float:
    """``<psi|rho|psi>`` for a state vector, Uhlmann fidelity for two matrices."""
    rho = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    target = target.matrix if isinstance(target, DensityMatrix) else np.asarray(target)
    if target.ndim == 1:
        psi = target / np.linalg.norm(target)
        return float(np.real(psi.conj() @ rho @ psi))
    s = sla.sqrtm(_hermitize(rho))
    inner = sla.sqrtm(s @ target @ s)
    return float(np.real(np.trace(inner)) ** 2)


def dark_coefficients(rho, dark_vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Coefficient matrix ``C_ij = <d_i|rho|d_j>`` over orthonormalised dark states."""
    rho = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    Q, _ = np.linalg.qr(np.column_stack(dark_vectors))
    return Q.conj().T @ rho @ Q
