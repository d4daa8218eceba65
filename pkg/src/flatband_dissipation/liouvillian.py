"""Lindblad generator: direct action and vectorised superoperator.

Vectorisation is column stacking throughout, ``vec(A rho B) = (B^T kron A)
vec(rho)``, so ``rho = vec.reshape(D, D, order="F")``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import DimensionMismatch, DimensionTooLarge, NumericalFailure

__all__ = [
    "Superoperator",
    "Spectrum",
    "apply_lindblad",
    "assemble_superoperator",
    "superoperator_spectrum",
    "vec",
    "unvec",
    "DEFAULT_MAX_DIM",
]

DEFAULT_MAX_DIM = 100


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(x: np.ndarray, dim: int | None = None) -> np.ndarray:
    if dim is None:
        dim = int(round(np.sqrt(x.size)))
    return np.asarray(x).reshape(dim, dim, order="F")


class _Jumps:
    """Jump operators split into rank-1 factors and generic dense matrices."""

    def __init__(self, jumps, dim: int):
        vs, ws, gs, dense = [], [], [], []
        for op in jumps:
            if hasattr(op, "v") and hasattr(op, "w"):
                if op.gamma == 0:
                    continue
                vs.append(op.v)
                ws.append(op.w)
                gs.append(op.gamma)
            else:
                mat, gamma = (op.matrix, op.gamma) if hasattr(op, "matrix") else (op, 1.0)
                if isinstance(op, tuple):
                    mat, gamma = op
                if gamma == 0:
                    continue
                mat = mat.toarray() if sp.issparse(mat) else np.asarray(mat)
                dense.append((mat, float(gamma)))
        for arr in vs + ws:
            if arr.shape != (dim,):
                raise DimensionMismatch(f"jump vector of length {arr.shape} for dimension {dim}")
        for mat, _ in dense:
            if mat.shape != (dim, dim):
                raise DimensionMismatch(f"jump matrix of shape {mat.shape} for dimension {dim}")
        self.dim = dim
        self.V = np.array(vs, dtype=complex).T.reshape(dim, len(vs))
        self.W = np.array(ws, dtype=complex).T.reshape(dim, len(ws))
        self.g = np.array(gs, dtype=float)
        self.dense = dense

    @property
    def gamma_total(self) -> float:
        return float(self.g.sum() + sum(g for _, g in self.dense))

    def decay_matrix(self) -> np.ndarray:
        """``sum_k gamma_k L_k^dagger L_k``."""
        vnorm2 = np.sum(np.abs(self.V) ** 2, axis=0)
        M = (self.W * (self.g * vnorm2)) @ self.W.conj().T
        for mat, g in self.dense:
            M = M + g * (mat.conj().T @ mat)
        return M


def _check_h(H) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionMismatch(f"Hamiltonian must be square, got shape {H.shape}")
    return H


def apply_lindblad(H, jumps, rho) -> np.ndarray:
    """``-i[H, rho] + sum_k gamma_k (L rho L^+ - {L^+ L, rho} / 2)``."""
    H = _check_h(H)
    rho = np.asarray(rho)
    D = H.shape[0]
    if rho.shape != (D, D):
        raise DimensionMismatch(f"rho has shape {rho.shape}, Hamiltonian dimension {D}")
    J = jumps if isinstance(jumps, _Jumps) else _Jumps(jumps, D)
    return _apply(H, J, J.decay_matrix(), rho)


def _apply(H, J: _Jumps, M, rho):
    out = -1j * (H @ rho - rho @ H) - 0.5 * (M @ rho + rho @ M)
    if J.V.shape[1]:
        s = np.einsum("ik,ij,jk->k", J.W.conj(), rho, J.W)
        out = out + (J.V * (J.g * s)) @ J.V.conj().T
    for mat, g in J.dense:
        out = out + g * (mat @ rho @ mat.conj().T)
    return out


@dataclass(frozen=True)
class Superoperator:
    """Matrix of the generator acting on column-stacked density matrices."""

    matrix: np.ndarray | sp.spmatrix
    dim: int
    gamma_total: float
    vectorization: str = "column"

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else self.matrix

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim)


def assemble_superoperator(
    H, jumps: Sequence, max_dim: int = DEFAULT_MAX_DIM, sparse: bool = False
) -> Superoperator:
    """Build the ``D^2 x D^2`` generator matrix.

    Dense assembly is refused above ``max_dim``; the sparse form has no cap
    because rank-1 jumps keep the matrix very sparse.
    """
    H = _check_h(H)
    D = H.shape[0]
    if not sparse and D > max_dim:
        raise DimensionTooLarge(
            f"dense superoperator for D={D} exceeds the cap D <= {max_dim}; use sparse or the evolution solver"
        )
    J = _Jumps(jumps, D)
    M = J.decay_matrix()
    if sparse:
        I = sp.identity(D, dtype=complex, format="csr")
        Hs = sp.csr_matrix(H)
        Ms = sp.csr_matrix(M)
        L = -1j * (sp.kron(I, Hs) - sp.kron(Hs.T, I)) - 0.5 * (sp.kron(I, Ms) + sp.kron(Ms.T, I))
        terms = [L.tocsr()]
        if J.V.shape[1]:
            # sum_k g_k (conj(v) kron v)(conj(w) kron w)^dagger, assembled as one product
            vv = sp.csr_matrix(_khatri_rao(J.V.conj(), J.V) * J.g)
            ww = sp.csr_matrix(_khatri_rao(J.W.conj(), J.W))
            terms.append((vv @ ww.conj().T).tocsr())
        for mat, g in J.dense:
            ms = sp.csr_matrix(mat)
            terms.append(g * sp.kron(ms.conj(), ms, format="csr"))
        total = terms[0]
        for t in terms[1:]:
            total = total + t
        total.eliminate_zeros()
        return Superoperator(total.tocsr(), D, J.gamma_total)
    I = np.eye(D)
    L = -1j * (np.kron(I, H) - np.kron(H.T, I)) - 0.5 * (np.kron(I, M) + np.kron(M.T, I))
    if J.V.shape[1]:
        vv = _khatri_rao(J.V.conj(), J.V) * J.g
        ww = _khatri_rao(J.W.conj(), J.W)
        L = L + vv @ ww.conj().T
    for mat, g in J.dense:
        L = L + g * np.kron(mat.conj(), mat)
    return Superoperator(L, D, J.gamma_total)


def _khatri_rao(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product: column k is ``kron(A[:, k], B[:, k])``."""
    return (A[:, None, :] * B[None, :, :]).reshape(A.shape[0] * B.shape[0], A.shape[1])


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    right: np.ndarray | None = None
    left: np.ndarray | None = None


def superoperator_spectrum(superop: Superoperator, vectors: bool = False, left: bool = False) -> Spectrum:
    """Full dense eigendecomposition, sorted by ``|Re|`` then ``|Im|``."""
    A = superop.dense()
    try:
        if left:
            w, vl, vr = sla.eig(A, left=True, right=True, check_finite=False)
        elif vectors:
            w, vr = sla.eig(A, check_finite=False)
            vl = None
        else:
            w = sla.eigvals(A, check_finite=False)
            vr = vl = None
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"superoperator eigendecomposition failed: {exc}") from exc
    order = np.lexsort((np.abs(w.imag), np.abs(w.real)))
    w = w[order]
    if vr is not None:
        vr = vr[:, order]
    if vl is not None:
        vl = vl[:, order]
    return Spectrum(w, vr, vl)
