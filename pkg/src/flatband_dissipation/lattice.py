"""Single-particle lattice models with flat bands.

Six models are supported: the cross-stitch and sawtooth ladders, the 1D and
2D Lieb lattices, a twisted bilayer of square lattices and the topological
checkerboard lattice.  Every builder returns a :class:`SingleParticleSystem`
holding a labelled site list and a dense Hermitian hopping matrix.

Site ordering inside a unit cell is fixed per model and is what the
dissipation module uses to walk along chains:

* cross-stitch / sawtooth: ``(upper_j, lower_j)`` so that the upper site of
  cell ``j`` has flat index ``2j`` (0-based)
* 1D Lieb: ``(u1, u2, m, l1, l2)``; the middle-chain site is the third site of
  every cell
* 2D Lieb: ``(A, B, C)`` per cell, cells in row-major ``x * Ly + y`` order
* checkerboard: ``(A, B)`` per cell, cells in ``x * Ly + y`` order
* twisted bilayer: all layer-1 sites first, then layer 2, each layer in
  ``x * n + y`` order
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import (
    AmbiguousBands,
    InvalidParam,
    NoExactCls,
    NotBilayer,
    NumericalFailure,
    SizeTooSmall,
    UnknownModel,
)

__all__ = [
    "SiteIndex",
    "ModelSpec",
    "SingleParticleSystem",
    "EigenSystem",
    "ClsVector",
    "BandWindows",
    "build_model",
    "build_twisted_bilayer",
    "superlattice_sites",
    "superlattice_directions",
    "eigendecompose",
    "cls_states",
    "band_windows",
    "cls_class",
    "flatness_ratio",
    "snap_twist_angle",
]

KINDS = ("cross_stitch", "sawtooth", "lieb1d", "lieb2d", "twisted_bilayer", "checkerboard")

_ALIASES = {
    "crossstitch": "cross_stitch",
    "cross-stitch": "cross_stitch",
    "sawtooth": "sawtooth",
    "lieb1d": "lieb1d",
    "lieb": "lieb1d",
    "lieb2d": "lieb2d",
    "twistedbilayersquare": "twisted_bilayer",
    "twisted_bilayer_square": "twisted_bilayer",
    "bilayer": "twisted_bilayer",
    "checkerboard": "checkerboard",
}

# minimal number of unit cells spanned by one compact localized state
_CLS_CLASS = {"cross_stitch": 1, "sawtooth": 2, "lieb1d": 2, "lieb2d": 2}

SQRT2 = np.sqrt(2.0)

DEFAULT_PARAMS = {
    "cross_stitch": {"t0": 0.0, "t1": 1.0},
    "sawtooth": {},
    "lieb1d": {"t": 1.0},
    "lieb2d": {"t": 1.0},
    "twisted_bilayer": {
        "t": 1.0,
        "t_perp": 10.0,
        "delta": 10.0,
        "l0": 0.15,
        "theta": 36.87,
        "cutoff": 1e-12,
    },
    "checkerboard": {
        "J": 1.0,
        "phi": np.pi / 4,
        "J1": 1.0 / (2.0 + SQRT2),
        "J2": -1.0 / (2.0 + SQRT2),
        "J3": 1.0 / (2.0 + 2.0 * SQRT2),
    },
}


def _canonical_kind(kind: str) -> str:
    key = str(kind).strip().lower()
    if key in KINDS:
        return key
    key = key.replace(" ", "")
    if key in _ALIASES:
        return _ALIASES[key]
    if key.replace("_", "") in _ALIASES:
        return _ALIASES[key.replace("_", "")]
    raise UnknownModel(f"unknown model kind {kind!r}; expected one of {KINDS}")


@dataclass(frozen=True)
class SiteIndex:
    flat_index: int
    cell: int | tuple[int, int]
    chain: str
    position: tuple[float, float]


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of a lattice model.

    ``size`` is ``(L,)`` for the ladders and the 1D Lieb lattice,
    ``(Lx, Ly)`` for the 2D Lieb and checkerboard lattices, and ``(n,)`` (an
    ``n x n`` patch per layer) for the twisted bilayer.
    """

    kind: str
    size: tuple[int, ...]
    boundary: str = "obc"
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", _canonical_kind(self.kind))
        size = self.size
        if np.isscalar(size):
            size = (int(size),)
        size = tuple(int(s) for s in size)
        if self.kind in ("lieb2d", "checkerboard") and len(size) == 1:
            size = (size[0], size[0])
        object.__setattr__(self, "size", size)
        boundary = str(self.boundary).lower()
        if boundary not in ("obc", "pbc"):
            raise InvalidParam(f"boundary must be 'obc' or 'pbc', got {self.boundary!r}")
        object.__setattr__(self, "boundary", boundary)
        defaults = DEFAULT_PARAMS[self.kind]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise InvalidParam(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        merged = dict(defaults)
        merged.update({k: float(v) for k, v in self.params.items()})
        for k, v in merged.items():
            if not np.isfinite(v):
                raise InvalidParam(f"parameter {k} must be finite, got {v}")
        object.__setattr__(self, "params", merged)

    @property
    def pbc(self) -> bool:
        return self.boundary == "pbc"

    @property
    def cls_class(self) -> int | None:
        return _CLS_CLASS.get(self.kind)


def cls_class(spec: ModelSpec) -> int | None:
    """CLS class ``U`` of the model, or ``None`` when it has no exact CLS."""
    return spec.cls_class


@dataclass(frozen=True)
class SingleParticleSystem:
    sites: tuple[SiteIndex, ...]
    hamiltonian: np.ndarray
    model: ModelSpec

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def site_array(self, attr: str) -> list:
        return [getattr(s, attr) for s in self.sites]


@dataclass(frozen=True)
class EigenSystem:
    energies: np.ndarray
    states: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.energies)


@dataclass(frozen=True)
class ClsVector:
    amplitudes: np.ndarray
    anchor_cell: int | tuple[int, int]
    span_cells: int
    energy: float


@dataclass(frozen=True)
class BandWindows:
    """Partition of sorted eigenvalue indices; ranges are inclusive."""

    windows: tuple[tuple[str, int, int], ...]
    fb_label: str

    def window(self, label: str) -> tuple[int, int]:
        for name, lo, hi in self.windows:
            if name == label:
                return lo, hi
        raise KeyError(label)

    @property
    def fb(self) -> tuple[int, int]:
        return self.window(self.fb_label)

    def fb_indices(self) -> np.ndarray:
        lo, hi = self.fb
        return np.arange(lo, hi + 1)


class _Builder:
    """Accumulates hoppings; ``None`` indices (dropped OBC bonds) are ignored."""

    def __init__(self, dim: int, dtype=float):
        self.h = np.zeros((dim, dim), dtype=dtype)

    def hop(self, i, j, amp):
        if i is None or j is None:
            return
        self.h[i, j] += amp
        self.h[j, i] += np.conj(amp)

    def onsite(self, i, value):
        self.h[i, i] += value


def _wrap(n: int, size: int, pbc: bool) -> int | None:
    if pbc:
        return n % size
    return n if 0 <= n < size else None


def _check_size(spec: ModelSpec, ndim: int):
    if len(spec.size) != ndim:
        raise InvalidParam(f"{spec.kind} expects a {ndim}-component size, got {spec.size}")
    if any(s < 1 for s in spec.size):
        raise SizeTooSmall(f"size entries must be positive, got {spec.size}")


def _ladder(spec: ModelSpec, h0: np.ndarray, h1: np.ndarray) -> SingleParticleSystem:
    (L,) = spec.size
    b = _Builder(2 * L)
    sites = []
    upper_x = 0.5 if spec.kind == "sawtooth" else 0.0
    for j in range(L):
        sites.append(SiteIndex(2 * j, j, "upper", (j + upper_x, 1.0)))
        sites.append(SiteIndex(2 * j + 1, j, "lower", (float(j), 0.0)))
        b.h[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] += h0
        k = _wrap(j + 1, L, spec.pbc)
        if k is None or (L == 1):
            continue
        for r in range(2):
            for c in range(2):
                if h1[r, c] != 0:
                    b.hop(2 * j + r, 2 * k + c, h1[r, c])
    return SingleParticleSystem(tuple(sites), b.h, spec)


def _cross_stitch(spec):
    t0, t1 = spec.params["t0"], spec.params["t1"]
    h0 = -t0 * np.array([[0.0, 1.0], [1.0, 0.0]])
    h1 = -t1 * np.ones((2, 2))
    return _ladder(spec, h0, h1)


def _sawtooth(spec):
    h0 = -np.array([[0.0, SQRT2], [SQRT2, 0.0]])
    h1 = -np.array([[0.0, SQRT2], [0.0, 1.0]])
    return _ladder(spec, h0, h1)


def _lieb1d(spec):
    (L,) = spec.size
    t = spec.params["t"]
    b = _Builder(5 * L)
    sites = []
    labels = ("upper", "upper", "middle", "lower", "lower")
    offsets = ((0.0, 2.0), (1.0, 2.0), (0.0, 1.0), (0.0, 0.0), (1.0, 0.0))
    for n in range(L):
        base = 5 * n
        for k in range(5):
            x, y = offsets[k]
            sites.append(SiteIndex(base + k, n, labels[k], (2.0 * n + x, y)))
        u1, u2, m, l1, l2 = range(base, base + 5)
        b.hop(u1, u2, t)
        b.hop(u1, m, t)
        b.hop(l1, l2, t)
        b.hop(l1, m, t)
        nxt = _wrap(n + 1, L, spec.pbc)
        if nxt is not None and L > 1:
            b.hop(u2, 5 * nxt, t)
            b.hop(l2, 5 * nxt + 3, t)
    return SingleParticleSystem(tuple(sites), b.h, spec)


def _lieb2d(spec):
    Lx, Ly = spec.size
    t = spec.params["t"]
    b = _Builder(3 * Lx * Ly)

    def idx(x, y, s):
        x, y = _wrap(x, Lx, spec.pbc), _wrap(y, Ly, spec.pbc)
        if x is None or y is None:
            return None
        return 3 * (x * Ly + y) + s

    sites = []
    for x in range(Lx):
        for y in range(Ly):
            a, bb, c = idx(x, y, 0), idx(x, y, 1), idx(x, y, 2)
            sites.append(SiteIndex(a, (x, y), "A", (float(x), float(y))))
            sites.append(SiteIndex(bb, (x, y), "B", (x + 0.5, float(y))))
            sites.append(SiteIndex(c, (x, y), "C", (float(x), y + 0.5)))
            b.hop(a, bb, t)
            b.hop(a, c, t)
            if Lx > 1:
                b.hop(bb, idx(x + 1, y, 0), t)
            if Ly > 1:
                b.hop(c, idx(x, y + 1, 0), t)
    return SingleParticleSystem(tuple(sites), b.h, spec)


def _checkerboard(spec):
    """Two-sublattice checkerboard with complex NN and real NNN/NNNN hoppings.

    A sits at ``(x, y)`` and B at ``(x + 1/2, y + 1/2)``.  An A->B bond to the
    upper-right or lower-left B neighbour carries ``exp(+i phi)``, the other
    two carry ``exp(-i phi)``.  NNN hoppings are ``J1`` along x and ``J2`` along
    y on sublattice A, swapped on B; ``J3`` couples same-sublattice sites
    along both diagonals.
    """
    Lx, Ly = spec.size
    p = spec.params
    J, phi = p["J"], p["phi"]
    b = _Builder(2 * Lx * Ly, dtype=complex)

    def idx(x, y, s):
        x, y = _wrap(x, Lx, spec.pbc), _wrap(y, Ly, spec.pbc)
        if x is None or y is None:
            return None
        return 2 * (x * Ly + y) + s

    plus, minus = -J * np.exp(1j * phi), -J * np.exp(-1j * phi)
    sites = []
    for x in range(Lx):
        for y in range(Ly):
            a = idx(x, y, 0)
            sites.append(SiteIndex(a, (x, y), "A", (float(x), float(y))))
            sites.append(SiteIndex(a + 1, (x, y), "B", (x + 0.5, y + 0.5)))
            b.hop(a, idx(x, y, 1), plus)
            b.hop(a, idx(x - 1, y - 1, 1), plus)
            b.hop(a, idx(x - 1, y, 1), minus)
            b.hop(a, idx(x, y - 1, 1), minus)
            for s, (jx, jy) in ((0, (p["J1"], p["J2"])), (1, (p["J2"], p["J1"]))):
                i = idx(x, y, s)
                b.hop(i, idx(x + 1, y, s), -jx)
                b.hop(i, idx(x, y + 1, s), -jy)
                b.hop(i, idx(x + 1, y + 1, s), -p["J3"])
                b.hop(i, idx(x + 1, y - 1, s), -p["J3"])
    return SingleParticleSystem(tuple(sites), b.h, spec)


def _commensurate_angles(max_m: int = 12) -> np.ndarray:
    """Twist angles (degrees) with rational cosine, from Pythagorean triples."""
    out = [0.0, 90.0]
    for m in range(1, max_m + 1):
        for k in range(1, m):
            c = (m * m - k * k) / (m * m + k * k)
            ang = np.degrees(np.arccos(c))
            out.extend([ang, 90.0 - ang])
    return np.unique(np.round(out, 12))


def snap_twist_angle(theta_deg: float, snap_tol: float = 1e-3) -> float:
    """Replace ``theta`` by the nearest commensurate angle within ``snap_tol`` degrees.

    Angles quoted to two decimals (36.87 for cos = 4/5) would otherwise miss
    exact site coincidences by a few 1e-6 lattice units on a 7x7 patch.
    """
    sign = -1.0 if theta_deg < 0 else 1.0
    red = abs(theta_deg) % 360.0
    quarter, rest = divmod(red, 90.0)
    cands = _commensurate_angles()
    k = int(np.argmin(np.abs(cands - rest)))
    if abs(cands[k] - rest) < snap_tol:
        rest = float(cands[k])
    return sign * (quarter * 90.0 + rest)


def _rotation(theta_deg: float) -> np.ndarray:
    th = np.deg2rad(theta_deg)
    return np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])


def build_twisted_bilayer(params: Mapping[str, float], n_per_layer: int) -> SingleParticleSystem:
    """Two ``n x n`` square patches, the second rotated by ``theta`` degrees.

    The rotation centre is the lattice site nearest the patch centre.  Layer
    ``alpha`` (1 or 2) carries the on-site energy ``-delta * (-1)**alpha``;
    intralayer nearest neighbours hop with ``-t`` and every interlayer pair at
    in-plane distance ``S`` is coupled by ``-t_perp * exp(-S**2 / (4 l0**2))``
    unless the Gaussian factor falls below ``cutoff``.  ``theta`` is snapped
    to a commensurate angle when it lies within 1e-3 degrees of one.
    """
    spec = ModelSpec("twisted_bilayer", (n_per_layer,), "obc", params)
    return _twisted_bilayer(spec)


def _twisted_bilayer(spec: ModelSpec) -> SingleParticleSystem:
    _check_size(spec, 1)
    if spec.pbc:
        raise InvalidParam("the twisted bilayer is only defined with open boundaries")
    (n,) = spec.size
    p = spec.params
    if p["l0"] <= 0:
        raise InvalidParam(f"l0 must be positive, got {p['l0']}")
    if not 0 < p["cutoff"] < 1:
        raise InvalidParam(f"cutoff must lie in (0, 1), got {p['cutoff']}")
    center = np.full(2, float((n - 1) // 2))
    grid = np.array([(x, y) for x in range(n) for y in range(n)], dtype=float)
    pos1 = grid
    pos2 = (grid - center) @ _rotation(snap_twist_angle(p["theta"])).T + center
    N = n * n
    h = np.zeros((2 * N, 2 * N))
    h[:N, :N] += np.eye(N) * p["delta"]
    h[N:, N:] -= np.eye(N) * p["delta"]
    nn = np.zeros((N, N))
    for x in range(n):
        for y in range(n):
            i = x * n + y
            if x + 1 < n:
                nn[i, i + n] = nn[i + n, i] = 1.0
            if y + 1 < n:
                nn[i, i + 1] = nn[i + 1, i] = 1.0
    h[:N, :N] -= p["t"] * nn
    h[N:, N:] -= p["t"] * nn
    s2 = ((pos1[:, None, :] - pos2[None, :, :]) ** 2).sum(-1)
    gauss = np.exp(-s2 / (4.0 * p["l0"] ** 2))
    gauss[gauss < p["cutoff"]] = 0.0
    h[:N, N:] = -p["t_perp"] * gauss
    h[N:, :N] = -p["t_perp"] * gauss.T
    sites = []
    for layer, pos in ((1, pos1), (2, pos2)):
        for k in range(N):
            cell = (int(grid[k, 0]), int(grid[k, 1]))
            sites.append(
                SiteIndex((layer - 1) * N + k, cell, f"layer{layer}", (float(pos[k, 0]), float(pos[k, 1])))
            )
    return SingleParticleSystem(tuple(sites), h, spec)


_BUILDERS = {
    "cross_stitch": (_cross_stitch, 1),
    "sawtooth": (_sawtooth, 1),
    "lieb1d": (_lieb1d, 1),
    "lieb2d": (_lieb2d, 2),
    "checkerboard": (_checkerboard, 2),
}


def build_model(spec: ModelSpec) -> SingleParticleSystem:
    """Build the single-particle Hamiltonian described by ``spec``."""
    if not isinstance(spec, ModelSpec):
        raise InvalidParam("build_model expects a ModelSpec")
    if spec.kind == "twisted_bilayer":
        return _twisted_bilayer(spec)
    builder, ndim = _BUILDERS[spec.kind]
    _check_size(spec, ndim)
    U = spec.cls_class
    if U is not None and spec.kind != "cross_stitch" and min(spec.size) < 2 * U:
        raise SizeTooSmall(f"{spec.kind} needs at least {2 * U} cells per direction, got {spec.size}")
    if spec.kind == "checkerboard" and spec.pbc and min(spec.size) < 3:
        raise SizeTooSmall("periodic checkerboard needs at least 3 cells per direction")
    return builder(spec)


def superlattice_directions(system: SingleParticleSystem, coincidence_tol: float = 1e-6) -> dict:
    """The two primitive moire superlattice vectors, as seen on layer 1.

    ``"green"`` is the shorter-angle vector in ``[0, pi)`` measured from +x,
    ``"yellow"`` the other one.
    """
    pairs = superlattice_sites(system, coincidence_tol)
    pts = np.array([system.sites[i].position for i, _ in pairs])
    if len(pts) < 2:
        raise NotBilayer("fewer than two superlattice sites; no superlattice directions")
    diff = (pts[:, None, :] - pts[None, :, :]).reshape(-1, 2)
    norms = np.linalg.norm(diff, axis=1)
    diff, norms = diff[norms > 1e-9], norms[norms > 1e-9]
    dmin = norms.min()
    cands = diff[np.abs(norms - dmin) < 1e-6]
    angles = np.mod(np.arctan2(cands[:, 1], cands[:, 0]), np.pi)
    order = np.argsort(angles)
    vecs = []
    for k in order:
        v = cands[k]
        ang = angles[k]
        if v[1] < -1e-12 or (abs(v[1]) <= 1e-12 and v[0] < 0):
            v = -v
        if not vecs or abs(ang - vecs[-1][1]) > 1e-6:
            vecs.append((v, ang))
    if len(vecs) < 2:
        raise NotBilayer("superlattice sites are collinear")
    return {"green": np.round(vecs[0][0], 9), "yellow": np.round(vecs[1][0], 9)}


def superlattice_sites(system: SingleParticleSystem, coincidence_tol: float = 1e-6) -> list[tuple[int, int]]:
    """Pairs ``(layer-1 index, layer-2 index)`` whose positions coincide.

    Pairs are sorted by their coordinates along the yellow and then the
    green superlattice direction (lexicographic in rounded position when
    fewer than two sites exist).
    """
    if system.model.kind != "twisted_bilayer":
        raise NotBilayer(f"superlattice sites need a twisted bilayer, got {system.model.kind}")
    l1 = [s for s in system.sites if s.chain == "layer1"]
    l2 = [s for s in system.sites if s.chain == "layer2"]
    p1 = np.array([s.position for s in l1])
    p2 = np.array([s.position for s in l2])
    dist = np.sqrt(((p1[:, None, :] - p2[None, :, :]) ** 2).sum(-1))
    hits = np.argwhere(dist < coincidence_tol)
    pairs = [(l1[i].flat_index, l2[j].flat_index) for i, j in hits]
    pairs.sort(key=lambda pr: (round(system.sites[pr[0]].position[1], 6), round(system.sites[pr[0]].position[0], 6)))
    if len(pairs) >= 2:
        pts = np.array([system.sites[i].position for i, _ in pairs])
        diff = (pts[:, None, :] - pts[None, :, :]).reshape(-1, 2)
        norms = np.linalg.norm(diff, axis=1)
        ok = norms > 1e-9
        if ok.any():
            dmin = norms[ok].min()
            cands = diff[ok & (np.abs(norms - dmin) < 1e-6)]
            angles = np.mod(np.arctan2(cands[:, 1], cands[:, 0]), np.pi)
            uniq = sorted(set(np.round(angles, 6)))
            if len(uniq) >= 2:
                g = np.array([np.cos(uniq[0]), np.sin(uniq[0])])
                y = np.array([np.cos(uniq[1]), np.sin(uniq[1])])
                basis = np.linalg.inv(np.column_stack([g, y]))
                coords = pts @ basis.T
                order = np.lexsort((np.round(coords[:, 0], 6), np.round(coords[:, 1], 6)))
                pairs = [pairs[k] for k in order]
    return pairs


def _canonical_subspace(vecs: np.ndarray, amp_tol: float = 1e-6) -> np.ndarray:
    """Deterministic orthonormal basis of the span of ``vecs`` (columns).

    Unit site vectors are projected onto the subspace in site order and
    Gram-Schmidt orthonormalised; each result is phased so its first
    significant amplitude is real and positive.
    """
    dim, k = vecs.shape
    q, _ = np.linalg.qr(vecs)
    proj = q @ q.conj().T
    basis = []
    for i in range(dim):
        v = proj[:, i].copy()
        for b in basis:
            v -= b * (b.conj() @ v)
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            v /= nv
            # second pass keeps orthogonality at machine precision
            for b in basis:
                v -= b * (b.conj() @ v)
            v /= np.linalg.norm(v)
            basis.append(v)
        if len(basis) == k:
            break
    out = np.column_stack(basis)
    for c in range(out.shape[1]):
        first = np.flatnonzero(np.abs(out[:, c]) > amp_tol)[0]
        out[:, c] *= np.exp(-1j * np.angle(out[first, c]))
    first_sites = [np.flatnonzero(np.abs(out[:, c]) > amp_tol)[0] for c in range(out.shape[1])]
    return out[:, np.argsort(first_sites, kind="stable")]


def eigendecompose(system_or_matrix, degeneracy_tol: float = 1e-8) -> EigenSystem:
    """Sorted eigenpairs with a reproducible basis inside degenerate clusters."""
    h = system_or_matrix.hamiltonian if hasattr(system_or_matrix, "hamiltonian") else np.asarray(system_or_matrix)
    try:
        energies, states = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Hermitian eigendecomposition failed: {exc}") from exc
    states = states.astype(complex)
    start = 0
    n = len(energies)
    while start < n:
        stop = start + 1
        while stop < n and energies[stop] - energies[stop - 1] < degeneracy_tol:
            stop += 1
        if stop - start > 1:
            states[:, start:stop] = _canonical_subspace(states[:, start:stop])
        else:
            col = states[:, start]
            first = np.flatnonzero(np.abs(col) > 1e-6)[0]
            states[:, start] = col * np.exp(-1j * np.angle(col[first]))
        start = stop
    if not np.iscomplexobj(h) or np.abs(np.imag(h)).max() == 0:
        if np.abs(states.imag).max() < 1e-12:
            states = states.real.astype(float)
    return EigenSystem(energies, states)


def _normalized(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def cls_states(system: SingleParticleSystem) -> list[ClsVector]:
    """One compact localized state per translation by ``U`` cells."""
    spec = system.model
    U = spec.cls_class
    if U is None:
        raise NoExactCls(f"{spec.kind} has no exact compact localized states")
    D = system.dim
    out = []
    if spec.kind == "cross_stitch":
        (L,) = spec.size
        for j in range(L):
            v = np.zeros(D)
            v[2 * j], v[2 * j + 1] = 1.0, -1.0
            out.append(ClsVector(_normalized(v), j, 1, spec.params["t0"]))
    elif spec.kind == "sawtooth":
        (L,) = spec.size
        for j in range(0, L - 1, 2):
            v = np.zeros(D)
            v[2 * j] = 1.0
            v[2 * j + 2], v[2 * j + 3] = 1.0, -SQRT2
            out.append(ClsVector(_normalized(v), j, 2, 2.0))
    elif spec.kind == "lieb1d":
        (L,) = spec.size
        for n in range(0, L - 1, 2):
            v = np.zeros(D)
            v[5 * n + 1] = v[5 * n + 4] = 1.0
            v[5 * n + 2] = v[5 * (n + 1) + 2] = -1.0
            out.append(ClsVector(_normalized(v), n, 2, 0.0))
    elif spec.kind == "lieb2d":
        Lx, Ly = spec.size
        for x in range(0, Lx - 1, 2):
            for y in range(0, Ly - 1, 2):
                v = np.zeros(D)
                v[3 * (x * Ly + y) + 1] = v[3 * (x * Ly + y + 1) + 1] = 1.0
                v[3 * (x * Ly + y) + 2] = v[3 * ((x + 1) * Ly + y) + 2] = -1.0
                out.append(ClsVector(_normalized(v), (x, y), 2, 0.0))
    return out


def _split_windows(n: int, lo: int, hi: int, label: str) -> tuple[tuple[str, int, int], ...]:
    wins = []
    if lo > 0:
        wins.append(("below", 0, lo - 1))
    wins.append((label, lo, hi))
    if hi < n - 1:
        wins.append(("above", hi + 1, n - 1))
    return tuple(wins)


def band_windows(eig: EigenSystem, policy: Mapping) -> BandWindows:
    """Partition eigenvalue indices into bands and tag the flat one.

    ``policy`` is one of

    * ``{"windows": {"fb": [lo, hi], ...}, "fb": "fb"}``: explicit inclusive
      ranges, kept verbatim; uncovered indices are filled in as extra windows
    * ``{"gap": threshold, "fb": "narrowest" | "top" | "bottom" | int}``:
      split wherever consecutive energies differ by more than ``threshold``
    * ``{"degenerate": tol}``: the largest cluster of energies chained within
      ``tol`` is the flat band
    """
    E = np.asarray(eig.energies)
    n = len(E)
    if "windows" in policy:
        fb_label = policy.get("fb", "fb")
        given = sorted(((str(k), int(v[0]), int(v[1])) for k, v in policy["windows"].items()), key=lambda w: w[1])
        covered = np.zeros(n, dtype=int)
        for label, lo, hi in given:
            if not 0 <= lo <= hi < n:
                raise AmbiguousBands(f"window {label}=[{lo}, {hi}] outside 0..{n - 1}")
            covered[lo : hi + 1] += 1
        if covered.max() > 1:
            raise AmbiguousBands("explicit windows overlap")
        wins = list(given)
        k = 0
        i = 0
        while i < n:
            if covered[i] == 0:
                j = i
                while j + 1 < n and covered[j + 1] == 0:
                    j += 1
                wins.append((f"rest{k}", i, j))
                k += 1
                i = j + 1
            else:
                i += 1
        wins.sort(key=lambda w: w[1])
        if fb_label not in [w[0] for w in wins]:
            raise AmbiguousBands(f"flat-band label {fb_label!r} not among explicit windows")
        return BandWindows(tuple(wins), fb_label)
    if "degenerate" in policy:
        tol = float(policy["degenerate"])
        best = (0, 0, 0)
        start = 0
        for i in range(1, n + 1):
            if i == n or E[i] - E[i - 1] >= tol:
                if i - start > best[0]:
                    best = (i - start, start, i - 1)
                start = i
        if best[0] < 2:
            raise AmbiguousBands(f"no degenerate cluster within {tol}")
        return BandWindows(_split_windows(n, int(best[1]), int(best[2]), "fb"), "fb")
    if "gap" in policy:
        thr = float(policy["gap"])
        cuts = np.flatnonzero(np.diff(E) > thr)
        if len(cuts) == 0:
            raise AmbiguousBands(f"no spectral gap above {thr}")
        edges = [0] + list(cuts + 1) + [n]
        wins = [(f"band{k}", int(edges[k]), int(edges[k + 1] - 1)) for k in range(len(edges) - 1)]
        choice = policy.get("fb", "narrowest")
        if choice == "top":
            k = len(wins) - 1
        elif choice == "bottom":
            k = 0
        elif choice == "narrowest":
            widths = [E[hi] - E[lo] for _, lo, hi in wins]
            k = int(np.argmin(widths))
        else:
            k = int(choice)
        label, lo, hi = wins[k]
        wins[k] = ("fb", lo, hi)
        return BandWindows(tuple(wins), "fb")
    raise AmbiguousBands(f"unrecognised band policy {dict(policy)!r}")


def flatness_ratio(eig: EigenSystem, windows: BandWindows) -> float:
    """Bandwidth of the flat window over its gap to the nearest other level."""
    E = eig.energies
    lo, hi = windows.fb
    width = E[hi] - E[lo]
    gaps = []
    if lo > 0:
        gaps.append(E[lo] - E[lo - 1])
    if hi < len(E) - 1:
        gaps.append(E[hi + 1] - E[hi])
    return width / min(gaps)
