"""Bond dissipation channels and their single-particle jump operators.

A channel acts on pairs ``(j, j + q)`` of sites taken along a *chain*: an
ordered line of flat indices.  Each model exposes named chains

=================  ====================================================
model              chains (sites per unit cell)
=================  ====================================================
cross-stitch       ``upper`` (1), ``lower`` (1)
sawtooth           ``upper`` (1), ``lower`` (1)
1D Lieb            ``upper`` (2), ``middle`` (1), ``lower`` (2)
2D Lieb            ``x_AB`` (2), ``x_C`` (1), ``y_AC`` (2), ``y_B`` (1)
checkerboard       ``diag1`` (2), ``diag2`` (2), ``x`` (1), ``y`` (1)
twisted bilayer    ``green`` (1), ``yellow`` (1) on layer-1 superlattice sites
=================  ====================================================

In 2D a chain selector names a family of parallel lines; pairs never cross
from one line to the next.  ``q`` is always stored in sites along the chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import IndexOutOfRange, InvalidParam, NoExactCls, UnknownChainStructure
from .lattice import ModelSpec, SingleParticleSystem, build_model, cls_states, superlattice_sites

__all__ = [
    "ChainLines",
    "DissipationChannel",
    "JumpOperator",
    "ConditionReport",
    "chain_lines",
    "default_chains",
    "make_channel",
    "channels_from_unit_cells",
    "jump_operators",
    "validate_fb_conditions",
    "dark_state",
    "verify_dark",
]


@dataclass(frozen=True)
class ChainLines:
    lines: tuple[tuple[int, ...], ...]
    periodic: bool
    sites_per_cell: int


@dataclass(frozen=True)
class DissipationChannel:
    chain: str
    q_sites: int
    a: float
    gamma: float
    site_list: tuple[tuple[int, int], ...]
    sites_per_cell: int = 1

    def __post_init__(self):
        if self.a not in (1, -1):
            raise InvalidParam(f"a must be +1 or -1, got {self.a}")
        if self.q_sites < 1:
            raise InvalidParam(f"q_sites must be >= 1, got {self.q_sites}")
        if not self.gamma >= 0:
            raise InvalidParam(f"gamma must be non-negative, got {self.gamma}")

    @property
    def q_cells(self) -> Fraction:
        return Fraction(self.q_sites, self.sites_per_cell)


@dataclass(frozen=True)
class JumpOperator:
    """Rank-1 operator ``gamma``-weighted ``O = v w^dagger`` on the site pair."""

    v: np.ndarray
    w: np.ndarray
    gamma: float
    pair: tuple[int, int] = (-1, -1)

    @cached_property
    def dense(self) -> np.ndarray:
        return np.outer(self.v, self.w.conj())

    def apply(self, x: np.ndarray) -> np.ndarray:
        """``O @ x`` without forming the matrix (``x`` may be a matrix)."""
        return np.multiply.outer(self.v, self.w.conj() @ x)


@dataclass(frozen=True)
class ConditionReport:
    satisfied: bool
    kappa: int | None
    violations: tuple[str, ...] = field(default_factory=tuple)


def _lines_1d(spec: ModelSpec, per_cell: Sequence[int], stride: int) -> tuple[int, ...]:
    (L,) = spec.size
    return tuple(stride * n + k for n in range(L) for k in per_cell)


def chain_lines(model: ModelSpec | SingleParticleSystem) -> dict[str, ChainLines]:
    """All named chains of a model, as ordered lines of flat indices."""
    if isinstance(model, SingleParticleSystem):
        system, spec = model, model.model
    else:
        system, spec = None, model
    pbc = spec.pbc
    kind = spec.kind
    if kind in ("cross_stitch", "sawtooth"):
        return {
            "upper": ChainLines((_lines_1d(spec, (0,), 2),), pbc, 1),
            "lower": ChainLines((_lines_1d(spec, (1,), 2),), pbc, 1),
        }
    if kind == "lieb1d":
        return {
            "upper": ChainLines((_lines_1d(spec, (0, 1), 5),), pbc, 2),
            "middle": ChainLines((_lines_1d(spec, (2,), 5),), pbc, 1),
            "lower": ChainLines((_lines_1d(spec, (3, 4), 5),), pbc, 2),
        }
    if kind == "lieb2d":
        Lx, Ly = spec.size

        def c(x, y, s):
            return 3 * (x * Ly + y) + s

        return {
            "x_AB": ChainLines(tuple(tuple(c(x, y, s) for x in range(Lx) for s in (0, 1)) for y in range(Ly)), pbc, 2),
            "x_C": ChainLines(tuple(tuple(c(x, y, 2) for x in range(Lx)) for y in range(Ly)), pbc, 1),
            "y_AC": ChainLines(tuple(tuple(c(x, y, s) for y in range(Ly) for s in (0, 2)) for x in range(Lx)), pbc, 2),
            "y_B": ChainLines(tuple(tuple(c(x, y, 1) for y in range(Ly)) for x in range(Lx)), pbc, 1),
        }
    if kind == "checkerboard":
        return _checkerboard_chains(spec)
    if kind == "twisted_bilayer":
        if system is None:
            system = build_model(spec)
        return _bilayer_chains(system)
    raise UnknownChainStructure(f"no chain structure for model {kind}")


def _checkerboard_chains(spec: ModelSpec) -> dict[str, ChainLines]:
    Lx, Ly = spec.size
    pbc = spec.pbc

    def c(x, y, s):
        return 2 * (x * Ly + y) + s

    def walk(y0, dy):
        # periodic line A(x,y) -> B(x, y or y-1) -> A(x+1, y+dy) -> ...
        line = []
        y = y0
        for x in range(Lx):
            line.append(c(x, y % Ly, 0))
            line.append(c(x, (y if dy > 0 else y - 1) % Ly, 1))
            y += dy
        return tuple(line)

    if pbc:
        if Lx != Ly:
            raise UnknownChainStructure("periodic diagonal chains need a square checkerboard patch")
        d1 = tuple(walk(y, +1) for y in range(Ly))
        d2 = tuple(walk(y, -1) for y in range(Ly))
    else:
        d1 = tuple(_diag_obc(Lx, Ly, c, +1))
        d2 = tuple(_diag_obc(Lx, Ly, c, -1))
    return {
        "diag1": ChainLines(tuple(l for l in d1 if len(l) > 1), pbc, 2),
        "diag2": ChainLines(tuple(l for l in d2 if len(l) > 1), pbc, 2),
        "x": ChainLines(
            tuple(tuple(c(x, y, s) for x in range(Lx)) for y in range(Ly) for s in (0, 1)), pbc, 1
        ),
        "y": ChainLines(
            tuple(tuple(c(x, y, s) for y in range(Ly)) for x in range(Lx) for s in (0, 1)), pbc, 1
        ),
    }


def _diag_obc(Lx: int, Ly: int, c, sign: int) -> list[tuple[int, ...]]:
    """Open-boundary lines along the (1, sign) diagonal, alternating A and B.

    In half units A(x, y) sits at (2x, 2y) and B(x, y) at (2x+1, 2y+1); a line
    keeps ``X - Y`` (sign +1) or ``X + Y`` (sign -1) fixed.
    """
    groups: dict[int, list[tuple[int, int]]] = {}
    for x in range(Lx):
        for y in range(Ly):
            for s, (X, Y) in ((0, (2 * x, 2 * y)), (1, (2 * x + 1, 2 * y + 1))):
                key = X - Y if sign > 0 else X + Y
                groups.setdefault(key, []).append((X, c(x, y, s)))
    return [tuple(i for _, i in sorted(g)) for _, g in sorted(groups.items()) if len(g) > 1]


def _bilayer_chains(system: SingleParticleSystem) -> dict[str, ChainLines]:
    from .lattice import superlattice_directions

    pairs = superlattice_sites(system)
    dirs = superlattice_directions(system)
    idx = [i for i, _ in pairs]
    pos = {i: np.array(system.sites[i].position) for i in idx}
    out = {}
    for name, vec in dirs.items():
        vec = np.asarray(vec, dtype=float)
        perp = np.array([-vec[1], vec[0]])
        groups: dict[float, list[int]] = {}
        for i in idx:
            groups.setdefault(round(float(pos[i] @ perp), 6), []).append(i)
        lines = []
        for key in sorted(groups):
            members = sorted(groups[key], key=lambda i: float(pos[i] @ vec))
            run = [members[0]]
            for i in members[1:]:
                if np.allclose(pos[i] - pos[run[-1]], vec, atol=1e-6):
                    run.append(i)
                else:
                    if len(run) > 1:
                        lines.append(tuple(run))
                    run = [i]
            if len(run) > 1:
                lines.append(tuple(run))
        out[name] = ChainLines(tuple(lines), False, 1)
    return out


def default_chains(model: ModelSpec, direction: str | None = None) -> tuple[str, ...]:
    """Chains that together carry every CLS amplitude (one direction in 2D)."""
    kind = model.kind
    if kind in ("cross_stitch", "sawtooth"):
        return ("upper", "lower")
    if kind == "lieb1d":
        return ("upper", "middle", "lower")
    if kind == "lieb2d":
        if direction == "xy":
            return ("x_AB", "x_C", "y_AC", "y_B")
        return ("y_AC", "y_B") if direction == "y" else ("x_AB", "x_C")
    if kind == "checkerboard":
        return ("diag1", "diag2")
    if kind == "twisted_bilayer":
        return ("yellow",) if direction == "yellow" else ("green",)
    raise UnknownChainStructure(f"no default chains for {kind}")


def _pairs(lines: ChainLines, q: int) -> tuple[tuple[int, int], ...]:
    out = []
    for line in lines.lines:
        n = len(line)
        for i in range(n):
            k = i + q
            if k < n:
                out.append((line[i], line[k]))
            elif lines.periodic and n > q:
                out.append((line[i], line[k % n]))
    return tuple(out)


def make_channel(
    model: ModelSpec | SingleParticleSystem,
    chain: str,
    q_sites: int,
    a: float,
    gamma: float = 1.0,
) -> DissipationChannel:
    """A channel with ``q`` in sites along a named chain."""
    chains = chain_lines(model)
    if chain not in chains:
        kind = model.model.kind if isinstance(model, SingleParticleSystem) else model.kind
        raise UnknownChainStructure(f"chain {chain!r} not defined for {kind}; choose from {sorted(chains)}")
    info = chains[chain]
    q_sites = int(q_sites)
    if q_sites < 1:
        raise InvalidParam(f"q_sites must be >= 1, got {q_sites}")
    return DissipationChannel(chain, q_sites, a, float(gamma), _pairs(info, q_sites), info.sites_per_cell)


def channels_from_unit_cells(
    model: ModelSpec | SingleParticleSystem,
    kappa: int,
    a: float,
    gamma_per_chain: float | Mapping[str, float] = 1.0,
    direction: str | None = None,
) -> list[DissipationChannel]:
    """Channels with ``q = kappa * U`` unit cells on every chain.

    ``gamma_per_chain`` is a scalar applied to the default chains or a mapping
    chain -> gamma (zero allowed).  Models with no exact CLS use ``U = 1``.
    """
    if int(kappa) != kappa or kappa < 1:
        raise InvalidParam(f"kappa must be a positive integer, got {kappa}")
    spec = model.model if isinstance(model, SingleParticleSystem) else model
    chains = chain_lines(model)
    U = spec.cls_class or 1
    if isinstance(gamma_per_chain, Mapping):
        gammas = dict(gamma_per_chain)
    else:
        gammas = {c: float(gamma_per_chain) for c in default_chains(spec, direction)}
    out = []
    for name, gamma in gammas.items():
        if name not in chains:
            raise UnknownChainStructure(f"chain {name!r} not defined for {spec.kind}")
        q = int(kappa) * U * chains[name].sites_per_cell
        out.append(make_channel(model, name, q, a, gamma))
    return out


def jump_operators(
    system: SingleParticleSystem | int, channels: Sequence[DissipationChannel]
) -> list[JumpOperator]:
    """One rank-1 operator per site pair of every channel with ``gamma > 0``."""
    D = system if isinstance(system, (int, np.integer)) else system.dim
    ops = []
    for ch in channels:
        if ch.gamma == 0:
            continue
        for j, k in ch.site_list:
            if not (0 <= j < D and 0 <= k < D) or j == k:
                raise IndexOutOfRange(f"pair ({j}, {k}) invalid for dimension {D}")
            v = np.zeros(D, dtype=complex)
            w = np.zeros(D, dtype=complex)
            v[j], v[k] = 1.0, ch.a
            w[j], w[k] = 1.0, -ch.a
            ops.append(JumpOperator(v, w, ch.gamma, (j, k)))
    return ops


def pair_jump(D: int, j: int, k: int, a: float, gamma: float = 1.0) -> JumpOperator:
    """Jump operator for a single explicit pair, mostly for toy systems."""
    ch = DissipationChannel("explicit", 1, a, gamma, ((j, k),))
    return jump_operators(D, [ch])[0]


def verify_dark(state: np.ndarray, jumps: Sequence[JumpOperator]) -> float:
    """Maximum ``||O_j psi||`` over the jump operators."""
    if not jumps:
        return 0.0
    psi = np.asarray(state)
    return max(float(np.linalg.norm(op.v) * abs(op.w.conj() @ psi)) for op in jumps)


def validate_fb_conditions(
    model: ModelSpec | SingleParticleSystem, channels: Sequence[DissipationChannel]
) -> ConditionReport:
    """Check the flat-band steady-state conditions on a set of channels.

    Every channel with ``gamma > 0`` must have ``q`` (in unit cells) equal to
    the same multiple ``kappa`` of the CLS class ``U`` and all of them must
    share ``a``.  Dissipation strengths may differ.  When these structural
    requirements hold, the dark superposition of CLSs is also checked against
    the jump operators directly.
    """
    system = model if isinstance(model, SingleParticleSystem) else None
    spec = system.model if system is not None else model
    U = spec.cls_class
    if U is None:
        return ConditionReport(False, None, (f"{spec.kind} has no exact compact localized states",))
    active = [c for c in channels if c.gamma > 0]
    if not active:
        return ConditionReport(False, None, ("no channel with gamma > 0",))
    violations = []
    kappas = set()
    for ch in active:
        qc = ch.q_cells
        if qc.denominator != 1 or qc.numerator % U != 0:
            violations.append(f"chain {ch.chain}: q = {qc} unit cells is not a multiple of U = {U}")
        else:
            kappas.add(qc.numerator // U)
    if len({c.a for c in active}) > 1:
        violations.append(
            "operators differ across chains: a = "
            + ", ".join(f"{c.chain}:{c.a:+g}" for c in active)
        )
    q_in_cells = {c.q_cells for c in active}
    if len(q_in_cells) > 1:
        violations.append(
            "operators differ across chains: q (cells) = "
            + ", ".join(f"{c.chain}:{c.q_cells}" for c in active)
        )
    kappa = kappas.pop() if len(kappas) == 1 and not violations else None
    if kappa is not None:
        if system is None:
            system = build_model(spec)
        jumps = jump_operators(system, active)
        a = active[0].a
        worst = max(verify_dark(dark_state(system, a, kappa, off), jumps) for off in range(kappa))
        if worst > 1e-10:
            violations.append(
                f"a = {a:+g} incompatible with the CLS phase structure (dark residual {worst:.2e})"
            )
            kappa = None
    return ConditionReport(not violations, kappa, tuple(violations))


def dark_state(system: SingleParticleSystem, a: float, kappa: int, offset: int = 0) -> np.ndarray:
    """Normalised superposition of every ``kappa``-th CLS starting at ``offset``.

    Coefficients are ``a**j`` for the ``j``-th selected CLS.  On the 2D Lieb
    lattice the offset selects CLS columns along x and the phase ``a`` is
    applied per ``kappa`` anchor steps in both x and y, so the state is dark
    for x and y channels alike.
    """
    if not 0 <= offset < kappa:
        raise InvalidParam(f"offset must lie in 0..{kappa - 1}, got {offset}")
    vecs = cls_states(system)
    psi = np.zeros(system.dim, dtype=complex)
    if system.model.kind == "lieb2d":
        xs = sorted({c.anchor_cell[0] for c in vecs})
        ys = sorted({c.anchor_cell[1] for c in vecs})
        for c in vecs:
            ix, iy = xs.index(c.anchor_cell[0]), ys.index(c.anchor_cell[1])
            if ix % kappa == offset:
                psi += a ** (ix // kappa + iy // kappa) * c.amplitudes
    else:
        for j, c in enumerate(vecs[offset::kappa]):
            psi += a**j * c.amplitudes
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise NoExactCls("no CLS selected for this offset")
    psi /= norm
    return psi.real if np.abs(psi.imag).max() == 0 else psi
