import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from flatband_dissipation.errors import (
    AmbiguousBands,
    InvalidParam,
    NoExactCls,
    NotBilayer,
    SizeTooSmall,
    UnknownModel,
)
from flatband_dissipation.lattice import (
    ModelSpec,
    band_windows,
    build_model,
    build_twisted_bilayer,
    cls_states,
    eigendecompose,
    flatness_ratio,
    snap_twist_angle,
    superlattice_sites,
)

import helpers

SQ2 = np.sqrt(2)

ALL_MODELS = [
    ("cross_stitch", (6,), "obc", {"t0": 0.7}),
    ("cross_stitch", (6,), "pbc", {}),
    ("sawtooth", (8,), "obc", {}),
    ("sawtooth", (8,), "pbc", {}),
    ("lieb1d", (4,), "obc", {}),
    ("lieb2d", (4, 4), "obc", {}),
    ("lieb2d", (4, 4), "pbc", {}),
    ("checkerboard", (4, 4), "pbc", {}),
    ("checkerboard", (3, 4), "obc", {}),
    ("twisted_bilayer", (5,), "obc", {}),
]


@pytest.mark.parametrize("kind,size,bc,params", ALL_MODELS)
def test_hermitian_and_eigensystem(kind, size, bc, params):
    s = build_model(ModelSpec(kind, size, bc, params))
    H = s.hamiltonian
    assert np.abs(H - H.conj().T).max() < 1e-12
    assert sorted(x.flat_index for x in s.sites) == list(range(s.dim))
    e = eigendecompose(s)
    assert np.all(np.diff(e.energies) >= 0)
    assert np.abs(H @ e.states - e.states * e.energies).max() < 1e-9
    assert np.abs(e.states.conj().T @ e.states - np.eye(s.dim)).max() < 1e-10


def test_cross_stitch_two_cells_matrix():
    H = build_model(ModelSpec("cross_stitch", (2,), "obc", {"t0": 0, "t1": 1})).hamiltonian
    expected = np.zeros((4, 4))
    expected[0:2, 2:4] = -1
    expected[2:4, 0:2] = -1
    assert np.array_equal(H, expected)


def test_cross_stitch_single_cell():
    H = build_model(ModelSpec("cross_stitch", (1,), "obc", {"t0": 5, "t1": 1})).hamiltonian
    assert np.array_equal(H, [[0, -5], [-5, 0]])


def test_ladder_ordering_upper_before_lower():
    s = build_model(ModelSpec("sawtooth", (4,)))
    assert [x.chain for x in s.sites[:4]] == ["upper", "lower", "upper", "lower"]
    assert s.sites[2].cell == 1


def test_obc_has_no_boundary_bonds_pbc_wraps():
    obc = build_model(ModelSpec("cross_stitch", (5,), "obc")).hamiltonian
    pbc = build_model(ModelSpec("cross_stitch", (5,), "pbc")).hamiltonian
    assert np.all(obc[0:2, 8:10] == 0)
    assert np.all(pbc[0:2, 8:10] == -1)


def test_sawtooth_flat_band_energy_from_cls():
    # H applied to ((1, 0), (1, -sqrt2)) by hand: upper_j couples to lower_j (-sqrt2) and
    # lower_{j+1} (-sqrt2); lower_{j+1} couples to upper_{j+1} (-sqrt2), lower_j, lower_{j+2} (-1)
    s = build_model(ModelSpec("sawtooth", (20,)))
    phi = np.zeros(40)
    phi[[10, 12, 13]] = [1, 1, -SQ2]
    Hphi = s.hamiltonian @ phi
    assert np.allclose(Hphi, 2 * phi, atol=1e-12)


def test_sawtooth_flat_band_count():
    E = helpers.eig("sawtooth", (20,)).energies
    n_obc = int(np.sum(np.abs(E - 2) < 1e-8))
    N, U = 10, 2
    assert n_obc >= N - U
    # pinned by brute force at L = 8: one state per cell except the last
    E8 = eigendecompose(build_model(ModelSpec("sawtooth", (8,)))).energies
    assert np.sum(np.abs(E8 - 2) < 1e-8) == 7
    assert n_obc == 19
    Ep = eigendecompose(build_model(ModelSpec("sawtooth", (20,), "pbc"))).energies
    assert np.sum(np.abs(Ep - 2) < 1e-8) == 20


@pytest.mark.parametrize("t0", [0.0, 10.0])
def test_cross_stitch_flat_band_count(t0):
    E = eigendecompose(build_model(ModelSpec("cross_stitch", (20,), "obc", {"t0": t0}))).energies
    assert np.sum(np.abs(E - t0) < 1e-10) == 20


def test_pauli_x():
    e = eigendecompose(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    assert np.allclose(e.energies, [-1, 1])
    assert np.allclose(e.states[:, 0], np.array([1, 1]) / SQ2)
    assert np.allclose(np.abs(e.states[:, 1]), np.array([1, 1]) / SQ2)
    assert e.states[0, 1] > 0


def test_degenerate_ordering_is_deterministic():
    s = helpers.system("cross_stitch", (20,))
    rng = np.random.default_rng(3)
    e1 = eigendecompose(s)
    # a random unitary relabelling inside the degenerate block must not change the result
    Q = np.linalg.qr(rng.normal(size=(40, 40)))[0]
    H2 = s.hamiltonian
    e2 = eigendecompose(Q.T @ (Q @ H2 @ Q.T) @ Q)
    assert np.allclose(e1.states, e2.states, atol=1e-8)
    lo, hi = helpers.fb_window(e1.energies, 0.0)
    first = [np.flatnonzero(np.abs(e1.states[:, k]) > 1e-6)[0] for k in range(lo, hi + 1)]
    assert first == sorted(first)


def test_cls_cross_stitch():
    s = helpers.system("cross_stitch", (20,))
    c = cls_states(s)
    assert len(c) == 20
    assert np.allclose(c[3].amplitudes[6:8], np.array([1, -1]) / SQ2)
    assert np.count_nonzero(c[3].amplitudes) == 2


def test_cls_sawtooth():
    s = helpers.system("sawtooth", (20,))
    c = cls_states(s)
    assert len(c) == 10
    assert np.allclose(c[0].amplitudes[:4], np.array([1, 0, 1, -SQ2]) / 2)


def _two_cell_null_vector(H, cols):
    # oracle: vectors supported on ``cols`` annihilated by the full Hamiltonian
    ns = sla.null_space(H[:, cols])
    return ns


def test_cls_lieb1d_matches_null_space_oracle():
    s = build_model(ModelSpec("lieb1d", (8,)))
    c = cls_states(s)
    assert len(c) == 4
    for x in c:
        n = x.anchor_cell
        cols = list(range(5 * n, 5 * n + 10))
        ns = _two_cell_null_vector(s.hamiltonian, cols)
        assert ns.shape[1] >= 1
        assert np.linalg.norm(ns.T @ x.amplitudes[cols]) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(s.hamiltonian @ x.amplitudes) < 1e-10
    # the zero mode needs amplitude on the middle-chain sites of both cells
    amp = c[0].amplitudes
    assert abs(amp[2]) > 0.1 and abs(amp[7]) > 0.1


def test_cls_lieb2d_matches_null_space_oracle():
    s = build_model(ModelSpec("lieb2d", (4, 4)))
    c = cls_states(s)
    assert len(c) == 4
    for x in c:
        ax, ay = x.anchor_cell
        cols = [3 * (cx * 4 + cy) + k for cx in (ax, ax + 1) for cy in (ay, ay + 1) for k in range(3)]
        ns = _two_cell_null_vector(s.hamiltonian, cols)
        assert ns.shape[1] >= 1
        assert np.linalg.norm(ns.T @ x.amplitudes[cols]) == pytest.approx(1.0, abs=1e-12)
        support = np.flatnonzero(np.abs(x.amplitudes) > 0)
        assert {s.sites[i].chain for i in support} == {"B", "C"}


@pytest.mark.parametrize("kind,size", [("cross_stitch", (7,)), ("sawtooth", (8,)), ("lieb1d", (6,)), ("lieb2d", (4, 6))])
def test_cls_residual_and_support(kind, size):
    s = build_model(ModelSpec(kind, size))
    U = s.model.cls_class
    for c in cls_states(s):
        assert np.linalg.norm(s.hamiltonian @ c.amplitudes - c.energy * c.amplitudes) < 1e-10
        assert np.linalg.norm(c.amplitudes) == pytest.approx(1.0)
        cells = {s.sites[i].cell for i in np.flatnonzero(np.abs(c.amplitudes) > 0)}
        if kind == "lieb2d":
            xs = sorted({x for x, _ in cells})
            ys = sorted({y for _, y in cells})
            assert xs[-1] - xs[0] < U and ys[-1] - ys[0] < U
        else:
            assert max(cells) - min(cells) < U


@pytest.mark.parametrize("kind", ["checkerboard", "twisted_bilayer"])
def test_no_cls_for_nearly_flat_models(kind):
    size = (4, 4) if kind == "checkerboard" else (3,)
    with pytest.raises(NoExactCls):
        cls_states(build_model(ModelSpec(kind, size)))


def test_errors():
    with pytest.raises(UnknownModel):
        ModelSpec("kagome", (4,))
    with pytest.raises(SizeTooSmall):
        build_model(ModelSpec("sawtooth", (3,)))
    with pytest.raises(InvalidParam):
        build_model(ModelSpec("twisted_bilayer", (3,), "obc", {"l0": 0.0}))
    with pytest.raises(InvalidParam):
        ModelSpec("cross_stitch", (4,), "obc", {"tt": 1})
    with pytest.raises(InvalidParam):
        ModelSpec("cross_stitch", (4,), "obc", {"t0": float("inf")})


def test_kind_aliases():
    assert ModelSpec("CrossStitch", (2,)).kind == "cross_stitch"
    assert ModelSpec("TwistedBilayerSquare", (2,)).kind == "twisted_bilayer"
    assert ModelSpec("Lieb1D", (4,)).kind == "lieb1d"


# --- checkerboard: independent Bloch-Hamiltonian oracle -------------------


def _checkerboard_bloch(kx, ky, J=1.0, phi=np.pi / 4, J1=1 / (2 + SQ2), J2=-1 / (2 + SQ2), J3=1 / (2 + 2 * SQ2)):
    # A at r, B at r + (1/2, 1/2).  A->B bonds at (+,+) and (-,-) carry exp(+i phi),
    # (+,-) and (-,+) carry exp(-i phi); Bloch gauge with physical positions.
    e = lambda dx, dy: np.exp(1j * (kx * dx + ky * dy))
    hab = -J * (np.exp(1j * phi) * (e(0.5, 0.5) + e(-0.5, -0.5)) + np.exp(-1j * phi) * (e(-0.5, 0.5) + e(0.5, -0.5)))
    diag = -2 * J3 * (np.cos(kx + ky) + np.cos(kx - ky))
    haa = -2 * J1 * np.cos(kx) - 2 * J2 * np.cos(ky) + diag
    hbb = -2 * J2 * np.cos(kx) - 2 * J1 * np.cos(ky) + diag
    return np.array([[haa, hab], [np.conj(hab), hbb]])


def test_checkerboard_matches_bloch_oracle():
    L = 6
    E = helpers.eig("checkerboard", (L, L), "pbc").energies
    ks = 2 * np.pi * np.arange(L) / L
    oracle = np.sort(np.concatenate([np.linalg.eigvalsh(_checkerboard_bloch(kx, ky)) for kx in ks for ky in ks]))
    assert np.allclose(E, oracle, atol=1e-10)


def test_checkerboard_top_band_nearly_flat_in_k_space():
    ks = np.linspace(-np.pi, np.pi, 61)
    bands = np.array([np.linalg.eigvalsh(_checkerboard_bloch(kx, ky)) for kx in ks for ky in ks])
    width = np.ptp(bands[:, 1])
    gap = bands[:, 1].min() - bands[:, 0].max()
    assert width / gap < 0.25


def test_checkerboard_windows_by_largest_gap():
    e = helpers.eig("checkerboard", (6, 6), "pbc")
    w = band_windows(e, {"gap": 1.0, "fb": "top"})
    assert w.windows == (("band0", 0, 35), ("fb", 36, 71))
    assert flatness_ratio(e, w) < 0.25


# --- band windows --------------------------------------------------------


def test_band_windows_degenerate_cross_stitch():
    e = helpers.eig("cross_stitch", (20,))
    w = band_windows(e, {"degenerate": 1e-8})
    lo, hi = w.fb
    assert hi - lo + 1 == 20
    assert np.all(np.abs(e.energies[lo : hi + 1]) < 1e-8)


def test_band_windows_explicit_verbatim():
    e = eigendecompose(np.diag(np.arange(98.0)))
    w = band_windows(e, {"windows": {"fb": [49, 97]}})
    assert w.fb == (49, 97)
    assert ("fb", 49, 97) in w.windows


def test_band_windows_no_gap():
    e = eigendecompose(np.diag(np.linspace(0, 1, 10)))
    with pytest.raises(AmbiguousBands):
        band_windows(e, {"gap": 0.5})


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=20), st.floats(0.05, 2.0))
def test_band_windows_partition(values, thr):
    e = eigendecompose(np.diag(np.array(values)))
    try:
        w = band_windows(e, {"gap": thr})
    except AmbiguousBands:
        return
    covered = []
    for _, lo, hi in w.windows:
        covered.extend(range(lo, hi + 1))
    assert covered == list(range(len(values)))


# --- invariants -----------------------------------------------------------


@pytest.mark.parametrize(
    "kind,size,cell_sites",
    [("cross_stitch", (6,), 2), ("sawtooth", (8,), 2), ("lieb1d", (4,), 5)],
)
def test_translation_covariance_pbc(kind, size, cell_sites):
    s = build_model(ModelSpec(kind, size, "pbc"))
    D = s.dim
    perm = (np.arange(D) + cell_sites) % D
    H2 = s.hamiltonian[np.ix_(perm, perm)]
    assert np.abs(H2 - s.hamiltonian).max() < 1e-12
    assert np.abs(np.linalg.eigvalsh(H2) - np.linalg.eigvalsh(s.hamiltonian)).max() < 1e-10


def test_lieb2d_translation_covariance_pbc():
    s = build_model(ModelSpec("lieb2d", (4, 4), "pbc"))
    perm = np.array([3 * (((i // 3) // 4 + 1) % 4 * 4 + (i // 3) % 4) + i % 3 for i in range(s.dim)])
    H2 = s.hamiltonian[np.ix_(perm, perm)]
    assert np.abs(H2 - s.hamiltonian).max() < 1e-12


def test_bilayer_layer_swap_symmetry():
    p = {"t": 1.0, "t_perp": 10.0, "delta": 10.0, "l0": 0.15, "theta": 36.87}
    H = build_twisted_bilayer(p, 7).hamiltonian
    Hm = build_twisted_bilayer(dict(p, delta=-10.0), 7).hamiltonian
    N = 49
    perm = np.r_[np.arange(N, 2 * N), np.arange(N)]
    swapped = Hm[np.ix_(perm, perm)]
    assert np.abs(np.linalg.eigvalsh(swapped) - np.linalg.eigvalsh(H)).max() < 1e-10


def test_bilayer_decoupled_and_aligned():
    H = build_twisted_bilayer({"t_perp": 0.0}, 4).hamiltonian
    assert np.all(H[:16, 16:] == 0)
    p = {"t": 1, "t_perp": 1, "delta": 1, "l0": 1, "theta": 0}
    H = build_twisted_bilayer(p, 2).hamiltonian
    assert np.allclose(np.diag(H[:4, 4:]), -1.0)
    assert np.allclose(np.diag(H[:4, :4]), 1.0) and np.allclose(np.diag(H[4:, 4:]), -1.0)


def test_bilayer_spectrum_has_isolated_top_cluster():
    e = helpers.eig("twisted_bilayer", (7,))
    w = band_windows(e, {"gap": 1.0, "fb": "top"})
    lo, hi = w.fb
    assert (lo, hi) == (89, 97)
    assert flatness_ratio(e, w) < 0.5


def test_superlattice_sites():
    s0 = build_twisted_bilayer({"theta": 0.0}, 3)
    assert len(superlattice_sites(s0)) == 9
    s = helpers.system("twisted_bilayer", (7,))
    pairs = superlattice_sites(s)
    positions = {s.sites[i].position for i, _ in pairs}
    assert (3.0, 3.0) in positions
    # brute force with the exact rational rotation cos = 4/5, sin = 3/5 about (3, 3)
    grid = np.array([(x, y) for x in range(7) for y in range(7)], float)
    R = np.array([[4, -3], [3, 4]]) / 5
    rot = (grid - 3) @ R.T + 3
    hits = sum(1 for p in grid for r in rot if np.abs(p - r).max() < 1e-9)
    assert len(pairs) == hits == 9
    for i, j in pairs:
        assert np.allclose(s.sites[i].position, s.sites[j].position, atol=1e-6)
    with pytest.raises(NotBilayer):
        superlattice_sites(helpers.system("cross_stitch", (4,)))


def test_twist_snapping():
    assert snap_twist_angle(36.87) == pytest.approx(np.degrees(np.arctan2(3, 4)), abs=1e-12)
    assert snap_twist_angle(10.0) == 10.0
    assert snap_twist_angle(-36.87) == pytest.approx(-np.degrees(np.arctan2(3, 4)), abs=1e-12)
