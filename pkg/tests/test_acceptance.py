"""Acceptance criteria, one test and one summary line each.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

import helpers  # noqa: E402
from conftest import ACCEPTANCE_LINES  # noqa: E402
from flatband_dissipation.dissipation import (  # noqa: E402
    channels_from_unit_cells,
    dark_state,
    jump_operators,
    pair_jump,
    verify_dark,
)
from flatband_dissipation.lattice import BandWindows, band_windows, flatness_ratio  # noqa: E402
from flatband_dissipation.liouvillian import apply_lindblad, assemble_superoperator, vec  # noqa: E402
from flatband_dissipation.manybody import fock_basis, mb_hamiltonian, mb_jump_operators  # noqa: E402
from flatband_dissipation.steadystate import (  # noqa: E402
    fb_occupation,
    fidelity,
    initial_state,
    outside_window_weight,
    project_eigenbasis,
    purity_spectrum,
    realspace_profile,
    solve,
    unitary_diagonal_drift,
)


def _record(n: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _window(lo, hi):
    return BandWindows((("fb", lo, hi),), "fb")


def _confined_pure(kind, L, kappa, a, e_fb):
    s, ch, J, ss, e, rmn = helpers.unit_cell_solve(kind, L, kappa, a)
    lo, hi = helpers.fb_window(e.energies, e_fb)
    ps = purity_spectrum(ss.state)
    n_nonzero = int(np.sum(ps.eigenvalues > 1e-6))
    out = {
        "count": ss.count,
        "single": n_nonzero == 1 and abs(ps.eigenvalues[0] - 1) < 1e-6,
        "outside": outside_window_weight(rmn, lo, hi),
        "fid": fidelity(ss.state, dark_state(s, a, kappa)),
        "state": ss.state,
    }
    return out


def test_criterion_1_cross_stitch_unique_dark():
    parts, ok = [], True
    for a in (1, -1):
        r = _confined_pure("cross_stitch", 20, 1, a, 0.0)
        good = r["count"] == 1 and r["single"] and r["outside"] < 1e-6 and r["fid"] >= 1 - 1e-8
        if a == -1:
            prof = realspace_profile(r["state"])
            good &= bool(np.all(np.sign(prof[0:-2:2]) == -np.sign(prof[2::2])))
        ok &= good
        parts.append(f"a={a:+d}: count={r['count']} outside={r['outside']:.1e} 1-F={1 - r['fid']:.1e}")
    _record(1, ok, "cross-stitch L=20 q=1; " + "; ".join(parts))


def test_criterion_2_sawtooth_cls_superposition():
    parts, ok = [], True
    for a in (1, -1):
        r = _confined_pure("sawtooth", 20, 1, a, 2.0)
        ok &= r["count"] == 1 and r["single"] and r["outside"] < 1e-6 and r["fid"] >= 1 - 1e-8
        parts.append(f"a={a:+d}: outside={r['outside']:.1e} 1-F={1 - r['fid']:.1e}")
    _record(2, ok, "sawtooth L=20 q=2; " + "; ".join(parts))


def test_criterion_3_four_steady_states():
    s, ch, J, ss, e, rmn = helpers.unit_cell_solve("cross_stitch", 20, 2, 1)
    lo, hi = helpers.fb_window(e.energies, 0.0)
    worst = max(outside_window_weight(project_eigenbasis(st, e), lo, hi) for st in ss.states)
    _record(3, ss.count == 4 and worst < 1e-6, f"cross-stitch q=2: count={ss.count}, max outside weight {worst:.1e}")


def test_criterion_4_twisted_bilayer():
    pf = {}
    for a in (-1, 1):
        for d in ("green", "yellow"):
            s, ss, e, rmn, win = helpers.bilayer(a, d)
            pf[a, d] = fb_occupation(rmn, win)
    ok_m = abs(pf[-1, "green"] - 0.970) <= 0.02
    ok_p = abs(pf[1, "green"] - 0.9625) <= 0.02
    ok_dir = all(abs(pf[a, "green"] - pf[a, "yellow"]) <= 0.01 for a in (-1, 1))
    detail = (
        f"P_f(a=-1)={pf[-1, 'green']:.4f} (target 0.970+-0.02), "
        f"P_f(a=+1)={pf[1, 'green']:.4f} (target 0.9625+-0.02), "
        f"green/yellow diff {max(abs(pf[a, 'green'] - pf[a, 'yellow']) for a in (-1, 1)):.1e}"
    )
    _record(4, ok_m and ok_p and ok_dir, detail)


def test_criterion_5_lieb():
    _, _, _, ss_all, e, rmn_all = helpers.unit_cell_solve("lieb1d", 8, 1, 1)
    lo, hi = helpers.fb_window(e.energies, 0.0)
    a_ok = ss_all.count == 1 and outside_window_weight(rmn_all, lo, hi) < 1e-6
    up = (("upper", 1.0), ("middle", 0.0), ("lower", 0.0))
    _, _, _, ss_up, _, rmn_up = helpers.unit_cell_solve("lieb1d", 8, 1, 1, "spectral", up)
    b_ok = outside_window_weight(rmn_up, lo, hi) < 1e-6
    mid = (("upper", 0.0), ("middle", 1.0), ("lower", 0.0))
    s, _, _, ss_mid, _, _ = helpers.unit_cell_solve("lieb1d", 8, 1, 1, "spectral", mid)
    disp = np.r_[0:lo, hi + 1 : s.dim]
    V = e.states[:, disp]
    Q = V @ V.conj().T
    total = sum(st.matrix for st in ss_mid.states) + ss_mid.state.matrix
    w, U = np.linalg.eigh(Q @ total @ Q)
    support = U[:, w > 1e-6 * w.max()]
    middle_sites = [5 * n + 2 for n in range(8)]
    occ = float((np.abs(support[middle_sites, :]) ** 2).max())
    c_ok = ss_mid.count > 1 and occ < 1e-6
    _record(
        5,
        a_ok and b_ok and c_ok,
        f"all-chain count={ss_all.count}; upper-only confined={b_ok}; middle-only count={ss_mid.count}, "
        f"{support.shape[1]} dispersive states, max middle occupation {occ:.1e}",
    )


def test_criterion_6_controls():
    _, _, _, _, e, rmn = helpers.site_channel_solve(
        "cross_stitch", (20,), "obc", (("upper", 1, 1), ("lower", 1, -1)), "spectral"
    )
    lo, hi = helpers.fb_window(e.energies, 0.0)
    pf_neg = fb_occupation(rmn, _window(lo, hi))
    _, _, _, ss, e2, rmn2 = helpers.site_channel_solve(
        "sawtooth", (20,), "obc", (("upper", 1, 1), ("lower", 2, 1)), "spectral"
    )
    lo2, hi2 = helpers.fb_window(e2.energies, 2.0)
    pure = purity_spectrum(ss.state).pure
    out = outside_window_weight(rmn2, lo2, hi2)
    _record(
        6,
        pf_neg < 0.99 and pure and out < 1e-6,
        f"a^u!=a^l P_f={pf_neg:.4f}; sawtooth q^u=1,q^l=2 pure={pure}, outside={out:.1e}",
    )


def test_criterion_7_interacting():
    P = {V: helpers.interacting(V)["P"] for V in (0.5, 1.0, 2.0)}
    ok = P[0.5] > 0.95 and P[0.5] > P[1.0] > P[2.0]
    _record(7, ok, f"fermions P(0.5)={P[0.5]:.4f} P(1)={P[1.0]:.4f} P(2)={P[2.0]:.4f} (need P(0.5)>0.95, decreasing)")


def test_criterion_8_checkerboard():
    e = helpers.eig("checkerboard", (6, 6), "pbc")
    win = band_windows(e, {"gap": 1.0, "fb": "top"})
    ratio = flatness_ratio(e, win)
    _, _, _, _, _, rmn = helpers.site_channel_solve(
        "checkerboard", (6, 6), "pbc", (("diag1", 1, -1), ("diag2", 1, -1)), "direct"
    )
    pf = fb_occupation(rmn, win)
    # open boundaries: weight on edge states inside the bulk gap
    E_pbc = e.energies
    _, _, _, _, eo, rmn_o = helpers.site_channel_solve(
        "checkerboard", (6, 7), "obc", (("diag1", 1, -1), ("diag2", 1, -1)), "direct"
    )
    gap_top, gap_bot = E_pbc[win.fb[0]], E_pbc[win.fb[0] - 1]
    in_gap = (eo.energies > gap_bot + 1e-9) & (eo.energies < gap_top - 1e-9)
    edge_w = float(np.real(np.diagonal(rmn_o))[in_gap].sum())
    pbc_in_gap = int(np.sum((E_pbc > gap_bot + 1e-9) & (E_pbc < gap_top - 1e-9)))
    ok = ratio < 0.25 and pf > 0.9 and edge_w > 0.01 and pbc_in_gap == 0
    _record(
        8,
        ok,
        f"flatness {ratio:.4f}; PBC 72-site P_f={pf:.4f}; OBC 84-site weight on {int(in_gap.sum())} in-gap edge states {edge_w:.3f}",
    )


def test_criterion_9_property_suites():
    rng = np.random.default_rng(2024)
    worst = {}
    # trace preservation and action equivalence
    D = 6
    A = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    H = (A + A.conj().T) / 2
    ops = [pair_jump(D, 0, 3, 1), pair_jump(D, 2, 5, -1, 0.7), pair_jump(D, 1, 4, 1, 1.3)]
    S = assemble_superoperator(H, ops)
    worst["trace"] = float(np.linalg.norm(vec(np.eye(D)).conj() @ S.matrix))
    eq = 0.0
    for _ in range(10):
        R = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
        R = (R + R.conj().T) / 2
        eq = max(eq, float(np.linalg.norm(S.matrix @ vec(R) - vec(apply_lindblad(H, ops, R)))))
    worst["action"] = eq
    # steady-state validity and spectral vs evolution on D <= 16 toys
    fid_gap = 0.0
    for kind, L, a in [("cross_stitch", 4, 1), ("cross_stitch", 8, -1), ("sawtooth", 4, 1), ("sawtooth", 8, -1)]:
        s = helpers.system(kind, (L,))
        J = jump_operators(s, channels_from_unit_cells(s, 1, a))
        sp = solve(s.hamiltonian, J, method="spectral")
        sp.state.check()
        ev = solve(s.hamiltonian, J, method="evolve", rho0=initial_state(s.dim, "random_pure", L))
        fid_gap = max(fid_gap, 1 - fidelity(ev.state, sp.state))
    worst["oracle"] = fid_gap
    # dark-state residual
    s = helpers.system("lieb1d", (8,))
    J = jump_operators(s, channels_from_unit_cells(s, 1, -1))
    worst["dark"] = verify_dark(dark_state(s, -1, 1), J)
    # unitary diagonal drift
    e = helpers.eig("sawtooth", (8,))
    rmn = project_eigenbasis(initial_state(16, "random_pure", 9), e)
    worst["drift"] = unitary_diagonal_drift(rmn, e, np.linspace(0, 100, 21))
    # N = 1 many-body sector
    cs = helpers.system("cross_stitch", (6,))
    b = fock_basis(12, 1)
    ch = channels_from_unit_cells(cs, 1, 1)
    sector = max(
        float(np.abs(mb_hamiltonian(cs, 0.5, b).matrix - cs.hamiltonian).max()),
        max(float(np.abs(m.matrix - o.dense).max()) for m, o in zip(mb_jump_operators(ch, b), jump_operators(cs, ch))),
    )
    worst["sector"] = sector
    ok = (
        worst["trace"] < 1e-9 * 3
        and worst["action"] < 1e-10
        and worst["oracle"] <= 1e-6
        and worst["dark"] < 1e-10
        and worst["drift"] < 1e-12
        and worst["sector"] < 1e-12
    )
    _record(9, ok, "worst deviations " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))


if __name__ == "__main__":
    import pytest

    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
