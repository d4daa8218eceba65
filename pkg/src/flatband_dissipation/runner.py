"""Config-driven pipeline: build, dissipate, solve, analyse, write artifacts."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, expand_sweep, parse_config
from .dissipation import (
    chain_lines,
    dark_state,
    default_chains,
    jump_operators,
    make_channel,
    validate_fb_conditions,
)
from .errors import ConfigError
from .lattice import BandWindows, ModelSpec, band_windows, build_model, eigendecompose, flatness_ratio
from .manybody import fock_basis, mb_hamiltonian, mb_jump_operators, noninteracting_top_count
from .render import heatmap_pixels, write_ppm
from .steadystate import (
    fb_occupation,
    fidelity,
    initial_state,
    occupation_P,
    outside_window_weight,
    project_eigenbasis,
    purity_spectrum,
    realspace_profile,
    solve,
)

__all__ = ["build_channels", "build_spec", "run_config", "run_all", "check_conditions"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def build_spec(cfg: RunConfig) -> ModelSpec:
    m = cfg.model
    return ModelSpec(m["kind"], tuple(m["size"]), m["boundary"], m["params"])


def build_channels(cfg: RunConfig, system):
    spec = system.model
    chains = chain_lines(system)
    U = spec.cls_class or 1
    out = []
    for i, c in enumerate(cfg.dissipation):
        names = [c.chain] if c.chain is not None else list(default_chains(spec, c.direction))
        for name in names:
            if name not in chains:
                raise ConfigError(
                    f"dissipation[{i}].chain: {name!r} not defined for {spec.kind} (choose from {sorted(chains)})"
                )
            q = c.q_sites if c.q_sites is not None else c.kappa_cells * U * chains[name].sites_per_cell
            out.append(make_channel(system, name, q, c.a, c.gamma))
    return out


def check_conditions(cfg: RunConfig) -> dict:
    spec = build_spec(cfg)
    system = build_model(spec)
    channels = build_channels(cfg, system)
    rep = validate_fb_conditions(system, channels)
    return {
        "satisfied": rep.satisfied,
        "kappa": rep.kappa,
        "violations": list(rep.violations),
        "channels": [
            {"chain": c.chain, "q_sites": c.q_sites, "a": c.a, "gamma": c.gamma, "pairs": len(c.site_list)}
            for c in channels
        ],
    }


def _write_csv(path: Path, header: str, rows) -> None:
    with path.open("w") as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(",".join(r) + "\n")


def run_config(cfg: RunConfig, out_dir: str | Path | None = None) -> dict:
    """Execute one (non-sweep) run and return the report dictionary."""
    out = Path(out_dir if out_dir is not None else cfg.outputs["dir"])
    arts = set(cfg.outputs["artifacts"])
    spec = build_spec(cfg)
    system = build_model(spec)
    channels = build_channels(cfg, system)
    report: dict = {
        "name": cfg.name,
        "version": __version__,
        "model": {"kind": spec.kind, "size": list(spec.size), "boundary": spec.boundary, "sites": system.dim},
    }
    cond = None
    if spec.cls_class is not None:
        rep = validate_fb_conditions(system, channels)
        cond = rep
        report["conditions"] = {"satisfied": rep.satisfied, "kappa": rep.kappa, "violations": list(rep.violations)}

    mb = cfg.many_body
    if mb is not None:
        basis = fock_basis(system.dim, mb["particles"])
        H0 = mb_hamiltonian(system, 0.0, basis, mb["statistics"]).matrix
        N_p = noninteracting_top_count(H0, mb["gap"])
        H = mb_hamiltonian(system, mb["V"], basis, mb["statistics"]).matrix
        jumps = mb_jump_operators(channels, basis, mb["statistics"])
        eig = eigendecompose(H)
        D = basis.size
        windows = BandWindows(
            tuple(w for w in (("below", 0, D - N_p - 1), ("fb", D - N_p, D - 1)) if w[1] <= w[2]), "fb"
        )
    else:
        H = system.hamiltonian
        jumps = jump_operators(system, channels)
        eig = eigendecompose(system)
        D = system.dim
        windows = band_windows(eig, cfg.bands)
    report["dim"] = D
    report["n_jumps"] = len(jumps)

    solver = cfg.solver
    rho0 = initial_state(D, solver["initial"], solver["seed"])
    ss = solve(
        H,
        jumps,
        method=solver["method"],
        zero_tol=solver["zero_tol"],
        rho0=rho0,
        dt=solver["dt"],
        t_max=solver["t_max"],
        conv_tol=solver["conv_tol"],
    )
    rho = ss.state.matrix
    rho_mn = project_eigenbasis(rho, eig)
    pur = purity_spectrum(rho)
    lo, hi = windows.fb
    report.update(
        {
            "method": ss.method,
            "steady_count": ss.count,
            "steady_basis_dim": max(len(ss.basis), len(ss.states)),
            "residual_max": max(ss.residual),
            "purity": float(pur.eigenvalues[0]),
            "is_pure": pur.pure,
            "fb_window": [lo, hi],
            "P_f": fb_occupation(rho_mn, windows),
            "outside_fb_weight": outside_window_weight(rho_mn, lo, hi),
        }
    )
    try:
        report["flatness_ratio"] = float(flatness_ratio(eig, windows))
    except ValueError:
        report["flatness_ratio"] = None
    if mb is not None:
        report["N_p"] = N_p
        report["P"] = occupation_P(rho_mn, N_p)
        report["many_body"] = dict(mb)
    if cond is not None and cond.satisfied and cond.kappa == 1 and mb is None:
        psi = dark_state(system, channels[0].a, 1, 0)
        report["dark_fidelity"] = fidelity(rho, psi)
    if ss.liouvillian_eigs is not None:
        re = np.sort(np.abs(ss.liouvillian_eigs.real))
        report["liouvillian_gap"] = float(re[ss.count]) if len(re) > ss.count else None

    out.mkdir(parents=True, exist_ok=True)
    if "spectrum" in arts:
        _write_csv(out / "spectrum.csv", "index,energy", ((str(i), _fmt(e)) for i, e in enumerate(eig.energies)))
    if "rho_mn" in arts:
        rows = (
            (str(m), str(n), _fmt(rho_mn[m, n].real), _fmt(rho_mn[m, n].imag), _fmt(abs(rho_mn[m, n])))
            for m in range(D)
            for n in range(D)
        )
        _write_csv(out / "rho_mn.csv", "m,n,re,im,abs", rows)
    if "liouvillian_spectrum" in arts and ss.liouvillian_eigs is not None:
        _write_csv(
            out / "liouv_spectrum.csv", "re,im", ((_fmt(z.real), _fmt(z.imag)) for z in ss.liouvillian_eigs)
        )
    if "purity" in arts:
        _write_csv(out / "purity.csv", "index,eigenvalue", ((str(i), _fmt(w)) for i, w in enumerate(pur.eigenvalues)))
    if "profile" in arts:
        if mb is not None:
            occ = basis.occupations().astype(float)
            values = occ.T @ np.real(np.diagonal(rho))
            report["profile_kind"] = "occupation"
        else:
            prof = realspace_profile(rho)
            if np.iscomplexobj(prof):
                values = np.real(np.diagonal(rho))
                report["profile_kind"] = "occupation"
            else:
                values = prof
                report["profile_kind"] = "amplitude" if pur.pure else "occupation"
        rows = []
        for s, v in zip(system.sites, values):
            cell = s.cell if isinstance(s.cell, int) else ";".join(str(c) for c in s.cell)
            rows.append((str(s.flat_index), str(cell), s.chain, _fmt(v)))
        _write_csv(out / "profile.csv", "site,cell,chain,value", rows)
    if "heatmap" in arts:
        write_ppm(out / "heatmap.ppm", heatmap_pixels(rho_mn, (lo, hi)))
    report["config"] = cfg.raw
    if "report" in arts:
        (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return report


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def _run_one(args):
    cfg, out_dir = args
    return run_config(cfg, out_dir)


def run_all(cfg: RunConfig, out_dir: str | Path | None = None) -> list[dict]:
    """Run a config, fanning a sweep out over ``cfg.workers`` processes."""
    if out_dir is not None:
        raw = dict(cfg.raw)
        raw["outputs"] = dict(raw.get("outputs", {}) or {}, dir=str(out_dir))
        cfg = parse_config(raw, name=cfg.name)
    subs = expand_sweep(cfg)
    jobs = [(c, c.outputs["dir"]) for c in subs]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]
