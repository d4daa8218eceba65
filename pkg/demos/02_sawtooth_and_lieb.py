"""The same recipe on lattices whose CLSs span two unit cells.

For the sawtooth chain (t = 1, t' = sqrt 2) the flat band sits at E = 2
and each CLS covers two cells, so the jumps must connect sites
q = kappa * U cells apart with U = 2.  kappa = 2 leaves several dark
states, all inside the flat band.
The 1D Lieb lattice has its flat band at E = 0 in the middle of the
spectrum.  Dissipating only the middle chain leaves some dispersive states
untouched: those with no amplitude on that chain.
"""

import numpy as np

from flatband_dissipation import (
    ModelSpec,
    band_windows,
    build_model,
    channels_from_unit_cells,
    cls_states,
    eigendecompose,
    fb_occupation,
    jump_operators,
    project_eigenbasis,
    solve,
)

spec = ModelSpec("sawtooth", (8,), "obc")
system = build_model(spec)
eig = eigendecompose(system)
windows = band_windows(eig, {"degenerate": 1e-8})
cls = cls_states(system)
print(f"sawtooth: {len(cls)} non-overlapping CLSs, U = {spec.cls_class}, E_FB = {eig.energies[-1]:.6f}")
for kappa in (1, 2):
    ss = solve(system.hamiltonian, jump_operators(system, channels_from_unit_cells(spec, kappa, 1.0)))
    rho_mn = project_eigenbasis(ss.state.matrix, eig)
    print(f"  kappa={kappa}: count {ss.count}, P_f {fb_occupation(rho_mn, windows):.6f}")

spec = ModelSpec("lieb1d", (8,), "obc")
system = build_model(spec)
eig = eigendecompose(system)
windows = band_windows(eig, {"degenerate": 1e-8})
all_chains = channels_from_unit_cells(spec, 1, 1.0)
middle = channels_from_unit_cells(spec, 1, 1.0, {"middle": 1.0})
for label, channels in (("all chains", all_chains), ("middle only", middle)):
    ss = solve(system.hamiltonian, jump_operators(system, channels))
    rho_mn = project_eigenbasis(ss.state.matrix, eig)
    print(f"lieb1d {label}: count {ss.count}, P_f {fb_occupation(rho_mn, windows):.4f}")

# dispersive eigenstates with no weight on the middle chain are dark to it
middle_sites = [i for i, s in enumerate(system.sites) if s.chain == "middle"]
disp = [m for m in range(eig.dim) if abs(eig.energies[m]) > 1e-6]
hidden = [m for m in disp if np.linalg.norm(eig.states[middle_sites, m]) < 1e-8]
print(f"dispersive states with zero middle amplitude: {len(hidden)}")
