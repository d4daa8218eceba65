"""Two interacting fermions on a cross-stitch ladder.

With a large rung hopping t0 the two-particle states split into clusters;
the top cluster holds both particles in the flat band.  Nearest-neighbour
repulsion V couples that cluster to the rest, so the weight P that the
dissipative steady state keeps in it drops as V grows.
"""

from flatband_dissipation.manybody import interacting_pipeline

for statistics in ("fermion", "hardcore_boson"):
    for V in (0.5, 1.0, 2.0):
        out = interacting_pipeline({"V": V, "statistics": statistics})
        print(f"{statistics:>14} V={V}: N_p {out['N_p']}, P {out['P']:.4f}")
