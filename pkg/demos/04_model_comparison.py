"""Original vs embedded vs distributed annealing on the 4-vertex clique.

A0 is the clique itself; A1 embeds it with a 2-qubit chain (coupling J_M);
D0 replicates vertices across two nodes; D1 splits edges.  The distributed
models track A0's annealing curve exactly, while the embedded chain makes
the problem harder to anneal.
"""

from dqanneal import (Schedule, anneal_reference, build_comparison_models,
                      energy_error, ground_state_space, mixed_state_energy)

models = build_comparison_models(J_M=-2.0)
print("non-local link counts:",
      {k: len(p.nonlocal_terms) for k, p in models.items()})

t_fs = (2, 4, 8, 12)
print("eps_A0 by model:")
print("  t_F   " + "".join(f"{n:>10}" for n in models))
for t_F in t_fs:
    row = []
    for part in models.values():
        E_0 = ground_state_space(part.source).energy
        res = anneal_reference(part, Schedule(t_F))
        row.append(energy_error(res.energy, E_0, mixed_state_energy(part)))
    print(f"  {t_F:<5g}" + "".join(f"{v:10.5f}" for v in row))
print("note: A0, D0 and D1 columns coincide; the chain in A1 slows annealing down")
