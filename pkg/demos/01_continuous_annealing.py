"""Continuous annealing on a small frustrated instance.

Builds the 4-qubit chain cut into two segments, anneals it for a few
different annealing times and prints how the normalized energy error and
the ground-space population respond.
"""

from dqanneal import (Schedule, anneal_reference, energy_error,
                      ground_state_space, mixed_state_energy,
                      generate_spin_chain, trivial_partition)

problem = generate_spin_chain(4, 2)
part = trivial_partition(problem)
gs = ground_state_space(problem)
E_mix = mixed_state_energy(part)
print(f"problem: {problem.name}, E_0 = {gs.energy}, degeneracy = {gs.degeneracy}")
print(f"ground states: {', '.join(gs.labels)}")

for t_F in (1, 2, 5, 10, 20, 50):
    res = anneal_reference(part, Schedule(t_F))
    eps = energy_error(res.energy, gs.energy, E_mix)
    print(f"t_F = {t_F:3d}: E = {res.energy:+.6f}  eps_A0 = {eps:.2e}  "
          f"p_A0 = {res.fidelity_gs:.5f}")
