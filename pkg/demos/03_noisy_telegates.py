"""Noisy remote gates: fidelity decay and the per-fault survival factor.

Every telegate consumes one Werner pair of fidelity F = 1 - delta.  The
noisy/ideal output fidelity p_N is lower-bounded by (1 - 4 delta / 3)^M_D;
fitting the tighter ansatz (1 - 4 delta (1 - beta) / 3)^M_D to the measured
curve recovers a positive survival factor beta.
"""

from dqanneal import (Schedule, compile_trotter_plan, fit_beta, pn_bound,
                      prepare_initial_state, run_trotter_noisy)
from dqanneal.harness import toy_chain_partition

part = toy_chain_partition()
schedule = Schedule(20.0)
plan = compile_trotter_plan(part, schedule, M=40)
psi0 = prepare_initial_state(part)
print(f"M = {plan.M}, telegates per run M_D = {plan.M_D}")

curve = []
for delta in (1e-4, 3e-4, 1e-3, 3e-3, 1e-2):
    res = run_trotter_noisy(plan, psi0, 1.0 - delta)
    curve.append((delta, res.p_N))
    print(f"delta = {delta:7.0e}: p_N = {res.p_N:.6f}  "
          f"bound = {pn_bound(delta, plan.M_D):.6f}")

beta_hat, residual = fit_beta(curve, plan.M_D)
print(f"fitted beta = {beta_hat:.4f} (rms log residual {residual:.1e})")
