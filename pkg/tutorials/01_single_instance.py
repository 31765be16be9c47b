"""Solve one three-user drop and compare it with the baselines.

Run: python tutorials/01_single_instance.py
"""

from rsma import Infeasible, random_instance, solve_noma, solve_ofdma, solve_rsma

inst = random_instance(3, seed=1, r_min=[0.5e6, 1.0e6, 1.5e6])
print("channel gains:", inst.h)

sol, trace = solve_rsma(inst)
print(f"RSMA sum-rate  {sol.sum_rate / 1e6:.4f} Mbit/s at p0 = {sol.powers.p0:.6f} W")
print(f"common rate    {sol.common_rate_c1 / 1e6:.4f} Mbit/s, split {sol.rates / 1e6}")
print(f"private powers {sol.powers.p_priv}, distinguished user {sol.k_star}")
print(f"searched {trace.p0_grid.size} common powers")

for name, solver in (("NOMA", solve_noma), ("OFDMA", solve_ofdma)):
    try:
        print(f"{name:<5} {solver(inst).sum_rate / 1e6:.4f} Mbit/s")
    except Infeasible as exc:
        print(f"{name:<5} infeasible ({exc.constraint})")
