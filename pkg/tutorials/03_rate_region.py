"""Two-user rate-region boundaries of RSMA and NOMA by brute force.

Run: python tutorials/03_rate_region.py
"""

import numpy as np

from rsma import noma_region_boundary, oracle_rate_region, random_instance

inst = random_instance(2, seed=0)
rs = oracle_rate_region(inst, sweep_points=11, scheme="RSMA")
no = oracle_rate_region(inst, sweep_points=11, scheme="NOMA")
closed = noma_region_boundary(inst, no[:, 0])

print(f"{'r1 [Mbit/s]':>11} {'RSMA r2':>9} {'NOMA r2':>9} {'closed form':>11}")
for (t, r2_rs), (_, r2_no), c in zip(rs, no, closed):
    print(f"{t / 1e6:11.4f} {r2_rs / 1e6:9.4f} {r2_no / 1e6:9.4f} {c / 1e6:11.4f}")
print("RSMA dominates:", bool(np.all(rs[: len(no), 1] >= no[:, 1] - 1e-4 * rs[:, 1].max())))
