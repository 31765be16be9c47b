"""Mean sum-rate against the power budget over paired random drops.

Run: python tutorials/02_power_sweep.py [trials]
"""

import sys

from rsma.experiments import ExperimentSpec, run_sweep, summarize

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20
spec = ExperimentSpec(
    sweep_var="p_max_dbm", sweep_values=(20.0, 25.0, 30.0, 35.0, 40.0), trials=trials, num_users=2
)
rows = run_sweep(spec)
print(f"{'P [dBm]':>8} {'scheme':<6} {'feasible':>8} {'paired mean [Mbit/s]':>21}")
for var, value, scheme, n, nf, mean, std, npair, pmean, pstd in summarize(rows, spec):
    print(f"{value:8.0f} {scheme:<6} {nf:>5}/{n:<3} {pmean / 1e6:21.4f}")
