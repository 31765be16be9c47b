"""Certify the solver against the brute-force oracle on random drops.

Run: python tutorials/04_verify.py [count]
"""

import sys

from rsma.experiments import run_verify

count = int(sys.argv[1]) if len(sys.argv) > 1 else 5
for k in (2, 3):
    report = run_verify(count, seed=0, num_users=k)
    print("\n".join(report.lines()))
