"""Instability thresholds of the travelling train.

Scans theta*(omega) for tau = 1, N = 1, k = 0 and reports the least
negative threshold, i.e. the first transverse mode to destabilise as theta
decreases.  Also compares stationary thresholds for N = 2 across k.
"""
import os
import sys

import numpy as np

from nrch.stability import Mode, ThresholdError, find_threshold, threshold_scan

out = sys.argv[1] if len(sys.argv) > 1 else os.environ.get("NRCH_OUTPUT_DIR", ".")
os.makedirs(out, exist_ok=True)

table = threshold_scan([1.0], list(np.arange(2.0, 40.01, 2.0)), [0], 1, traveling=True)
path = os.path.join(out, "traveling_thresholds.csv")
table.write_csv(path)
rows = [r for r in table.rows if r.converged]
best = max(rows, key=lambda r: r.theta_star)
print(f"travelling N=1: max theta* = {best.theta_star:.4f} at omega = {best.omega:g} ({len(rows)} of {len(table.rows)} converged)")
print(f"wrote {path}")

print("\nstationary N=2, omega = 2 pi:")
for k in range(4):
    try:
        r = find_threshold(Mode(2 * np.pi, k), 1.0, 2)
        print(f"  k={k}: theta* = {r.theta_star:.4f}, lambda* = {r.lambda_star:.4f}")
    except ThresholdError as exc:
        print(f"  k={k}: {exc}")
