"""Wave-train speeds and one travelling profile.

Prints xi(theta) and c0 over a range of couplings, then writes the sharp
profile (v0, w0) with the composite diffuse fields for theta = -2.5, N = 2.
"""
import os
import sys

import numpy as np

from nrch import ModelParams, build_profile, solve_xi, speed
from nrch.wavetrain import write_profile_csv

out = sys.argv[1] if len(sys.argv) > 1 else os.environ.get("NRCH_OUTPUT_DIR", ".")
os.makedirs(out, exist_ok=True)

print(" theta        xi       c0 (tau=1, N=1)")
for theta in (-0.5, -1.0, -1.05, -1.5, -2.0, -3.0, -5.0, -12.0):
    print(f"{theta:6.2f}  {solve_xi(theta):9.5f}  {speed(theta, 1.0, 1):9.5f}")

params = ModelParams(epsilon=0.01, tau=1.0, theta=-2.5)
prof = build_profile(params, 2)
path = os.path.join(out, "profile_theta-2.5_N2.csv")
write_profile_csv(path, prof, params, 2000)
x = np.linspace(0, 1, 9)
print(f"\nN=2, theta=-2.5: c0 = {prof.c0:.6f}; v0 at x = {np.round(x, 3)}:")
print(np.round(prof.v0(x), 5))
print(f"wrote {path}")
