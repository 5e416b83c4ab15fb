"""Onset of undulating fronts in 2D.

Relaxes a 1D travelling train at eps = 0.005, lifts it to a 2D strip of
height 2 pi / 16 with a small in-phase front displacement, and follows the
spread of front positions across the strip.  The most unstable transverse
mode of the sharp model has omega ~ 16.  Several minutes per coupling.
"""
import sys

import numpy as np

from nrch import ModelParams
from nrch.pde import Perturbation, SimConfig, extrude, run
from nrch.stability import Mode, find_threshold

omega, eps = 16.0, 0.005
print(f"sharp-interface threshold at omega={omega:g}: {find_threshold(Mode(omega, 0), 1.0, 1, traveling=True).theta_star:.3f}")
thetas = [float(t) for t in sys.argv[1:]] or [-12.0, -3.0]
for theta in thetas:
    p = ModelParams(eps, 1.0, theta, rho=2 * np.pi / omega)
    relax = SimConfig(p, nx=1024, dt=4e-7, t_end=0.05, stabilization=1.0, order=2, output_every=10**9)
    cfg = SimConfig(p, nx=1024, ny=32, dt=4e-7, t_end=0.015, stabilization=1.0, order=2, output_every=3750,
                    perturbation=Perturbation(Mode(omega, 0), 0.2 * eps))
    s = extrude(run(relax).state, cfg)
    s.t = 0.0
    d = run(cfg, state=s).diagnostics
    print(f"theta={theta:g}: front spread " + " ".join(f"{x:.1e}" for x in d.row_spread) + f"  (5 eps = {5 * eps:g})")
