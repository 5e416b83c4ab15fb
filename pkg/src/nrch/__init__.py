"""Sharp-interface wave-trains of the non-reciprocal Cahn-Hilliard model.

Submodules:

* :mod:`nrch.kernels` - periodic kernels G_I, G_II and circulant spectra
* :mod:`nrch.wavetrain` - speeds and profiles of periodic wave-trains
* :mod:`nrch.stability` - dispersion functions, winding counts, thresholds
* :mod:`nrch.pde` - pseudo-spectral IMEX solver for the full diffuse model
"""
from .wavetrain import GAMMA, ModelParams, DimensionalParams, build_profile, solve_xi, speed

__version__ = "0.1.0"

__all__ = ["GAMMA", "ModelParams", "DimensionalParams", "build_profile", "solve_xi", "speed", "__version__"]
