"""Inverse random source problem for the stochastic biharmonic wave equation.

Forward simulation of the wave driven by a white or fractional Gaussian
source, Monte Carlo and ergodic measurement estimators, and regularized block
Kaczmarz reconstruction of the source strength.
"""

__version__ = "0.1.0"

from .specfun import (  # noqa: F401
    DomainError,
    asymptotic_coefficients,
    bessel_j0,
    bessel_y0,
    hankel_h0_imag_axis,
    hankel_h0_real,
    macdonald_k0,
    truncated_hankel_h0,
)
from .greens import phi_2d, phi_3d, measurement_kernel_g, truncated_phi_2d  # noqa: F401
from .randsrc import ConfigurationError, Grid, StrengthField  # noqa: F401
