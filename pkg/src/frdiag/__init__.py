"""Numerical toolkit for Brown measures of R-diagonal elements.

The package computes radial Brown-measure distribution functions by two
independent routes, free additive convolution via subordination, the
free-convolution semigroup of symmetrized modulus laws (with its
Hamilton-Jacobi and radial-CDF PDE residuals), and cross-validates the
analytic machinery against a finite-N random matrix Monte Carlo oracle.
"""

__version__ = "0.1.0"
