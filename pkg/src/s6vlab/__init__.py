"""Numerical laboratory for stochastic six-vertex height statistics.

Subpackages cover the exact/Monte-Carlo six-vertex model (``sixvertex``),
discrete orthogonal polynomial ensembles (``dope``), Airy/Bessel kernels and
Fredholm determinants (``kernels``), the Painleve XXXIV connection problem
(``painleve34``), the Meixner constrained equilibrium measure
(``equilibrium``), a cross-validation harness (``verify``), and a batch CLI
(``cli``).
"""

__version__ = "0.1.0"
