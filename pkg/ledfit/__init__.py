"""
ledfit: cosine-power models of LED light distributions

Fits I(phi) = I_max * sum_k a_k * cos(phi - b_k) ** c_k to measured
photometric data with Newton's method, started from random sampling or
a multi-start iterative improvement search.
"""

__version__ = "0.1.0"
