"""
Analytic Derivatives of the Evaluation Function

E(x) = (1/N) sum_i G_i^2 with G_i = model(phi_i; x) - I_m(phi_i).

For term k with C = cos(theta_k), s = sign_k * sin(theta_k) (the sine
of the unreduced angle phi - b_k), L = ln(C) and I = I_max:

    F_a = I C^c                      first derivatives of the model
    F_b = k I a c C^(c-1) s
    F_c = I a C^c L

    S_ab = k I c C^(c-1) s           second derivatives within a term
    S_ac = I C^c L
    S_bb = k^2 I a c C^(c-2) (c s^2 - 1)
    S_bc = k I a C^(c-1) s (1 + c L)
    S_cc = I a C^c L^2

where k = pi/180 because b is stored in degrees. Then

    grad E = (2/N) sum_i G_i F_i
    hess E = (2/N) sum_i (F_i F_i^T + G_i S_i)

Mixed terms of different k have no S part. Clamped terms and terms
sitting exactly at 90 degrees (C = 0) contribute zero derivative
factors.
"""

from dataclasses import dataclass

import numpy as np

from ledfit.model import DEG, ParamsLike, as_vector, cos_power, cosines, term_arrays
from ledfit.state import IntensitySamples


@dataclass(frozen=True, eq=False)
class TermCache:
    """
    Per-term, per-sample factors shared by the gradient and the Hessian.

    Term arrays are shaped (3, N); ``F`` is (9, N) ordered
    (a1..a3, b1..b3, c1..c3).
    """

    cos: np.ndarray
    sin: np.ndarray
    log_cos: np.ndarray
    pow_c: np.ndarray
    pow_c1: np.ndarray
    pow_c2: np.ndarray
    clamped: np.ndarray
    G: np.ndarray
    F: np.ndarray
    S_ab: np.ndarray
    S_ac: np.ndarray
    S_bb: np.ndarray
    S_bc: np.ndarray
    S_cc: np.ndarray

    @property
    def n(self) -> int:
        return int(self.G.size)


def build_cache(p: ParamsLike, s: IntensitySamples) -> TermCache:
    """
    Compute G, F and S factors for every sample and term.

    Args:
        p: Model parameters (ModelParams or 9-vector)
        s: Measured samples

    Returns:
        TermCache for the point ``p``
    """
    x = as_vector(p)
    a = x[0:3, None]
    c = x[6:9, None]
    i_max = s.i_max

    theta, sign, active = term_arrays(s.phi, x[3:6])
    cos = cosines(theta, active)
    live = cos > 0.0
    sin = np.where(active, sign * np.sin(theta * DEG), 0.0)
    safe_cos = np.where(live, cos, 1.0)
    log_cos = np.where(live, np.log(safe_cos), 0.0)

    pow_c = np.where(active, cos_power(cos, c), 0.0)
    pow_c1 = np.where(live, np.power(safe_cos, c - 1.0), 0.0)
    pow_c2 = np.where(live, np.power(safe_cos, c - 2.0), 0.0)

    G = i_max * (a * pow_c).sum(axis=0) - s.candela

    F_a = i_max * pow_c
    F_b = DEG * i_max * a * c * pow_c1 * sin
    F_c = i_max * a * pow_c * log_cos
    F = np.vstack([F_a, F_b, F_c])

    S_ab = DEG * i_max * c * pow_c1 * sin
    S_ac = i_max * pow_c * log_cos
    S_bb = DEG * DEG * i_max * a * c * pow_c2 * (c * sin * sin - 1.0)
    S_bc = DEG * i_max * a * pow_c1 * sin * (1.0 + c * log_cos)
    S_cc = i_max * a * pow_c * log_cos * log_cos

    return TermCache(
        cos=cos,
        sin=sin,
        log_cos=log_cos,
        pow_c=pow_c,
        pow_c1=pow_c1,
        pow_c2=pow_c2,
        clamped=~active,
        G=G,
        F=F,
        S_ab=S_ab,
        S_ac=S_ac,
        S_bb=S_bb,
        S_bc=S_bc,
        S_cc=S_cc,
    )


def gradient_from_cache(cache: TermCache) -> np.ndarray:
    return (2.0 / cache.n) * (cache.F @ cache.G)


def gauss_newton_from_cache(cache: TermCache) -> np.ndarray:
    """(2/N) sum F F^T, the Hessian without residual-curvature terms."""
    return (2.0 / cache.n) * (cache.F @ cache.F.T)


def hessian_from_cache(cache: TermCache) -> np.ndarray:
    scale = 2.0 / cache.n
    G = cache.G
    lower = np.tril(cache.F @ cache.F.T)
    for k in range(3):
        ia, ib, ic = k, 3 + k, 6 + k
        lower[ib, ia] += G @ cache.S_ab[k]
        lower[ic, ia] += G @ cache.S_ac[k]
        lower[ib, ib] += G @ cache.S_bb[k]
        lower[ic, ib] += G @ cache.S_bc[k]
        lower[ic, ic] += G @ cache.S_cc[k]
    lower *= scale
    # Mirror the lower triangle so the matrix is exactly symmetric.
    return lower + np.tril(lower, -1).T


def gradient(p: ParamsLike, s: IntensitySamples) -> np.ndarray:
    """Gradient of E, ordered (a1..a3, b1..b3, c1..c3); b entries per degree."""
    return gradient_from_cache(build_cache(p, s))


def hessian(p: ParamsLike, s: IntensitySamples) -> np.ndarray:
    """9x9 Hessian of E, exactly symmetric."""
    return hessian_from_cache(build_cache(p, s))
