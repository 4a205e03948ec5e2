"""
Cosine-Power Intensity Model

I(phi) = I_max * sum_k a_k * cos(phi - b_k) ** c_k

Angles are kept in degrees and converted to radians only inside the
trigonometric calls. Two physical restrictions apply to every term:
a combined angle phi - b_k below 0 is mirrored (the term is even in the
angle), and a mirrored angle beyond 90 degrees points to the back side
of the LED, so the term contributes nothing.
"""

import math
from typing import NamedTuple, Tuple, Union

import numpy as np

from ledfit.errors import DarkInstanceError
from ledfit.state import N_PARAMS, IntensitySamples, ModelParams, ObjectiveValue

DEG = math.pi / 180.0

ParamsLike = Union[ModelParams, np.ndarray]


class TermAngle(NamedTuple):
    """Reduced angle of one model term."""

    theta: float
    sign: int
    clamped: bool


CLAMPED = TermAngle(theta=math.inf, sign=0, clamped=True)


def term_angle(phi: float, b_k: float) -> TermAngle:
    """
    Reduce the combined angle phi - b_k.

    Args:
        phi: Polar angle in degrees
        b_k: Angular offset of the term in degrees

    Returns:
        TermAngle with theta in [0, 90] and the mirror sign, or CLAMPED
        when the term lies on the back side
    """
    raw = phi - b_k
    if raw > 90.0 or raw < -90.0:
        return CLAMPED
    if raw < 0.0:
        return TermAngle(theta=-raw, sign=-1, clamped=False)
    return TermAngle(theta=raw, sign=1, clamped=False)


def as_vector(p: ParamsLike) -> np.ndarray:
    if isinstance(p, ModelParams):
        return p.to_vector()
    x = np.asarray(p, dtype=float)
    if x.shape != (N_PARAMS,):
        raise ValueError(f"expected {N_PARAMS} parameters, got shape {x.shape}")
    return x


def term_arrays(phi: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorised term_angle over samples (columns) and terms (rows).

    Returns:
        theta, sign and active masks, each shaped (3, N)
    """
    raw = np.asarray(phi, dtype=float)[None, :] - np.asarray(b, dtype=float)[:, None]
    sign = np.where(raw < 0.0, -1.0, 1.0)
    theta = np.abs(raw)
    active = theta <= 90.0
    return theta, sign, active


def cosines(theta: np.ndarray, active: np.ndarray) -> np.ndarray:
    """cos(theta) for active terms; exactly 0 at 90 degrees and when clamped."""
    return np.where(active & (theta < 90.0), np.cos(theta * DEG), 0.0)


def cos_power(cos: np.ndarray, exponent: np.ndarray) -> np.ndarray:
    """cos ** exponent with 0 ** 0 = 1 and 0 ** c = 0 otherwise."""
    exponent = np.broadcast_to(exponent, cos.shape)
    safe = np.where(cos > 0.0, cos, 1.0)
    return np.where(cos > 0.0, np.power(safe, exponent), np.where(exponent == 0.0, 1.0, 0.0))


def term_values(x: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """a_k * cos(theta_k) ** c_k per term and sample, shape (3, N)."""
    theta, _, active = term_arrays(phi, x[3:6])
    cos = cosines(theta, active)
    powered = cos_power(cos, x[6:9, None])
    return np.where(active, x[0:3, None] * powered, 0.0)


def eval_intensity(p: ParamsLike, phi, i_max: float):
    """
    Evaluate the model intensity.

    Args:
        p: Model parameters
        phi: Polar angle(s) in degrees, scalar or array
        i_max: Intensity scale in candela

    Returns:
        Intensity in candela, with the shape of ``phi``
    """
    x = as_vector(p)
    phi_arr = np.atleast_1d(np.asarray(phi, dtype=float))
    values = i_max * term_values(x, phi_arr).sum(axis=0)
    if np.ndim(phi) == 0:
        return float(values[0])
    return values.reshape(np.shape(phi))


def model_curve(p: ParamsLike, s: IntensitySamples) -> np.ndarray:
    """Model intensity at every sample angle of ``s``."""
    return eval_intensity(p, s.phi, s.i_max)


def residuals(p: ParamsLike, s: IntensitySamples) -> np.ndarray:
    """G_i = model(phi_i) - I_m(phi_i)."""
    return model_curve(p, s) - s.candela


def eval_e(p: ParamsLike, s: IntensitySamples) -> float:
    """Mean squared residual, the function the optimizers minimize."""
    g = residuals(p, s)
    return float(np.mean(g * g))


def rms(p: ParamsLike, s: IntensitySamples) -> float:
    """Root mean square error in candela."""
    return math.sqrt(eval_e(p, s))


def rmsp_from_rms(rms_value: float, s: IntensitySamples) -> float:
    total = s.total
    if total <= 0.0:
        raise DarkInstanceError()
    return 100.0 * s.n * rms_value / total


def rmsp(p: ParamsLike, s: IntensitySamples) -> float:
    """RMS error relative to the mean measured intensity, in percent."""
    return rmsp_from_rms(rms(p, s), s)


def objective(p: ParamsLike, s: IntensitySamples) -> ObjectiveValue:
    e = eval_e(p, s)
    r = math.sqrt(e)
    return ObjectiveValue(rms=r, rmsp=rmsp_from_rms(r, s), e=e)
