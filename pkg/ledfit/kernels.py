"""
Compiled Objective Kernels

The derivative-free searches evaluate E millions of times per instance.
These numba kernels compute the same value as ``ledfit.model.eval_e``
sample by sample, including the mirror and back-side rules.
"""

import math

import numpy as np
from numba import njit

DEG = math.pi / 180.0


@njit(cache=True)
def _term(phi, a, b, c):
    theta = abs(phi - b)
    if theta > 90.0:
        return 0.0
    if theta == 90.0:
        # 0 ** 0 = 1, 0 ** c = 0 otherwise
        return a if c == 0.0 else 0.0
    return a * math.cos(theta * DEG) ** c


@njit(cache=True)
def energy(x, phi, candela, i_max):
    """E for one 9-vector ``x``."""
    total = 0.0
    for i in range(phi.shape[0]):
        value = 0.0
        for k in range(3):
            value += _term(phi[i], x[k], x[3 + k], x[6 + k])
        g = i_max * value - candela[i]
        total += g * g
    return total / phi.shape[0]


@njit(cache=True)
def batch_energy(X, phi, candela, i_max):
    """E for every row of the (M, 9) matrix ``X``."""
    out = np.empty(X.shape[0])
    for m in range(X.shape[0]):
        out[m] = energy(X[m], phi, candela, i_max)
    return out


@njit(cache=True)
def if_walk(
    x0,
    phi,
    candela,
    i_max,
    steps0,
    choices,
    lower,
    upper,
    trials_before_morph,
    morph_limit,
    refine_factor,
):
    """
    First-improvement random walk over the 512-point neighbourhood.

    ``choices`` holds one pre-drawn neighbour index per trial; bit j of
    the index selects +d (set) or -d (clear) for component j. Returns
    the final point, its E, the evaluations spent and the accepted moves.
    """
    x = x0.copy()
    e = energy(x, phi, candela, i_max)
    evaluations = 1
    moves = 0

    d0 = steps0.copy()
    d = d0.copy()
    fails = 0
    morph = 0
    trial = np.empty(9)

    for t in range(choices.shape[0]):
        mask = choices[t]
        for j in range(9):
            step = d[j // 3]
            if (mask >> j) & 1:
                value = x[j] + step
            else:
                value = x[j] - step
            trial[j] = min(max(value, lower[j]), upper[j])

        e_trial = energy(trial, phi, candela, i_max)
        evaluations += 1
        if e_trial < e:
            x[:] = trial
            e = e_trial
            moves += 1
            fails = 0
            morph = 0
            d[:] = d0
            continue

        fails += 1
        if fails >= trials_before_morph:
            fails = 0
            if morph < morph_limit:
                morph += 1
                d += d0
            else:
                d0 *= refine_factor
                d[:] = d0
                morph = 0

    return x, e, evaluations, moves
