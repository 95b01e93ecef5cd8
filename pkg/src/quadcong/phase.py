"""Evaluation of e(p/q) = exp(2*pi*i*p/q) from exact integer numerators.

Phases are reduced exactly (quarter turn, then reflection into the first
octant) before a single floating evaluation, so conjugate and symmetric
phases come out bit-exact and the angles pi/6, pi/4, pi/3 hit correctly
rounded values.
"""
from __future__ import annotations

import numpy as np

_SQRT3_2 = 0.8660254037844386
_SQRT1_2 = 0.7071067811865476


def e_rational(num, den) -> np.ndarray:
    """Vectorized ``exp(2 pi i num/den)`` for integer arrays, ``den > 0``."""
    num = np.asarray(num, dtype=np.int64)
    den = np.broadcast_to(np.asarray(den, dtype=np.int64), num.shape)
    t = np.mod(num, den)
    four_t = 4 * t
    quadrant = four_t // den
    rem = four_t - quadrant * den  # angle rem/(4 den) turns, in [0, 1/4)
    swap = 2 * rem > den
    s = np.where(swap, den - rem, rem)  # s/(4 den) turns, in [0, 1/8]
    theta = (np.pi / 2) * (s / den)
    c = np.cos(theta)
    sn = np.sin(theta)
    zero = s == 0
    c = np.where(zero, 1.0, c)
    sn = np.where(zero, 0.0, sn)
    eighth = 2 * s == den
    c = np.where(eighth, _SQRT1_2, c)
    sn = np.where(eighth, _SQRT1_2, sn)
    twelfth = 3 * s == den
    c = np.where(twelfth, _SQRT3_2, c)
    sn = np.where(twelfth, 0.5, sn)
    re = np.where(swap, sn, c)
    im = np.where(swap, c, sn)
    # rotate by i**quadrant
    re, im = (
        np.select([quadrant == 0, quadrant == 1, quadrant == 2], [re, -im, -re], im),
        np.select([quadrant == 0, quadrant == 1, quadrant == 2], [im, re, -im], -re),
    )
    return re + 1j * im


def e_scalar(num: int, den: int) -> complex:
    return complex(e_rational(np.array([num]), den)[0])


def ordered_sum(values: np.ndarray, block: int = 1024) -> complex:
    """Sum in fixed-size blocks reduced in index order (bit-reproducible)."""
    values = np.asarray(values)
    if values.size == 0:
        return 0j
    total = 0j
    for start in range(0, values.size, block):
        total += complex(values[start : start + block].sum())
    return total
