"""Seeded simulation of negative binomial ages by composition.

Each age is drawn as ``theta ~ Gamma(alpha, rate=beta)`` followed by
``X ~ Poisson(theta)``.  Only the raw 64-bit stream of numpy's counter-based
Philox generator is used; the variate algorithms below are our own, so the
output does not move when numpy changes its distribution samplers.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

_TWO_M53 = 2.0 ** -53
# Below this rate Poisson variates use sequential inversion, above it PTRS.
_POISSON_INVERSION_MAX = 10.0


class UniformStream:
    """Doubles in (0, 1) built from the raw Philox stream."""

    def __init__(self, seed: int):
        if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed < 2 ** 64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        self._bits = np.random.Philox(int(seed))

    def take(self, k: int) -> np.ndarray:
        raw = self._bits.random_raw(k)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53

    def normals(self, k: int) -> np.ndarray:
        # Box-Muller, cosine branch only.
        u1 = self.take(k)
        u2 = self.take(k)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def gamma_variates(shape: float, size: int, stream: UniformStream) -> np.ndarray:
    """Unit-rate gamma variates (Marsaglia-Tsang squeeze; U**(1/a) boost for a < 1)."""
    if not shape > 0:
        raise DomainError(f"shape must be positive, got {shape!r}")
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    pending = np.arange(size)
    while pending.size:
        k = pending.size
        z = stream.normals(k)
        u = stream.take(k)
        v = 1.0 + c * z
        ok = v > 0
        v = np.where(ok, v * v * v, 1.0)
        squeeze = u < 1.0 - 0.0331 * z ** 4
        full = np.log(u) < 0.5 * z * z + d * (1.0 - v + np.log(v))
        accept = ok & (squeeze | full)
        out[pending[accept]] = d * v[accept]
        pending = pending[~accept]
    if boost:
        out *= stream.take(size) ** (1.0 / shape)
    return out


def _poisson_inversion(lam, stream):
    u = stream.take(lam.size)
    x = np.zeros(lam.size, dtype=np.int64)
    p = np.exp(-lam)
    cdf = p.copy()
    active = u > cdf
    while active.any():
        x[active] += 1
        p[active] *= lam[active] / x[active]
        cdf[active] += p[active]
        # p underflow guard: the remaining mass is negligible
        active &= (u > cdf) & (p > 0)
    return x


def _poisson_ptrs(lam, stream):
    # Hormann's transformed rejection with squeeze, for lam >= 10.
    from scipy.special import gammaln

    out = np.empty(lam.size, dtype=np.int64)
    pending = np.arange(lam.size)
    slam = np.sqrt(lam)
    loglam = np.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while pending.size:
        lp, bp, ap, ip, vp = lam[pending], b[pending], a[pending], inv_alpha[pending], vr[pending]
        u = stream.take(pending.size) - 0.5
        v = stream.take(pending.size)
        us = 0.5 - np.abs(u)
        k = np.floor((2.0 * ap / us + bp) * u + lp + 0.43)
        quick = (us >= 0.07) & (v <= vp)
        reject = (k < 0) | ((us < 0.013) & (v > us))
        kk = np.maximum(k, 0.0)
        lhs = np.log(v) + np.log(ip) - np.log(ap / (us * us) + bp)
        rhs = -lp + kk * loglam[pending] - gammaln(kk + 1.0)
        accept = quick | (~reject & (lhs <= rhs))
        out[pending[accept]] = k[accept].astype(np.int64)
        pending = pending[~accept]
    return out


def poisson_variates(lam: np.ndarray, stream: UniformStream) -> np.ndarray:
    lam = np.asarray(lam, dtype=np.float64)
    out = np.zeros(lam.size, dtype=np.int64)
    small = lam < _POISSON_INVERSION_MAX
    if small.any():
        out[small] = _poisson_inversion(lam[small], stream)
    if (~small).any():
        out[~small] = _poisson_ptrs(lam[~small], stream)
    return out


def simulate_negbin(alpha: float, beta: float, n: int, seed: int) -> np.ndarray:
    """``n`` negative binomial ages; identical for identical arguments."""
    if not (math.isfinite(alpha) and alpha > 0 and math.isfinite(beta) and beta > 0):
        raise DomainError(f"alpha and beta must be positive, got alpha={alpha!r}, beta={beta!r}")
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    stream = UniformStream(seed)
    theta = gamma_variates(alpha, int(n), stream) / beta
    return poisson_variates(theta, stream)
