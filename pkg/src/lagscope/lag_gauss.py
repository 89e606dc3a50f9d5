"""Lag/scale posterior for evenly sampled data with Gaussian noise.

The latent signal at each sample is integrated out under a flat prior on the
real line. With per-sample noise the per-sample quadratic terms are summed
directly; with constant noise the log posterior collapses to a constant plus
``K1(a) * gamma(tau)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .lag_tte import _check_a, _tau_grid, default_a_grid
from .posterior import PosteriorSurface
from .series import SampledSeries
from .xcorr import ccf_fft

LOG_2PI = math.log(2.0 * math.pi)


class GaussTerm(NamedTuple):
    """Per-sample coefficients of ``-c + 2 b S - a S^2`` (arrays over samples)."""

    a_m: np.ndarray
    b_m: np.ndarray
    c_m: np.ndarray


@dataclass(frozen=True)
class GaussConstants:
    a_of_a: float
    k0: float
    k1: float
    c0_const: float
    log_p0: float


def _values(s) -> np.ndarray:
    return np.asarray(getattr(s, "values", s), dtype=float).reshape(-1)


def _sigmas(s, override, m: int) -> np.ndarray:
    if override is None:
        if not isinstance(s, SampledSeries):
            raise ValidationError("noise scales required when inputs are plain arrays")
        sig = s.sigmas
    else:
        sig = np.asarray(override, dtype=float)
        if sig.ndim == 0:
            sig = np.full(m, float(sig))
    sig = np.asarray(sig, dtype=float).reshape(-1)
    if sig.size != m:
        raise ValidationError(f"noise vector length {sig.size} does not match M={m}")
    if np.any(~(sig > 0)) or np.any(~np.isfinite(sig)):
        raise ValidationError("noise scales must be positive and finite")
    return sig


def _pair(x, y):
    xv, yv = _values(x), _values(y)
    if xv.size != yv.size:
        raise ValidationError(f"length mismatch: {xv.size} vs {yv.size}")
    if xv.size == 0:
        raise ValidationError("series are empty")
    return xv, yv


def log_p0(sx: np.ndarray, sy: np.ndarray) -> float:
    """Log of the Gaussian normalization ``(2 pi)^-M / prod(sx * sy)``."""
    return -sx.size * LOG_2PI - float(np.sum(np.log(sx))) - float(np.sum(np.log(sy)))


def gauss_terms(x, y, sx, sy, tau: int, a) -> GaussTerm:
    """Coefficients for each sample pair ``(x[m], y[m + tau])``; ``a`` may be an array."""
    x = np.asarray(x, dtype=float)
    ys = np.roll(np.asarray(y, dtype=float), -int(tau))
    sys_ = np.roll(np.asarray(sy, dtype=float), -int(tau))
    a = np.asarray(a, dtype=float)[..., None]
    wx = 1.0 / sx**2
    wy = 1.0 / sys_**2
    a_m = 0.5 * (wx + a * a * wy)
    b_m = 0.5 * (x * wx + a * ys * wy)
    c_m = np.broadcast_to(0.5 * (x * x * wx + ys * ys * wy), a_m.shape)
    return GaussTerm(a_m, b_m, c_m)


def _general_log(xv, yv, sx, sy, tau, a, lp0):
    t = gauss_terms(xv, yv, sx, sy, tau, a)
    return lp0 + np.sum(t.b_m**2 / t.a_m - t.c_m, axis=-1) + 0.5 * np.sum(np.log(math.pi / t.a_m), axis=-1)


def gauss_log_posterior_general(x, y, tau: int, a: float, sigma_x=None, sigma_y=None) -> float:
    """Log posterior at one ``(tau, a)`` for arbitrary per-sample noise (circular lags)."""
    xv, yv = _pair(x, y)
    m = xv.size
    sx, sy = _sigmas(x, sigma_x, m), _sigmas(y, sigma_y, m)
    if not a > 0:
        raise ValidationError(f"scale a must be positive, got {a}")
    return float(_general_log(xv, yv, sx, sy, int(tau) % m, float(a), log_p0(sx, sy)))


def gauss_constants(x, y, sigma_x: float, sigma_y: float, a: float) -> GaussConstants:
    xv, yv = _pair(x, y)
    if not (sigma_x > 0 and sigma_y > 0):
        raise ValidationError("noise scales must be positive")
    m = xv.size
    vx, vy = sigma_x**2, sigma_y**2
    big_a = 0.5 * (1.0 / vx + a * a / vy)
    sxx, syy = float(np.dot(xv, xv)), float(np.dot(yv, yv))
    return GaussConstants(
        a_of_a=big_a,
        k0=sxx / (4.0 * big_a * vx * vx) + a * a * syy / (4.0 * big_a * vy * vy),
        k1=a / ((a * sigma_x) ** 2 + vy),
        c0_const=0.5 * (sxx / vx + syy / vy),
        log_p0=-m * (LOG_2PI + math.log(sigma_x) + math.log(sigma_y)),
    )


def gauss_log_posterior_constant(x, y, sigma_x: float, sigma_y: float, tau_grid=None, a: float = 1.0,
                                 gamma=None) -> np.ndarray:
    """Log posterior for every lag in ``tau_grid`` under constant noise scales.

    ``gamma`` may be passed in to reuse a cross-correlation across ``a`` values.
    """
    xv, yv = _pair(x, y)
    m = xv.size
    if not a > 0:
        raise ValidationError(f"scale a must be positive, got {a}")
    tau = _tau_grid(tau_grid, m)
    if gamma is None:
        gamma = ccf_fft(xv, yv).gamma
    k = gauss_constants(xv, yv, sigma_x, sigma_y, a)
    base = k.log_p0 + 0.5 * m * math.log(math.pi / k.a_of_a) - k.c0_const + k.k0
    return base + k.k1 * np.asarray(gamma, dtype=float)[tau]


def gauss_posterior_surface(x, y, tau_grid=None, a_grid=None, noise=None,
                            method: str = "auto") -> PosteriorSurface:
    """Posterior over ``(tau, a)`` with uniform grid priors.

    ``noise`` is ``None`` (use the series' own sigmas) or a pair
    ``(sigma_x, sigma_y)`` of scalars or per-sample arrays. ``method="auto"``
    takes the constant-noise path exactly when both noise vectors are constant.
    """
    if method not in ("auto", "general", "constant"):
        raise ValidationError(f"unknown method {method!r}")
    xv, yv = _pair(x, y)
    m = xv.size
    ox, oy = (None, None) if noise is None else noise
    sx, sy = _sigmas(x, ox, m), _sigmas(y, oy, m)
    tau = _tau_grid(tau_grid, m)
    a = _check_a(default_a_grid() if a_grid is None else a_grid)
    constant = bool(np.all(sx == sx[0]) and np.all(sy == sy[0]))
    if method == "constant" and not constant:
        raise ValidationError("constant-noise path requested but noise varies by sample")
    if method == "constant" or (method == "auto" and constant):
        gamma = ccf_fft(xv, yv).gamma
        cols = [gauss_log_posterior_constant(xv, yv, sx[0], sy[0], tau, float(aj), gamma) for aj in a]
        log_post = np.stack(cols, axis=1)
    else:
        lp0 = log_p0(sx, sy)
        log_post = np.stack([_general_log(xv, yv, sx, sy, int(t), a, lp0) for t in tau])
    return PosteriorSurface.from_log_post(tau, a, log_post, m)
