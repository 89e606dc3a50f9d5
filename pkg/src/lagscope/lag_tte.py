"""Lag/scale posterior for time-tagged event data.

Each tick is a truncated Poisson trial: no event with probability
``exp(-rate)``. The latent signal at every tick is integrated out under a
uniform prior on ``[s0, s1]``, which leaves one of four per-tick factors
``g_ab`` depending only on the scale ``a``. The log posterior is then
``c0(a) + c1(a) * gamma(tau)`` with ``gamma`` the cross-correlation of the
two indicator vectors.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .errors import PriorConfigError, ValidationError
from .posterior import PosteriorSurface
from .series import EventSeries, to_indicator
from .xcorr import ccf_fft

PHI_EPS = 1e-6


class ProbabilityWarning(UserWarning):
    """Per-tick event probabilities are not small."""


@dataclass(frozen=True)
class TtePriorConfig:
    """Uniform signal-rate prior ``[s0, s1]`` and known background rates (per tick)."""

    s0: float
    s1: float
    b_x: float = 0.0
    b_y: float = 0.0

    def __post_init__(self):
        vals = (self.s0, self.s1, self.b_x, self.b_y)
        if not all(math.isfinite(v) for v in vals):
            raise PriorConfigError(f"prior parameters must be finite, got {vals}")
        if not 0.0 <= self.s0 < self.s1:
            raise PriorConfigError(f"need 0 <= s0 < s1, got s0={self.s0}, s1={self.s1}")
        if self.b_x < 0 or self.b_y < 0:
            raise PriorConfigError(f"backgrounds must be non-negative, got {self.b_x}, {self.b_y}")
        p = -math.expm1(-(self.s1 + max(self.b_x, self.b_y)))
        if p > 0.5:
            warnings.warn(
                f"per-tick event probability reaches {p:.3f}; the truncated Poisson "
                "model assumes it is small",
                ProbabilityWarning,
                stacklevel=3,
            )

    @property
    def e_x(self) -> float:
        return math.exp(-self.b_x)

    @property
    def e_y(self) -> float:
        return math.exp(-self.b_y)


@dataclass(frozen=True)
class GCoefficients:
    """Marginal probability of each joint outcome (x event?, y event?) at one tick."""

    g00: float
    g01: float
    g10: float
    g11: float

    def as_array(self) -> np.ndarray:
        return np.array([self.g00, self.g01, self.g10, self.g11])


def phi(x, y):
    """Mean of ``exp(-s)`` over ``s`` between ``x`` and ``y``.

    Equals ``(exp(-x) - exp(-y)) / (y - x)``, with the limit ``exp(-x)`` at
    ``x == y``. Within 1e-6 of the diagonal a series in the half-gap is used.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo = np.minimum(x, y)
    gap = np.abs(y - x)
    near = gap <= PHI_EPS
    safe = np.where(near, 1.0, gap)
    far_val = np.exp(-lo) * (-np.expm1(-safe)) / safe
    d = 0.5 * gap
    near_val = np.exp(-0.5 * (x + y)) * (1.0 + d * d / 6.0 + d**4 / 120.0)
    out = np.where(near, near_val, far_val)
    return out[()] if out.ndim == 0 else out


def _g_arrays(a, cfg: TtePriorConfig):
    a = np.asarray(a, dtype=float)
    rho = 1.0 + a
    ex, ey = cfg.e_x, cfg.e_y
    p_x = ex * phi(cfg.s0, cfg.s1)
    p_y = ey * phi(a * cfg.s0, a * cfg.s1)
    g00 = ex * ey * phi(rho * cfg.s0, rho * cfg.s1)
    g01 = p_x - g00
    g10 = p_y - g00
    g11 = 1.0 - p_x - p_y + g00
    g = np.stack(np.broadcast_arrays(g00, g01, g10, g11))
    if np.any(~(g > 0)):
        raise PriorConfigError(
            f"degenerate prior: non-positive outcome probability for a={a}, {cfg}"
        )
    return g


def g_coefficients(a: float, cfg: TtePriorConfig) -> GCoefficients:
    if not a > 0:
        raise ValidationError(f"scale a must be positive, got {a}")
    g00, g01, g10, g11 = (float(v) for v in _g_arrays(a, cfg))
    return GCoefficients(g00, g01, g10, g11)


def _check_a(a):
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise ValidationError("a grid is empty")
    if np.any(~(a > 0)) or np.any(~np.isfinite(a)):
        raise ValidationError("a grid values must be positive and finite")
    return a


def log_posterior_coeffs(a, cfg: TtePriorConfig, m: int, n_x: int, n_y: int):
    """``(c0, c1)`` such that ``log G_total(tau, a) = c0 + c1 * gamma(tau)``.

    Vectorized over ``a``.
    """
    if not (0 <= n_x <= m and 0 <= n_y <= m):
        raise ValidationError(f"event counts N_X={n_x}, N_Y={n_y} inconsistent with M={m}")
    a = _check_a(a)
    lg00, lg01, lg10, lg11 = np.log(_g_arrays(a, cfg))
    c0 = (m - n_x - n_y) * lg00 + n_y * lg01 + n_x * lg10
    c1 = lg00 - lg01 - lg10 + lg11
    if c0.ndim == 0:
        return float(c0), float(c1)
    return c0, c1


def default_a_grid() -> np.ndarray:
    return np.geomspace(0.1, 10.0, 25)


def _tau_grid(tau_grid, m: int) -> np.ndarray:
    if tau_grid is None:
        return np.arange(m)
    t = np.asarray(tau_grid)
    if t.size == 0:
        raise ValidationError("tau grid is empty")
    if t.dtype.kind not in "iu":
        if not np.all(t == np.round(t)):
            raise ValidationError("tau grid must hold integer lags")
        t = t.astype(np.int64)
    if np.any(t < 0) or np.any(t >= m):
        raise ValidationError(f"tau grid must lie in [0, {m - 1}]")
    return t.astype(np.int64)


def _event_inputs(x: EventSeries, y: EventSeries):
    if x.span_m != y.span_m:
        raise ValidationError(f"event series spans differ: {x.span_m} vs {y.span_m}")
    gamma = ccf_fft(to_indicator(x).bits, to_indicator(y).bits).gamma
    return x.span_m, x.n, y.n, gamma


def _log_surface(m, n_x, n_y, gamma, tau, a, cfg):
    c0, c1 = log_posterior_coeffs(a, cfg, m, n_x, n_y)
    return np.atleast_1d(c0)[None, :] + np.atleast_1d(c1)[None, :] * gamma[tau][:, None].astype(float)


def tte_posterior_surface(x: EventSeries, y: EventSeries, tau_grid=None, a_grid=None,
                          cfg: TtePriorConfig | None = None) -> PosteriorSurface:
    """Posterior over ``(tau, a)`` with uniform grid priors.

    ``log_post`` holds ``log G_total(tau, a)`` itself (no constant dropped), so
    surfaces for different backgrounds can be mixed.
    """
    if cfg is None:
        raise ValidationError("a TtePriorConfig is required")
    m, n_x, n_y, gamma = _event_inputs(x, y)
    tau = _tau_grid(tau_grid, m)
    a = _check_a(default_a_grid() if a_grid is None else a_grid)
    return PosteriorSurface.from_log_post(tau, a, _log_surface(m, n_x, n_y, gamma, tau, a, cfg), m)


def marginalize_background(x: EventSeries, y: EventSeries, tau_grid, a_grid,
                           cfg_base: TtePriorConfig, b_grid_x, b_grid_y) -> PosteriorSurface:
    """Average the posterior over a product grid of background rates (uniform weights)."""
    bx = np.atleast_1d(np.asarray(b_grid_x, dtype=float))
    by = np.atleast_1d(np.asarray(b_grid_y, dtype=float))
    for name, g in (("x", bx), ("y", by)):
        if g.size == 0 or np.any(~np.isfinite(g)) or np.any(g < 0):
            raise ValidationError(f"background grid for {name} must be finite, non-negative, non-empty")
    m, n_x, n_y, gamma = _event_inputs(x, y)
    tau = _tau_grid(tau_grid, m)
    a = _check_a(default_a_grid() if a_grid is None else a_grid)
    stack = np.stack([
        _log_surface(m, n_x, n_y, gamma, tau, a, replace(cfg_base, b_x=float(u), b_y=float(v)))
        for u in bx for v in by
    ])
    log_post = logsumexp(stack, axis=0) - math.log(stack.shape[0])
    return PosteriorSurface.from_log_post(tau, a, log_post, m)
