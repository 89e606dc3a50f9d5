"""Posterior surfaces over (lag, scale) grids and the lag estimators built on them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ValidationError


@dataclass(frozen=True, eq=False)
class PosteriorSurface:
    """Unnormalized log posterior on a ``tau_grid x a_grid`` grid.

    ``log_post[i, j]`` is the log density at ``(tau_grid[i], a_grid[j])`` with
    uniform grid priors; ``log_norm`` is the log of its grid sum, so
    ``exp(log_post - log_norm)`` sums to one.
    """

    tau_grid: np.ndarray
    a_grid: np.ndarray
    log_post: np.ndarray
    log_norm: float
    span: int

    @classmethod
    def from_log_post(cls, tau_grid, a_grid, log_post, span: int) -> "PosteriorSurface":
        tau_grid = np.asarray(tau_grid, dtype=np.int64).copy()
        a_grid = np.asarray(a_grid, dtype=float).copy()
        log_post = np.asarray(log_post, dtype=float).copy()
        if log_post.shape != (tau_grid.size, a_grid.size):
            raise ValidationError(
                f"log_post shape {log_post.shape} does not match grids "
                f"({tau_grid.size}, {a_grid.size})"
            )
        for arr in (tau_grid, a_grid, log_post):
            arr.setflags(write=False)
        return cls(tau_grid, a_grid, log_post, float(logsumexp(log_post)), int(span))

    def normalized(self) -> np.ndarray:
        """Log probability mass of each grid cell."""
        return self.log_post - self.log_norm

    def tau_marginal(self) -> np.ndarray:
        """Log posterior mass of each lag with ``a`` summed out."""
        return logsumexp(self.normalized(), axis=1)

    def a_marginal(self) -> np.ndarray:
        return logsumexp(self.normalized(), axis=0)


@dataclass(frozen=True)
class LagEstimates:
    map_tau: int
    mean_tau: float
    hpd_lo: int
    hpd_hi: int
    level: float

    def as_dict(self) -> dict:
        return {
            "map_tau": self.map_tau,
            "mean_tau": self.mean_tau,
            "hpd_lo": self.hpd_lo,
            "hpd_hi": self.hpd_hi,
            "level": self.level,
        }


def window_lags(surface: PosteriorSurface, window=None) -> tuple[np.ndarray, np.ndarray]:
    """Signed lags in ``window`` and their row indices in the surface.

    ``window`` is an inclusive ``(lo, hi)`` pair of lags; lags are taken mod M,
    so ``(-5, 5)`` addresses the ten ticks around zero. ``None`` means the
    whole lag grid.
    """
    grid = surface.tau_grid
    if window is None:
        order = np.argsort(grid, kind="stable")
        return grid[order], order
    lo, hi = (int(v) for v in window)
    if hi < lo:
        raise ValidationError(f"empty lag window [{lo}, {hi}]")
    if hi - lo + 1 > surface.span:
        raise ValidationError(f"lag window [{lo}, {hi}] wider than M={surface.span}")
    lags = np.arange(lo, hi + 1)
    pos = {int(t): i for i, t in enumerate(grid)}
    rows = []
    for lag in lags:
        i = pos.get(int(lag % surface.span))
        if i is None:
            raise ValidationError(f"lag {lag} in window is not on the lag grid")
        rows.append(i)
    return lags, np.array(rows, dtype=np.int64)


def hpd_set(mass: np.ndarray, level: float) -> np.ndarray:
    """Indices of the smallest set whose mass reaches ``level`` (ties -> earlier index)."""
    order = np.lexsort((np.arange(mass.size), -mass))
    cum = np.cumsum(mass[order])
    k = int(np.searchsorted(cum, level * (1.0 - 1e-12), side="left"))
    return order[: min(k, mass.size - 1) + 1]


def lag_estimates(surface: PosteriorSurface, window=None, level: float = 0.95) -> LagEstimates:
    """MAP, posterior mean and HPD interval of the lag within ``window``.

    The posterior is first summed over ``a`` and then renormalized inside the
    window. The mean is linear over the window's signed lags. MAP ties go to
    the smallest lag.
    """
    if not 0.0 < level <= 1.0:
        raise ValidationError(f"credible level must be in (0, 1], got {level}")
    lags, rows = window_lags(surface, window)
    if lags.size == 0:
        raise ValidationError("lag window is empty")
    logm = surface.tau_marginal()[rows]
    mass = np.exp(logm - logsumexp(logm))
    imap = int(np.argmax(logm))
    mean = float(np.dot(mass, lags) / mass.sum())
    chosen = lags[hpd_set(mass, level)]
    return LagEstimates(
        map_tau=int(lags[imap]),
        mean_tau=mean,
        hpd_lo=int(chosen.min()),
        hpd_hi=int(chosen.max()),
        level=float(level),
    )
