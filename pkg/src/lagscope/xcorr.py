"""Circular cross-correlation and per-lag coincidence counts.

Convention: ``gamma[tau] = sum_m x[m] * y[(m + tau) % M]``, so a peak at
``tau`` means ``y`` is ``x`` delayed by ``tau`` ticks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentCountsError, NumericalConsistencyError, ValidationError

ROUNDING_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class CcfVector:
    gamma: np.ndarray
    circular: bool = True

    def __len__(self):
        return int(self.gamma.size)

    def __getitem__(self, tau):
        return self.gamma[tau]


@dataclass(frozen=True)
class CoincidenceCounts:
    n00: int
    n01: int
    n10: int
    n11: int
    tau: int | None = None

    @property
    def total(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11


def _as_pair(x, y):
    x = getattr(x, "bits", x)
    y = getattr(y, "bits", y)
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 1 or y.ndim != 1:
        raise ValidationError("cross-correlation inputs must be one-dimensional")
    if x.size != y.size:
        raise ValidationError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 1:
        raise ValidationError("cross-correlation needs M >= 1")
    return x, y


def _is_integral(a: np.ndarray) -> bool:
    return a.dtype.kind in "biu"


def ccf_direct(x, y) -> CcfVector:
    """O(M^2) reference evaluation of the circular cross-correlation."""
    x, y = _as_pair(x, y)
    integral = _is_integral(x) and _is_integral(y)
    dtype = np.int64 if integral else float
    xa = x.astype(dtype)
    ya = y.astype(dtype)
    m = xa.size
    idx = np.arange(m)
    gamma = np.empty(m, dtype=dtype)
    for tau in range(m):
        gamma[tau] = np.dot(xa, ya[(idx + tau) % m])
    return CcfVector(gamma)


def ccf_fft(x, y) -> CcfVector:
    """FFT evaluation of the circular cross-correlation.

    Integer (e.g. indicator) inputs give integer output; each value is rounded
    and must lie within 1e-6 of that integer.
    """
    x, y = _as_pair(x, y)
    m = x.size
    xf = np.fft.rfft(x.astype(float))
    yf = np.fft.rfft(y.astype(float))
    gamma = np.fft.irfft(np.conj(xf) * yf, n=m)
    if _is_integral(x) and _is_integral(y):
        rounded = np.rint(gamma)
        resid = float(np.max(np.abs(gamma - rounded)))
        if resid > ROUNDING_TOLERANCE:
            raise NumericalConsistencyError(
                f"FFT cross-correlation residual {resid:.3g} exceeds {ROUNDING_TOLERANCE}"
            )
        return CcfVector(rounded.astype(np.int64))
    return CcfVector(gamma)


def coincidence_counts(gamma_tau: int, n_x: int, n_y: int, m: int, tau: int | None = None) -> CoincidenceCounts:
    g, n_x, n_y, m = int(gamma_tau), int(n_x), int(n_y), int(m)
    if g < 0 or g > min(n_x, n_y) or n_x + n_y - g > m or min(n_x, n_y) < 0:
        raise InconsistentCountsError(
            f"gamma={g} inconsistent with N_X={n_x}, N_Y={n_y}, M={m}"
        )
    return CoincidenceCounts(
        n00=m - n_x - n_y + g, n01=n_y - g, n10=n_x - g, n11=g, tau=tau
    )


def coincidence_table(gamma, n_x: int, n_y: int, m: int) -> np.ndarray:
    """Vectorized counts: rows ``(n00, n01, n10, n11)`` for every lag."""
    g = np.asarray(getattr(gamma, "gamma", gamma), dtype=np.int64)
    if np.any(g < 0) or np.any(g > min(n_x, n_y)) or np.any(n_x + n_y - g > m):
        raise InconsistentCountsError(
            f"cross-correlation inconsistent with N_X={n_x}, N_Y={n_y}, M={m}"
        )
    return np.stack([m - n_x - n_y + g, n_y - g, n_x - g, g], axis=1)
