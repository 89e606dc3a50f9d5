"""Piecewise-constant signal estimation from weighted-integral measurements.

A model with ``k`` blocks has ``k - 1`` interior changepoints; the first block
extends to -inf and the last to +inf so every weight keeps its full mass.
Block ``j`` covers ``(edge_j, edge_{j+1}]``: a delta weight sitting exactly on
a changepoint belongs to the lower block.

Heights are integrated out under a flat prior, which turns the quadratic form
in the heights into the standard Gaussian linear-model evidence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, islice
from typing import Sequence

import numpy as np

from .errors import SearchTooLargeError, UnconstrainedBlockError, ValidationError
from .series import WeightedDatum, WeightFunction

LOG_2PI = math.log(2.0 * math.pi)
MAX_CONFIGURATIONS = 1_000_000
COND_LIMIT = 1e12
_CHUNK = 8192


@dataclass(frozen=True, eq=False)
class BlockModel:
    changepoints: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        cp = np.array(self.changepoints, dtype=float).reshape(-1)
        h = np.array(self.heights, dtype=float).reshape(-1)
        if h.size != cp.size + 1:
            raise ValidationError(
                f"{cp.size} changepoints need {cp.size + 1} heights, got {h.size}"
            )
        if np.any(np.diff(cp) < 0):
            raise ValidationError("changepoints must be non-decreasing")
        cp.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "changepoints", cp)
        object.__setattr__(self, "heights", h)

    @property
    def n_blocks(self) -> int:
        return int(self.heights.size)

    def edges(self) -> np.ndarray:
        return np.concatenate(([-np.inf], self.changepoints, [np.inf]))


@dataclass(frozen=True, eq=False)
class DesignProducts:
    """Noise-normalized design: ``g[n, j] = G_j(n) / sigma_n`` and ``y[n] / sigma_n``."""

    g: np.ndarray
    gram: np.ndarray
    proj: np.ndarray
    y: np.ndarray
    log_q: float


@dataclass(frozen=True, eq=False)
class HeightFit:
    heights: np.ndarray
    log_marginal: float
    residual_h: float

    def model(self, changepoints) -> BlockModel:
        return BlockModel(changepoints, self.heights)


@dataclass(frozen=True, eq=False)
class ChangepointSearch:
    model: BlockModel
    log_marginal: float
    residual_h: float
    configurations: np.ndarray
    log_marginals: np.ndarray

    def table(self) -> list[tuple[tuple[float, ...], float]]:
        return [(tuple(float(v) for v in c), float(l))
                for c, l in zip(self.configurations, self.log_marginals)]


def weight_block_product(w: WeightFunction, zeta_lo: float, zeta_hi: float) -> float:
    """Mass of ``w`` on ``(zeta_lo, zeta_hi]``."""
    if zeta_hi < zeta_lo:
        raise ValidationError(f"block bounds reversed: {zeta_lo} > {zeta_hi}")
    return float(w.cdf(zeta_hi) - w.cdf(zeta_lo))


def _columns(data: Sequence[WeightedDatum], edges: np.ndarray) -> np.ndarray:
    """Raw block masses ``G_j(n)`` for the given edges, shape ``(N, len(edges) - 1)``."""
    cdf = np.array([d.weight.cdf(edges) for d in data], dtype=float).reshape(len(data), edges.size)
    return np.diff(cdf, axis=1)


def _normalized(data: Sequence[WeightedDatum]):
    if len(data) == 0:
        raise ValidationError("no data")
    sig = np.array([d.sigma for d in data], dtype=float)
    y = np.array([d.y for d in data], dtype=float)
    log_q = -float(np.sum(np.log(sig))) - 0.5 * len(data) * LOG_2PI
    return sig, y / sig, log_q


def design_products(changepoints, data: Sequence[WeightedDatum]) -> DesignProducts:
    cp = np.asarray(changepoints, dtype=float).reshape(-1)
    sig, yn, log_q = _normalized(data)
    g = _columns(data, np.concatenate(([-np.inf], cp, [np.inf]))) / sig[:, None]
    return DesignProducts(g=g, gram=g.T @ g, proj=g.T @ yn, y=yn, log_q=log_q)


def predict(model: BlockModel, data: Sequence[WeightedDatum]) -> np.ndarray:
    if len(data) == 0:
        return np.zeros(0)
    return _columns(data, model.edges()) @ model.heights


def _evidence(gram, proj, yy, log_q):
    """Batched heights, residual and log evidence; singular grams give -inf."""
    k = gram.shape[-1]
    cond = np.linalg.cond(gram)
    ok = np.isfinite(cond) & (cond < COND_LIMIT)
    safe = np.where(ok[:, None, None], gram, np.eye(k))
    heights = np.linalg.solve(safe, proj[..., None])[..., 0]
    resid = yy - np.einsum("bj,bj->b", proj, heights)
    _, logdet = np.linalg.slogdet(safe)
    log_m = -0.5 * resid - 0.5 * logdet + 0.5 * k * LOG_2PI + log_q
    return heights, resid, np.where(ok, log_m, -np.inf), ok


def fit_heights(changepoints, data: Sequence[WeightedDatum]) -> HeightFit:
    """Least-squares heights and the height-marginalized log evidence.

    ``log_marginal = -H_min/2 - log det(gram)/2 + (k/2) log 2pi + log Q`` with
    ``Q`` the Gaussian normalization of the data.
    """
    dp = design_products(changepoints, data)
    cp = np.asarray(changepoints, dtype=float).reshape(-1)
    edges = np.concatenate(([-np.inf], cp, [np.inf]))
    empty = np.flatnonzero(np.all(dp.g == 0, axis=0))
    if empty.size:
        j = int(empty[0])
        raise UnconstrainedBlockError(
            f"block {j} on ({edges[j]}, {edges[j + 1]}] receives no weight from the data"
        )
    heights, resid, log_m, ok = _evidence(dp.gram[None], dp.proj[None], float(dp.y @ dp.y), dp.log_q)
    if not ok[0]:
        raise UnconstrainedBlockError(
            "block heights are not separately constrained by the data (singular gram matrix)"
        )
    return HeightFit(heights=heights[0], log_marginal=float(log_m[0]), residual_h=float(resid[0]))


def default_candidates(data: Sequence[WeightedDatum]) -> np.ndarray:
    xs = np.unique(np.array([d.x for d in data], dtype=float))
    return 0.5 * (xs[1:] + xs[:-1])


def search_changepoints(data: Sequence[WeightedDatum], n_blocks: int, candidates=None) -> ChangepointSearch:
    """Exhaustive search over changepoint sets drawn from ``candidates``.

    Configurations are scanned in lexicographic order, so ties go to the
    lexicographically smallest changepoint vector. Configurations with a
    singular gram matrix score ``-inf``.
    """
    if int(n_blocks) != n_blocks or n_blocks < 1:
        raise ValidationError(f"n_blocks must be a positive integer, got {n_blocks}")
    n_blocks = int(n_blocks)
    xs = np.array([d.x for d in data], dtype=float)
    if xs.size == 0:
        raise ValidationError("no data")
    if candidates is None:
        cand = default_candidates(data)
    else:
        cand = np.unique(np.asarray(candidates, dtype=float))
        if cand.size and (cand[0] < xs.min() or cand[-1] > xs.max()):
            raise ValidationError(
                f"candidates must lie within the data range [{xs.min()}, {xs.max()}]"
            )
    n_cp = n_blocks - 1
    total = math.comb(cand.size, n_cp)
    if total > MAX_CONFIGURATIONS:
        raise SearchTooLargeError(
            f"{total} changepoint configurations exceed the limit of {MAX_CONFIGURATIONS}; "
            "use a coarser candidate set or fewer blocks"
        )
    if total == 0:
        raise ValidationError(f"only {cand.size} candidates for {n_cp} changepoints")

    sig, yn, log_q = _normalized(data)
    yy = float(yn @ yn)
    grid = np.concatenate(([-np.inf], cand, [np.inf]))
    cdf = np.array([d.weight.cdf(grid) for d in data], dtype=float).reshape(len(data), grid.size)
    cdf /= sig[:, None]

    configs = np.empty((total, n_cp), dtype=np.int64)
    scores = np.empty(total)
    it = combinations(range(cand.size), n_cp)
    start = 0
    while start < total:
        rows = list(islice(it, _CHUNK))
        chunk = np.array(rows, dtype=np.int64).reshape(len(rows), n_cp)
        b = chunk.shape[0]
        edges = np.concatenate(
            (np.zeros((b, 1), np.int64), chunk + 1, np.full((b, 1), grid.size - 1)), axis=1
        )
        cols = cdf[:, edges]                      # (N, b, k + 1)
        g = np.diff(cols, axis=2).transpose(1, 0, 2)  # (b, N, k)
        gram = np.einsum("bnj,bnk->bjk", g, g)
        proj = np.einsum("bnj,n->bj", g, yn)
        _, _, log_m, _ = _evidence(gram, proj, yy, log_q)
        configs[start:start + b] = chunk
        scores[start:start + b] = log_m
        start += b

    best = int(np.argmax(scores))
    if not np.isfinite(scores[best]):
        raise UnconstrainedBlockError("every changepoint configuration leaves a block unconstrained")
    cps = cand[configs[best]]
    fit = fit_heights(cps, data)
    return ChangepointSearch(
        model=fit.model(cps),
        log_marginal=fit.log_marginal,
        residual_h=fit.residual_h,
        configurations=cand[configs],
        log_marginals=scores,
    )


def compare_n_blocks(data, n_max: int, gamma_prior: float = 0.5, candidates=None):
    """Best search per block count with its prior-penalized score ``log_marginal + k log gamma``."""
    if int(n_max) != n_max or n_max < 1:
        raise ValidationError(f"n_max must be a positive integer, got {n_max}")
    if not 0.0 < gamma_prior < 1.0:
        raise ValidationError(f"gamma_prior must lie in (0, 1), got {gamma_prior}")
    n_cand = (default_candidates(data) if candidates is None else np.unique(candidates)).size
    out = []
    for k in range(1, min(int(n_max), n_cand + 1) + 1):
        try:
            res = search_changepoints(data, k, candidates)
        except UnconstrainedBlockError:
            break
        out.append((k, res, res.log_marginal + k * math.log(gamma_prior)))
    if not out:
        raise UnconstrainedBlockError("no block count could be fitted")
    return out


def select_n_blocks(data, n_max: int, gamma_prior: float = 0.5, candidates=None) -> BlockModel:
    """Block model maximizing evidence under a geometric prior on the block count."""
    ranked = compare_n_blocks(data, n_max, gamma_prior, candidates)
    return max(ranked, key=lambda r: r[2])[1].model
