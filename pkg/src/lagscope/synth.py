"""Seeded synthetic data for the event, sampled and weighted-datum modes.

Every random draw comes from a substream keyed by ``(seed, label)``, so the
X and Y draws are independent of each other's parameters.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .blocks import BlockModel, predict
from .errors import ValidationError
from .series import EventSeries, SampledSeries, WeightedDatum, WeightFunction


def substream(seed: int, label: str) -> np.random.Generator:
    key = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "little")
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(key,))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class SignalSpec:
    """Latent signal per tick: ``constant``, ``gaussian_pulse`` or ``table``."""

    shape: str = "constant"
    level: float = 0.0
    center: float | None = None
    width: float = 1.0
    amplitude: float = 1.0
    values: tuple = field(default=(), repr=False)

    def realize(self, m: int) -> np.ndarray:
        if self.shape == "constant":
            out = np.full(m, float(self.level))
        elif self.shape == "gaussian_pulse":
            if not self.width > 0:
                raise ValidationError(f"pulse width must be positive, got {self.width}")
            c = 0.5 * m if self.center is None else float(self.center)
            t = np.arange(m)
            out = self.amplitude * np.exp(-0.5 * ((t - c) / self.width) ** 2)
        elif self.shape == "table":
            out = np.asarray(self.values, dtype=float)
            if out.size != m:
                raise ValidationError(f"signal table has {out.size} values, expected {m}")
        else:
            raise ValidationError(f"unknown signal shape {self.shape!r}")
        return out


@dataclass(frozen=True)
class GenConfig:
    m: int
    tau_true: int = 0
    a_true: float = 1.0
    b_x: float = 0.0
    b_y: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError(f"m must be positive, got {self.m}")
        if not 0 <= self.tau_true < self.m:
            raise ValidationError(f"tau_true must lie in [0, {self.m - 1}], got {self.tau_true}")
        if not self.a_true > 0:
            raise ValidationError(f"a_true must be positive, got {self.a_true}")


def _events(rate: np.ndarray, rng: np.random.Generator, m: int) -> EventSeries:
    if np.any(~np.isfinite(rate)) or np.any(rate < 0):
        raise ValidationError("event rates must be finite and non-negative")
    p = -np.expm1(-rate)
    hit = rng.random(m) < p
    return EventSeries(np.flatnonzero(hit), m)


def gen_tte(signal: SignalSpec, cfg: GenConfig) -> tuple[EventSeries, EventSeries]:
    """Truncated-Poisson event pair; Y follows ``a * S`` delayed circularly by ``tau_true``."""
    s = signal.realize(cfg.m)
    if np.any(s < 0):
        raise ValidationError("event-mode signal rates must be non-negative")
    x = _events(s + cfg.b_x, substream(cfg.seed, "tte.x"), cfg.m)
    y = _events(cfg.a_true * np.roll(s, cfg.tau_true) + cfg.b_y, substream(cfg.seed, "tte.y"), cfg.m)
    return x, y


def gen_gauss(signal: SignalSpec, cfg: GenConfig, sigma_x, sigma_y) -> tuple[SampledSeries, SampledSeries]:
    s = signal.realize(cfg.m)
    sx = np.broadcast_to(np.asarray(sigma_x, dtype=float), (cfg.m,))
    sy = np.broadcast_to(np.asarray(sigma_y, dtype=float), (cfg.m,))
    if np.any(~(sx > 0)) or np.any(~(sy > 0)):
        raise ValidationError("noise scales must be positive")
    x = s + sx * substream(cfg.seed, "gauss.x").standard_normal(cfg.m)
    y = cfg.a_true * np.roll(s, cfg.tau_true) + sy * substream(cfg.seed, "gauss.y").standard_normal(cfg.m)
    return SampledSeries(x, sx), SampledSeries(y, sy)


def gen_blocks_data(model: BlockModel, weights: Sequence[WeightFunction], sigmas, seed: int) -> list[WeightedDatum]:
    weights = list(weights)
    sig = np.broadcast_to(np.asarray(sigmas, dtype=float), (len(weights),))
    if np.any(~(sig > 0)):
        raise ValidationError("sigmas must be positive")
    probe = [WeightedDatum(0.0, w.center, 1.0, w) for w in weights]
    yhat = predict(model, probe)
    y = yhat + sig * substream(seed, "blocks.noise").standard_normal(len(weights))
    return [WeightedDatum(float(v), w.center, float(s), w) for v, w, s in zip(y, weights, sig)]


# --------------------------------------------------------------------------
# JSON generator specs used by the CLI

DEFAULT_SPECS = {
    "tte": {
        "m": 4096, "tau": 17, "a": 1.0, "b_x": 0.01, "b_y": 0.01,
        "signal": {"shape": "gaussian_pulse", "width": 50.0, "amplitude": 0.2},
    },
    "gauss": {
        "m": 512, "tau": 17, "a": 1.0, "sigma_x": 0.05, "sigma_y": 0.05,
        "signal": {"shape": "gaussian_pulse", "width": 2.0, "amplitude": 2.0},
    },
    "blocks": {
        "changepoints": [1.0 / 3.0, 2.0 / 3.0], "heights": [1.0, 5.0, 2.0],
        "n": 100, "lo": 0.0, "hi": 1.0, "sigma": 0.1, "weight": {"kind": "delta"},
    },
}


def signal_from_dict(doc: dict) -> SignalSpec:
    doc = dict(doc)
    if "values" in doc:
        doc["values"] = tuple(doc["values"])
    try:
        return SignalSpec(**doc)
    except TypeError as exc:
        raise ValidationError(f"bad signal spec: {exc}") from None


def config_from_dict(doc: dict, seed: int) -> GenConfig:
    return GenConfig(
        m=int(doc["m"]), tau_true=int(doc.get("tau", 0)), a_true=float(doc.get("a", 1.0)),
        b_x=float(doc.get("b_x", 0.0)), b_y=float(doc.get("b_y", 0.0)), seed=int(seed),
    )


def block_weights(doc: dict) -> list[WeightFunction]:
    n = int(doc["n"])
    lo, hi = float(doc.get("lo", 0.0)), float(doc.get("hi", 1.0))
    centers = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    w = doc.get("weight", {"kind": "delta"})
    kind = w.get("kind", "delta")
    if kind == "delta":
        return [WeightFunction.delta(c) for c in centers]
    if kind == "boxcar":
        hw = float(w["half_width"])
        return [WeightFunction.boxcar(c - hw, c + hw) for c in centers]
    if kind == "gaussian":
        return [WeightFunction.gaussian(c, float(w["width"])) for c in centers]
    raise ValidationError(f"unsupported generator weight kind {kind!r}")


def synth_from_spec(mode: str, doc: dict | None, seed: int):
    """Generate data for ``mode`` in ``{tte, gauss, blocks}`` from a JSON-style dict."""
    if mode not in DEFAULT_SPECS:
        raise ValidationError(f"unknown synth mode {mode!r}")
    doc = DEFAULT_SPECS[mode] if doc is None else doc
    try:
        if mode == "tte":
            return gen_tte(signal_from_dict(doc.get("signal", {})), config_from_dict(doc, seed))
        if mode == "gauss":
            return gen_gauss(signal_from_dict(doc.get("signal", {})), config_from_dict(doc, seed),
                             doc["sigma_x"], doc["sigma_y"])
        model = BlockModel(doc["changepoints"], doc["heights"])
        return gen_blocks_data(model, block_weights(doc), doc["sigma"], seed)
    except KeyError as exc:
        raise ValidationError(f"synth spec missing field {exc}") from None
