"""Data model and file ingestion for event lists, sampled series and weighted data.

Event files are UTF-8 text with one integer tick per line and an optional
``# M=<int>`` header. Sampled files are CSV with header ``t,y,sigma``.
Weighted-datum files are CSV with header ``x,y,sigma,wkind,w1,w2``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import DuplicateTickError, ParseError, RangeError, ValidationError

_M_HEADER = re.compile(r"^#\s*M\s*=\s*(\S+)\s*$")


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EventSeries:
    """Strictly increasing integer event ticks on ``[0, span_m)``."""

    ticks: np.ndarray
    span_m: int

    def __post_init__(self):
        ticks = _frozen(self.ticks, np.int64).reshape(-1)
        object.__setattr__(self, "ticks", ticks)
        m = self.span_m
        if isinstance(m, bool) or int(m) != m or m < 1:
            raise ValidationError(f"span M must be a positive integer, got {m!r}")
        object.__setattr__(self, "span_m", int(m))
        if ticks.size:
            if ticks[0] < 0:
                raise RangeError(f"tick {ticks[0]} is negative")
            if ticks[-1] > self.span_m - 1:
                raise RangeError(f"tick {ticks[-1]} outside [0, {self.span_m - 1}]")
            steps = np.diff(ticks)
            if np.any(steps == 0):
                i = int(np.flatnonzero(steps == 0)[0])
                raise DuplicateTickError(f"duplicate tick {ticks[i]}")
            if np.any(steps < 0):
                i = int(np.flatnonzero(steps < 0)[0])
                raise ValidationError(f"ticks not increasing at position {i + 1}")

    @property
    def n(self) -> int:
        return int(self.ticks.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, EventSeries):
            return NotImplemented
        return self.span_m == other.span_m and np.array_equal(self.ticks, other.ticks)

    def __hash__(self):
        return hash((self.span_m, self.ticks.tobytes()))


@dataclass(frozen=True, eq=False)
class IndicatorVector:
    bits: np.ndarray

    def __post_init__(self):
        bits = _frozen(self.bits, np.uint8).reshape(-1)
        if np.any(bits > 1):
            raise ValidationError("indicator bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return int(self.bits.sum(dtype=np.int64))

    def ticks(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def __len__(self):
        return int(self.bits.size)


@dataclass(frozen=True, eq=False)
class SampledSeries:
    """Evenly spaced values with a per-sample noise scale. ``dt`` is metadata only."""

    values: np.ndarray
    sigmas: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        values = _frozen(self.values, float).reshape(-1)
        sigmas = np.asarray(self.sigmas, dtype=float)
        if sigmas.ndim == 0:
            sigmas = np.full(values.shape, float(sigmas))
        sigmas = _frozen(sigmas, float).reshape(-1)
        if values.shape != sigmas.shape:
            raise ValidationError(
                f"values ({values.size}) and sigmas ({sigmas.size}) differ in length"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("values must be finite")
        if not np.all(sigmas > 0) or not np.all(np.isfinite(sigmas)):
            raise ValidationError("all sigmas must be positive and finite")
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return int(self.values.size)

    @property
    def constant_sigma(self) -> bool:
        return bool(np.all(self.sigmas == self.sigmas[0]))


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Kernel ``w(x)`` over which a measurement averages the signal.

    Build with :meth:`delta`, :meth:`boxcar`, :meth:`gaussian` or :meth:`tabulated`.
    Every kind has unit mass; :meth:`cdf` gives the mass at or below ``z``.
    """

    kind: str
    params: tuple = ()
    abscissae: np.ndarray | None = field(default=None, repr=False)
    densities: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        kind = self.kind
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        if kind == "delta":
            if len(p) != 1:
                raise ValidationError("delta weight takes one parameter (center)")
        elif kind == "boxcar":
            if len(p) != 2 or not p[0] < p[1]:
                raise ValidationError(f"boxcar needs lo < hi, got {p}")
        elif kind == "gaussian":
            if len(p) != 2 or not p[1] > 0:
                raise ValidationError(f"gaussian weight needs width > 0, got {p}")
        elif kind == "tabulated":
            xs = _frozen(self.abscissae, float).reshape(-1)
            ds = _frozen(self.densities, float).reshape(-1)
            if xs.size < 2 or xs.shape != ds.shape:
                raise ValidationError("tabulated weight needs >= 2 matching abscissae/densities")
            if np.any(np.diff(xs) <= 0):
                raise ValidationError("tabulated abscissae must be strictly increasing")
            if np.any(ds < 0):
                raise ValidationError("tabulated densities must be non-negative")
            mass = float(np.trapezoid(ds, xs))
            if abs(mass - 1.0) > 1e-9:
                raise ValidationError(f"tabulated weight has mass {mass}, expected 1")
            object.__setattr__(self, "abscissae", xs)
            object.__setattr__(self, "densities", ds)
            seg = 0.5 * (ds[1:] + ds[:-1]) * np.diff(xs)
            object.__setattr__(self, "_knot_cdf", np.concatenate(([0.0], np.cumsum(seg))))
        else:
            raise ValidationError(f"unknown weight kind {kind!r}")

    @classmethod
    def delta(cls, center: float) -> "WeightFunction":
        return cls("delta", (center,))

    @classmethod
    def boxcar(cls, lo: float, hi: float) -> "WeightFunction":
        return cls("boxcar", (lo, hi))

    @classmethod
    def gaussian(cls, center: float, width: float) -> "WeightFunction":
        return cls("gaussian", (center, width))

    @classmethod
    def tabulated(cls, abscissae, densities, normalize: bool = False) -> "WeightFunction":
        """Tabulated density, linearly interpolated between knots and zero outside.

        With ``normalize=True`` a table whose mass is within 1% of unity is
        rescaled; anything further off is rejected.
        """
        xs = np.asarray(abscissae, dtype=float)
        ds = np.asarray(densities, dtype=float)
        if normalize and xs.size >= 2 and xs.shape == ds.shape:
            mass = float(np.trapezoid(ds, xs))
            if not abs(mass - 1.0) <= 0.01:
                raise ValidationError(
                    f"tabulated weight mass {mass:.6g} is not within 1% of unity"
                )
            ds = ds / mass
        return cls("tabulated", (), xs, ds)

    @property
    def center(self) -> float:
        if self.kind in ("delta", "gaussian"):
            return self.params[0]
        if self.kind == "boxcar":
            return 0.5 * (self.params[0] + self.params[1])
        # mean of the piecewise-linear density, exact per segment
        xs, ds = self.abscissae, self.densities
        h = np.diff(xs)
        d0, d1 = ds[:-1], ds[1:]
        return float(np.sum(h * (xs[:-1] * (2 * d0 + d1) + xs[1:] * (d0 + 2 * d1)) / 6.0))

    def cdf(self, z):
        """Mass of the weight at or below ``z`` (vectorized over ``z``)."""
        z = np.asarray(z, dtype=float)
        if self.kind == "delta":
            return (self.params[0] <= z).astype(float)
        if self.kind == "boxcar":
            lo, hi = self.params
            return np.clip((z - lo) / (hi - lo), 0.0, 1.0)
        if self.kind == "gaussian":
            mu, w = self.params
            return ndtr((z - mu) / w)
        xs, ds, knots = self.abscissae, self.densities, self._knot_cdf
        k = np.clip(np.searchsorted(xs, z, side="right") - 1, 0, xs.size - 2)
        t = np.clip(z - xs[k], 0.0, xs[k + 1] - xs[k])
        slope = (ds[k + 1] - ds[k]) / (xs[k + 1] - xs[k])
        out = knots[k] + ds[k] * t + 0.5 * slope * t * t
        out = np.where(z < xs[0], 0.0, out)
        return np.where(z >= xs[-1], knots[-1], out)


@dataclass(frozen=True)
class WeightedDatum:
    y: float
    x: float
    sigma: float
    weight: WeightFunction

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"sigma must be positive, got {self.sigma}")


# --------------------------------------------------------------------------
# event lists


def to_indicator(e: EventSeries) -> IndicatorVector:
    bits = np.zeros(e.span_m, dtype=np.uint8)
    bits[e.ticks] = 1
    return IndicatorVector(bits)


def _text_lines(source) -> list[str]:
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif isinstance(source, str):
        raw = source.encode()
    else:
        raw = source.read()
        if isinstance(raw, str):
            raw = raw.encode()
    try:
        return raw.decode("utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not UTF-8: {exc}") from None


def load_events(source, m: int | None = None, fmt: str = "lines") -> EventSeries:
    """Parse an event list from a byte stream (or bytes).

    ``fmt="lines"`` reads one integer per line; ``fmt="csv"`` reads the first
    column of a CSV, skipping a non-numeric header row. ``# M=<int>`` comment
    lines give the span; ``m`` supplies or cross-checks it.
    """
    if fmt not in ("lines", "csv"):
        raise ValidationError(f"unknown event format {fmt!r}")
    header_m = None
    ticks: list[int] = []
    lines: list[int] = []
    for lineno, line in enumerate(_text_lines(source), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            hit = _M_HEADER.match(s)
            if hit:
                try:
                    header_m = int(hit.group(1))
                except ValueError:
                    raise ParseError(f"line {lineno}: bad M header {s!r}") from None
            continue
        token = s.split(",")[0].strip() if fmt == "csv" else s
        try:
            value = int(token)
        except ValueError:
            if fmt == "csv" and not ticks and not lines:
                # header row
                lines.append(-lineno)
                continue
            raise ParseError(f"line {lineno}: not an integer: {token!r}") from None
        ticks.append(value)
        lines.append(lineno)
    if m is not None and header_m is not None and int(m) != header_m:
        raise ValidationError(f"M={m} conflicts with file header M={header_m}")
    span = m if m is not None else header_m
    if span is None:
        raise ValidationError("span M missing: add a '# M=<int>' header or pass M explicitly")
    lines = [ln for ln in lines if ln > 0]
    for i in range(1, len(ticks)):
        if ticks[i] == ticks[i - 1]:
            raise DuplicateTickError(f"line {lines[i]}: duplicate tick {ticks[i]}")
        if ticks[i] < ticks[i - 1]:
            raise ValidationError(
                f"line {lines[i]}: tick {ticks[i]} is smaller than preceding tick {ticks[i - 1]}"
            )
    for t, ln in zip(ticks, lines):
        if t < 0 or t >= span:
            raise RangeError(f"line {ln}: tick {t} outside [0, {span - 1}]")
    return EventSeries(np.array(ticks, dtype=np.int64), span)


def dump_events(e: EventSeries) -> bytes:
    out = [f"# M={e.span_m}"]
    out.extend(str(int(t)) for t in e.ticks)
    return ("\n".join(out) + "\n").encode()


def read_events(path, m: int | None = None, fmt: str | None = None) -> EventSeries:
    if fmt is None:
        fmt = "csv" if str(path).lower().endswith(".csv") else "lines"
    with open(path, "rb") as fh:
        return load_events(fh, m=m, fmt=fmt)


def write_events(path, e: EventSeries) -> None:
    Path(path).write_bytes(dump_events(e))


# --------------------------------------------------------------------------
# sampled series


def _csv_rows(source, required: Sequence[str]) -> tuple[list[dict], int]:
    text = "\n".join(_text_lines(source))
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise ParseError("empty CSV input")
    names = [f.strip() for f in reader.fieldnames]
    missing = [c for c in required if c not in names]
    if missing:
        raise ParseError(f"CSV header missing columns {missing}; got {names}")
    reader.fieldnames = names
    return list(reader), len(names)


def _float(row: dict, key: str, lineno: int) -> float:
    try:
        return float(row[key])
    except (TypeError, ValueError):
        raise ParseError(f"line {lineno}: column {key!r} is not a number: {row[key]!r}") from None


def load_sampled(source) -> SampledSeries:
    """Read a ``t,y,sigma`` CSV; ``t`` must be evenly spaced to 1e-9 relative."""
    rows, _ = _csv_rows(source, ("t", "y", "sigma"))
    if not rows:
        raise ValidationError("sampled series has no rows")
    t = np.array([_float(r, "t", i + 2) for i, r in enumerate(rows)])
    y = np.array([_float(r, "y", i + 2) for i, r in enumerate(rows)])
    s = np.array([_float(r, "sigma", i + 2) for i, r in enumerate(rows)])
    bad = np.flatnonzero(~(s > 0))
    if bad.size:
        raise ValidationError(f"line {bad[0] + 2}: sigma must be positive, got {s[bad[0]]}")
    if t.size == 1:
        dt = 1.0
    else:
        dt = (t[-1] - t[0]) / (t.size - 1)
        if not dt > 0:
            raise ValidationError("t column must be increasing")
        dev = np.max(np.abs(np.diff(t) - dt))
        if dev > 1e-9 * abs(dt):
            raise ValidationError(
                f"t column is not evenly spaced: max step deviation {dev:.3g} (dt={dt:.6g})"
            )
    return SampledSeries(y, s, dt)


def dump_sampled(s: SampledSeries, t0: float = 0.0) -> bytes:
    buf = io.StringIO()
    buf.write("t,y,sigma\n")
    for i, (v, sg) in enumerate(zip(s.values, s.sigmas)):
        buf.write(f"{t0 + i * s.dt!r},{float(v)!r},{float(sg)!r}\n")
    return buf.getvalue().encode()


def read_sampled(path) -> SampledSeries:
    with open(path, "rb") as fh:
        return load_sampled(fh)


def write_sampled(path, s: SampledSeries) -> None:
    Path(path).write_bytes(dump_sampled(s))


# --------------------------------------------------------------------------
# weighted data


def _load_tabulated(path) -> WeightFunction:
    try:
        with open(path) as fh:
            doc = json.load(fh)
        xs, ds = doc["abscissae"], doc["densities"]
    except FileNotFoundError:
        raise ValidationError(f"tabulated weight file not found: {path}") from None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"bad tabulated weight file {path}: {exc}") from None
    return WeightFunction.tabulated(xs, ds, normalize=True)


def load_weighted(source, base_dir=None) -> list[WeightedDatum]:
    """Read ``x,y,sigma,wkind,w1,w2`` rows.

    ``wkind`` is ``delta`` (w1 = center, defaults to x), ``boxcar`` (w1, w2 = lo, hi),
    ``gaussian`` (w1, w2 = center, width) or ``tabulated`` (w1 = path to a JSON
    sidecar with ``abscissae`` and ``densities``, relative to ``base_dir``).
    """
    rows, _ = _csv_rows(source, ("x", "y", "sigma", "wkind", "w1", "w2"))
    base = Path(base_dir) if base_dir is not None else Path(".")
    data = []
    for i, row in enumerate(rows):
        lineno = i + 2
        x = _float(row, "x", lineno)
        y = _float(row, "y", lineno)
        sigma = _float(row, "sigma", lineno)
        if not sigma > 0:
            raise ValidationError(f"line {lineno}: sigma must be positive, got {sigma}")
        kind = (row["wkind"] or "").strip().lower()
        w1 = (row["w1"] or "").strip()
        w2 = (row["w2"] or "").strip()
        try:
            if kind == "delta":
                w = WeightFunction.delta(float(w1) if w1 else x)
            elif kind == "boxcar":
                w = WeightFunction.boxcar(float(w1), float(w2))
            elif kind == "gaussian":
                w = WeightFunction.gaussian(float(w1), float(w2))
            elif kind == "tabulated":
                w = _load_tabulated(base / w1)
            else:
                raise ParseError(f"unknown wkind {kind!r}")
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise type(exc)(f"line {lineno}: {exc}") from None
            raise ParseError(f"line {lineno}: bad weight parameters ({w1!r}, {w2!r})") from None
        data.append(WeightedDatum(y=y, x=x, sigma=sigma, weight=w))
    return data


def read_weighted(path) -> list[WeightedDatum]:
    with open(path, "rb") as fh:
        return load_weighted(fh, base_dir=Path(path).parent)


def write_weighted(path, data: Iterable[WeightedDatum]) -> None:
    """Write weighted data; tabulated weights go to ``<stem>.w<n>.json`` sidecars."""
    path = Path(path)
    buf = io.StringIO()
    buf.write("x,y,sigma,wkind,w1,w2\n")
    for n, d in enumerate(data):
        w = d.weight
        if w.kind == "delta":
            w1, w2 = repr(w.params[0]), ""
        elif w.kind in ("boxcar", "gaussian"):
            w1, w2 = repr(w.params[0]), repr(w.params[1])
        else:
            side = f"{path.stem}.w{n}.json"
            doc = {"abscissae": w.abscissae.tolist(), "densities": w.densities.tolist()}
            (path.parent / side).write_text(json.dumps(doc))
            w1, w2 = side, ""
        buf.write(f"{d.x!r},{d.y!r},{d.sigma!r},{w.kind},{w1},{w2}\n")
    path.write_text(buf.getvalue())
