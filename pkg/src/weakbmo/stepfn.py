"""Step functions on [0, 1] and on the circle R/Z, with exact averages."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .geometry import PlanePoint

MIN_AVERAGING_LENGTH = 1e-13
SUM_TOL = 1e-9


class Space(Enum):
    INTERVAL = "interval"
    CIRCLE = "circle"


class ValidationError(ValueError):
    """Bad step-function data; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _compensated_cumsum(x: np.ndarray) -> np.ndarray:
    """Cumulative sums along axis 0 with Neumaier compensation, starting at 0."""
    out = np.zeros((len(x) + 1,) + x.shape[1:])
    s = np.zeros(x.shape[1:])
    c = np.zeros(x.shape[1:])
    for i, v in enumerate(x):
        t = s + v
        c += np.where(np.abs(s) >= np.abs(v), (s - t) + v, (v - t) + s)
        s = t
        out[i + 1] = s + c
    return out


class StepFunction:
    """Piecewise-constant function of total length one.

    ``values`` has shape ``(n,)`` for real-valued functions or ``(n, d)`` for
    vector-valued ones (``d = 2`` for the lifted pair ``(phi, phi^2)``).
    """

    def __init__(self, lengths: Sequence[float], values, space: Space | str = Space.INTERVAL):
        space = Space(space)
        lengths = np.asarray(lengths, dtype=float)
        values = np.asarray(values, dtype=float)
        if lengths.ndim != 1 or len(lengths) == 0:
            raise ValidationError("pieces", "need at least one piece")
        if values.shape[0] != len(lengths):
            raise ValidationError("pieces", "lengths and values differ in count")
        for i, ell in enumerate(lengths):
            if not (ell > 0) or not math.isfinite(ell):
                raise ValidationError(f"pieces[{i}].length", f"must be positive and finite, got {ell}")
        for i, v in enumerate(values):
            if not np.all(np.isfinite(v)):
                raise ValidationError(f"pieces[{i}].value", f"must be finite, got {v}")
        total = math.fsum(lengths)
        # slack for decimal literals such as 0.999999999
        if abs(total - 1.0) > SUM_TOL + 8 * np.finfo(float).eps:
            raise ValidationError("pieces", f"lengths sum to {total!r}, expected 1")
        lengths = lengths / total
        self.space = space
        self.lengths = lengths
        self.values = values
        self.breaks = _compensated_cumsum(lengths)
        self.breaks[-1] = 1.0
        self.prefix = _compensated_cumsum(lengths.reshape((-1,) + (1,) * (values.ndim - 1)) * values)
        self.lengths.setflags(write=False)
        self.values.setflags(write=False)

    # -- basic structure ----------------------------------------------------

    @property
    def n_pieces(self) -> int:
        return len(self.lengths)

    @property
    def is_real(self) -> bool:
        return self.values.ndim == 1

    def __repr__(self):
        return f"StepFunction({self.space.value}, {self.n_pieces} pieces)"

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (self.space == other.space and np.array_equal(self.lengths, other.lengths)
                and np.array_equal(self.values, other.values))

    def piece_index(self, t: float) -> int:
        """Index of the piece containing ``t`` in [0, 1] (right-continuous)."""
        i = int(np.searchsorted(self.breaks, t, side="right")) - 1
        return min(max(i, 0), self.n_pieces - 1)

    def __call__(self, t: float):
        if self.space is Space.CIRCLE:
            t = t - math.floor(t)
        return self.values[self.piece_index(t)]

    # -- integrals ----------------------------------------------------------

    def _integral01(self, a: float, b: float):
        """Integral over ``[a, b]`` with ``0 <= a <= b <= 1``, exact on single pieces."""
        ia, ib = self.piece_index(a), self.piece_index(b)
        if ib > ia and b == self.breaks[ib]:
            ib -= 1
        if ia == ib:
            return (b - a) * self.values[ia]
        head = (self.breaks[ia + 1] - a) * self.values[ia]
        mid = self.prefix[ib] - self.prefix[ia + 1]
        tail = (b - self.breaks[ib]) * self.values[ib]
        return head + mid + tail

    def integral(self, a: float, b: float):
        if self.space is Space.INTERVAL:
            return self._integral01(a, b)
        k = math.floor(a)
        a0 = a - k
        end = a0 + (b - a)
        full = math.floor(end)
        if full == 0:
            return self._integral01(a0, end)
        rest = end - full
        total = self.prefix[-1]
        return self._integral01(a0, 1.0) + (full - 1) * total + self._integral01(0.0, rest)

    def average(self, a: float, b: float):
        """Average over ``[a, b]``; the circle is unrolled periodically."""
        if not b > a:
            raise ValueError(f"degenerate interval [{a}, {b}]")
        if b - a < MIN_AVERAGING_LENGTH:
            raise ValueError(f"interval [{a}, {b}] too short to average accurately")
        if self.space is Space.INTERVAL and (a < 0 or b > 1):
            raise ValueError(f"interval [{a}, {b}] not inside [0, 1]")
        ia = self.piece_index(a - math.floor(a)) if self.space is Space.CIRCLE else self.piece_index(a)
        # single-piece intervals return the value itself
        if self.space is Space.INTERVAL and b <= self.breaks[ia + 1]:
            return self.values[ia].copy() if self.values.ndim > 1 else float(self.values[ia])
        out = self.integral(a, b) / (b - a)
        return out if self.values.ndim > 1 else float(out)

    def mean(self):
        out = self.prefix[-1]
        return out.copy() if self.values.ndim > 1 else float(out)

    def moments(self, a: float, b: float) -> tuple[float, float]:
        """``(<phi>, <phi^2>)`` over ``[a, b]`` for a real-valued function."""
        if not self.is_real:
            raise TypeError("moments need a real-valued step function")
        x = self.lifted.average(a, b)
        return float(x[0]), float(x[1])

    @property
    def lifted(self) -> "StepFunction":
        cached = getattr(self, "_lifted", None)
        if cached is None:
            cached = lift(self)
            self._lifted = cached
        return cached

    def restrict(self, a: float, b: float) -> "StepFunction":
        """The piece list over ``[a, b]`` rescaled to unit length (interval space)."""
        ia, ib = self.piece_index(a), self.piece_index(b)
        if ib > ia and b == self.breaks[ib]:
            ib -= 1
        cuts = [a] + list(self.breaks[ia + 1:ib + 1]) + [b]
        lengths = np.diff(cuts) / (b - a)
        keep = lengths > 0
        return StepFunction(lengths[keep], self.values[ia:ib + 1][keep], Space.INTERVAL)

    # -- serialisation ------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        vals = self.values.tolist()
        return {
            "space": self.space.value,
            "pieces": [{"length": float(ell), "value": v} for ell, v in zip(self.lengths, vals)],
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "StepFunction":
        if not isinstance(obj, dict):
            raise ValidationError("$", "expected an object")
        try:
            space = Space(obj.get("space", "interval"))
        except ValueError:
            raise ValidationError("space", f"unknown space {obj.get('space')!r}") from None
        pieces = obj.get("pieces")
        if not isinstance(pieces, list) or not pieces:
            raise ValidationError("pieces", "expected a non-empty list")
        lengths, values = [], []
        for i, piece in enumerate(pieces):
            if not isinstance(piece, dict) or "length" not in piece or "value" not in piece:
                raise ValidationError(f"pieces[{i}]", "expected {length, value}")
            try:
                lengths.append(float(piece["length"]))
            except (TypeError, ValueError):
                raise ValidationError(f"pieces[{i}].length", "not a number") from None
            try:
                values.append(np.asarray(piece["value"], dtype=float))
            except (TypeError, ValueError):
                raise ValidationError(f"pieces[{i}].value", "not a number") from None
        return cls(lengths, np.array(values), space)

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "StepFunction":
        return cls.from_json(json.loads(text))


def constant(c: float, space: Space | str = Space.INTERVAL) -> StepFunction:
    return StepFunction([1.0], [c], space)


def lift(f: StepFunction) -> StepFunction:
    """Map ``phi`` to the plane-valued ``psi = (phi, phi^2)``."""
    if not f.is_real:
        raise TypeError("lift expects a real-valued step function")
    v = f.values
    return StepFunction(f.lengths, np.column_stack([v, v * v]), f.space)


def gamma(psi: StepFunction, t: float) -> PlanePoint:
    """Prefix average ``(<phi>_[0,t], <phi^2>_[0,t])`` of a lifted function."""
    if not t > 0:
        raise ValueError(f"gamma needs t > 0, got {t}")
    x = psi.average(0.0, t)
    return PlanePoint(float(x[0]), float(x[1]))


def gamma_samples(psi: StepFunction, ts: Iterable[float]) -> list[tuple[float, float, float]]:
    return [(t, *gamma(psi, t)) for t in ts]


def write_gamma_csv(path: str | Path, samples: Iterable[tuple[float, float, float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x1", "x2"])
        for t, x1, x2 in samples:
            w.writerow([repr(float(t)), repr(float(x1)), repr(float(x2))])
