"""Cylinder events: per-coordinate interval unions plus optional thinning marks.

Compact text grammar (used by the CLI and config files)::

    0:(0.5,inf);2:[-1,0.3)|(1,2];marks=101;len=4

Items are ``;``-separated.  ``i:<union>`` constrains coordinate ``i`` to a
``|``-separated union of intervals with explicit bracket types; ``inf`` and
``-inf`` are accepted as endpoints.  ``marks=`` gives the 0/1 thinning marks
and ``len=`` the window length (otherwise inferred from the largest index or
the marks).  Unconstrained coordinates range over the whole line.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .params import ParameterError


@dataclass(frozen=True, order=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = False

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ParameterError("interval endpoints must not be NaN")
        # infinite endpoints are never attained
        if math.isinf(self.lo):
            object.__setattr__(self, "lo_closed", False)
        if math.isinf(self.hi):
            object.__setattr__(self, "hi_closed", False)

    @property
    def empty(self) -> bool:
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and not (self.lo_closed and self.hi_closed)

    def contains(self, x: np.ndarray) -> np.ndarray:
        lower = x >= self.lo if self.lo_closed else x > self.lo
        upper = x <= self.hi if self.hi_closed else x < self.hi
        return lower & upper

    def __str__(self) -> str:
        return f"{'[' if self.lo_closed else '('}{_fmt(self.lo)},{_fmt(self.hi)}{']' if self.hi_closed else ')'}"


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


FULL_LINE = Interval(-math.inf, math.inf, False, False)


def _touches(a: Interval, b: Interval) -> bool:
    """True when a (which starts no later than b) overlaps or abuts b with no gap."""
    if b.lo < a.hi:
        return True
    return b.lo == a.hi and (a.hi_closed or b.lo_closed)


def normalize(intervals) -> tuple[Interval, ...]:
    """Sort, drop empties and merge overlapping or abutting pieces."""
    pieces = sorted(
        (iv for iv in intervals if not iv.empty),
        key=lambda iv: (iv.lo, not iv.lo_closed),
    )
    merged: list[Interval] = []
    for iv in pieces:
        if merged and _touches(merged[-1], iv):
            last = merged[-1]
            if iv.hi > last.hi or (iv.hi == last.hi and iv.hi_closed and not last.hi_closed):
                merged[-1] = Interval(last.lo, iv.hi, last.lo_closed, iv.hi_closed)
        else:
            merged.append(iv)
    return tuple(merged)


def union_contains(union: tuple[Interval, ...], x: np.ndarray) -> np.ndarray:
    hit = np.zeros(np.shape(x), dtype=bool)
    for iv in union:
        hit |= iv.contains(x)
    return hit


def complement(union: tuple[Interval, ...]) -> tuple[Interval, ...]:
    out = []
    lo, lo_closed = -math.inf, False
    for iv in union:
        out.append(Interval(lo, iv.lo, lo_closed, not iv.lo_closed))
        lo, lo_closed = iv.hi, not iv.hi_closed
    out.append(Interval(lo, math.inf, lo_closed, False))
    return normalize(out)


@dataclass(frozen=True)
class CylinderSpec:
    """Event {W[0..len-1] in A_0 x ... x A_{len-1}, marks == v}."""

    window_length: int
    constraints: tuple[tuple[Interval, ...], ...]
    marks: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.window_length < 1:
            raise ParameterError("window_length must be >= 1")
        cons = tuple(normalize(c) for c in self.constraints)
        if len(cons) != self.window_length:
            raise ParameterError(
                f"{len(cons)} coordinate constraints for a window of length {self.window_length}"
            )
        object.__setattr__(self, "constraints", cons)
        if self.marks is not None:
            marks = tuple(int(v) for v in self.marks)
            if len(marks) != self.window_length or any(v not in (0, 1) for v in marks):
                raise ParameterError("marks must be a 0/1 vector matching the window length")
            object.__setattr__(self, "marks", marks)

    @classmethod
    def unconstrained(cls, window_length: int, marks=None) -> "CylinderSpec":
        return cls(window_length, ((FULL_LINE,),) * window_length, marks)

    @classmethod
    def from_intervals(cls, window_length: int, intervals: dict[int, list[Interval] | Interval], marks=None):
        cons = [(FULL_LINE,)] * window_length
        for idx, ivs in intervals.items():
            if not 0 <= idx < window_length:
                raise ParameterError(f"coordinate {idx} outside window of length {window_length}")
            cons[idx] = (ivs,) if isinstance(ivs, Interval) else tuple(ivs)
        return cls(window_length, tuple(cons), marks)

    @classmethod
    def parse(cls, text: str, window_length: int | None = None) -> "CylinderSpec":
        return parse_cylinder(text, window_length)

    def is_unconstrained(self) -> bool:
        return self.marks is None and all(c == (FULL_LINE,) for c in self.constraints)

    def hits(self, values: np.ndarray, marks: np.ndarray | None = None) -> np.ndarray:
        """Row-wise event indicator for a ``(reps, window_length)`` sample."""
        if values.shape[1] != self.window_length:
            raise ParameterError(
                f"sample window has length {values.shape[1]}, spec expects {self.window_length}"
            )
        hit = np.ones(values.shape[0], dtype=bool)
        for k, union in enumerate(self.constraints):
            if union != (FULL_LINE,):
                hit &= union_contains(union, values[:, k])
        if self.marks is not None:
            if marks is None:
                raise ParameterError("spec constrains thinning marks but the process has none")
            hit &= (marks == np.asarray(self.marks, dtype=marks.dtype)).all(axis=1)
        return hit

    def complement_at(self, index: int) -> "CylinderSpec":
        """Same spec with coordinate ``index`` constrained to the complement set."""
        cons = list(self.constraints)
        cons[index] = complement(cons[index])
        return CylinderSpec(self.window_length, tuple(cons), self.marks)

    def __str__(self) -> str:
        items = [
            # an empty union renders as the empty open interval (0,0)
            f"{k}:" + ("|".join(str(iv) for iv in union) or "(0.0,0.0)")
            for k, union in enumerate(self.constraints)
            if union != (FULL_LINE,)
        ]
        if self.marks is not None:
            items.append("marks=" + "".join(map(str, self.marks)))
        items.append(f"len={self.window_length}")
        return ";".join(items)


_INTERVAL = re.compile(r"^\s*([\[(])\s*([^,\s]+)\s*,\s*([^\])\s]+)\s*([\])])\s*$")


def _endpoint(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParameterError(f"bad interval endpoint {token!r}") from None


def parse_interval(text: str) -> Interval:
    m = _INTERVAL.match(text)
    if not m:
        raise ParameterError(f"bad interval {text!r}; expected e.g. (0.5,inf) or [-1,0.3)")
    return Interval(_endpoint(m.group(2)), _endpoint(m.group(3)), m.group(1) == "[", m.group(4) == "]")


def parse_cylinder(text: str, window_length: int | None = None) -> CylinderSpec:
    intervals: dict[int, list[Interval]] = {}
    marks = None
    length = window_length
    for item in filter(None, (s.strip() for s in text.split(";"))):
        if item.startswith("marks="):
            bits = item[len("marks="):].strip()
            if not bits or set(bits) - {"0", "1"}:
                raise ParameterError(f"marks must be a 0/1 string, got {bits!r}")
            marks = tuple(int(b) for b in bits)
        elif item.startswith("len="):
            try:
                length = int(item[len("len="):])
            except ValueError:
                raise ParameterError(f"bad window length in {item!r}") from None
        else:
            idx, sep, rest = item.partition(":")
            if not sep or not idx.strip().isdigit():
                raise ParameterError(f"bad cylinder item {item!r}; expected i:(a,b]")
            intervals.setdefault(int(idx), []).extend(parse_interval(p) for p in rest.split("|"))
    if length is None:
        candidates = [max(intervals) + 1] if intervals else []
        if marks is not None:
            candidates.append(len(marks))
        if not candidates:
            raise ParameterError("cannot infer window length from an empty spec; add len=")
        length = max(candidates)
    return CylinderSpec.from_intervals(length, intervals, marks)
