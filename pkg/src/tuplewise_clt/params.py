from __future__ import annotations

from dataclasses import dataclass

from .rng import MAX_SEED

INT64_MAX = 2**63 - 1


class ParameterError(ValueError):
    """An argument violates an operation's precondition."""


class NumericError(ArithmeticError):
    """A Monte Carlo accumulation produced a non-finite value."""


def check_L(L: int) -> int:
    if not isinstance(L, int) or isinstance(L, bool) or L < 6 or L % 2:
        raise ParameterError(f"L must be an even integer >= 6, got {L!r}")
    return L


def check_level(L: int, level: int) -> int:
    if not isinstance(level, int) or isinstance(level, bool) or level < 0:
        raise ParameterError(f"level must be a non-negative integer, got {level!r}")
    if L**level > INT64_MAX:
        raise ParameterError(f"L**level = {L}**{level} overflows a signed 64-bit integer")
    return level


@dataclass(frozen=True)
class ConstructionParams:
    """Everything that pins down the samplers: block arity, level, thinning
    probability and seed."""

    L: int = 6
    n: int = 1
    p: float = 0.5
    seed: int = 0

    def __post_init__(self):
        check_L(self.L)
        check_level(self.L, self.n)
        if not 0.0 < self.p < 1.0:
            raise ParameterError(f"p must lie in (0, 1), got {self.p!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @property
    def block_length(self) -> int:
        return self.L**self.n

    def at_level(self, n: int) -> "ConstructionParams":
        return ConstructionParams(self.L, n, self.p, self.seed)
