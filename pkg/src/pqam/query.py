"""Query and result records shared by the simulator and the analytic oracle."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .errors import InvalidInput
from .patterns import Pattern

UNKNOWN = "?"


@dataclass(frozen=True)
class Query:
    """An input pattern, optionally masked and/or with a remapped distance table.

    ``input`` may carry ``?`` at positions the mask marks unknown; those get
    filled from an RNG before the circuit runs.  If ``input`` has ``?`` and
    no mask is given, the mask is derived from the ``?`` positions.

    ``rescale_mask`` switches the masked phase unit from pi/2n to pi/2q.
    """

    input: str
    mask: Optional[str] = None
    f_table: Optional[tuple[int, ...]] = None
    rescale_mask: bool = False

    def __post_init__(self):
        bits = self.input
        if not isinstance(bits, str) or not bits:
            raise InvalidInput("query input must be a non-empty string")
        if any(ch not in "01" + UNKNOWN for ch in bits):
            raise InvalidInput(f"query input {bits!r} may contain only '0', '1' and '?'")
        n = len(bits)
        mask = self.mask
        if mask is None and UNKNOWN in bits:
            mask = "".join("0" if ch == UNKNOWN else "1" for ch in bits)
            object.__setattr__(self, "mask", mask)
        if mask is not None:
            if len(mask) != n or any(ch not in "01" for ch in mask):
                raise InvalidInput(f"mask {mask!r} must be a bit string of length {n}")
            if "1" not in mask:
                raise InvalidInput("mask must mark at least one known bit")
            for j, (ch, known) in enumerate(zip(bits, mask)):
                if ch == UNKNOWN and known == "1":
                    raise InvalidInput(f"input position {j} is '?' but the mask marks it known")
        if self.f_table is not None:
            table = tuple(int(v) for v in self.f_table)
            object.__setattr__(self, "f_table", table)
            check_f_table(table, n)
            if self.rescale_mask:
                raise InvalidInput("f_table cannot be combined with rescale_mask")

    @property
    def n(self) -> int:
        return len(self.input)

    @property
    def known_positions(self) -> list[int]:
        if self.mask is None:
            return list(range(self.n))
        return [j for j, ch in enumerate(self.mask) if ch == "1"]

    @property
    def phase_denominator(self) -> int:
        """``n`` in pi/2n; the number of known bits when ``rescale_mask`` is set."""
        return len(self.known_positions) if self.rescale_mask else self.n

    def resolve(self, rng: np.random.Generator | None) -> str:
        """Input with every ``?`` replaced by a random bit (no draws if there are none)."""
        holes = [j for j, ch in enumerate(self.input) if ch == UNKNOWN]
        if not holes:
            return self.input
        if rng is None:
            raise InvalidInput("input has unknown bits; an RNG is needed to fill them")
        fill = rng.integers(0, 2, size=len(holes))
        chars = list(self.input)
        for j, b in zip(holes, fill):
            chars[j] = "1" if b else "0"
        return "".join(chars)


def check_f_table(table: tuple[int, ...], n: int) -> None:
    if len(table) != n + 1:
        raise InvalidInput(f"f_table needs n+1 = {n + 1} entries, got {len(table)}")
    if table[0] != 0 or table[n] != n:
        raise InvalidInput(f"f_table must satisfy f(0)=0 and f(n)=n, got f(0)={table[0]}, f(n)={table[n]}")
    if any(not 0 <= v <= n for v in table):
        raise InvalidInput(f"f_table entries must lie in [0, {n}]")


@dataclass
class DistributionReport:
    n: int
    p: int
    input: str
    mask: Optional[str]
    f_table: Optional[tuple[int, ...]]
    p0: float
    p1: float
    per_pattern: dict[Pattern, float]
    source: Literal["gate_level", "analytic"]
    filled_input: Optional[str] = None

    @property
    def recognizable(self) -> bool:
        return bool(self.per_pattern)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "input": self.input,
            "mask": self.mask,
            "f_table": list(self.f_table) if self.f_table is not None else None,
            "p0": self.p0,
            "p1": self.p1,
            "per_pattern": dict(self.per_pattern),
            "source": self.source,
            "filled_input": self.filled_input,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def report_deviation(a: DistributionReport, b: DistributionReport) -> float:
    """Largest absolute difference in p0, p1 or any per-pattern probability."""
    dev = max(abs(a.p0 - b.p0), abs(a.p1 - b.p1))
    for key in set(a.per_pattern) | set(b.per_pattern):
        dev = max(dev, abs(a.per_pattern.get(key, 0.0) - b.per_pattern.get(key, 0.0)))
    return dev


@dataclass(frozen=True)
class RetrievalOutcome:
    control_bit: int
    retrieved: Optional[Pattern]
    trial_index: int


@dataclass(frozen=True)
class RecognitionResult:
    recognized: bool
    trials_used: int
    outcome: Optional[RetrievalOutcome] = None

    def to_dict(self) -> dict:
        return {
            "recognized": self.recognized,
            "trials_used": self.trials_used,
            "retrieved": self.outcome.retrieved if self.outcome else None,
            "trial_index": self.outcome.trial_index if self.outcome else None,
        }
