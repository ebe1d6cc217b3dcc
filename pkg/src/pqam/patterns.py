"""Binary patterns, pattern sets and the pattern file format."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import InvalidInput

Pattern = str


def check_pattern(bits: str, n: int | None = None) -> str:
    if not isinstance(bits, str) or not bits:
        raise InvalidInput(f"pattern must be a non-empty bit string, got {bits!r}")
    if any(ch not in "01" for ch in bits):
        raise InvalidInput(f"pattern {bits!r} must contain only '0' and '1'")
    if n is not None and len(bits) != n:
        raise InvalidInput(f"pattern {bits!r} has length {len(bits)}, expected {n}")
    return bits


@dataclass(frozen=True)
class PatternSet:
    """Ordered list of ``p`` distinct length-``n`` patterns."""

    n: int
    patterns: tuple[Pattern, ...]

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(self.patterns))
        if self.n < 1:
            raise InvalidInput(f"pattern length must be >= 1, got {self.n}")
        if not self.patterns:
            raise InvalidInput("a pattern set needs at least one pattern")
        seen: dict[str, int] = {}
        for k, bits in enumerate(self.patterns):
            check_pattern(bits, self.n)
            if bits in seen:
                raise InvalidInput(
                    f"duplicate pattern {bits!r} at positions {seen[bits]} and {k}"
                )
            seen[bits] = k
        # p <= 2^n follows from distinctness

    @classmethod
    def from_list(cls, patterns: Iterable[str]) -> "PatternSet":
        patterns = tuple(patterns)
        if not patterns:
            raise InvalidInput("a pattern set needs at least one pattern")
        return cls(len(patterns[0]), patterns)

    @property
    def p(self) -> int:
        return len(self.patterns)

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)


class PatternFileError(InvalidInput):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_patterns(text: str) -> PatternSet:
    """Parse pattern-file text: one bit string per line, ``#`` comments and blanks skipped."""
    patterns: list[str] = []
    first_seen: dict[str, int] = {}
    n = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if any(ch not in "01" for ch in line):
            raise PatternFileError(f"{line!r} is not a bit string", lineno)
        if n is None:
            n = len(line)
        elif len(line) != n:
            raise PatternFileError(f"pattern {line!r} has length {len(line)}, expected {n}", lineno)
        if line in first_seen:
            raise PatternFileError(
                f"duplicate pattern {line!r} (first seen on line {first_seen[line]})", lineno
            )
        first_seen[line] = lineno
        patterns.append(line)
    if not patterns:
        raise PatternFileError("no patterns found")
    return PatternSet(n, tuple(patterns))


def load_patterns(path: str | Path) -> PatternSet:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PatternFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise PatternFileError(f"{path} is not valid UTF-8") from exc
    return parse_patterns(text)


def format_patterns(pset: PatternSet) -> str:
    return "".join(bits + "\n" for bits in pset.patterns)
