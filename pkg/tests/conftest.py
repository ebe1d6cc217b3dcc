import numpy as np
import pytest

from pqam.patterns import PatternSet


def random_pattern_set(rng: np.random.Generator, n: int, p: int | None = None) -> PatternSet:
    if p is None:
        p = int(rng.integers(1, 2 ** n + 1))
    values = rng.choice(2 ** n, size=p, replace=False)
    return PatternSet(n, tuple(format(int(v), f"0{n}b") for v in values))


def random_bits(rng: np.random.Generator, n: int) -> str:
    return "".join(str(b) for b in rng.integers(0, 2, size=n))


def random_f_table(rng: np.random.Generator, n: int) -> tuple[int, ...]:
    inner = [int(v) for v in rng.integers(0, n + 1, size=n - 1)]
    return (0, *inner, n)


def random_state(rng: np.random.Generator, size: int) -> np.ndarray:
    v = rng.normal(size=size) + 1j * rng.normal(size=size)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
