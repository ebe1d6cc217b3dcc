"""Closed-form reference values for the memory, with no state-vector simulation.

Nothing here calls into the simulator except
:func:`brute_force_measurement_check`, which exists to compare against it.
Distances and trigonometry are evaluated independently of the circuit code
so that agreement between the two is evidence rather than tautology.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from .errors import InvalidInput
from .patterns import Pattern, PatternSet, check_pattern
from .query import DistributionReport, Query

UNRECOGNIZABLE_TOL = 1e-12


def hamming(a: Pattern, b: Pattern) -> int:
    if len(a) != len(b):
        raise InvalidInput(f"patterns {a!r} and {b!r} differ in length")
    return sum(1 for x, y in zip(a, b) if x != y)


def masked_hamming(a: str, b: str, known: list[int]) -> int:
    if len(a) != len(b):
        raise InvalidInput(f"patterns {a!r} and {b!r} differ in length")
    return sum(1 for j in known if a[j] != b[j])


def effective_distance(pattern: Pattern, query: Query) -> int:
    """Distance fed to the phase: masked Hamming distance, then ``f`` if given."""
    d = masked_hamming(query.input, pattern, query.known_positions)
    return query.f_table[d] if query.f_table is not None else d


def acceptance_amplitude(theta: int, denom: int) -> float:
    return math.cos(math.pi * theta / (2 * denom))


def analytic_report(pset: PatternSet, query: Query) -> DistributionReport:
    if query.n != pset.n:
        raise InvalidInput(f"input length {query.n} does not match pattern length {pset.n}")
    denom = query.phase_denominator
    weights = [acceptance_amplitude(effective_distance(pk, query), denom) ** 2 for pk in pset]
    p = pset.p
    p0 = math.fsum(weights) / p
    p1 = math.fsum(math.sin(math.pi * effective_distance(pk, query) / (2 * denom)) ** 2
                   for pk in pset) / p
    per_pattern: dict[str, float] = {}
    if p0 > UNRECOGNIZABLE_TOL:
        per_pattern = {pk: w / (p * p0) for pk, w in zip(pset, weights)}
    return DistributionReport(
        n=pset.n, p=p, input=query.input, mask=query.mask, f_table=query.f_table,
        p0=p0, p1=p1, per_pattern=per_pattern, source="analytic",
    )


def expected_memory(pset: PatternSet) -> np.ndarray:
    amps = np.zeros(2 ** pset.n, dtype=np.complex128)
    for bits in pset:
        amps[int(bits, 2)] = 1 / math.sqrt(pset.p)
    return amps


def expected_final_state(pset: PatternSet, query: Query) -> np.ndarray:
    """Closed-form post-circuit amplitudes over the ``(m, c)`` layout.

    Pattern ``k`` carries ``cos(phi_k)/sqrt(p)`` with c=0 and
    ``i*sin(phi_k)/sqrt(p)`` with c=1, ``phi_k = pi*theta_k/2n``.
    """
    denom = query.phase_denominator
    amps = np.zeros(2 ** (pset.n + 1), dtype=np.complex128)
    scale = 1 / math.sqrt(pset.p)
    for pk in pset:
        phi = math.pi * effective_distance(pk, query) / (2 * denom)
        base = int(pk, 2) * 2
        amps[base] = scale * math.cos(phi)
        amps[base + 1] = 1j * scale * math.sin(phi)
    return amps


@dataclass(frozen=True)
class WorstCaseScenario:
    n: int
    x: int
    isolated: Pattern
    set: PatternSet

    @property
    def p(self) -> int:
        return self.set.p


def worst_case_size(n: int, x: int) -> int:
    return 1 + sum(math.comb(n, k) for k in range(x + 1))


def worst_case_set(n: int, x: int, isolated: Pattern | None = None) -> WorstCaseScenario:
    """An isolated pattern plus every pattern at distance n, n-1, ..., n-x from it."""
    if n < 2 or not 1 <= x < n:
        raise InvalidInput(f"need 1 <= x < n, got n={n}, x={x}")
    isolated = check_pattern(isolated, n) if isolated is not None else "0" * n
    patterns = [isolated]
    for k in range(x + 1):
        group = []
        for flips in combinations(range(n), n - k):
            chars = ["0"] * n
            for j in flips:
                chars[j] = "1"
            group.append("".join(chars))
        patterns.extend(sorted(group))
    mask = int(isolated, 2)
    patterns = [patterns[0]] + [format(int(b, 2) ^ mask, f"0{n}b") for b in patterns[1:]]
    return WorstCaseScenario(n, x, isolated, PatternSet(n, tuple(patterns)))


def worst_case_p0(n: int, x: int) -> float:
    """Exact acceptance probability of the isolated pattern in its worst-case set."""
    p = worst_case_size(n, x)
    s = sum(math.comb(n, k) * math.cos(math.pi * (n - k) / (2 * n)) ** 2 for k in range(x + 1))
    return (1 + s) / p


def brute_force_measurement_check(pset: PatternSet, query: Query,
                                  simulate: Callable | None = None) -> float:
    """Max elementwise gap between the closed-form final state and a simulated one.

    ``simulate(pset, query)`` must return a state over the ``(m, c)`` layout;
    it defaults to the gate-level retrieval circuit.
    """
    if pset.n > 8:
        raise InvalidInput(f"brute-force check is limited to n <= 8, got n={pset.n}")
    if simulate is None:
        from .retrieval import run_circuit
        simulate = run_circuit
    state = simulate(pset, query)
    expected = expected_final_state(pset, query)
    return float(np.max(np.abs(state.amplitudes - expected)))
