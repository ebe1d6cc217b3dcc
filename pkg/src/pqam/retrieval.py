"""Probabilistic retrieval: distance-dependent phases and postselection on a control qubit.

The simulated state spans the memory register ``m`` (n qubits) and the
control qubit ``c``.  The input pattern stays classical, so the comparison
gates become classically conditioned NOTs.  ``path="reference"`` also
simulates an explicit input register ``i`` and is meant for cross-checks at
small ``n``.

Each trial re-prepares the memory from the pattern list instead of cloning
it.  The circuit before measurement is deterministic, so repeated trials
share one cached pre-measurement state; measurement never mutates it.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Optional

import numpy as np

from . import oracle
from . import statevec as sv
from .errors import InvalidInput, NumericalError
from .patterns import Pattern, PatternSet
from .query import (DistributionReport, Query, RecognitionResult, RetrievalOutcome,
                    check_f_table)
from .statevec import QuantumState, RegisterLayout
from .storage import StoragePath, store

CircuitPath = Literal["compact", "reference"]
PhaseMode = Literal["auto", "decomposed", "direct"]

REFERENCE_MAX_N = 6
RECOGNIZABLE_TOL = 1e-12


def _check_query(pset: PatternSet, query: Query) -> None:
    if query.n != pset.n:
        raise InvalidInput(f"input length {query.n} does not match pattern length {pset.n}")


def masked_phase_support(query: Query) -> list[int]:
    """Memory-qubit positions that receive distance phases under the query's mask."""
    if query.mask is None:
        raise InvalidInput("query has no mask")
    return query.known_positions


def distance_map(n: int, support: list[int]) -> np.ndarray:
    """Zero count over ``support`` for every value of an n-bit register.

    After the comparison gates a memory qubit reads 1 on a match, so this is
    the (masked) Hamming distance carried by each memory basis state.
    """
    values = np.arange(1 << n)
    d = np.zeros(1 << n, dtype=np.int64)
    for j in support:
        d += 1 - ((values >> (n - 1 - j)) & 1)
    return d


# --------------------------------------------------------------------------
# circuit pieces

def _comparison_gates(layout: RegisterLayout, bits: str, inverse: bool) -> list:
    m = layout.qubits("m")
    n = len(m)
    has_input = layout.has("i")
    gates = []
    js = range(n - 1, -1, -1) if inverse else range(n)
    for j in js:
        xor = []
        if has_input:
            xor = [((layout.qubit("i", j),), m[j])]
        elif bits[j] == "1":
            xor = [((), m[j])]
        flip = [((), m[j])]
        gates += (flip + xor) if inverse else (xor + flip)
    return gates


def apply_comparison(state: QuantumState, bits: str, inverse: bool = False) -> QuantumState:
    """XOR the input into ``m`` then NOT each memory qubit (or the reverse order for ``inverse``).

    Afterwards memory qubit j is 1 exactly where input and stored bit agree.
    ``bits`` is ignored when the layout has an explicit input register.
    """
    layout = state.layout
    n = layout.width("m")
    if not layout.has("i"):
        sv._check_bits(bits, n, "input")
    sv.check_normalized(state)
    out = state.copy()
    sv._k_permute(out.amplitudes, out.num_qubits, _comparison_gates(layout, bits, inverse))
    return out


def _decomposed_phase_inplace(amps, layout: RegisterLayout, support: list[int], denom: int) -> None:
    N = layout.total_qubits
    c = layout.qubit("c", 0)
    m = layout.qubits("m")
    u = sv.gate_u(denom)
    u_inv2 = np.linalg.matrix_power(sv.dagger(u), 2)
    for j in support:
        sv._k_diag_1q(amps, N, (), m[j], u[0, 0], u[1, 1])
    for j in support:
        sv._k_diag_1q(amps, N, (c,), m[j], u_inv2[0, 0], u_inv2[1, 1])


def phase_decomposed(state: QuantumState, support: list[int], n: int) -> QuantumState:
    """Distance phase built from one ``U`` per memory qubit and one ``C(U^-2)`` from ``c``."""
    sv.check_normalized(state)
    out = state.copy()
    _decomposed_phase_inplace(out.amplitudes, out.layout, list(support), n)
    return out


def phase_operator_direct(state: QuantumState, distance_map: np.ndarray, n: int,
                          f_table: Optional[tuple[int, ...]] = None) -> QuantumState:
    """Diagonal ``exp(i*pi*f(d)*s/2n)`` with ``s = +1`` for c=0 and ``-1`` for c=1.

    ``distance_map[v]`` is the distance eigenvalue of memory value ``v``.
    """
    layout = state.layout
    w = layout.width("m")
    distance_map = np.asarray(distance_map, dtype=np.int64)
    if distance_map.shape != (1 << w,):
        raise InvalidInput(f"distance map needs {1 << w} entries, got {distance_map.shape}")
    if distance_map.min() < 0 or distance_map.max() > n:
        raise InvalidInput(f"distances must lie in [0, {n}]")
    theta = distance_map
    if f_table is not None:
        table = tuple(int(v) for v in f_table)
        check_f_table(table, n)
        theta = np.asarray(table, dtype=np.int64)[distance_map]
    N = layout.total_qubits
    idx = np.arange(1 << N)
    m_val = (idx >> (N - layout.offset("m") - w)) & ((1 << w) - 1)
    c_val = (idx >> (N - 1 - layout.qubit("c", 0))) & 1
    sign = 1 - 2 * c_val
    phases = np.exp(1j * math.pi * theta[m_val] * sign / (2 * n))
    return sv.apply_diagonal(state, phases)


def _initial_layout(n: int, path: CircuitPath, max_qubits: int) -> RegisterLayout:
    if path == "reference":
        return RegisterLayout.of(("i", n), ("m", n), ("c", 1), max_qubits=max_qubits)
    return RegisterLayout.of(("m", n), ("c", 1), max_qubits=max_qubits)


def run_circuit(pset: PatternSet, query: Query, *, rng: np.random.Generator | None = None,
                path: CircuitPath = "compact", phase: PhaseMode = "auto",
                storage_path: StoragePath = "auto",
                max_qubits: int = sv.DEFAULT_MAX_QUBITS) -> QuantumState:
    """Run the deterministic part of retrieval and return the pre-measurement state.

    The result always lives on the ``(m, c)`` layout; the reference path
    reads it off its explicit input register.  Unknown (``?``) input bits are
    filled from ``rng`` (a fixed-seed generator if none is given).
    """
    _check_query(pset, query)
    if path not in ("compact", "reference"):
        raise InvalidInput(f"unknown circuit path {path!r}")
    if phase not in ("auto", "decomposed", "direct"):
        raise InvalidInput(f"unknown phase mode {phase!r}")
    if phase == "decomposed" and query.f_table is not None:
        raise InvalidInput("the U/CU^-2 decomposition cannot realize an f_table")
    filled = query.resolve(rng if rng is not None else np.random.default_rng(0))
    n = pset.n
    layout = _initial_layout(n, path, max_qubits)

    memory = store(pset, path=storage_path, max_qubits=max_qubits)
    amps = memory.amplitudes
    if path == "reference":
        amps = np.kron(sv.new_basis_state(RegisterLayout.of(("i", n)), filled).amplitudes, amps)
    state = QuantumState(layout, np.kron(amps, np.array([1, 0], dtype=np.complex128)))
    amps = state.amplitudes
    N = layout.total_qubits
    c = layout.qubit("c", 0)

    sv._k_1q(amps, N, c, sv.gate_hadamard())
    sv._k_permute(amps, N, _comparison_gates(layout, filled, inverse=False))
    support = query.known_positions
    denom = query.phase_denominator
    if query.f_table is None and phase != "direct":
        _decomposed_phase_inplace(amps, layout, support, denom)
    else:
        state = phase_operator_direct(state, distance_map(n, support), denom, query.f_table)
        amps = state.amplitudes
    sv._k_permute(amps, N, _comparison_gates(layout, filled, inverse=True))
    sv._k_1q(amps, N, c, sv.gate_hadamard())
    sv.check_normalized(state)

    if path == "reference":
        t = amps.reshape(1 << n, -1)
        reduced = t[int(filled, 2)].copy()
        if abs(float(np.vdot(reduced, reduced).real) - 1.0) > sv.NORM_TOL:
            raise NumericalError("input register did not stay in its basis state")
        state = QuantumState(_initial_layout(n, "compact", max_qubits), reduced)
    return state


@lru_cache(maxsize=256)
def _prepared(pset: PatternSet, query: Query, max_qubits: int) -> QuantumState:
    state = run_circuit(pset, query, max_qubits=max_qubits)
    state.amplitudes.setflags(write=False)
    return state


def _resolved(query: Query, rng: np.random.Generator | None) -> Query:
    filled = query.resolve(rng)
    if filled == query.input:
        return query
    return Query(filled, query.mask, query.f_table, query.rescale_mask)


# --------------------------------------------------------------------------
# probabilities

def control_probabilities(pset: PatternSet, query: Query, *,
                          rng: np.random.Generator | None = None, **kwargs) -> tuple[float, float]:
    state = run_circuit(pset, query, rng=rng, **kwargs)
    c = state.layout.qubit("c", 0)
    return sv.branch_probability(state, c, 0), sv.branch_probability(state, c, 1)


def gate_level_report(pset: PatternSet, query: Query, *,
                      rng: np.random.Generator | None = None, **kwargs) -> DistributionReport:
    """Control and conditional pattern probabilities read off the simulated state."""
    _check_query(pset, query)
    rq = _resolved(query, rng if rng is not None else np.random.default_rng(0))
    state = run_circuit(pset, rq, **kwargs)
    c = state.layout.qubit("c", 0)
    p0 = sv.branch_probability(state, c, 0)
    p1 = sv.branch_probability(state, c, 1)
    per_pattern: dict[str, float] = {}
    if p0 > RECOGNIZABLE_TOL:
        dist = sv.register_distribution(sv.postselect(state, c, 0), "m")
        per_pattern = {pk: dist.get(pk, 0.0) for pk in pset}
    return DistributionReport(
        n=pset.n, p=pset.p, input=query.input, mask=query.mask, f_table=query.f_table,
        p0=p0, p1=p1, per_pattern=per_pattern, source="gate_level",
        filled_input=rq.input if rq.input != query.input else None,
    )


# --------------------------------------------------------------------------
# sampling

def _sample(state: QuantumState, rng: np.random.Generator, trial_index: int) -> RetrievalOutcome:
    c = state.layout.qubit("c", 0)
    bit, post = sv.measure_qubit(state, c, rng)
    if bit == 1:
        return RetrievalOutcome(1, None, trial_index)
    pattern, _ = sv.measure_register(post, "m", rng)
    return RetrievalOutcome(0, pattern, trial_index)


def retrieve_once(pset: PatternSet, query: Query, rng: np.random.Generator, *,
                  trial_index: int = 0, max_qubits: int = sv.DEFAULT_MAX_QUBITS) -> RetrievalOutcome:
    """One trial: measure ``c``; on 0, measure the memory register too."""
    _check_query(pset, query)
    state = _prepared(pset, _resolved(query, rng), max_qubits)
    return _sample(state, rng, trial_index)


def recognize(pset: PatternSet, query: Query, T: int, rng: np.random.Generator, *,
              max_qubits: int = sv.DEFAULT_MAX_QUBITS) -> RecognitionResult:
    """Repeat retrieval up to ``T`` times, stopping at the first ``c = 0``."""
    if int(T) != T or T < 1:
        raise InvalidInput(f"threshold T must be a positive integer, got {T!r}")
    _check_query(pset, query)
    state = _prepared(pset, _resolved(query, rng), max_qubits)
    for t in range(int(T)):
        outcome = _sample(state, rng, t)
        if outcome.control_bit == 0:
            return RecognitionResult(True, t + 1, outcome)
    return RecognitionResult(False, int(T), None)


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent stream for one trial, derived from ``(seed, trial_index)``."""
    return np.random.default_rng([seed, trial_index])


def _run_trials(pset: PatternSet, query: Query, seed: int, start: int, stop: int,
                max_qubits: int) -> list[tuple[int, Optional[str]]]:
    state = _prepared(pset, query, max_qubits)
    out = []
    for t in range(start, stop):
        o = _sample(state, trial_rng(seed, t), t)
        out.append((o.control_bit, o.retrieved))
    return out


@dataclass
class ExperimentResult:
    """Empirical frequencies of a seeded batch of trials next to the analytic values."""

    trials: int
    seed: int
    filled_input: str
    accepted: int
    p0_empirical: float
    p0_stderr: float
    p0_analytic: float
    counts: dict[str, int] = field(default_factory=dict)
    frequencies: dict[str, float] = field(default_factory=dict)
    stderrs: dict[str, float] = field(default_factory=dict)
    analytic: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "filled_input": self.filled_input,
            "accepted": self.accepted,
            "p0": {"empirical": self.p0_empirical, "stderr": self.p0_stderr,
                   "analytic": self.p0_analytic},
            "per_pattern": {
                k: {"count": self.counts[k], "empirical": self.frequencies[k],
                    "stderr": self.stderrs[k], "analytic": self.analytic[k]}
                for k in self.analytic
            },
        }


def binomial_stderr(freq: float, n: int) -> float:
    return math.sqrt(freq * (1 - freq) / n) if n > 0 else float("nan")


def run_experiment(pset: PatternSet, query: Query, trials: int, seed: int, *,
                   workers: int = 1, max_qubits: int = sv.DEFAULT_MAX_QUBITS) -> ExperimentResult:
    """``trials`` independent retrievals, trial ``t`` driven by :func:`trial_rng` ``(seed, t)``.

    Unknown input bits are filled once, from ``default_rng(seed)``.  Results
    do not depend on ``workers``: chunks are merged by trial index.
    """
    if int(trials) != trials or trials < 1:
        raise InvalidInput(f"trials must be a positive integer, got {trials!r}")
    if int(seed) != seed or seed < 0:
        raise InvalidInput(f"seed must be a non-negative integer, got {seed!r}")
    _check_query(pset, query)
    rq = _resolved(query, np.random.default_rng(seed))
    if workers <= 1:
        results = _run_trials(pset, rq, seed, 0, trials, max_qubits)
    else:
        bounds = np.linspace(0, trials, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_trials, pset, rq, seed, int(a), int(b), max_qubits)
                       for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
            results = [r for f in futures for r in f.result()]

    analytic = oracle.analytic_report(pset, query)
    accepted = sum(1 for bit, _ in results if bit == 0)
    counts = {pk: 0 for pk in pset}
    for bit, pattern in results:
        if bit == 0:
            counts[pattern] = counts.get(pattern, 0) + 1
    p0_emp = accepted / trials
    freqs = {k: (v / accepted if accepted else 0.0) for k, v in counts.items()}
    return ExperimentResult(
        trials=int(trials), seed=int(seed), filled_input=rq.input, accepted=accepted,
        p0_empirical=p0_emp, p0_stderr=binomial_stderr(p0_emp, trials),
        p0_analytic=analytic.p0, counts=counts, frequencies=freqs,
        stderrs={k: binomial_stderr(f, accepted) for k, f in freqs.items()},
        analytic={pk: analytic.per_pattern.get(pk, 0.0) for pk in pset},
    )


# --------------------------------------------------------------------------
# thresholds

def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def self_recognition_probabilities(pset: PatternSet) -> dict[str, float]:
    """Acceptance probability of each stored pattern presented as its own input."""
    return {pk: oracle.analytic_report(pset, Query(pk)).p0 for pk in pset}


def choose_threshold(pset: PatternSet) -> int:
    """Nearest integer to ``1 / P_min`` over the self-recognition probabilities, at least 1."""
    p_min = min(self_recognition_probabilities(pset).values())
    return max(1, round_half_up(1 / p_min))


@dataclass
class WorstCaseReport:
    n: int
    x: int
    p: int
    p0: float
    T: int
    bound: float

    @property
    def bound_holds(self) -> bool:
        return self.p0 > self.bound

    def to_dict(self) -> dict:
        return {"n": self.n, "x": self.x, "p": self.p, "p0": self.p0, "T": self.T,
                "bound": self.bound, "bound_holds": self.bound_holds}


def worst_case_threshold_scaling(n: int, x: int) -> WorstCaseReport:
    """Exact acceptance probability and threshold for the isolated pattern of the worst case.

    ``bound`` is the asymptotic lower estimate ``1/p + pi^2/4n^2``; it is
    reported, not enforced, since small ``n`` falls below it.
    """
    if not 1 <= x < n:
        raise InvalidInput(f"need 1 <= x < n, got n={n}, x={x}")
    scenario = oracle.worst_case_set(n, x)
    p0 = oracle.worst_case_p0(n, x)
    return WorstCaseReport(
        n=n, x=x, p=scenario.p, p0=p0, T=max(1, round_half_up(1 / p0)),
        bound=1 / scenario.p + math.pi ** 2 / (4 * n ** 2),
    )
