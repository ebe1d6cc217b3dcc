"""Pattern-storage circuit building the uniform memory superposition.

Three registers: ``p`` (the pattern being loaded, n qubits), ``u`` (two
utility qubits, initially ``|01>``) and ``m`` (the memory, n qubits).  Each
pattern goes through copy / flag / split / unflag / restore; after the last
one the ``m`` register holds ``(1/sqrt p) sum_k |p^k>`` and ``u`` is back to
``|00>``.

Because ``p`` only ever holds a classical basis state, the ``"classical"``
path drops it and turns the gates it controls into classically conditioned
ones, simulating ``2^(n+2)`` amplitudes instead of ``2^(2n+2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import statevec as sv
from .errors import InvalidInput, NumericalError
from .oracle import expected_memory
from .patterns import Pattern, PatternSet, check_pattern
from .statevec import QuantumState, RegisterLayout

StoragePath = Literal["auto", "reference", "classical"]

# reference path is the default up to this pattern length
REFERENCE_MAX_N = 8


@dataclass
class TraceEntry:
    i: int
    processing: complex
    stored: complex
    expected_processing: float
    expected_stored: float

    @property
    def deviation(self) -> float:
        return max(abs(self.processing - self.expected_processing),
                   abs(self.stored - self.expected_stored))


@dataclass
class StorageTrace:
    """Per-iteration amplitudes of the processing and newly stored branches."""

    entries: list[TraceEntry] = field(default_factory=list)

    def max_deviation(self) -> float:
        return max((e.deviation for e in self.entries), default=0.0)


def full_layout(n: int, max_qubits: int = sv.DEFAULT_MAX_QUBITS) -> RegisterLayout:
    return RegisterLayout.of(("p", n), ("u", 2), ("m", n), max_qubits=max_qubits)


def classical_layout(n: int, max_qubits: int = sv.DEFAULT_MAX_QUBITS) -> RegisterLayout:
    return RegisterLayout.of(("u", 2), ("m", n), max_qubits=max_qubits)


def initial_state(first: Pattern, layout: RegisterLayout) -> QuantumState:
    n = layout.width("m")
    bits = "01" + "0" * n
    if layout.has("p"):
        bits = first + bits
    return sv.new_basis_state(layout, bits)


class _Circuit:
    """Gate lists of one storage iteration, bound to a layout.

    Every gate except the split rotation is a (multi-)controlled NOT, given
    as ``(controls, target)``.  On the classical path a gate controlled by a
    pattern qubit is kept iff that pattern bit is 1, minus that control.
    """

    def __init__(self, layout: RegisterLayout):
        self.layout = layout
        self.N = layout.total_qubits
        self.full = layout.has("p")
        self.u1 = layout.qubit("u", 0)
        self.u2 = layout.qubit("u", 1)
        self.m = layout.qubits("m")
        self.pq = layout.qubits("p") if self.full else None
        self.n = len(self.m)

    def _xor_from_p(self, j: int, pattern: str, extra: tuple[int, ...] = ()) -> list:
        if self.full:
            return [((self.pq[j],) + extra, self.m[j])]
        return [(extra, self.m[j])] if pattern[j] == "1" else []

    def copy_in(self, pattern: str, reverse: bool = False) -> list:
        js = range(self.n - 1, -1, -1) if reverse else range(self.n)
        return [g for j in js for g in self._xor_from_p(j, pattern, (self.u2,))]

    def flag(self, pattern: str) -> list:
        gates = []
        for j in range(self.n):
            gates += self._xor_from_p(j, pattern)
            gates.append(((), self.m[j]))
        gates.append((tuple(self.m), self.u1))
        return gates

    def unflag(self, pattern: str) -> list:
        gates = [(tuple(self.m), self.u1)]
        for j in range(self.n - 1, -1, -1):
            gates.append(((), self.m[j]))
            gates += self._xor_from_p(j, pattern)
        return gates

    def load(self, prev: str, pattern: str) -> list:
        if not self.full or prev is None:
            return []
        return [((), self.pq[j]) for j, (a, b) in enumerate(zip(prev, pattern)) if a != b]

    def split(self, amps, i: int, p: int):
        sv._k_controlled(amps, self.N, [self.u1], self.u2, sv.gate_s(p + 1 - i))

    def index(self, pattern: str, u: str, m: str) -> int:
        bits = (pattern if self.full else "") + u + m
        return int(bits, 2)


def _step(amps: np.ndarray, circ: _Circuit, pattern: str, i: int, p: int,
          trace: StorageTrace | None, prologue: list = ()) -> None:
    sv._k_permute(amps, circ.N, list(prologue) + circ.copy_in(pattern) + circ.flag(pattern))
    circ.split(amps, i, p)
    tail = circ.unflag(pattern)
    if trace is None:
        sv._k_permute(amps, circ.N, tail + circ.copy_in(pattern, reverse=True))
        return
    sv._k_permute(amps, circ.N, tail)
    trace.entries.append(TraceEntry(
        i=i,
        processing=complex(amps[circ.index(pattern, "01", pattern)]),
        stored=complex(amps[circ.index(pattern, "00", pattern)]),
        expected_processing=math.sqrt((p - i) / p),
        expected_stored=1 / math.sqrt(p),
    ))
    sv._k_permute(amps, circ.N, circ.copy_in(pattern, reverse=True))


def flag_then_unflag(state: QuantumState, pattern: Pattern) -> QuantumState:
    """Run the flag gates and then their inverse; the identity on any state."""
    layout = state.layout
    check_pattern(pattern, layout.width("m"))
    circ = _Circuit(layout)
    out = state.copy()
    sv._k_permute(out.amplitudes, circ.N, circ.flag(pattern))
    sv._k_permute(out.amplitudes, circ.N, circ.unflag(pattern))
    return out


def flag_only(state: QuantumState, pattern: Pattern) -> QuantumState:
    circ = _Circuit(state.layout)
    check_pattern(pattern, state.layout.width("m"))
    out = state.copy()
    sv._k_permute(out.amplitudes, circ.N, circ.flag(pattern))
    return out


def store_step(state: QuantumState, pattern: Pattern, i: int, p: int,
               trace: StorageTrace | None = None) -> QuantumState:
    """One storage iteration for pattern number ``i`` (1-based) out of ``p``."""
    layout = state.layout
    if not (layout.has("u") and layout.has("m")) or layout.width("u") != 2:
        raise InvalidInput("storage state needs a two-qubit 'u' register and an 'm' register")
    n = layout.width("m")
    check_pattern(pattern, n)
    if not 1 <= i <= p:
        raise InvalidInput(f"step index {i} outside 1..{p}")
    sv.check_normalized(state)
    circ = _Circuit(layout)
    if circ.full:
        if layout.width("p") != n:
            raise InvalidInput("pattern and memory registers differ in width")
        held = sv.register_distribution(state, "p")
        if list(held) != [pattern] or abs(held[pattern] - 1.0) > sv.NORM_TOL:
            raise InvalidInput(f"pattern register does not hold {pattern!r}")
    amp = state.amplitudes[circ.index(pattern, "01", "0" * n)]
    if abs(amp - math.sqrt((p - i + 1) / p)) > sv.NORM_TOL:
        raise InvalidInput(
            f"processing branch amplitude {amp!r} does not match step {i} of {p}"
        )
    out = state.copy()
    _step(out.amplitudes, circ, pattern, i, p, trace)
    return out


def store(pset: PatternSet, *, path: StoragePath = "auto", trace: StorageTrace | None = None,
          max_qubits: int = sv.DEFAULT_MAX_QUBITS) -> QuantumState:
    """Build the memory state over a single ``m`` register of ``pset.n`` qubits.

    ``path="reference"`` simulates all ``2n+2`` qubits; ``"classical"`` keeps
    the pattern register classical.  ``"auto"`` picks the reference path for
    ``n <= 8``.  Pass a :class:`StorageTrace` to record every iteration.
    """
    n, p = pset.n, pset.p
    if path == "auto":
        path = "reference" if n <= REFERENCE_MAX_N else "classical"
    if path == "reference":
        layout = full_layout(n, max_qubits)
    elif path == "classical":
        layout = classical_layout(n, max_qubits)
    else:
        raise InvalidInput(f"unknown storage path {path!r}")
    circ = _Circuit(layout)
    state = initial_state(pset.patterns[0], layout)
    amps = state.amplitudes
    prev = None
    for i, pattern in enumerate(pset.patterns, start=1):
        # loading the next pattern: p is unentangled, so NOTs on its qubits suffice
        _step(amps, circ, pattern, i, p, trace, prologue=circ.load(prev, pattern))
        prev = pattern

    fixed = {"u": "00"}
    if circ.full:
        fixed["p"] = pset.patterns[-1]
    memory = sv.register_amplitudes(state, "m", fixed)
    leftover = abs(float(np.vdot(memory, memory).real) - 1.0)
    if leftover > sv.NORM_TOL:
        raise NumericalError(f"memory register carries only 1 - {leftover!r} of the norm")
    return QuantumState(RegisterLayout.of(("m", n), max_qubits=max_qubits), memory)


def verify_memory(state: QuantumState, pset: PatternSet) -> float:
    """Max absolute amplitude gap between ``state`` and the ideal memory of ``pset``."""
    if state.num_qubits != pset.n:
        raise InvalidInput(
            f"state has {state.num_qubits} qubits but patterns have length {pset.n}"
        )
    return float(np.max(np.abs(state.amplitudes - expected_memory(pset))))
