"""Dense state-vector engine for small named qubit registers.

Conventions used throughout the package:

* Global qubit ``q`` is axis ``q`` of ``amplitudes.reshape([2] * N)``, so
  qubit 0 is the most significant bit of the basis index.
* Inside a register, position 0 is the leftmost character of a bit string.

Public ``apply_*`` functions return a new :class:`QuantumState` and check the
normalization of their input.  The underscore kernels mutate an amplitude
array in place and are what the circuit builders use on their hot paths.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .errors import InvalidInput, NumericalError

DEFAULT_MAX_QUBITS = 24
NORM_TOL = 1e-9
UNITARY_TOL = 1e-12
DEGENERATE_TOL = 1e-12
DUMP_TOL = 1e-12


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered, named qubit registers laid out back to back."""

    registers: tuple[tuple[str, int], ...]
    max_qubits: int = DEFAULT_MAX_QUBITS
    _offsets: dict = field(init=False, repr=False, compare=False, hash=False)
    _total: int = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        regs = tuple((str(name), int(width)) for name, width in self.registers)
        object.__setattr__(self, "registers", regs)
        if not regs:
            raise InvalidInput("layout needs at least one register")
        offsets = {}
        total = 0
        for name, width in regs:
            if not name.isidentifier():
                raise InvalidInput(f"register name {name!r} is not an identifier")
            if name in offsets:
                raise InvalidInput(f"duplicate register name {name!r}")
            if width < 1:
                raise InvalidInput(f"register {name!r} has width {width} < 1")
            offsets[name] = total
            total += width
        if total > self.max_qubits:
            raise InvalidInput(
                f"layout needs {total} qubits, above the configured maximum {self.max_qubits}"
            )
        object.__setattr__(self, "_offsets", offsets)
        object.__setattr__(self, "_total", total)

    @classmethod
    def of(cls, *registers: tuple[str, int], max_qubits: int = DEFAULT_MAX_QUBITS) -> "RegisterLayout":
        return cls(tuple(registers), max_qubits=max_qubits)

    @property
    def total_qubits(self) -> int:
        return self._total

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    def has(self, name: str) -> bool:
        return name in self._offsets

    def offset(self, name: str) -> int:
        try:
            return self._offsets[name]
        except KeyError:
            raise InvalidInput(f"unknown register {name!r}") from None

    def width(self, name: str) -> int:
        self.offset(name)
        return dict(self.registers)[name]

    def qubit(self, name: str, position: int) -> int:
        width = self.width(name)
        if not 0 <= position < width:
            raise InvalidInput(f"position {position} outside register {name!r} of width {width}")
        return self.offset(name) + position

    def qubits(self, name: str) -> list[int]:
        off = self.offset(name)
        return list(range(off, off + self.width(name)))


@dataclass
class QuantumState:
    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        expected = 1 << self.layout.total_qubits
        if self.amplitudes.shape != (expected,):
            raise InvalidInput(
                f"amplitude vector has shape {self.amplitudes.shape}, expected ({expected},)"
            )

    @property
    def num_qubits(self) -> int:
        return self.layout.total_qubits

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def copy(self) -> "QuantumState":
        return QuantumState(self.layout, self.amplitudes.copy())

    def dump(self) -> list[tuple[str, float, float]]:
        """Nonzero amplitudes as ``(basis bits, real, imag)`` in basis-index order."""
        n = self.num_qubits
        idx = np.flatnonzero(np.abs(self.amplitudes) > DUMP_TOL)
        return [
            (format(int(i), f"0{n}b"), float(self.amplitudes[i].real), float(self.amplitudes[i].imag))
            for i in idx
        ]

    def to_json(self, **kwargs) -> str:
        payload = {
            "registers": [[name, width] for name, width in self.layout.registers],
            "amplitudes": [list(row) for row in self.dump()],
        }
        return json.dumps(payload, **kwargs)


def check_normalized(state: QuantumState, tol: float = NORM_TOL) -> None:
    norm2 = float(np.vdot(state.amplitudes, state.amplitudes).real)
    if abs(norm2 - 1.0) > tol:
        raise NumericalError(f"state norm^2 = {norm2!r} drifted from 1 by more than {tol}")


def _check_bits(bits: str, length: int, what: str = "bits") -> None:
    if len(bits) != length:
        raise InvalidInput(f"{what} {bits!r} has length {len(bits)}, expected {length}")
    if any(ch not in "01" for ch in bits):
        raise InvalidInput(f"{what} {bits!r} must contain only '0' and '1'")


def new_basis_state(layout: RegisterLayout, bits: str) -> QuantumState:
    _check_bits(bits, layout.total_qubits)
    amps = np.zeros(1 << layout.total_qubits, dtype=np.complex128)
    amps[int(bits, 2)] = 1.0
    return QuantumState(layout, amps)


def tensor(a: QuantumState, b: QuantumState, max_qubits: int | None = None) -> QuantumState:
    """``a ⊗ b`` with ``a``'s registers first."""
    layout = RegisterLayout(
        a.layout.registers + b.layout.registers,
        max_qubits=max_qubits if max_qubits is not None else max(a.layout.max_qubits, b.layout.max_qubits),
    )
    return QuantumState(layout, np.kron(a.amplitudes, b.amplitudes))


# --------------------------------------------------------------------------
# gates

def gate_hadamard() -> np.ndarray:
    return np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)


def gate_not() -> np.ndarray:
    return np.array([[0, 1], [1, 0]], dtype=np.complex128)


def gate_s(i: int) -> np.ndarray:
    """The storage split rotation ``S^i``; ``S^1`` is ``[[0, 1], [-1, 0]]``."""
    if int(i) != i or i < 1:
        raise InvalidInput(f"S^i needs a positive integer i, got {i!r}")
    c = math.sqrt((i - 1) / i)
    s = 1 / math.sqrt(i)
    return np.array([[c, s], [-s, c]], dtype=np.complex128)


def gate_u(n: int) -> np.ndarray:
    """``diag(exp(i*pi/2n), 1)``: phase on ``|0>`` of one Hamming-distance unit."""
    if int(n) != n or n < 1:
        raise InvalidInput(f"U needs a positive integer n, got {n!r}")
    return np.array([[np.exp(1j * math.pi / (2 * n)), 0], [0, 1]], dtype=np.complex128)


def is_unitary(g: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    g = np.asarray(g)
    return g.shape == (2, 2) and bool(np.max(np.abs(g.conj().T @ g - np.eye(2))) <= tol)


def dagger(g: np.ndarray) -> np.ndarray:
    return np.asarray(g).conj().T


# --------------------------------------------------------------------------
# in-place kernels

def _view(amps: np.ndarray, num_qubits: int, fixed: dict[int, int]):
    """Reshape so each fixed qubit is its own axis and free runs are merged.

    Returns the view plus a function mapping a ``{qubit: value}`` override
    onto an index tuple for that view.
    """
    shape: list[int] = []
    axis_of: dict[int, int] = {}
    run = 0
    for q in range(num_qubits):
        if q in fixed:
            if run:
                shape.append(1 << run)
                run = 0
            axis_of[q] = len(shape)
            shape.append(2)
        else:
            run += 1
    if run:
        shape.append(1 << run)
    t = amps.reshape(shape)

    def index(values: dict[int, int]) -> tuple:
        sl = [slice(None)] * len(shape)
        for q, v in values.items():
            sl[axis_of[q]] = v
        return tuple(sl)

    return t, index


@njit(cache=True)
def _controlled_kernel(amps, cmask, tbit, g00, g01, g10, g11):
    for i in range(amps.shape[0]):
        if (i & cmask) == cmask and (i & tbit) == 0:
            j = i | tbit
            x0 = amps[i]
            x1 = amps[j]
            amps[i] = g00 * x0 + g01 * x1
            amps[j] = g10 * x0 + g11 * x1


def _k_controlled(amps: np.ndarray, num_qubits: int, controls: Sequence[int], target: int,
                  g: np.ndarray) -> None:
    """Apply ``g`` to ``target`` on the subspace where every control is 1."""
    cmask = 0
    for c in controls:
        cmask |= 1 << (num_qubits - 1 - c)
    _controlled_kernel(amps, cmask, 1 << (num_qubits - 1 - target),
                       complex(g[0, 0]), complex(g[0, 1]), complex(g[1, 0]), complex(g[1, 1]))


def _k_1q(amps: np.ndarray, num_qubits: int, qubit: int, g: np.ndarray) -> None:
    _k_controlled(amps, num_qubits, (), qubit, g)


def _k_x(amps: np.ndarray, num_qubits: int, controls: Sequence[int], target: int) -> None:
    fixed = {c: 1 for c in controls}
    fixed[target] = 0
    t, index = _view(amps, num_qubits, fixed)
    s0 = index(fixed)
    s1 = index({**fixed, target: 1})
    tmp = t[s0].copy()
    t[s0] = t[s1]
    t[s1] = tmp


def _k_x_single(amps: np.ndarray, num_qubits: int, qubit: int) -> None:
    _k_x(amps, num_qubits, (), qubit)


@njit(cache=True)
def _permute_kernel(amps, cmasks, tbits):
    out = np.zeros_like(amps)
    for i in range(amps.shape[0]):
        v = amps[i]
        if v.real == 0.0 and v.imag == 0.0:
            continue
        j = i
        for k in range(cmasks.shape[0]):
            if (j & cmasks[k]) == cmasks[k]:
                j ^= tbits[k]
        out[j] = v
    return out


def _k_permute(amps: np.ndarray, num_qubits: int, gates: Sequence[tuple[Sequence[int], int]]) -> None:
    """Apply a sequence of (multi-)controlled NOTs in a single sweep.

    ``gates`` is a list of ``(controls, target)`` in application order.  Every
    such gate permutes basis states, so the composite maps basis index ``i``
    to one image; zero amplitudes are skipped.
    """
    if not gates:
        return
    bit = lambda q: 1 << (num_qubits - 1 - q)
    cmasks = np.array([sum(bit(c) for c in controls) for controls, _ in gates], dtype=np.int64)
    tbits = np.array([bit(t) for _, t in gates], dtype=np.int64)
    amps[:] = _permute_kernel(amps, cmasks, tbits)


def _k_diag_1q(amps: np.ndarray, num_qubits: int, controls: Sequence[int], target: int,
               d0: complex, d1: complex) -> None:
    """Diagonal gate ``diag(d0, d1)`` on ``target``, conditioned on ``controls``."""
    fixed = {c: 1 for c in controls}
    fixed[target] = 0
    t, index = _view(amps, num_qubits, fixed)
    if d0 != 1:
        t[index(fixed)] *= d0
    if d1 != 1:
        t[index({**fixed, target: 1})] *= d1


def _check_qubit(state: QuantumState, q: int, what: str = "qubit") -> None:
    if int(q) != q or not 0 <= q < state.num_qubits:
        raise InvalidInput(f"{what} index {q!r} out of range for {state.num_qubits} qubits")


def _check_gate(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=np.complex128)
    if not is_unitary(g):
        raise InvalidInput("gate is not a unitary 2x2 matrix")
    return g


# --------------------------------------------------------------------------
# public gate application

def apply_1q(state: QuantumState, qubit: int, g: np.ndarray) -> QuantumState:
    _check_qubit(state, qubit)
    g = _check_gate(g)
    check_normalized(state)
    out = state.copy()
    _k_1q(out.amplitudes, out.num_qubits, qubit, g)
    return out


def apply_controlled_1q(state: QuantumState, control: int, target: int, g: np.ndarray) -> QuantumState:
    _check_qubit(state, control, "control")
    _check_qubit(state, target, "target")
    if control == target:
        raise InvalidInput("control and target must differ")
    g = _check_gate(g)
    check_normalized(state)
    out = state.copy()
    _k_controlled(out.amplitudes, out.num_qubits, [control], target, g)
    return out


def apply_multi_controlled_not(state: QuantumState, controls: Iterable[int], target: int) -> QuantumState:
    controls = list(controls)
    if not controls:
        raise InvalidInput("need at least one control")
    for c in controls:
        _check_qubit(state, c, "control")
    _check_qubit(state, target, "target")
    if len(set(controls)) != len(controls) or target in controls:
        raise InvalidInput("controls must be distinct and exclude the target")
    check_normalized(state)
    out = state.copy()
    _k_x(out.amplitudes, out.num_qubits, controls, target)
    return out


def apply_diagonal(state: QuantumState, phases: np.ndarray) -> QuantumState:
    """Multiply basis amplitude ``k`` by ``phases[k]`` (each of modulus 1)."""
    phases = np.asarray(phases, dtype=np.complex128)
    if phases.shape != state.amplitudes.shape:
        raise InvalidInput("phase vector length does not match the state")
    if np.max(np.abs(np.abs(phases) - 1.0)) > UNITARY_TOL:
        raise InvalidInput("diagonal operator entries must have modulus 1")
    check_normalized(state)
    return QuantumState(state.layout, state.amplitudes * phases)


# --------------------------------------------------------------------------
# probabilities, measurement, postselection

def _branch_weights(amps: np.ndarray, num_qubits: int, qubit: int) -> tuple[float, float]:
    t = amps.reshape(1 << qubit, 2, 1 << (num_qubits - qubit - 1))
    w = np.abs(t) ** 2
    return float(w[:, 0, :].sum()), float(w[:, 1, :].sum())


def branch_probability(state: QuantumState, qubit: int, bit: int) -> float:
    _check_qubit(state, qubit)
    if bit not in (0, 1):
        raise InvalidInput(f"bit must be 0 or 1, got {bit!r}")
    w0, w1 = _branch_weights(state.amplitudes, state.num_qubits, qubit)
    total = w0 + w1
    return (w0 if bit == 0 else w1) / total


def _project(state: QuantumState, qubit: int, bit: int, weight: float) -> QuantumState:
    out = state.copy()
    t = out.amplitudes.reshape(1 << qubit, 2, 1 << (out.num_qubits - qubit - 1))
    t[:, 1 - bit, :] = 0
    out.amplitudes /= math.sqrt(weight)
    return out


def postselect(state: QuantumState, qubit: int, bit: int) -> QuantumState:
    """Project ``qubit`` onto ``bit`` and renormalize (no randomness)."""
    _check_qubit(state, qubit)
    w = _branch_weights(state.amplitudes, state.num_qubits, qubit)[bit]
    if w < DEGENERATE_TOL:
        raise NumericalError(f"branch qubit {qubit} = {bit} has weight {w!r}; cannot postselect")
    return _project(state, qubit, bit, w)


def measure_qubit(state: QuantumState, qubit: int, rng: np.random.Generator) -> tuple[int, QuantumState]:
    _check_qubit(state, qubit)
    check_normalized(state)
    w0, w1 = _branch_weights(state.amplitudes, state.num_qubits, qubit)
    if w0 < DEGENERATE_TOL and w1 < DEGENERATE_TOL:
        raise NumericalError("both measurement branches are degenerate")
    bit = 0 if rng.random() < w0 / (w0 + w1) else 1
    return bit, _project(state, qubit, bit, w0 if bit == 0 else w1)


def _register_probs(state: QuantumState, name: str) -> np.ndarray:
    off = state.layout.offset(name)
    width = state.layout.width(name)
    rest = state.num_qubits - off - width
    t = state.amplitudes.reshape(1 << off, 1 << width, 1 << rest)
    return (np.abs(t) ** 2).sum(axis=(0, 2))


def register_distribution(state: QuantumState, register_name: str) -> dict[str, float]:
    """Marginal distribution of one register, keyed by bit string, zero entries dropped."""
    probs = _register_probs(state, register_name)
    width = state.layout.width(register_name)
    total = probs.sum()
    return {
        format(int(v), f"0{width}b"): float(probs[v] / total)
        for v in np.flatnonzero(probs > DUMP_TOL)
    }


def measure_register(state: QuantumState, register_name: str,
                     rng: np.random.Generator) -> tuple[str, QuantumState]:
    """Measure every qubit of a register at once; returns the bits and collapsed state."""
    check_normalized(state)
    probs = _register_probs(state, register_name)
    cdf = np.cumsum(probs)
    v = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    v = min(v, len(probs) - 1)
    while probs[v] == 0.0:  # guard against landing on a zero-width bin at the top end
        v -= 1
    off = state.layout.offset(register_name)
    width = state.layout.width(register_name)
    out = state.copy()
    t = out.amplitudes.reshape(1 << off, 1 << width, -1)
    keep = t[:, v, :].copy()
    t[:] = 0
    t[:, v, :] = keep / math.sqrt(probs[v])
    return format(v, f"0{width}b"), out


def register_amplitudes(state: QuantumState, register_name: str, fixed: dict[str, str]) -> np.ndarray:
    """Amplitudes of one register with every other register pinned to a basis value.

    ``fixed`` must name every other register.  Used to read a register out of
    a product state.
    """
    layout = state.layout
    others = [n for n in layout.names if n != register_name]
    if set(fixed) != set(others):
        raise InvalidInput(f"fixed registers {sorted(fixed)} must be exactly {sorted(others)}")
    sl = []
    for name, width in layout.registers:
        if name == register_name:
            sl.append(slice(None))
        else:
            _check_bits(fixed[name], width, f"value for register {name!r}")
            sl.append(int(fixed[name], 2))
    t = state.amplitudes.reshape(tuple(1 << w for _, w in layout.registers))
    return t[tuple(sl)].copy()
