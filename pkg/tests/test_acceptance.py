"""Acceptance gate.

Each test checks one acceptance criterion at its stated tolerance and prints a
single PASS/FAIL line (visible without ``-s``).  Run on its own with::

    pytest tests/test_acceptance.py -v
"""
import json
import time

import numpy as np
import pytest

from pqam import oracle
from pqam import statevec as sv
from pqam.patterns import PatternSet
from pqam.query import Query, report_deviation
from pqam.retrieval import (apply_comparison, distance_map, gate_level_report, phase_decomposed,
                            phase_operator_direct, run_experiment, worst_case_threshold_scaling)
from pqam.storage import classical_layout, flag_then_unflag, full_layout, store, verify_memory

from conftest import random_bits, random_f_table, random_pattern_set, random_state

SEED = 4242


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail
    return emit


def test_1_storage_correctness(verdict):
    rng = np.random.default_rng(SEED)
    worst, t0 = 0.0, time.perf_counter()
    for _ in range(200):
        pset = random_pattern_set(rng, int(rng.integers(2, 9)))
        worst = max(worst, verify_memory(store(pset), pset))
    elapsed = time.perf_counter() - t0
    verdict(1, worst < 1e-9 and elapsed < 60,
            f"200 random sets, max deviation {worst:.2e} (< 1e-9), {elapsed:.1f} s (< 60 s)")


def test_2_retrieval_equivalence(verdict):
    rng = np.random.default_rng(SEED + 1)
    worst = 0.0
    kinds = {"plain": 0, "masked": 0, "f-mapped": 0}
    for k in range(200):
        n = int(rng.integers(2, 9))
        pset = random_pattern_set(rng, n)
        bits = random_bits(rng, n)
        mask = f = None
        if k % 3 == 1:
            mask = random_bits(rng, n)
            if "1" not in mask:
                mask = "1" + mask[1:]
            bits = "".join(b if m == "1" else "?" for b, m in zip(bits, mask))
            kinds["masked"] += 1
        elif k % 3 == 2:
            f = random_f_table(rng, n)
            kinds["f-mapped"] += 1
        else:
            kinds["plain"] += 1
        q = Query(bits, mask, f)
        # the same generator state fills '?' bits for both sides
        fill_seed = int(rng.integers(2 ** 32))
        g = gate_level_report(pset, q, rng=np.random.default_rng(fill_seed))
        filled = Query(g.filled_input or bits, mask, f)
        a = oracle.analytic_report(pset, filled)
        worst = max(worst, report_deviation(g, a))
    verdict(2, worst < 1e-9, f"200 cases {kinds}, max deviation {worst:.2e} (< 1e-9)")


def test_3_decomposition_identity(verdict):
    worst, count = 0.0, 0
    for n in range(1, 7):
        lay = sv.RegisterLayout.of(("m", n), ("c", 1))
        support = list(range(n))
        dmap = distance_map(n, support)
        for v in range(2 ** (n + 1)):
            s = sv.new_basis_state(lay, format(v, f"0{n + 1}b"))
            a = phase_decomposed(s, support, n)
            b = phase_operator_direct(s, dmap, n)
            worst = max(worst, float(np.max(np.abs(a.amplitudes - b.amplitudes))))
            count += 1
    verdict(3, worst < 1e-12, f"{count} basis states over n=1..6, max deviation {worst:.2e} (< 1e-12)")


def test_4_maximal_capacity(verdict):
    worst_p0, worst_store, cases = 0.0, 0.0, 0
    for n in range(2, 7):
        pset = PatternSet(n, tuple(format(v, f"0{n}b") for v in range(2 ** n)))
        worst_store = max(worst_store, verify_memory(store(pset), pset))
        for v in range(2 ** n):
            r = gate_level_report(pset, Query(format(v, f"0{n}b")))
            worst_p0 = max(worst_p0, abs(r.p0 - 0.5))
            cases += 1
    verdict(4, worst_p0 < 1e-12 and worst_store < 1e-9,
            f"p=2^n for n=2..6, {cases} inputs, max |p0-1/2| {worst_p0:.2e} (< 1e-12), "
            f"storage deviation {worst_store:.2e}")


def test_5_monte_carlo(verdict):
    pset = PatternSet(3, ("000", "111"))
    q = Query("001")
    t0 = time.perf_counter()
    first = run_experiment(pset, q, 100_000, seed=7)
    elapsed = time.perf_counter() - t0
    second = run_experiment(pset, q, 100_000, seed=7)
    a = json.dumps(first.to_dict(), indent=2).encode()
    b = json.dumps(second.to_dict(), indent=2).encode()
    p0, f000 = first.p0_empirical, first.frequencies["000"]
    ok = 0.495 <= p0 <= 0.505 and 0.74 <= f000 <= 0.76 and a == b and elapsed < 30
    verdict(5, ok, f"p0 {p0:.5f} in [0.495, 0.505], freq(000) {f000:.5f} in [0.74, 0.76], "
                   f"identical rerun {a == b}, {elapsed:.1f} s (< 30 s)")


def test_6_threshold_scaling(verdict, capsys):
    linear = [worst_case_threshold_scaling(n, 1) for n in range(4, 17)]
    ratios1 = [r.T / r.n for r in linear]
    ok1 = all(0.5 <= v <= 2.0 for v in ratios1)
    quad = [worst_case_threshold_scaling(n, 2) for n in range(6, 13)]
    ratios2 = [r.T / r.n ** 2 for r in quad]
    spread = max(ratios2) / min(ratios2)
    ok2 = spread <= 2.0
    with capsys.disabled():
        for r in linear + quad:
            print(f"    n={r.n:2d} x={r.x} p={r.p:4d} p0={r.p0:.6f} T={r.T:3d} "
                  f"bound={r.bound:.6f} bound_holds={r.bound_holds}")
    verdict(6, ok1 and ok2,
            f"x=1: T/n in [{min(ratios1):.2f}, {max(ratios1):.2f}] within [0.5, 2]; "
            f"x=2: T/n^2 in [{min(ratios2):.3f}, {max(ratios2):.3f}], spread {spread:.2f} (<= 2)")


def _operator(num_qubits, apply):
    """Matrix of a state map, built column by column from basis states."""
    lay = sv.RegisterLayout.of(("q", num_qubits))
    cols = [apply(sv.new_basis_state(lay, format(v, f"0{num_qubits}b"))).amplitudes
            for v in range(2 ** num_qubits)]
    return np.stack(cols, axis=1)


def test_7_property_suite(verdict):
    rng = np.random.default_rng(SEED + 7)
    cases = 100
    failures = []

    # unitarity of every gate kind in its placed, controlled form
    worst_u = 0.0
    for _ in range(cases):
        N = int(rng.integers(2, 5))
        target, control = (int(v) for v in rng.choice(N, size=2, replace=False))
        kind = int(rng.integers(4))
        if kind == 0:
            g = sv.gate_s(int(rng.integers(1, 1000)))
        elif kind == 1:
            g = sv.gate_u(int(rng.integers(1, 50)))
        elif kind == 2:
            g = np.linalg.matrix_power(sv.dagger(sv.gate_u(int(rng.integers(1, 50)))), 2)
        else:
            g = sv.gate_hadamard()
        M = _operator(N, lambda s: sv.apply_controlled_1q(s, control, target, g))
        worst_u = max(worst_u, float(np.max(np.abs(M.conj().T @ M - np.eye(2 ** N)))))
        k = int(rng.integers(1, N))
        ctrls = [int(v) for v in rng.choice([q for q in range(N) if q != target], size=k, replace=False)]
        P = _operator(N, lambda s: sv.apply_multi_controlled_not(s, ctrls, target))
        worst_u = max(worst_u, float(np.max(np.abs(P.conj().T @ P - np.eye(2 ** N)))))
    if worst_u > 1e-12:
        failures.append(f"unitarity {worst_u:.2e}")

    # flag / unflag of the storage step is the identity
    worst_f = 0.0
    for k in range(cases):
        n = int(rng.integers(1, 5))
        lay = full_layout(n) if k % 2 else classical_layout(n)
        psi = random_state(rng, 2 ** lay.total_qubits)
        out = flag_then_unflag(sv.QuantumState(lay, psi), random_bits(rng, n))
        worst_f = max(worst_f, float(np.max(np.abs(out.amplitudes - psi))))
    if worst_f > 1e-12:
        failures.append(f"flag/unflag {worst_f:.2e}")

    # comparison followed by its inverse is the identity
    worst_c = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 7))
        s = sv.QuantumState(sv.RegisterLayout.of(("m", n), ("c", 1)), random_state(rng, 2 ** (n + 1)))
        bits = random_bits(rng, n)
        out = apply_comparison(apply_comparison(s, bits), bits, inverse=True)
        worst_c = max(worst_c, float(np.max(np.abs(out.amplitudes - s.amplitudes))))
    if worst_c > 1e-12:
        failures.append(f"comparison inverse {worst_c:.2e}")

    # relabelling qubits, flipping a column, and the distance ordering
    worst_perm = worst_flip = 0.0
    monotone_violations = 0
    for _ in range(cases):
        n = int(rng.integers(2, 7))
        pset = random_pattern_set(rng, n)
        bits = random_bits(rng, n)
        base = gate_level_report(pset, Query(bits))

        perm = rng.permutation(n)
        move = lambda b: "".join(b[j] for j in perm)
        moved = gate_level_report(PatternSet(n, tuple(move(pk) for pk in pset)), Query(move(bits)))
        worst_perm = max(worst_perm, abs(moved.p0 - base.p0), *(
            abs(moved.per_pattern.get(move(pk), 0.0) - base.per_pattern.get(pk, 0.0)) for pk in pset))

        j = int(rng.integers(n))
        flip = lambda b: b[:j] + ("1" if b[j] == "0" else "0") + b[j + 1:]
        flipped = gate_level_report(PatternSet(n, tuple(flip(pk) for pk in pset)), Query(flip(bits)))
        worst_flip = max(worst_flip, abs(flipped.p0 - base.p0), *(
            abs(flipped.per_pattern.get(flip(pk), 0.0) - base.per_pattern.get(pk, 0.0)) for pk in pset))

        if base.recognizable:
            ranked = sorted(pset, key=lambda pk: oracle.hamming(bits, pk))
            probs = [base.per_pattern[pk] for pk in ranked]
            monotone_violations += sum(1 for a, b in zip(probs, probs[1:]) if b > a + 1e-12)
    if worst_perm > 1e-12:
        failures.append(f"permutation equivariance {worst_perm:.2e}")
    if worst_flip > 1e-12:
        failures.append(f"bit-flip invariance {worst_flip:.2e}")
    if monotone_violations:
        failures.append(f"{monotone_violations} monotonicity violations")

    verdict(7, not failures,
            f"{cases} cases per property; unitarity {worst_u:.1e}, flag/unflag {worst_f:.1e}, "
            f"comparison {worst_c:.1e}, permutation {worst_perm:.1e}, bit flip {worst_flip:.1e}, "
            f"monotone violations {monotone_violations}"
            + (f"; failing: {', '.join(failures)}" if failures else ""))
