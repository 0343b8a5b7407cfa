"""Acceptance suite: one test per exit criterion, each printing a
PASS/FAIL line (run with `pytest tests/test_acceptance.py -v -s` to see
them inline).  Tolerances are pinned here, not configurable."""

import functools
import time

import numpy as np

from ptqed.cli import main as cli_main
from ptqed.decoherence import (
    AMPLITUDE,
    DEPHASING,
    amplitude_kraus,
    apply_damping,
    decay_report,
    dephasing_kraus,
)
from ptqed.fluctuation import (
    VACUUM,
    averaged_fidelity,
    branch_match_report,
    closed_form_fidelity,
)
from ptqed.gates import dispersive_unitary, ramsey_unitary, resonant_unitary
from ptqed.protocol import (
    ALL_OUTCOMES,
    ATOM1,
    ATOM4,
    MODE,
    BellOutcome,
    ProtocolParams,
    assemble_total,
    bell_state,
    prepare_channel,
    prepare_input,
    run_ideal,
    stage1_gates,
    stage2_gates,
)
from ptqed.qstate import (
    DensityMatrix,
    StateVector,
    SubsystemLayout,
    states_equal_up_to_phase,
    tensor,
)

from oracles import env_channel_oracle, full_protocol_env_oracle
from test_protocol import bell_expansion_oracle, random_coefficients

RT2 = np.sqrt(2.0)


def criterion(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"FAIL  {name}")
                raise
            print(f"PASS  {name}")

        return wrapper

    return deco


@criterion("ideal protocol exactness: 100 random inputs, p = 1/4 and F = 1 to 1e-10, < 1 s")
def test_ideal_protocol_exactness():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    for _ in range(100):
        c0, c1 = random_coefficients(rng)
        report = run_ideal(ProtocolParams(c0=c0, c1=c1))
        for branch in report.branches:
            assert abs(branch.probability - 0.25) <= 1e-10
            assert abs(branch.fidelity - 1.0) <= 1e-10
    assert time.perf_counter() - start < 1.0


@criterion("total-state decomposition: four-branch expansion entrywise to 1e-12")
def test_total_state_decomposition():
    rng = np.random.default_rng(2025)
    for _ in range(20):
        c0, c1 = random_coefficients(rng)
        total = assemble_total(prepare_input(c0, c1), prepare_channel())
        oracle = bell_expansion_oracle(c0, c1)
        assert np.max(np.abs(total.amplitudes - oracle.amplitudes)) <= 1e-12


@criterion("measurement sequence: eight listed evolutions and four signatures to 1e-12")
def test_measurement_sequence_table():
    r = ramsey_unitary()
    assert np.max(np.abs(r @ [0, 1] - np.array([1, 1]) / RT2)) <= 1e-12
    assert np.max(np.abs(r @ [1, 0] - np.array([1, -1]) / RT2)) <= 1e-12

    u = dispersive_unitary(np.pi)
    for (a, n), phase in {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): -1}.items():
        v = np.zeros(4, dtype=complex)
        v[a * 2 + n] = 1.0
        assert np.max(np.abs(u @ v - phase * v)) <= 1e-12

    u = resonant_unitary(np.pi / 2)
    g0 = np.array([1, 0, 0, 0], dtype=complex)
    g1 = np.array([0, 1, 0, 0], dtype=complex)
    assert np.max(np.abs(u @ g0 - g0)) <= 1e-12
    assert np.max(np.abs(u @ g1 - np.array([0, 0, -1j, 0]))) <= 1e-12

    probe_layout = SubsystemLayout([(ATOM4, 2)])
    lvl = {"g": 0, "e": 1}
    for outcome in ALL_OUTCOMES:
        probe = StateVector(probe_layout, np.array([1, 0], dtype=complex))
        out = stage2_gates(stage1_gates(tensor([bell_state(outcome), probe])))
        l1, l4 = outcome.detection
        want = np.zeros(out.layout.dim, dtype=complex)
        want[out.layout.flat_index({ATOM1: lvl[l1], MODE: 0, ATOM4: lvl[l4]})] = 1.0
        assert states_equal_up_to_phase(out, StateVector(out.layout, want), atol=1e-12)


@criterion("damping channel: decayed-superposition matrix, semigroup + CPTP on 1000 "
           "random pairs, environment oracle to 1e-10")
def test_damping_channel():
    layout = SubsystemLayout([("a", 2)])
    plus = DensityMatrix(layout, 0.5 * np.ones((2, 2), dtype=complex))
    for kt in (0.0, 0.1, 1.0, 10.0):
        f = np.exp(-kt)
        want = 0.5 * np.array([[2 - f * f, f], [f, f * f]], dtype=complex)
        got = apply_damping(plus, "a", kappa=kt, dt=1.0)
        assert np.max(np.abs(got.matrix - want)) <= 1e-12

    rng = np.random.default_rng(2026)
    for _ in range(1000):
        kappa, dt = rng.uniform(0, 300), rng.uniform(0, 0.05)
        for kraus in (amplitude_kraus(kappa, dt), dephasing_kraus(kappa, dt)):
            s = sum(k.conj().T @ k for k in kraus)
            assert np.max(np.abs(s - np.eye(2))) <= 1e-12
        dt1, dt2 = rng.uniform(0, 0.02, size=2)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        rho = DensityMatrix(layout, np.outer(v, v.conj()))
        two = apply_damping(apply_damping(rho, "a", kappa, dt1), "a", kappa, dt2)
        one = apply_damping(rho, "a", kappa, dt1 + dt2)
        assert np.max(np.abs(two.matrix - one.matrix)) <= 1e-12

    for _ in range(25):
        kappa, dt = rng.uniform(0, 200), rng.uniform(0, 0.02)
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        v /= np.linalg.norm(v)
        rho = DensityMatrix(SubsystemLayout([("a", 2), ("b", 2)]), np.outer(v, v.conj()))
        got = apply_damping(rho, "a", kappa, dt)
        want = env_channel_oracle(rho.matrix, [2, 2], 0, kappa, dt)
        assert np.max(np.abs(got.matrix - want)) <= 1e-10


@criterion("decayed protocol equals the explicit-environment oracle to 1e-10")
def test_decayed_run_against_environment_oracle():
    params = ProtocolParams()
    for outcome in ALL_OUTCOMES:
        from ptqed.decoherence import run_with_decay

        got = run_with_decay(params, outcome)
        want_rho, want_p = full_protocol_env_oracle(params, outcome)
        assert np.max(np.abs(got.rho32.matrix - want_rho)) <= 1e-10
        assert abs(got.probability - want_p) <= 1e-12


@criterion("decay fidelity at completion: reference-matching curve has F(t4) in "
           "[0.98, 1.0]; full-schedule values reported alongside")
def test_decay_fidelity_at_completion():
    report = decay_report(ProtocolParams())
    # the literal full-schedule model is computed and reported ...
    full = {(c.variant, c.onset): c for c in report.curves}
    assert (AMPLITUDE, "channel-prepared") in full
    assert (DEPHASING, "channel-prepared") in full
    # ... and does NOT reproduce the reference completion fidelity; the
    # variant the report identifies as matching does.
    assert report.matching is not None
    assert 0.98 <= report.matching.completion_fidelity <= 1.0


@criterion("decay long-time point: both curve variants computed, at least one has "
           "F(t_f) in [0.60, 0.72], discrepancy analysis emitted")
def test_decay_long_time_point():
    report = decay_report(ProtocolParams())
    variants = {c.variant for c in report.curves}
    assert variants == {AMPLITUDE, DEPHASING}
    assert any(0.60 <= c.late_fidelity <= 0.72 for c in report.curves)
    text = report.text
    assert "analysis:" in text
    assert "coherence-only" in text and "0.99" in text


@criterion("fluctuation closed form: F(c0,0)=1, F(0,x) reduction, quadrature "
           "self-convergence, F >= 0.95 through x = 0.03, < 30 s")
def test_fluctuation_closed_form():
    start = time.perf_counter()
    for c0 in np.linspace(0, 1, 21):
        assert abs(closed_form_fidelity(float(c0), 0.0) - 1.0) <= 1e-12
    for x in np.linspace(0, 0.05, 21):
        want = 2.0 / (3.0 - np.exp(-(x**2) * np.pi**2 / 2))
        assert abs(closed_form_fidelity(0.0, float(x)) - want) <= 1e-12
    params = ProtocolParams()
    for x in (0.01, 0.03, 0.05):
        f21 = averaged_fidelity(params, x, BellOutcome.PSI_PLUS, order=21).value
        f41 = averaged_fidelity(params, x, BellOutcome.PSI_PLUS, order=41).value
        assert abs(f21 - f41) < 1e-9
    for c0 in np.linspace(0, 1, 21):
        for x in np.linspace(0, 0.03, 16):
            assert closed_form_fidelity(float(c0), float(x)) >= 0.95
    assert time.perf_counter() - start < 30.0


@criterion("closed form vs numeric: per-branch max |dF| reported, matching branch named")
def test_closed_form_vs_numeric_branch_study():
    report = branch_match_report(
        [0.0, 0.25, 0.5, 1 / RT2, 0.9, 1.0], [0.005, 0.015, 0.03, 0.05], order=21
    )
    # unconditional per-outcome reporting, both conventions
    assert {(e.outcome, e.convention) for e in report.entries} == {
        (o, c) for o in ALL_OUTCOMES for c in ("vacuum", "traced")
    }
    named = report.named_branches(VACUUM)
    assert named, "no branch reproduces the closed form within 1e-3"
    assert named[0] in (BellOutcome.PSI_PLUS, BellOutcome.PSI_MINUS)
    best = min(
        e.max_delta
        for e in report.entries
        if e.convention == VACUUM and e.outcome is named[0]
    )
    assert best <= 1e-12
    assert "corresponds to branch" in report.text


@criterion("determinism: identical config and seed give byte-identical CSV twice")
def test_csv_determinism(tmp_path):
    out = tmp_path / "det.csv"
    args = [
        "--scenario", "fluctuation", "--method", "montecarlo", "--samples", "20000",
        "--seed", "42", "--x-grid", "0:0.02:3", "--out", str(out),
    ]
    assert cli_main(args) == 0
    first = out.read_bytes()
    assert cli_main(args) == 0
    assert out.read_bytes() == first

    out2 = tmp_path / "det_ideal.csv"
    args2 = ["--scenario", "ideal", "--seed", "7", "--out", str(out2)]
    assert cli_main(args2) == 0
    first2 = out2.read_bytes()
    assert cli_main(args2) == 0
    assert out2.read_bytes() == first2
