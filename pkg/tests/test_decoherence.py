"""Tests for the atomic-decay channel and the decayed protocol run."""

import numpy as np
import pytest

from ptqed.decoherence import (
    AMPLITUDE,
    DEPHASING,
    DampingChannel,
    DampingEvent,
    amplitude_kraus,
    apply_damping,
    apply_dephasing,
    decay_report,
    default_damping_events,
    dephasing_kraus,
    fidelity_vs_time,
    post_measurement_events,
    run_with_decay,
)
from ptqed.protocol import (
    ALL_OUTCOMES,
    BellOutcome,
    ProtocolParams,
)
from ptqed.qstate import DensityMatrix, SubsystemLayout

from oracles import env_channel_oracle, full_protocol_env_oracle

RT2 = np.sqrt(2.0)
PARAMS = ProtocolParams()


def plus_density():
    m = 0.5 * np.ones((2, 2), dtype=complex)
    return DensityMatrix(SubsystemLayout([("a", 2)]), m)


def damped_plus_matrix(kt: float) -> np.ndarray:
    """The decayed superposition (|g>+|e>)/sqrt2, written out directly:
    rho_ee = e^{-2kt}/2, rho_gg = (2-e^{-2kt})/2, coherences e^{-kt}/2."""
    f = np.exp(-kt)
    return 0.5 * np.array([[2 - f * f, f], [f, f * f]], dtype=complex)


def random_density(dim, rng, rank=2):
    m = np.zeros((dim, dim), dtype=complex)
    for p in rng.dirichlet(np.ones(rank)):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        v /= np.linalg.norm(v)
        m += p * np.outer(v, v.conj())
    return m


class TestDampingChannel:
    @pytest.mark.parametrize("kt", [0.0, 0.1, 1.0, 10.0])
    def test_matches_damped_superposition_matrix(self, kt):
        out = apply_damping(plus_density(), "a", kappa=kt, dt=1.0)
        np.testing.assert_allclose(out.matrix, damped_plus_matrix(kt), atol=1e-12)

    def test_zero_rate_is_identity(self):
        rng = np.random.default_rng(31)
        rho = DensityMatrix(SubsystemLayout([("a", 2)]), random_density(2, rng))
        out = apply_damping(rho, "a", kappa=0.0, dt=5.0)
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-15)

    def test_long_time_limit_is_ground(self):
        rng = np.random.default_rng(32)
        rho = DensityMatrix(SubsystemLayout([("a", 2)]), random_density(2, rng))
        out = apply_damping(rho, "a", kappa=1.0, dt=1e3)
        np.testing.assert_allclose(out.matrix, np.diag([1.0, 0.0]), atol=1e-12)

    def test_negative_interval_rejected(self):
        with pytest.raises(ValueError):
            apply_damping(plus_density(), "a", kappa=1.0, dt=-0.1)
        with pytest.raises(ValueError):
            DampingChannel(kappa=1.0, dt=-1.0)

    def test_jump_probability_range(self):
        rng = np.random.default_rng(33)
        for _ in range(100):
            ch = DampingChannel(kappa=rng.uniform(0, 50), dt=rng.uniform(0, 0.1))
            assert 0.0 <= ch.jump_probability <= 1.0

    def test_cptp_on_random_parameters(self):
        """sum E^dag E = identity to 1e-12 across 1000 random (kappa, dt),
        for both channel variants."""
        rng = np.random.default_rng(34)
        for _ in range(1000):
            kappa, dt = rng.uniform(0, 200), rng.uniform(0, 0.05)
            for kraus in (amplitude_kraus(kappa, dt), dephasing_kraus(kappa, dt)):
                s = sum(k.conj().T @ k for k in kraus)
                assert np.max(np.abs(s - np.eye(2))) <= 1e-12
        assert DampingChannel(100.0, 1e-3).cptp_defect() <= 1e-12

    def test_semigroup_composition(self):
        """Damping for dt1 then dt2 equals damping for dt1+dt2 entrywise."""
        rng = np.random.default_rng(35)
        layout = SubsystemLayout([("a", 2)])
        for _ in range(50):
            kappa = rng.uniform(0, 100)
            dt1, dt2 = rng.uniform(0, 0.02, size=2)
            rho = DensityMatrix(layout, random_density(2, rng))
            two_step = apply_damping(apply_damping(rho, "a", kappa, dt1), "a", kappa, dt2)
            one_step = apply_damping(rho, "a", kappa, dt1 + dt2)
            np.testing.assert_allclose(two_step.matrix, one_step.matrix, atol=1e-12)
            two_d = apply_dephasing(apply_dephasing(rho, "a", kappa, dt1), "a", kappa, dt2)
            one_d = apply_dephasing(rho, "a", kappa, dt1 + dt2)
            np.testing.assert_allclose(two_d.matrix, one_d.matrix, atol=1e-12)

    def test_distinct_atoms_commute(self):
        rng = np.random.default_rng(36)
        layout = SubsystemLayout([("a", 2), ("b", 2)])
        rho = DensityMatrix(layout, random_density(4, rng))
        ab = apply_damping(apply_damping(rho, "a", 30.0, 1e-3), "b", 50.0, 2e-3)
        ba = apply_damping(apply_damping(rho, "b", 50.0, 2e-3), "a", 30.0, 1e-3)
        np.testing.assert_allclose(ab.matrix, ba.matrix, atol=1e-14)

    def test_population_decays_exponentially(self):
        """An initially excited free atom keeps excited population
        e^{-2 kappa t} to machine precision."""
        layout = SubsystemLayout([("a", 2)])
        rho = DensityMatrix(layout, np.diag([0.0, 1.0]).astype(complex))
        for kt in (0.05, 0.5, 2.0):
            out = apply_damping(rho, "a", kappa=kt, dt=1.0)
            assert out.matrix[1, 1].real == pytest.approx(np.exp(-2 * kt), abs=1e-15)

    def test_explicit_environment_oracle_single_channel(self):
        """Carrying the environment qubit explicitly and tracing it out
        reproduces the operator-sum channel on random states."""
        rng = np.random.default_rng(37)
        layout = SubsystemLayout([("a", 2), ("b", 2)])
        for _ in range(20):
            kappa, dt = rng.uniform(0, 100), rng.uniform(0, 0.02)
            rho = DensityMatrix(layout, random_density(4, rng, rank=3))
            got = apply_damping(rho, "b", kappa, dt)
            want = env_channel_oracle(rho.matrix, [2, 2], 1, kappa, dt)
            np.testing.assert_allclose(got.matrix, want, atol=1e-10)


class TestRunWithDecay:
    def test_zero_decay_reproduces_ideal(self):
        params = ProtocolParams(c0=0.6, c1=0.8, kappa=0.0)
        for outcome in ALL_OUTCOMES:
            res = run_with_decay(params, outcome)
            assert res.fidelity == pytest.approx(1.0, abs=1e-12)
            assert res.probability == pytest.approx(0.25, abs=1e-12)

    def test_conditioned_state_is_physical(self):
        res = run_with_decay(PARAMS, BellOutcome.PSI_PLUS)
        res.rho32.check_physical()

    @pytest.mark.parametrize("outcome", ALL_OUTCOMES)
    def test_matches_explicit_environment_oracle(self, outcome):
        """The operator-sum pipeline agrees entrywise (1e-10) with a pure
        state simulation carrying one environment qubit per atom per event."""
        got = run_with_decay(PARAMS, outcome)
        want_rho, want_p = full_protocol_env_oracle(PARAMS, outcome)
        np.testing.assert_allclose(got.rho32.matrix, want_rho, atol=1e-10)
        assert got.probability == pytest.approx(want_p, abs=1e-12)

    def test_oracle_agreement_off_default_coefficients(self):
        params = ProtocolParams(c0=0.28j, c1=np.sqrt(1 - 0.28**2), kappa=140.0)
        got = run_with_decay(params, BellOutcome.PHI_MINUS)
        want_rho, want_p = full_protocol_env_oracle(params, BellOutcome.PHI_MINUS)
        np.testing.assert_allclose(got.rho32.matrix, want_rho, atol=1e-10)

    def test_event_validation(self):
        events = list(default_damping_events(PARAMS))
        with pytest.raises(ValueError):
            run_with_decay(PARAMS, BellOutcome.PSI_PLUS, events=events[:-1])
        bad = [DampingEvent(events[1].time, ("atomX",))] + events[1:]
        with pytest.raises(ValueError):
            run_with_decay(PARAMS, BellOutcome.PSI_PLUS, events=bad)

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            run_with_decay(PARAMS, BellOutcome.PSI_PLUS, variant="thermal")


class TestFidelityVsTime:
    def test_starts_at_unity(self):
        pts = fidelity_vs_time(PARAMS, BellOutcome.PSI_PLUS, [0.0])
        assert pts[0][1] == pytest.approx(1.0, abs=1e-12)

    def test_monotone_after_completion(self):
        t4 = PARAMS.schedule.t4
        grid = np.linspace(t4, 8e-3, 40)
        for variant in (AMPLITUDE, DEPHASING):
            pts = fidelity_vs_time(PARAMS, BellOutcome.PSI_PLUS, grid, variant=variant)
            fs = [f for _, f in pts]
            assert all(b <= a + 1e-12 for a, b in zip(fs, fs[1:]))

    def test_flag_freezes_curve_after_completion(self):
        t4 = PARAMS.schedule.t4
        pts = fidelity_vs_time(
            PARAMS, BellOutcome.PSI_PLUS, [t4, 5e-3], free_evolution_beyond_t4=False
        )
        assert pts[0][1] == pytest.approx(pts[1][1], abs=1e-15)

    def test_partial_schedule_interpolates(self):
        t4 = PARAMS.schedule.t4
        pts = fidelity_vs_time(PARAMS, BellOutcome.PSI_PLUS, [0.0, t4 / 2, t4])
        assert pts[0][1] > pts[1][1] > pts[2][1]

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            fidelity_vs_time(PARAMS, BellOutcome.PSI_PLUS, [-1e-3])

    def test_completion_values_both_variants(self):
        """Frozen completion fidelities of the two schedule variants at the
        nominal operating point (values pinned by the environment oracle)."""
        t4 = PARAMS.schedule.t4
        amp = fidelity_vs_time(PARAMS, BellOutcome.PSI_PLUS, [t4], variant=AMPLITUDE)[0][1]
        dep = fidelity_vs_time(PARAMS, BellOutcome.PSI_PLUS, [t4], variant=DEPHASING)[0][1]
        assert amp == pytest.approx(0.812865, abs=5e-6)
        assert dep == pytest.approx(0.942834, abs=5e-6)


class TestDecayReport:
    def test_identifies_post_measurement_dephasing(self):
        report = decay_report(PARAMS)
        assert report.matching is not None
        assert report.matching.variant == DEPHASING
        assert report.matching.onset == "post-measurement"

    def test_matching_curve_reproduces_reference_points(self):
        report = decay_report(PARAMS)
        assert 0.98 <= report.matching.completion_fidelity <= 1.0
        assert 0.60 <= report.matching.late_fidelity <= 0.72

    def test_full_schedule_variants_reported_too(self):
        report = decay_report(PARAMS)
        onsets = {(c.variant, c.onset) for c in report.curves}
        assert (AMPLITUDE, "channel-prepared") in onsets
        assert (DEPHASING, "channel-prepared") in onsets
        full_amp = next(
            c for c in report.curves if (c.variant, c.onset) == (AMPLITUDE, "channel-prepared")
        )
        assert not full_amp.matches_reference

    def test_analysis_text_present(self):
        text = decay_report(PARAMS).text
        assert "analysis:" in text
        assert "coherence-only" in text

    def test_post_measurement_dephasing_matches_closed_curve(self):
        """The matching curve equals 1 - 2|c0 c1|^2 (1 - e^{-2k(t-t2)})
        up to the (tiny) probe-atom dephasing during its Ramsey crossing."""
        t2, t4 = PARAMS.schedule.t2, PARAMS.schedule.t4
        events = post_measurement_events(PARAMS)
        for t in (t4, 2e-3, 5.78e-3):
            got = fidelity_vs_time(
                PARAMS, BellOutcome.PSI_PLUS, [t], variant=DEPHASING, events=events
            )[0][1]
            want = 1 - 2 * abs(PARAMS.c0 * PARAMS.c1) ** 2 * (
                1 - np.exp(-2 * PARAMS.kappa * (t - t2))
            )
            assert got == pytest.approx(want, abs=2e-4)
