"""Circuit-simulation tests: exact agreement with the closed forms plus the
structural guarantees the heralding logic relies on."""

import math

import pytest

from nlrouter import analytics
from nlrouter.protocols import (
    BELL_STATES,
    bell_state,
    run_bell_measurement,
    run_evl_bell_measurement,
    run_ghz,
    run_router,
)

PI = math.pi
AGREE = 1e-10
EXACT = 1e-12


class TestRouter:
    def test_single_photon_exits_single_port(self):
        probs = run_router(1.7, math.inf, n_photons=1)
        assert abs(probs[(1, 0)] - 1.0) < EXACT

    def test_balanced_point(self):
        probs = run_router(PI / 2, math.inf)
        assert abs(probs[(2, 0)] - 0.25) < EXACT
        assert abs(probs[(1, 1)] - 0.5) < EXACT
        assert abs(probs[(0, 2)] - 0.25) < EXACT

    def test_full_phase_routes_pair(self):
        probs = run_router(PI, math.inf)
        assert abs(probs[(0, 2)] - 1.0) < EXACT

    def test_lossy_distribution_matches_squared_amplitudes(self):
        od = 30.0
        for i in range(128):
            phi = PI * i / 127
            probs = run_router(phi, od)
            tau = 1.0 - math.exp(-2.0 * (od / 4.0 - math.sqrt((od / 4.0) ** 2 - phi ** 2)))
            a = 0.5 * (math.sqrt(1 - tau) * math.cos(phi) - 1.0)
            b = 0.5 * (math.sqrt(1 - tau) * math.cos(phi) + 1.0)
            assert abs(probs.get((2, 0), 0.0) - b * b) < EXACT
            assert abs(probs.get((1, 1), 0.0) - 0.5 * (1 - tau) * math.sin(phi) ** 2) < EXACT
            assert abs(probs.get((0, 2), 0.0) - a * a) < EXACT
            # photon absorbed in the medium, partner photon at either port
            assert abs(probs.get((1, 0), 0.0) - tau / 4.0) < EXACT
            assert abs(probs.get((0, 1), 0.0) - tau / 4.0) < EXACT

    def test_probabilities_sum_to_one(self):
        total = sum(run_router(2.0, 12.0).values())
        assert abs(total - 1.0) < EXACT

    def test_invalid_photon_number(self):
        with pytest.raises(ValueError, match="1 or 2"):
            run_router(1.0, math.inf, n_photons=3)


class TestBellMeasurement:
    @pytest.mark.parametrize("phi", [0.0, PI / 4, PI / 3, 2.0, PI])
    @pytest.mark.parametrize("od_b", [math.inf, 30.0])
    def test_matches_formula(self, phi, od_b):
        r = run_bell_measurement(phi, od_b, 0.97)
        assert abs(r.p_success - analytics.p_bell_measurement(phi, od_b, 0.97)) < AGREE
        assert abs(r.total() - 1.0) < EXACT

    def test_detuned_matches_formula(self):
        phi, phi1 = 1.3, -1.3 / 11
        r = run_bell_measurement(phi, 40.0, 0.95, phi1)
        assert abs(r.p_success - analytics.p_bell_measurement(phi, 40.0, 0.95, phi1)) < AGREE

    def test_antisymmetric_states_always_heralded(self):
        # the two states that never bunch are identified whenever both
        # photons survive, independent of the conditional phase
        for phi in (0.5, 1.5, 2.5):
            r = run_bell_measurement(phi, math.inf, 1.0)
            assert abs(r.per_state["psi_minus"].p_success - 1.0) < EXACT
            assert abs(r.per_state["phi_minus"].p_success - 1.0) < EXACT

    def test_success_patterns_disjoint_at_full_phase(self):
        r = run_bell_measurement(PI, math.inf, 1.0)
        pattern_sets = {}
        for name, res in r.per_state.items():
            pattern_sets[name] = {
                o.pattern for o in res.outcomes if o.classification.startswith("success")
            }
            assert pattern_sets[name]
        names = list(pattern_sets)
        for i, n1 in enumerate(names):
            for n2 in names[i + 1 :]:
                assert not pattern_sets[n1] & pattern_sets[n2]

    def test_no_silent_loss(self):
        r = run_bell_measurement(1.0, 20.0, 0.9)
        assert r.p_silent_loss == 0.0

    def test_unknown_input(self):
        with pytest.raises(ValueError, match="unknown input state"):
            run_bell_measurement(1.0, input_state="banana")


class TestAncillaAssistedBellMeasurement:
    @pytest.mark.parametrize("phi", [0.0, PI / 3, 2.2, PI])
    @pytest.mark.parametrize("od_b", [math.inf, 30.0])
    def test_matches_formula(self, phi, od_b):
        r = run_evl_bell_measurement(phi, od_b, 0.93)
        assert abs(r.p_success - analytics.p_evl_bell_measurement(phi, od_b, 0.93)) < AGREE
        assert abs(r.total() - 1.0) < EXACT

    def test_beats_plain_bell_measurement(self):
        # at full detection efficiency the ancilla only adds heralds
        for phi in (0.0, 1.0, 2.0):
            assert (
                run_evl_bell_measurement(phi, 30.0).p_success
                >= run_bell_measurement(phi, 30.0).p_success - EXACT
            )

    def test_symmetric_state_rescued(self):
        # the orthogonally polarized pair at a single-photon port is trusted
        r = run_evl_bell_measurement(0.0, math.inf, 1.0)
        assert abs(r.per_state["psi_plus"].p_success - 1.0) < EXACT


class TestGhz:
    @pytest.mark.parametrize("phi", [0.0, PI / 3, 2.0, PI])
    @pytest.mark.parametrize("od_b", [math.inf, 30.0])
    def test_matches_formula(self, phi, od_b):
        r = run_ghz(phi, od_b, 0.96)
        assert abs(r.p_success - analytics.p_ghz(phi, od_b, 0.96)) < AGREE
        assert abs(r.total() - 1.0) < EXACT

    def test_detuned_matches_formula(self):
        phi, phi1 = 1.8, -1.8 / 11
        r = run_ghz(phi, 40.0, 0.9, phi1)
        assert abs(r.p_success - analytics.p_ghz(phi, 40.0, 0.9, phi1)) < AGREE

    def test_success_state_is_exact_ghz(self):
        # heralded successes carry unit fidelity even with medium loss
        for phi, od in ((PI, math.inf), (PI / 3, 30.0), (2.0, 15.0)):
            r = run_ghz(phi, od, 0.95)
            assert r.success_fidelity == pytest.approx(1.0, abs=1e-9)

    def test_delay_loss_becomes_false_positive(self):
        clean = run_ghz(PI, math.inf, 1.0)
        lossy = run_ghz(PI, math.inf, 1.0, delay_transmission=0.8)
        assert abs(clean.p_false_positive) < EXACT
        assert abs(lossy.p_success - 0.8) < EXACT
        assert abs(lossy.p_false_positive - 0.2) < EXACT


class TestBellStates:
    def test_orthonormal(self):
        states = [bell_state(n) for n in BELL_STATES]
        for i, si in enumerate(states):
            for j, sj in enumerate(states):
                expected = 1.0 if i == j else 0.0
                assert abs(abs(si.inner(sj)) - expected) < EXACT

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown Bell state"):
            bell_state("chi_plus")
