"""Phase-loss circle and detuned operating-point tests."""

import math
import random

import pytest

from nlrouter.rydberg import detuned_params, effective_od_with_cavity, loss_from_phase

TOL = 1e-12


def test_zero_phase_endpoints():
    od = 8.0
    assert abs(loss_from_phase(0.0, od, "lower").eps - 0.0) < TOL
    assert abs(loss_from_phase(0.0, od, "upper").eps - od) < TOL


def test_apex_joins_branches():
    od = 3.5
    apex = od / 4.0
    lo = loss_from_phase(apex, od, "lower")
    hi = loss_from_phase(apex, od, "upper")
    assert abs(lo.eps - hi.eps) < TOL
    assert abs(lo.eps - od / 2.0) < TOL


def test_circle_residual_random_points():
    rng = random.Random(20260826)
    for _ in range(2000):
        od = rng.uniform(1.0, 100.0)
        phi = rng.uniform(-od / 4.0, od / 4.0)
        branch = rng.choice(("lower", "upper"))
        cp = loss_from_phase(phi, od, branch)
        residual = (cp.eps / 2.0 - od / 4.0) ** 2 + phi ** 2 - (od / 4.0) ** 2
        assert abs(residual) < TOL
        assert abs(cp.tau - (1.0 - math.exp(-cp.eps))) < TOL


def test_unreachable_phase_raises():
    # reaching phi = pi needs od_b of at least 4*pi
    with pytest.raises(ValueError, match="unreachable"):
        loss_from_phase(math.pi, 4.0 * math.pi - 1e-9)
    loss_from_phase(math.pi, 4.0 * math.pi)  # apex of the circle, maximal loss


def test_lossless_limit():
    cp = loss_from_phase(2.5, math.inf)
    assert cp.eps == 0.0 and cp.tau == 0.0


def test_invalid_inputs():
    with pytest.raises(ValueError, match="positive"):
        loss_from_phase(0.1, -1.0)
    with pytest.raises(ValueError, match="branch"):
        loss_from_phase(0.1, 8.0, branch="middle")


def test_detuned_params_conditional_phase():
    d = detuned_params(math.pi / 3, 30.0, -0.1)
    assert abs(d.phi - math.pi / 3) < TOL
    assert abs(d.phi2 - (math.pi / 3 - 0.1)) < TOL
    # both points sit on the same circle
    for phi, tau in ((d.phi1, d.tau1), (d.phi2, d.tau2)):
        cp = loss_from_phase(phi, 30.0)
        assert abs(cp.tau - tau) < TOL


def test_detuned_resonant_limit_has_lossless_singles():
    d = detuned_params(1.2, 30.0, 0.0)
    assert d.tau1 == 0.0
    assert d.tau2 > 0.0


def test_cavity_figure_of_merit():
    assert abs(effective_od_with_cavity(2.0) - 1.0) < TOL
    assert effective_od_with_cavity(200.0) == (100.0) ** 0.4
    with pytest.raises(ValueError):
        effective_od_with_cavity(0.0)
