"""Closed-form success probabilities of the entangling protocols.

All formulas are exact expectations over the ideal input ensembles; the
circuit simulations in :mod:`nlrouter.protocols` must agree with them to
numerical precision.  Parameters: conditional phase ``phi``, blockaded
optical depth ``od_b`` (sets absorption through the phase-loss circle),
per-photon detection efficiency ``p_de`` and optional single-photon detuning
phase ``phi1`` for the rebalanced operating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .rydberg import detuned_params, loss_from_phase

__all__ = [
    "p_bell_measurement",
    "p_evl_bell_measurement",
    "p_ghz",
    "p_cnot",
    "p_factorization",
    "OptimalPhaseResult",
    "find_optimal_phase",
    "ScalingFit",
    "fit_scaling_exponent",
]


def _interference_terms(phi: float, od_b: float, phi1: float) -> tuple[float, float, float]:
    """(t1sq, pair_amp, tau-like survival data) for one router.

    Returns (1 - tau1, sqrt((1-tau1)(1-tau2)) * cos(phi), (1-tau1)(1-tau2) * sin^2(phi)).
    """
    d = detuned_params(phi, od_b, phi1)
    t1sq = 1.0 - d.tau1
    tpair = math.sqrt(t1sq * (1.0 - d.tau2))
    return t1sq, tpair * math.cos(phi), t1sq * (1.0 - d.tau2) * math.sin(phi) ** 2


def p_bell_measurement(phi: float, od_b: float = math.inf, p_de: float = 1.0, phi1: float = 0.0) -> float:
    """Average success probability of the two-router Bell measurement.

    The four Bell states are equally likely.  The antisymmetric states
    succeed whenever both photons survive; the symmetric ones additionally
    lose the branch where the photon pair exits the wrong router port.
    """
    t1sq, x, _ = _interference_terms(phi, od_b, phi1)
    b = 0.5 * (x + t1sq)
    d = detuned_params(phi, od_b, phi1)
    p_surv_pair = 0.5 * (t1sq * t1sq + t1sq * (1.0 - d.tau2))
    p_anti = t1sq * t1sq
    p_sym = p_surv_pair - b * b
    return p_de * p_de * 0.5 * (p_anti + p_sym)


def p_evl_bell_measurement(phi: float, od_b: float = math.inf, p_de: float = 1.0) -> float:
    """Bell-measurement success with a two-photon ancilla certifying one port.

    The ancilla lifts the symmetric-state port ambiguity, at the price of two
    extra detected photons (hence the p_de**4 scale).  No detuned variant.
    """
    cp = loss_from_phase(phi, od_b)
    tau = cp.tau
    b = 0.5 * (math.sqrt(1.0 - tau) * math.cos(phi) + 1.0)
    return p_de ** 4 * (1.0 - tau / 4.0 - b * b / 4.0)


def p_ghz(phi: float, od_b: float = math.inf, p_de: float = 1.0, phi1: float = 0.0) -> float:
    """Success probability of fusing two photonic qubits into a GHZ state."""
    t1sq, x, _ = _interference_terms(phi, od_b, phi1)
    a = x - t1sq
    return p_de * (0.5 * t1sq * t1sq + a * a / 8.0)


def p_cnot(phi: float, od_b: float = math.inf, p_de: float = 1.0, phi1: float = 0.0) -> float:
    """Heralded CNOT from two GHZ fusions and three Bell measurements."""
    return p_ghz(phi, od_b, p_de, phi1) ** 2 * p_bell_measurement(phi, od_b, p_de, phi1) ** 3


def p_factorization(phi: float, od_b: float = math.inf, p_de: float = 1.0, phi1: float = 0.0) -> float:
    """Success probability of a two-CNOT factoring circuit."""
    return p_cnot(phi, od_b, p_de, phi1) ** 2


_FORMULAS: dict[str, Callable[..., float]] = {
    "bell_measurement": p_bell_measurement,
    "evl_bell_measurement": p_evl_bell_measurement,
    "ghz": p_ghz,
    "cnot": p_cnot,
    "factorization": p_factorization,
}


@dataclass(frozen=True)
class OptimalPhaseResult:
    protocol: str
    od_b: float
    phi_opt: float
    p_opt: float


def find_optimal_phase(protocol: str, od_b: float, p_de: float = 1.0) -> OptimalPhaseResult:
    """Phase maximizing a protocol's success at fixed optical depth.

    Coarse grid scan over the reachable phase range followed by
    golden-section refinement to phase accuracy ~1e-9.
    """
    try:
        f = _FORMULAS[protocol]
    except KeyError:
        raise ValueError(f"unknown protocol {protocol!r}") from None
    hi = math.pi if math.isinf(od_b) else min(math.pi, od_b / 4.0)
    n = 10_000
    best_i, best_v = 0, -1.0
    for i in range(1, n + 1):
        phi = hi * i / n
        v = f(phi, od_b, p_de)
        if v > best_v:
            best_i, best_v = i, v
    lo_b = hi * max(best_i - 1, 1) / n
    hi_b = hi * min(best_i + 1, n) / n
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo_b, hi_b
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c, od_b, p_de), f(d, od_b, p_de)
    while b - a > 1e-9:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c, od_b, p_de)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d, od_b, p_de)
    phi_opt = 0.5 * (a + b)
    return OptimalPhaseResult(protocol=protocol, od_b=od_b, phi_opt=phi_opt, p_opt=f(phi_opt, od_b, p_de))


@dataclass(frozen=True)
class ScalingFit:
    """Power-law fit of the optimized failure probability versus optical depth."""

    protocol: str
    exponent: float
    prefactor: float
    od_values: tuple[float, ...]


def fit_scaling_exponent(
    protocol: str,
    od_min: float = 60.0,
    od_max: float = 2000.0,
    n_points: int = 20,
) -> ScalingFit:
    """Fit 1 - p_opt(od_b) ~ prefactor * od_b**exponent on a log-spaced grid."""
    ods = [od_min * (od_max / od_min) ** (i / (n_points - 1)) for i in range(n_points)]
    xs, ys = [], []
    for od in ods:
        res = find_optimal_phase(protocol, od)
        infid = 1.0 - res.p_opt
        if infid <= 0.0:
            continue
        xs.append(math.log(od))
        ys.append(math.log(infid))
    n = len(xs)
    if n < 2:
        raise ValueError("not enough points with nonzero failure probability")
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    return ScalingFit(protocol=protocol, exponent=slope, prefactor=math.exp(intercept), od_values=tuple(ods))
