"""Phase-loss tradeoff of the blockade-based conditional-phase medium.

The attainable conditional phase phi and pair absorption epsilon of the
medium lie on a circle set by the blockaded optical depth: the absorbed
fraction is tau = 1 - exp(-eps) with

    eps/2 = od_b/4 -+ sqrt((od_b/4)^2 - phi^2).

The lower branch (smaller loss) is the physically preferred operating point.
Phases with |phi| > od_b/4 are unreachable; phi = pi needs od_b > 4*pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "CirclePoint",
    "DetunedParams",
    "loss_from_phase",
    "detuned_params",
    "effective_od_with_cavity",
]


@dataclass(frozen=True)
class CirclePoint:
    """One operating point: conditional phase, loss exponent, absorbed fraction."""

    phi: float
    eps: float
    tau: float


@dataclass(frozen=True)
class DetunedParams:
    """Single-photon and pair channel parameters at a detuned operating point.

    phi1/tau1 apply to every photon individually, phi2/tau2 to the second
    photon of a blockaded pair; the observable conditional phase of the pair
    is phi = phi2 - phi1.
    """

    phi1: float
    tau1: float
    phi2: float
    tau2: float

    @property
    def phi(self) -> float:
        return self.phi2 - self.phi1


def loss_from_phase(phi: float, od_b: float, branch: str = "lower") -> CirclePoint:
    """Loss exponent and absorbed fraction at conditional phase ``phi``.

    ``od_b`` is the blockaded optical depth; ``od_b = inf`` gives the
    lossless limit tau = 0 for any phase.  Raises ValueError when ``phi``
    lies outside the reachable range |phi| <= od_b/4.
    """
    if od_b <= 0.0:
        raise ValueError("od_b must be positive")
    if math.isinf(od_b):
        return CirclePoint(phi=phi, eps=0.0, tau=0.0)
    radius = od_b / 4.0
    if abs(phi) > radius:
        raise ValueError(f"phase {phi:g} unreachable at od_b={od_b:g}; |phi| <= od_b/4 required")
    root = math.sqrt(radius * radius - phi * phi)
    if branch == "lower":
        eps = 2.0 * (radius - root)
    elif branch == "upper":
        eps = 2.0 * (radius + root)
    else:
        raise ValueError(f"branch must be 'lower' or 'upper', got {branch!r}")
    return CirclePoint(phi=phi, eps=eps, tau=1.0 - math.exp(-eps))


def detuned_params(phi: float, od_b: float, phi1: float, branch: str = "lower") -> DetunedParams:
    """Operating point where single photons already pick up phase ``phi1``.

    Both the single-photon point (at phi1) and the pair point (at
    phi2 = phi + phi1) must sit on the phase-loss circle; the residual
    single-photon phase is compensated elsewhere in the interferometer, so
    only the loss pair (tau1, tau2) and the conditional phase survive.
    """
    p1 = loss_from_phase(phi1, od_b, branch)
    p2 = loss_from_phase(phi + phi1, od_b, branch)
    return DetunedParams(phi1=phi1, tau1=p1.tau, phi2=phi + phi1, tau2=p2.tau)


def effective_od_with_cavity(od_total: float, exponent: float = 0.4) -> float:
    """Cavity-enhancement figure of merit (od_total / 2) ** exponent.

    Quantifies how a moderate-finesse cavity around the medium stretches a
    given total optical depth; useful for comparing operating regimes, not
    used by the protocol simulations directly.
    """
    if od_total <= 0.0:
        raise ValueError("od_total must be positive")
    return (od_total / 2.0) ** exponent
