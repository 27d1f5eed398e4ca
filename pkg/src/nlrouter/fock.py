"""Sparse few-photon state vectors and the optical elements acting on them.

States are kept as a mapping from occupation vectors to complex amplitudes.
Loss is purified: every absorption event moves the lost photon into a
dedicated sink mode instead of tracing it out, so the global state stays a
normalized ket and total photon number is conserved exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

__all__ = [
    "ModeId",
    "FockState",
    "OutcomeRecord",
    "ElementSpec",
    "NonlinearMediumSpec",
    "apply_element",
    "apply_beamsplitter",
    "apply_phase",
    "apply_pbs",
    "apply_rotation_45",
    "apply_nonlinear_medium",
    "apply_loss",
    "apply_detector_efficiency",
    "measure_all",
]

PRUNE_TOL = 1e-15

_HV = ("H", "V")
_DIAG = ("+", "-")


@dataclass(frozen=True, order=True)
class ModeId:
    """A single bosonic mode: spatial label, optional polarization, sink flag.

    Sink modes hold photons that left the computational path (medium
    absorption, detector inefficiency).  ``tag`` distinguishes physically
    orthogonal absorption events so loss branches never interfere.
    """

    spatial: str
    pol: Optional[str] = None
    sink: bool = False
    tag: str = ""

    def label(self) -> str:
        base = self.spatial if self.pol is None else f"{self.spatial}_{self.pol}"
        if self.sink:
            base += f"!{self.tag}" if self.tag else "!"
        return base


class FockState:
    """Sparse ket over an ordered registry of modes.

    ``terms`` maps occupation tuples (aligned with ``modes``) to amplitudes.
    All mutating helpers return new instances; the registry only ever grows.
    """

    __slots__ = ("modes", "terms")

    def __init__(self, modes: Sequence[ModeId] = (), terms: Optional[Mapping[tuple, complex]] = None):
        self.modes: tuple[ModeId, ...] = tuple(modes)
        self.terms: dict[tuple, complex] = dict(terms or {})

    # ---------------------------------------------------------------- basics

    @classmethod
    def vacuum(cls, modes: Sequence[ModeId] = ()) -> "FockState":
        modes = tuple(modes)
        return cls(modes, {(0,) * len(modes): 1.0 + 0.0j})

    @classmethod
    def from_occupations(cls, occupations: Mapping[ModeId, int]) -> "FockState":
        modes = tuple(occupations)
        occ = tuple(occupations[m] for m in modes)
        return cls(modes, {occ: 1.0 + 0.0j})

    def copy(self) -> "FockState":
        return FockState(self.modes, dict(self.terms))

    def index_of(self, mode: ModeId) -> int:
        return self.modes.index(mode)

    def ensure_modes(self, new_modes: Iterable[ModeId]) -> "FockState":
        """Return an equivalent state whose registry includes ``new_modes``."""
        missing = list(dict.fromkeys(m for m in new_modes if m not in self.modes))
        if not missing:
            return self
        modes = self.modes + tuple(missing)
        pad = (0,) * len(missing)
        return FockState(modes, {occ + pad: a for occ, a in self.terms.items()})

    def occupation(self, occ: tuple, mode: ModeId) -> int:
        try:
            return occ[self.modes.index(mode)]
        except ValueError:
            return 0

    def norm_squared(self) -> float:
        return sum((a.real * a.real + a.imag * a.imag) for a in self.terms.values())

    def total_photons(self) -> set[int]:
        """Set of total photon numbers present across basis terms."""
        return {sum(occ) for occ in self.terms}

    def prune(self, tol: float = PRUNE_TOL) -> "FockState":
        return FockState(self.modes, {occ: a for occ, a in self.terms.items() if abs(a) > tol})

    def scaled(self, factor: complex) -> "FockState":
        return FockState(self.modes, {occ: a * factor for occ, a in self.terms.items()})

    def normalized(self) -> "FockState":
        n = math.sqrt(self.norm_squared())
        if n == 0.0:
            raise ValueError("cannot normalize a zero state")
        return self.scaled(1.0 / n)

    def add(self, other: "FockState") -> "FockState":
        a = self.ensure_modes(other.modes)
        b = other.ensure_modes(a.modes)
        # align b's occupation order with a's registry
        perm = [b.modes.index(m) for m in a.modes]
        terms = dict(a.terms)
        for occ, amp in b.terms.items():
            key = tuple(occ[p] for p in perm)
            terms[key] = terms.get(key, 0.0j) + amp
        return FockState(a.modes, terms)

    def tensor(self, other: "FockState") -> "FockState":
        """Product state on the disjoint union of the two registries."""
        overlap = set(self.modes) & set(other.modes)
        if overlap:
            raise ValueError(f"tensor factors share modes: {sorted(m.label() for m in overlap)}")
        modes = self.modes + other.modes
        terms = {}
        for occ_a, amp_a in self.terms.items():
            for occ_b, amp_b in other.terms.items():
                terms[occ_a + occ_b] = amp_a * amp_b
        return FockState(modes, terms)

    def inner(self, other: "FockState") -> complex:
        a = self.ensure_modes(other.modes)
        b = other.ensure_modes(a.modes)
        perm = [b.modes.index(m) for m in a.modes]
        bterms = {tuple(occ[p] for p in perm): amp for occ, amp in b.terms.items()}
        out = 0.0j
        for occ, amp in a.terms.items():
            if occ in bterms:
                out += amp.conjugate() * bterms[occ]
        return out

    def fidelity(self, other: "FockState") -> float:
        return abs(self.inner(other)) ** 2

    def restricted(self, keep: Sequence[ModeId]) -> "FockState":
        """Project registry down to ``keep``; other modes must be empty."""
        idx = [self.modes.index(m) for m in keep]
        drop = [i for i in range(len(self.modes)) if i not in idx]
        terms: dict[tuple, complex] = {}
        for occ, amp in self.terms.items():
            if any(occ[i] for i in drop):
                raise ValueError("restricted() requires dropped modes to be empty")
            key = tuple(occ[i] for i in idx)
            terms[key] = terms.get(key, 0.0j) + amp
        return FockState(tuple(keep), terms)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        parts = []
        for occ, amp in sorted(self.terms.items()):
            ket = ",".join(f"{n}:{m.label()}" for n, m in zip(occ, self.modes) if n)
            parts.append(f"({amp:.4g})|{ket or 'vac'}>")
        return " + ".join(parts) or "0"


# ------------------------------------------------------------------ channels


def _apply_linear_map(state: FockState, mapping: Mapping[ModeId, Sequence[tuple[ModeId, complex]]]) -> FockState:
    """Apply a (partial-isometry) linear map on creation operators.

    Each input mode operator is replaced by the given combination of output
    operators; occupation factorials are handled so normalized kets map to
    normalized kets whenever the single-photon matrix is an isometry.
    """
    targets = [m for outs in mapping.values() for m, _ in outs]
    state = state.ensure_modes(list(mapping) + targets)
    modes = state.modes
    mapped_idx = {m: modes.index(m) for m in mapping}
    new_terms: dict[tuple, complex] = {}
    for occ, amp in state.terms.items():
        base = list(occ)
        amp_eff = amp
        powers: list[tuple[ModeId, int]] = []
        for m, i in mapped_idx.items():
            n = occ[i]
            if n:
                base[i] = 0
                amp_eff /= math.sqrt(math.factorial(n))
                powers.append((m, n))
        if not powers:
            new_terms[occ] = new_terms.get(occ, 0.0j) + amp
            continue
        # polynomial over added occupations: dict added_occ_tuple -> coeff
        poly: dict[tuple[int, ...], complex] = {(0,) * len(modes): 1.0 + 0.0j}
        for m, n in powers:
            outs = [(modes.index(t), c) for t, c in mapping[m]]
            for _ in range(n):
                nxt: dict[tuple[int, ...], complex] = {}
                for add, coeff in poly.items():
                    for j, c in outs:
                        key = add[:j] + (add[j] + 1,) + add[j + 1 :]
                        nxt[key] = nxt.get(key, 0.0j) + coeff * c
                poly = nxt
        for add, coeff in poly.items():
            factor = 1.0
            final = list(base)
            for j, extra in enumerate(add):
                if extra:
                    final[j] += extra
                    factor *= math.sqrt(math.factorial(final[j]) / math.factorial(base[j]))
            key = tuple(final)
            new_terms[key] = new_terms.get(key, 0.0j) + amp_eff * coeff * factor
    return FockState(modes, new_terms).prune()


def _pol_variants(state: FockState, spatial: str) -> list[Optional[str]]:
    """Polarizations with actual photon support in ``spatial`` (sinks excluded)."""
    pols = set()
    for i, m in enumerate(state.modes):
        if m.spatial == spatial and not m.sink:
            if any(occ[i] for occ in state.terms):
                pols.add(m.pol)
    return sorted(pols, key=str) or [None]


def _spatial_map(state: FockState, pairs: Mapping[str, Sequence[tuple[str, complex]]]) -> FockState:
    """Lift a spatial-mode map to every polarization submode present."""
    mapping: dict[ModeId, list[tuple[ModeId, complex]]] = {}
    for src, outs in pairs.items():
        for pol in _pol_variants(state, src):
            key = ModeId(src, pol)
            if key in state.modes:
                mapping[key] = [(ModeId(dst, pol), c) for dst, c in outs]
    return _apply_linear_map(state, mapping) if mapping else state


def apply_beamsplitter(state: FockState, in1: Optional[str], in2: Optional[str], out1: str, out2: str) -> FockState:
    """Balanced beam splitter: in1 -> (out2 + i out1)/sqrt2, in2 -> (out1 + i out2)/sqrt2.

    Either input may be ``None`` (vacuum port).  Polarization submodes are
    transformed independently.
    """
    s = 1.0 / math.sqrt(2.0)
    pairs: dict[str, list[tuple[str, complex]]] = {}
    if in1 is not None:
        pairs[in1] = [(out2, s), (out1, 1j * s)]
    if in2 is not None:
        pairs[in2] = [(out1, s), (out2, 1j * s)]
    return _spatial_map(state, pairs)


def apply_phase(state: FockState, spatial: str, phase: float) -> FockState:
    """Phase shifter: every photon in ``spatial`` picks up exp(i*phase)."""
    c = complex(math.cos(phase), math.sin(phase))
    return _spatial_map(state, {spatial: [(spatial, c)]})


def apply_pbs(state: FockState, in1: str, in2: str, out1: str, out2: str) -> FockState:
    """Polarizing beam splitter: H transmits, V reflects with a factor i.

    in1_H -> out2_H, in1_V -> i*out1_V, in2_H -> out1_H, in2_V -> i*out2_V.
    Photons must be expressed in the H/V basis.
    """
    mapping: dict[ModeId, list[tuple[ModeId, complex]]] = {}
    for src, t_out, r_out in ((in1, out2, out1), (in2, out1, out2)):
        for pol in _pol_variants(state, src):
            if pol is None:
                continue  # vacuum port
            if pol not in _HV:
                raise ValueError(f"PBS input {src} carries polarization {pol!r}; expected H/V")
            key = ModeId(src, pol)
            if key in state.modes:
                if pol == "H":
                    mapping[key] = [(ModeId(t_out, "H"), 1.0 + 0.0j)]
                else:
                    mapping[key] = [(ModeId(r_out, "V"), 1j)]
    return _apply_linear_map(state, mapping) if mapping else state


def apply_rotation_45(state: FockState, spatial: str) -> FockState:
    """45-degree polarization rotation between the H/V and +/- bases.

    H -> (+ + -)/sqrt2, V -> (+ - -)/sqrt2 and, when the mode already holds
    diagonal labels, the inverse map back to H/V.  Applying the rotation and
    then its inverse is the identity.
    """
    pols = [p for p in _pol_variants(state, spatial) if p is not None]
    if not pols:
        return state
    if all(p in _HV for p in pols):
        src, dst = _HV, _DIAG
    elif all(p in _DIAG for p in pols):
        src, dst = _DIAG, _HV
    else:
        raise ValueError(f"mode {spatial} mixes polarization bases: {pols}")
    s = 1.0 / math.sqrt(2.0)
    mapping = {}
    for pol in src:
        key = ModeId(spatial, pol)
        if key in state.modes:
            mapping[key] = [(ModeId(spatial, dst[0]), s), (ModeId(spatial, dst[1]), s if pol == src[0] else -s)]
    return _apply_linear_map(state, mapping) if mapping else state


def apply_loss(state: FockState, spatial: str, transmission: float, tag: str = "lin") -> FockState:
    """Linear (single-photon) loss channel on every photon of a spatial mode."""
    if not 0.0 <= transmission <= 1.0:
        raise ValueError("transmission must lie in [0, 1]")
    t = math.sqrt(transmission)
    r = math.sqrt(1.0 - transmission)
    mapping: dict[ModeId, list[tuple[ModeId, complex]]] = {}
    for pol in _pol_variants(state, spatial):
        key = ModeId(spatial, pol)
        if key in state.modes:
            mapping[key] = [(key, t + 0.0j), (ModeId(spatial, pol, sink=True, tag=tag), r + 0.0j)]
    return _apply_linear_map(state, mapping) if mapping else state


@dataclass(frozen=True)
class NonlinearMediumSpec:
    """Conditional-phase medium parameters for one router.

    phi1/tau1 act on each photon alone; phi2/tau2 are the extra phase and
    absorption picked up by the second photon of a blockaded pair.  The phase
    signs are mirrored between the two interferometer arms via the per-arm
    sign passed to :func:`apply_nonlinear_medium`.

    ``interaction_basis`` names the polarization basis the arm photons must be
    expressed in.  ``pair_coupling`` selects whether only same-polarization
    pairs are blockaded (self-phase modulation) or any two photons sharing the
    arm ("any", polarization-insensitive blockade).
    """

    phi1: float
    tau1: float
    phi2: float
    tau2: float
    interaction_basis: str = "diagonal"  # "diagonal" or "hv"
    pair_coupling: str = "same_polarization"  # or "any"

    @property
    def phi(self) -> float:
        """Conditional phase of the pair relative to two independent photons."""
        return self.phi2 - self.phi1


def _basis_pols(basis: str) -> tuple[str, ...]:
    if basis == "diagonal":
        return _DIAG
    if basis == "hv":
        return _HV
    raise ValueError(f"unknown interaction basis {basis!r}")


def apply_nonlinear_medium(state: FockState, arm: str, spec: NonlinearMediumSpec, sign: int = 1) -> FockState:
    """Send one interferometer arm through the nonlinear medium.

    Every basis term is expanded over the Kraus branches of the medium:
    single photons get sqrt(1-tau1)*exp(i*sign*phi1) plus an absorption
    branch; photon pairs in the arm get the blockaded-pair amplitude
    sqrt((1-tau1)(1-tau2))*exp(i*sign*(phi1+phi2)) plus first/second-photon
    absorption branches.  Branch probabilities sum to 1 exactly.  More than
    two photons in one arm is unsupported.
    """
    if sign not in (-1, 1):
        raise ValueError("arm phase sign must be +1 or -1")
    allowed = _basis_pols(spec.interaction_basis)
    arm_modes = [m for m in state.modes if m.spatial == arm and not m.sink]
    for m in arm_modes:
        if m.pol is not None and m.pol not in allowed:
            raise ValueError(
                f"arm {arm} photon polarization {m.pol!r} is not in the medium's "
                f"{spec.interaction_basis} interaction basis"
            )
    if not arm_modes:
        return state

    def sink(pol: Optional[str], kind: str) -> ModeId:
        return ModeId(arm, pol, sink=True, tag=kind)

    sinks = [sink(m.pol, k) for m in arm_modes for k in ("single", "pair")]
    state = state.ensure_modes(sinks)
    modes = state.modes
    idx = {m: modes.index(m) for m in arm_modes}
    sidx = {(m.pol, k): modes.index(sink(m.pol, k)) for m in arm_modes for k in ("single", "pair")}

    t1 = math.sqrt(1.0 - spec.tau1)
    t2 = math.sqrt(1.0 - spec.tau2)
    e1 = complex(math.cos(sign * spec.phi1), math.sin(sign * spec.phi1))
    e12 = complex(math.cos(sign * (spec.phi1 + spec.phi2)), math.sin(sign * (spec.phi1 + spec.phi2)))
    r1 = math.sqrt(spec.tau1)
    r2 = math.sqrt(spec.tau2)

    new_terms: dict[tuple, complex] = {}

    def put(occ: tuple, amp: complex) -> None:
        if amp != 0.0:
            new_terms[occ] = new_terms.get(occ, 0.0j) + amp

    for occ, amp in state.terms.items():
        occupied = [(m, occ[i]) for m, i in idx.items() if occ[i]]
        n = sum(c for _, c in occupied)
        if n == 0:
            put(occ, amp)
        elif n == 1:
            (m, _), = occupied
            put(occ, amp * t1 * e1)
            lost = list(occ)
            lost[idx[m]] = 0
            lost[sidx[(m.pol, "single")]] += 1
            put(tuple(lost), amp * r1)
        elif n == 2:
            same_pol = len(occupied) == 1
            blockaded = same_pol or spec.pair_coupling == "any"
            if blockaded:
                put(occ, amp * t1 * t2 * e12)
                singles = [m for m, c in occupied for _ in range(c)]
                w = 1.0 / math.sqrt(len(singles) if not same_pol else 1.0)
                for kind, amp_k in (("pair", t1 * r2 * e1), ("single", r1)):
                    if amp_k == 0.0:
                        continue
                    if same_pol:
                        m = occupied[0][0]
                        lost = list(occ)
                        lost[idx[m]] -= 1
                        lost[sidx[(m.pol, kind)]] += 1
                        put(tuple(lost), amp * amp_k)
                    else:
                        for m in singles:
                            lost = list(occ)
                            lost[idx[m]] -= 1
                            lost[sidx[(m.pol, kind)]] += 1
                            put(tuple(lost), amp * amp_k * w)
            else:
                # two distinguishable-polarization photons, self-phase only:
                # each passes the single-photon channel independently
                (ma, _), (mb, _) = occupied
                branches = [((1, 1), amp * (t1 * e1) ** 2)]
                for keep, lose in ((ma, mb), (mb, ma)):
                    lost = list(occ)
                    lost[idx[lose]] = 0
                    lost[sidx[(lose.pol, "single")]] += 1
                    branches.append((tuple(lost), amp * t1 * e1 * r1))
                both = list(occ)
                both[idx[ma]] = both[idx[mb]] = 0
                both[sidx[(ma.pol, "single")]] += 1
                both[sidx[(mb.pol, "single")]] += 1
                branches.append((tuple(both), amp * r1 * r1))
                first = branches.pop(0)
                put(occ, first[1])
                for key, a in branches:
                    put(tuple(key), a)
        else:
            raise ValueError(f"nonlinear medium supports at most 2 photons per arm, got {n}")
    return FockState(modes, new_terms).prune()


def apply_detector_efficiency(state: FockState, spatials: Sequence[str], p_de: float) -> FockState:
    """Model per-photon detection efficiency on the listed detector modes.

    Each photon independently survives with probability ``p_de`` or moves to
    an undetected sink for its detector, yielding the exact binomial click
    statistics for number-resolving detectors.
    """
    if not 0.0 <= p_de <= 1.0:
        raise ValueError("p_de must lie in [0, 1]")
    if p_de == 1.0:
        return state
    for sp in spatials:
        state = apply_loss(state, sp, p_de, tag="undet")
    return state


# ---------------------------------------------------------------- elements


@dataclass(frozen=True)
class ElementSpec:
    """Declarative description of one circuit element.

    kind: "bs", "pbs", "rot45", "phase", "medium", "loss" or "detector_eff".
    ``params`` carries the kind-specific arguments (see :func:`apply_element`).
    """

    kind: str
    params: dict = field(default_factory=dict)


def apply_element(state: FockState, spec: ElementSpec) -> FockState:
    kind, p = spec.kind, spec.params
    if kind == "bs":
        return apply_beamsplitter(state, p.get("in1"), p.get("in2"), p["out1"], p["out2"])
    if kind == "pbs":
        return apply_pbs(state, p["in1"], p["in2"], p["out1"], p["out2"])
    if kind == "rot45":
        return apply_rotation_45(state, p["spatial"])
    if kind == "phase":
        return apply_phase(state, p["spatial"], p["phase"])
    if kind == "medium":
        return apply_nonlinear_medium(state, p["arm"], p["spec"], p.get("sign", 1))
    if kind == "loss":
        return apply_loss(state, p["spatial"], p["transmission"], p.get("tag", "lin"))
    if kind == "detector_eff":
        return apply_detector_efficiency(state, p["spatials"], p["p_de"])
    raise ValueError(f"unknown element kind {spec.kind!r}")


# -------------------------------------------------------------- measurement


@dataclass
class OutcomeRecord:
    """One detection pattern with its probability and protocol verdict."""

    pattern: tuple[tuple[str, int], ...]
    probability: float
    classification: str = ""
    posterior: Optional[FockState] = None

    def clicks(self) -> int:
        return sum(n for _, n in self.pattern)


def measure_all(state: FockState, detected: Sequence[ModeId], keep_posterior: bool = False) -> list[OutcomeRecord]:
    """Enumerate photon-number patterns over the detected modes.

    Undetected modes (including every sink) are marginalized; the posterior,
    when requested, is the renormalized conditional state with the detected
    modes projected out.
    """
    state = state.ensure_modes(detected)
    det_idx = [state.modes.index(m) for m in detected]
    rest_idx = [i for i in range(len(state.modes)) if i not in det_idx]
    rest_modes = tuple(state.modes[i] for i in rest_idx)
    groups: dict[tuple, dict[tuple, complex]] = {}
    for occ, amp in state.terms.items():
        key = tuple(occ[i] for i in det_idx)
        groups.setdefault(key, {})[tuple(occ[i] for i in rest_idx)] = amp
    records = []
    for key in sorted(groups):
        sub = groups[key]
        prob = sum(abs(a) ** 2 for a in sub.values())
        pattern = tuple(
            (m.label(), n) for m, n in zip(detected, key) if n
        )
        post = None
        if keep_posterior and prob > 0.0:
            post = FockState(rest_modes, sub).scaled(1.0 / math.sqrt(prob))
        records.append(OutcomeRecord(pattern=pattern, probability=prob, posterior=post))
    return records
