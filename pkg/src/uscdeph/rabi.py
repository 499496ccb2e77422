"""Quantum Rabi model in both gauges with gauge-correct dephasing rates.

The dipole-gauge Hamiltonian is

    H_D = omega_c a^dag a + (omega_q/2) sigma_z - i eta omega_c (a - a^dag) sigma_x

(the constant eta^2 omega_c is dropped), and the Coulomb-gauge one is

    H_C = omega_c a^dag a + (omega_q/2) [sigma_z cos(2A) + sigma_y sin(2A)],

with A = eta (a + a^dag).  They are related by T = exp(-i A sigma_x) through
T H_C T^dag = H_D + eta^2 omega_c.

Physical subsystem observables are gauge dependent: the qubit population
difference is sigma_z in the dipole gauge but T^dag sigma_z T in the Coulomb
gauge, and the photon number is a^dag a in the Coulomb gauge but
a_D^dag a_D (a_D = a + i eta sigma_x) in the dipole gauge.  Using the bare
operator in the other gauge is the deliberately wrong "naive" mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from . import fock
from .exceptions import (
    ContractViolationError,
    DegenerateTrackingError,
    TruncationError,
)
from .fock import Operator, SpaceDescriptor
from .sweep import SweepResult, SweepRow

TRACKING_STEP = 0.01
TRACKING_MIN_STEP = 1e-7
OVERLAP_AMBIGUITY = 1e-6
OVERLAP_CONTINUITY = 0.9
CONVERGENCE_DRIFT = 1e-8
CONVERGENCE_MARGIN = 8

# |omega| below this counts as "zero frequency" for spectral densities.
ZERO_FREQ_TOL = 1e-9


def default_cutoff(eta: float) -> int:
    """Fock truncation for a Rabi computation at coupling eta.

    The DSC displacement grows like eta, so the required support grows
    quadratically; the constant floor keeps weak-coupling runs honest.
    """
    return max(20, math.ceil(10.0 + 10.0 * eta + 16.0 * eta * eta))


@dataclass(frozen=True)
class RabiParams:
    """Rabi-model parameters in units of the cavity frequency."""

    omega_q: float
    eta: float
    omega_c: float = 1.0
    cutoff: Optional[int] = None

    def __post_init__(self):
        if self.omega_c <= 0 or self.omega_q <= 0:
            raise ContractViolationError("omega_c and omega_q must be positive")
        if self.eta < 0:
            raise ContractViolationError("eta must be >= 0")

    @property
    def detuning(self) -> float:
        return self.omega_q - self.omega_c

    @property
    def resolved_cutoff(self) -> int:
        return self.cutoff if self.cutoff is not None else default_cutoff(self.eta)

    def with_eta(self, eta: float) -> "RabiParams":
        return RabiParams(self.omega_q, eta, self.omega_c, self.cutoff)


@dataclass(frozen=True)
class DephasingChannel:
    """A fluctuating subsystem: which one, how strongly, and in which mode.

    gamma0 is the bare dephasing rate; the default spectral density is the
    low-frequency one, S_f(0) = gamma0/2 and zero elsewhere.
    """

    target: str  # "qubit" | "cavity"
    gamma0: float
    spectral_density: Optional[Callable[[float], float]] = None
    gauge_mode: str = "correct"

    def __post_init__(self):
        if self.target not in ("qubit", "cavity"):
            raise ContractViolationError(f"unknown channel target {self.target!r}")
        if self.gamma0 < 0:
            raise ContractViolationError("gamma0 must be >= 0")
        if self.gauge_mode not in ("correct", "naive_coulomb", "naive_dipole"):
            raise ContractViolationError(f"unknown gauge_mode {self.gauge_mode!r}")

    def density(self) -> Callable[[float], float]:
        if self.spectral_density is not None:
            return self.spectral_density
        s0 = self.gamma0 / 2.0
        return lambda omega: s0 if abs(omega) < ZERO_FREQ_TOL else 0.0


@lru_cache(maxsize=32)
def _embedded_ops(cutoff: int) -> Dict[str, Operator]:
    a = fock.annihilation(cutoff)
    idq = fock.identity(fock.qubit_space())
    idf = fock.identity(fock.boson_space(cutoff))
    return {
        "a": fock.tensor(idq, a),
        "n": fock.tensor(idq, fock.number(cutoff)),
        "sx": fock.tensor(fock.pauli("x"), idf),
        "sy": fock.tensor(fock.pauli("y"), idf),
        "sz": fock.tensor(fock.pauli("z"), idf),
        "id": fock.tensor(idq, idf),
        "a_field": a,
    }


def rabi_space(cutoff: int) -> SpaceDescriptor:
    return fock.qubit_space() * fock.boson_space(cutoff)


def build_dipole_hamiltonian(p: RabiParams, cutoff: Optional[int] = None) -> Operator:
    """H_D without the constant eta^2 omega_c term."""
    n_fock = cutoff if cutoff is not None else p.resolved_cutoff
    ops = _embedded_ops(n_fock)
    a, sx, sz = ops["a"].matrix, ops["sx"].matrix, ops["sz"].matrix
    h = (
        p.omega_c * ops["n"].matrix
        + 0.5 * p.omega_q * sz
        - 1j * p.eta * p.omega_c * (a - a.conj().T) @ sx
    )
    return Operator(rabi_space(n_fock), 0.5 * (h + h.conj().T), hermitian=True)


def build_coulomb_hamiltonian(p: RabiParams, cutoff: Optional[int] = None) -> Operator:
    """H_C with cos(2A), sin(2A) evaluated by spectral calculus on A."""
    n_fock = cutoff if cutoff is not None else p.resolved_cutoff
    ops = _embedded_ops(n_fock)
    cos2a, sin2a = _field_trig(p.eta, n_fock)
    idq = fock.identity(fock.qubit_space())
    h = (
        p.omega_c * ops["n"].matrix
        + 0.5
        * p.omega_q
        * (
            fock.tensor(fock.pauli("z"), cos2a).matrix
            + fock.tensor(fock.pauli("y"), sin2a).matrix
        )
    )
    return Operator(rabi_space(n_fock), 0.5 * (h + h.conj().T), hermitian=True)


@lru_cache(maxsize=64)
def _field_trig(eta: float, cutoff: int) -> Tuple[Operator, Operator]:
    """cos(2A) and sin(2A) on the field space, A = eta (a + a^dag)."""
    a = fock.annihilation(cutoff).matrix
    gen = Operator(
        fock.boson_space(cutoff), eta * (a + a.conj().T), hermitian=True
    )
    cos2a = fock.hermitian_matfunc(gen, lambda x: np.cos(2.0 * x))
    sin2a = fock.hermitian_matfunc(gen, lambda x: np.sin(2.0 * x))
    return cos2a, sin2a


def build_hamiltonian(p: RabiParams, gauge: str, cutoff: Optional[int] = None) -> Operator:
    if gauge == "dipole":
        return build_dipole_hamiltonian(p, cutoff)
    if gauge == "coulomb":
        return build_coulomb_hamiltonian(p, cutoff)
    raise ContractViolationError(f"unknown gauge {gauge!r}")


def gauge_unitary(p: RabiParams, cutoff: Optional[int] = None) -> Operator:
    """T = exp(-i A sigma_x) with A = eta (a + a^dag); T H_C T^dag = H_D + eta^2."""
    n_fock = cutoff if cutoff is not None else p.resolved_cutoff
    ops = _embedded_ops(n_fock)
    a = ops["a"].matrix
    gen_m = p.eta * (a + a.conj().T) @ ops["sx"].matrix
    gen = Operator(rabi_space(n_fock), 0.5 * (gen_m + gen_m.conj().T), hermitian=True)
    return fock.expm_hermitian_generator(gen, scale=1.0)


def channel_operator(
    ch: DephasingChannel,
    p: RabiParams,
    gauge: str,
    cutoff: Optional[int] = None,
) -> Operator:
    """The operator the fluctuation couples through, in the requested gauge.

    correct mode: qubit -> sigma_z (dipole) or T^dag sigma_z T (Coulomb,
    built from its closed trig form); cavity -> a^dag a (Coulomb) or
    a_D^dag a_D (dipole).  naive_* modes use the bare operator in the
    named gauge, which is the paper-style wrong choice for the channel
    whose canonical variables that gauge dresses.
    """
    if gauge not in ("dipole", "coulomb"):
        raise ContractViolationError(f"unknown gauge {gauge!r}")
    if ch.gauge_mode == "naive_coulomb" and gauge != "coulomb":
        raise ContractViolationError("naive_coulomb channel evaluated in non-Coulomb gauge")
    if ch.gauge_mode == "naive_dipole" and gauge != "dipole":
        raise ContractViolationError("naive_dipole channel evaluated in non-dipole gauge")

    n_fock = cutoff if cutoff is not None else p.resolved_cutoff
    ops = _embedded_ops(n_fock)

    if ch.gauge_mode in ("naive_coulomb", "naive_dipole"):
        bare = ops["sz"] if ch.target == "qubit" else ops["n"]
        return bare

    if ch.target == "qubit":
        if gauge == "dipole":
            return ops["sz"]
        cos2a, sin2a = _field_trig(p.eta, n_fock)
        m = (
            fock.tensor(fock.pauli("z"), cos2a).matrix
            + fock.tensor(fock.pauli("y"), sin2a).matrix
        )
        return Operator(rabi_space(n_fock), 0.5 * (m + m.conj().T), hermitian=True)

    if gauge == "coulomb":
        return ops["n"]
    a, sx = ops["a"].matrix, ops["sx"].matrix
    m = (
        ops["n"].matrix
        + 1j * p.eta * (a.conj().T - a) @ sx
        + p.eta**2 * ops["id"].matrix
    )
    return Operator(rabi_space(n_fock), 0.5 * (m + m.conj().T), hermitian=True)


# ---------------------------------------------------------------------------
# Dressed-state labeling by adiabatic continuation
# ---------------------------------------------------------------------------

def label_sequence(n_levels: int) -> Tuple[str, ...]:
    """Dressed-state names in JC order: 0, 1-, 1+, 2-, 2+, ..."""
    names = ["0"]
    n = 1
    while len(names) < n_levels:
        names.append(f"{n}-")
        if len(names) < n_levels:
            names.append(f"{n}+")
        n += 1
    return tuple(names)


@dataclass(frozen=True)
class LabeledSpectrum:
    """Eigensystem plus a map from dressed-state names to eigenstate indices."""

    energies: np.ndarray
    states: np.ndarray
    labels: Dict[str, int]
    space: SpaceDescriptor
    gauge: str

    def index(self, label: str) -> int:
        try:
            return self.labels[label]
        except KeyError:
            raise ContractViolationError(
                f"label {label!r} not resolved (have {sorted(self.labels)})"
            ) from None

    def state(self, label: str) -> np.ndarray:
        return self.states[:, self.index(label)]

    def energy(self, label: str) -> float:
        return float(self.energies[self.index(label)])


def _product_index(qubit_excited: bool, n_fock_state: int, cutoff: int) -> int:
    # basis ordering (|e>, |g>) x Fock, qubit slow index
    return (0 if qubit_excited else 1) * cutoff + n_fock_state


def _seed_indices(p: RabiParams, n_levels: int, cutoff: int) -> Tuple[int, ...]:
    """Product-state indices matching label_sequence at eta = 0."""
    if abs(p.detuning) == 0.0:
        raise DegenerateTrackingError(
            "cannot seed labels at eta=0 with zero detuning: single-excitation "
            "states are degenerate"
        )
    indices = [_product_index(False, 0, cutoff)]
    n = 1
    while len(indices) < n_levels:
        # manifold n: |g,n> at n*omega_c - omega_q/2, |e,n-1> at (n-1)*omega_c + omega_q/2
        e_gn = n * p.omega_c - 0.5 * p.omega_q
        e_en = (n - 1) * p.omega_c + 0.5 * p.omega_q
        if e_gn < e_en:
            pair = [(False, n), (True, n - 1)]
        else:
            pair = [(True, n - 1), (False, n)]
        indices.append(_product_index(*pair[0], cutoff))
        if len(indices) < n_levels:
            indices.append(_product_index(*pair[1], cutoff))
        n += 1
    return tuple(indices[:n_levels])


def _match_step(tracked: np.ndarray, vectors: np.ndarray) -> Optional[np.ndarray]:
    """Match tracked columns to new eigenvector columns by max overlap.

    Returns the new index per tracked state, or None when the step must be
    halved (ambiguous overlaps, weak continuity, or index collision).
    """
    overlaps = np.abs(vectors.conj().T @ tracked)  # (dim, m)
    m = tracked.shape[1]
    chosen = np.empty(m, dtype=int)
    for j in range(m):
        col = overlaps[:, j]
        order = np.argsort(col)
        best, second = col[order[-1]], col[order[-2]]
        if best <= OVERLAP_CONTINUITY:
            return None
        if best - second < OVERLAP_AMBIGUITY:
            return None
        chosen[j] = order[-1]
    if len(set(chosen.tolist())) != m:
        return None
    return chosen


def label_states(
    p: RabiParams,
    n_levels: int,
    gauge: str = "dipole",
    check_convergence: bool = True,
) -> LabeledSpectrum:
    """Label the lowest dressed states by adiabatic continuation from eta = 0."""
    cutoff = p.resolved_cutoff
    if n_levels > 2 * cutoff:
        raise ContractViolationError(
            f"n_levels={n_levels} exceeds dimension {2 * cutoff}"
        )
    spec = _labels_along(p, [p.eta], gauge, n_levels)[p.eta]
    if check_convergence:
        _check_truncation(p, gauge, n_levels)
    return spec


@lru_cache(maxsize=512)
def _eig_cached(omega_q: float, eta: float, omega_c: float, gauge: str, cutoff: int):
    p = RabiParams(omega_q, eta, omega_c, cutoff)
    return fock.hermitian_eig(build_hamiltonian(p, gauge, cutoff))


def _eig(p: RabiParams, gauge: str, cutoff: int):
    return _eig_cached(p.omega_q, p.eta, p.omega_c, gauge, cutoff)


def _check_truncation(p: RabiParams, gauge: str, n_levels: int) -> None:
    """Re-run at an enlarged cutoff; excitation energies must be stable."""
    cutoff = p.resolved_cutoff
    k = min(max(n_levels + 2, 6), 2 * cutoff - 1)
    low = _eig(p, gauge, cutoff)
    high = _eig(p, gauge, cutoff + CONVERGENCE_MARGIN)
    drift = fock.relative_drift(low.excitations()[:k], high.excitations()[:k])
    if drift >= CONVERGENCE_DRIFT:
        raise TruncationError(
            f"Rabi spectrum not converged at cutoff {cutoff} "
            f"(eta={p.eta}, drift={drift:.3e})",
            cutoff=cutoff,
            drift=drift,
        )


def dressed_spectrum(p: RabiParams, gauge: str, check_convergence: bool = True):
    """Eigensystem of the requested gauge Hamiltonian at the resolved cutoff."""
    if check_convergence:
        _check_truncation(p, gauge, n_levels=10)
    return _eig(p, gauge, p.resolved_cutoff)


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

def _evaluation_gauge(ch: DephasingChannel, gauge: Optional[str]) -> str:
    if ch.gauge_mode == "naive_coulomb":
        if gauge not in (None, "coulomb"):
            raise ContractViolationError("naive_coulomb must be evaluated in the Coulomb gauge")
        return "coulomb"
    if ch.gauge_mode == "naive_dipole":
        if gauge not in (None, "dipole"):
            raise ContractViolationError("naive_dipole must be evaluated in the dipole gauge")
        return "dipole"
    return gauge or "dipole"


def _levels_for(transition: Tuple[str, str]) -> int:
    seq = label_sequence(64)
    need = 0
    for lbl in transition:
        if lbl not in seq:
            raise ContractViolationError(f"unknown dressed-state label {lbl!r}")
        need = max(need, seq.index(lbl) + 1)
    return need


def transition_dephasing_rate(
    p: RabiParams,
    ch: DephasingChannel,
    transition: Tuple[str, str],
    gauge: Optional[str] = None,
    spectrum: Optional[LabeledSpectrum] = None,
) -> float:
    """Pure-dephasing rate (gamma0/2) |<j|O|j> - <k|O|k>|^2 of a transition.

    The rate convention is the full-width one: the (j,k) coherence decays
    like exp(-gamma t / 2).
    """
    eval_gauge = _evaluation_gauge(ch, gauge)
    if spectrum is None:
        spectrum = label_states(p, _levels_for(transition), gauge=eval_gauge)
    elif spectrum.gauge != eval_gauge:
        raise ContractViolationError(
            f"spectrum tracked in {spectrum.gauge!r} but evaluation needs {eval_gauge!r}"
        )
    op = channel_operator(ch, p, eval_gauge)
    j, k = (spectrum.state(lbl) for lbl in transition)
    dj = np.real(j.conj() @ op.matrix @ j)
    dk = np.real(k.conj() @ op.matrix @ k)
    return 0.5 * ch.gamma0 * abs(dj - dk) ** 2


def rate_sweep(
    p_grid: Sequence[RabiParams],
    ch: DephasingChannel,
    transitions: Sequence[Tuple[str, str]],
    gauge: Optional[str] = None,
) -> SweepResult:
    """Dephasing rates over a parameter grid, one row per (point, transition).

    Points sharing omega_q are tracked incrementally along ascending eta at
    a common cutoff, so a dense sweep costs one continuation pass.
    """
    if not p_grid:
        raise ContractViolationError("empty parameter grid")
    eval_gauge = _evaluation_gauge(ch, gauge)
    n_levels = max(_levels_for(t) for t in transitions)

    rows = []
    groups: Dict[Tuple[float, float, Optional[int]], list] = {}
    for p in p_grid:
        groups.setdefault((p.omega_q, p.omega_c, p.cutoff), []).append(p)

    for (omega_q, omega_c, cutoff_opt), points in sorted(groups.items()):
        etas = sorted({p.eta for p in points})
        cutoff = cutoff_opt if cutoff_opt is not None else default_cutoff(max(etas))
        spectra = _labels_along(
            RabiParams(omega_q, etas[-1], omega_c, cutoff), etas, eval_gauge, n_levels
        )
        for eta in etas:
            p_point = RabiParams(omega_q, eta, omega_c, cutoff)
            spec = spectra[eta]
            converged = True
            try:
                _check_truncation(p_point, eval_gauge, n_levels)
            except TruncationError as err:
                raise TruncationError(
                    f"grid point eta={eta}, detuning={omega_q - omega_c}: {err}",
                    cutoff=err.cutoff,
                    drift=err.drift,
                ) from err
            op = channel_operator(ch, p_point, eval_gauge)
            for transition in transitions:
                j, k = (spec.state(lbl) for lbl in transition)
                dj = np.real(j.conj() @ op.matrix @ j)
                dk = np.real(k.conj() @ op.matrix @ k)
                rate = 0.5 * ch.gamma0 * abs(dj - dk) ** 2
                rows.append(
                    SweepRow(
                        coupling=eta,
                        detuning=omega_q - omega_c,
                        label=f"{transition[0]}:{transition[1]}",
                        quantity="rate",
                        value=rate,
                        mode=ch.gauge_mode,
                        gauge=eval_gauge,
                        converged=converged,
                    )
                )
    result = SweepResult(rows=rows, meta={"model": "rabi", "channel": ch.target})
    result.sort()
    return result


def _labels_along(
    p_final: RabiParams, etas: Sequence[float], gauge: str, n_levels: int
) -> Dict[float, LabeledSpectrum]:
    """One continuation pass capturing the LabeledSpectrum at each grid eta."""
    cutoff = p_final.resolved_cutoff
    dim = 2 * cutoff
    names = label_sequence(n_levels)
    seeds = _seed_indices(p_final, n_levels, cutoff)
    tracked = np.zeros((dim, n_levels), dtype=complex)
    for j, idx in enumerate(seeds):
        tracked[idx, j] = 1.0

    out: Dict[float, LabeledSpectrum] = {}
    wanted = sorted(set(etas))
    checkpoints = sorted(set(wanted) | {0.0})
    eta_now = 0.0
    spectrum = _eig(p_final.with_eta(0.0), gauge, cutoff)
    chosen = _match_step(tracked, spectrum.vectors)
    if chosen is None:
        raise DegenerateTrackingError("degenerate product states at eta = 0")
    tracked = spectrum.vectors[:, chosen]
    if 0.0 in set(wanted):
        out[0.0] = LabeledSpectrum(
            spectrum.values,
            spectrum.vectors,
            {n: int(i) for n, i in zip(names, chosen)},
            spectrum.space,
            gauge,
        )

    for target in [e for e in checkpoints if e > 0.0]:
        n_steps = max(1, math.ceil((target - eta_now) / TRACKING_STEP))
        pending = list(np.linspace(eta_now, target, n_steps + 1))[1:][::-1]
        guard = 0
        while pending:
            guard += 1
            if guard > 200000:
                raise DegenerateTrackingError("tracking failed to converge (step budget)")
            eta_next = pending[-1]
            spectrum = _eig(p_final.with_eta(eta_next), gauge, cutoff)
            chosen = _match_step(tracked, spectrum.vectors)
            if chosen is None:
                if eta_next - eta_now < TRACKING_MIN_STEP:
                    raise DegenerateTrackingError(
                        f"overlap ambiguity at eta={eta_next:.6g} below minimum step"
                    )
                pending.append(0.5 * (eta_now + eta_next))
                continue
            pending.pop()
            tracked = spectrum.vectors[:, chosen]
            eta_now = eta_next
        if target in set(wanted):
            out[target] = LabeledSpectrum(
                spectrum.values,
                spectrum.vectors,
                {n: int(i) for n, i in zip(names, chosen)},
                spectrum.space,
                gauge,
            )
    return out
