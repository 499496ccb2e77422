"""Dressed-basis Lindblad propagation and a stochastic-trajectory oracle.

The master equation is

    d rho / dt = -i [H, rho] + sum_L D[L] rho,
    D[L] rho = L rho L^dag - (1/2){L^dag L, rho},

with jump operators built from a channel operator O expressed in the
dressed basis: a diagonal one with entries Phi_j = sqrt(S_f(0)) O_jj and,
when the spectral density has weight at a transition frequency, one
|j><k| jump per transition with Gamma_jk = S_f(omega_kj) |O_jk|^2.

The stochastic oracle integrates trajectories of

    i d psi / dt = (H + f(t) O) psi

with zero-mean noise whose spectral density at zero frequency is S_f(0)
(白-noise discretization: Var f_n = S_f(0)/dt per step of width dt, the
Stratonovich-consistent piecewise-constant limit).  Optionally the noise
is low-pass filtered (Ornstein-Uhlenbeck) to model the paper-style
low-frequency bath that carries no weight at the system transitions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import (
    ContractViolationError,
    FitQualityError,
    TraceDriftError,
)
from .fock import Operator

ArrayLike = Union[Operator, np.ndarray]

FREQ_MERGE_TOL = 1e-6
TRACE_DRIFT_TOL = 1e-6


def zero_frequency_density(s0: float) -> Callable[[float], float]:
    """The default low-frequency spectral density: S(0) = s0, zero elsewhere."""
    if s0 < 0:
        raise ContractViolationError("spectral density must be >= 0")
    return lambda omega: s0 if abs(omega) < 1e-9 else 0.0


def _as_matrix(op: ArrayLike) -> np.ndarray:
    if isinstance(op, Operator):
        return op.matrix
    return np.asarray(op, dtype=complex)


def _energies_and_states(spectrum) -> Tuple[np.ndarray, np.ndarray]:
    # accepts fock.Spectrum (values/vectors) or rabi.LabeledSpectrum (energies/states)
    if hasattr(spectrum, "energies"):
        return np.asarray(spectrum.energies), np.asarray(spectrum.states)
    return np.asarray(spectrum.values), np.asarray(spectrum.vectors)


@dataclass(frozen=True)
class OffDiagonalTerm:
    """One |j><k| dephasing-induced transition term."""

    j: int
    k: int
    frequency: float  # omega_kj = E_k - E_j
    gamma: float  # S_f(omega_kj) |O_jk|^2


@dataclass
class DressedDissipator:
    """Jump operators of the dressed-basis dephasing Lindbladian."""

    energies: np.ndarray
    phi: np.ndarray  # diagonal jump amplitudes Phi_j
    offdiag: List[OffDiagonalTerm]
    operators: List[np.ndarray]  # merged jump operators, zero-frequency first
    basis: object = None

    @property
    def n_levels(self) -> int:
        return len(self.phi)


def build_dressed_dissipator(
    spectrum,
    channel_op: ArrayLike,
    s_f: Callable[[float], float],
    n_levels: int,
) -> DressedDissipator:
    """Project a channel operator on the lowest dressed states and build jumps.

    Transitions closer in frequency than 1e-6 are merged into a collective
    jump (the independent-noise assumption needs well-separated lines); a
    warning is emitted because the secular treatment is marginal there.
    """
    energies, states = _energies_and_states(spectrum)
    if n_levels > len(energies):
        raise ContractViolationError(
            f"n_levels={n_levels} exceeds available {len(energies)} eigenstates"
        )
    v = states[:, :n_levels]
    o_dressed = v.conj().T @ _as_matrix(channel_op) @ v
    energies = energies[:n_levels]

    s0 = float(s_f(0.0))
    if s0 < 0:
        raise ContractViolationError("spectral density must be >= 0")
    phi = np.sqrt(s0) * np.real(np.diag(o_dressed))

    terms: List[OffDiagonalTerm] = []
    for j in range(n_levels):
        for k in range(n_levels):
            if j == k:
                continue
            freq = float(energies[k] - energies[j])
            weight = float(s_f(freq))
            if weight < 0:
                raise ContractViolationError("spectral density must be >= 0")
            gamma = weight * abs(o_dressed[j, k]) ** 2
            if gamma > 0.0:
                terms.append(OffDiagonalTerm(j, k, freq, gamma))

    # merge terms sharing a transition frequency into collective jumps
    operators: List[np.ndarray] = [np.diag(phi.astype(complex))]
    groups: List[List[OffDiagonalTerm]] = []
    for term in sorted(terms, key=lambda t: t.frequency):
        if groups and abs(term.frequency - groups[-1][0].frequency) < FREQ_MERGE_TOL:
            groups[-1].append(term)
        else:
            groups.append([term])
    for group in groups:
        if abs(group[0].frequency) < FREQ_MERGE_TOL:
            warnings.warn(
                "near-degenerate dressed levels: zero-frequency off-diagonal "
                "dephasing terms merged into the diagonal jump",
                stacklevel=2,
            )
            for t in group:
                operators[0][t.j, t.k] += math.sqrt(s0) * o_dressed[t.j, t.k]
            continue
        if len(group) > 1:
            warnings.warn(
                f"{len(group)} dephasing transitions within {FREQ_MERGE_TOL} of "
                f"omega={group[0].frequency:.6g} merged into a collective jump",
                stacklevel=2,
            )
        l_op = np.zeros((n_levels, n_levels), dtype=complex)
        for t in group:
            l_op[t.j, t.k] += math.sqrt(float(s_f(t.frequency))) * o_dressed[t.j, t.k]
        operators.append(l_op)

    return DressedDissipator(
        energies=energies, phi=phi, offdiag=terms, operators=operators, basis=spectrum
    )


@dataclass
class DensityTrajectory:
    """Stored density matrices at sample times."""

    times: np.ndarray
    states: np.ndarray  # (n_samples, dim, dim)
    meta: Dict[str, object] = field(default_factory=dict)

    def coherence(self, pair: Tuple[int, int]) -> np.ndarray:
        j, k = pair
        return self.states[:, j, k]

    def population(self, j: int) -> np.ndarray:
        return np.real(self.states[:, j, j])


def propagate(
    rho0: ArrayLike,
    h: Optional[ArrayLike],
    dis: DressedDissipator,
    t_final: float,
    dt: float,
    store_every: Optional[int] = None,
) -> DensityTrajectory:
    """Fixed-step RK4 integration of the Lindblad equation.

    `h` defaults to the diagonal dressed Hamiltonian carried by the
    dissipator.  The density matrix is re-symmetrized every step; a trace
    drift beyond 1e-6 aborts with a step-size error.
    """
    rho = np.array(_as_matrix(rho0), dtype=complex)
    hm = np.diag(dis.energies.astype(complex)) if h is None else _as_matrix(h)
    ls = [np.asarray(l, dtype=complex) for l in dis.operators]
    lds = [l.conj().T for l in ls]
    ldl = [ld @ l for l, ld in zip(ls, lds)]

    def rhs(r: np.ndarray) -> np.ndarray:
        out = -1j * (hm @ r - r @ hm)
        for l_op, l_dag, l2 in zip(ls, lds, ldl):
            out += l_op @ r @ l_dag - 0.5 * (l2 @ r + r @ l2)
        return out

    n_steps = max(1, int(round(t_final / dt)))
    dt = t_final / n_steps
    if store_every is None:
        store_every = max(1, n_steps // 800)

    times = [0.0]
    states = [rho.copy()]
    for step in range(1, n_steps + 1):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        drift = abs(np.trace(rho).real - 1.0)
        if drift > TRACE_DRIFT_TOL:
            raise TraceDriftError(
                f"trace drift {drift:.3e} at t={step * dt:.6g}; reduce dt"
            )
        if step % store_every == 0 or step == n_steps:
            times.append(step * dt)
            states.append(rho.copy())
    return DensityTrajectory(np.array(times), np.array(states), {"dt": dt})


@dataclass(frozen=True)
class RateFit:
    """Exponential fit of a coherence decay: |rho_jk| ~ exp(-rate t / 2)."""

    rate: float
    residual: float
    n_points: int


def extract_decay_rate(
    traj: DensityTrajectory,
    pair: Tuple[int, int],
    residual_tol: float = 1e-3,
    min_amp_fraction: float = math.exp(-3.0),
    skip_time: float = 0.0,
) -> RateFit:
    """Least-squares slope of log|rho_jk(t)|, reported as the full-width rate.

    The fit uses the leading window where the amplitude stays above
    `min_amp_fraction` of its initial value; Monte Carlo averages should
    raise this floor (the ensemble noise does not decay with the mean) and
    may skip an initial `skip_time` (noise-filter transient).
    """
    amp = np.abs(traj.coherence(pair))
    times = traj.times
    if skip_time > 0.0:
        k0 = int(np.searchsorted(times, skip_time))
        k0 = min(k0, len(times) - 4)
        amp = amp[k0:]
        times = times[k0:]
    if amp[0] <= 1e-3:
        raise ContractViolationError(
            f"initial coherence |rho_{pair}| = {amp[0]:.3e} too small to fit"
        )
    floor = max(amp[0] * min_amp_fraction, 1e-12)
    mask = amp > floor
    # leading contiguous window above the floor
    cut = len(amp)
    for i, ok in enumerate(mask):
        if not ok:
            cut = i
            break
    cut = max(cut, 3)
    t = times[:cut]
    y = np.log(amp[:cut])
    slope, intercept = np.polyfit(t, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * t + intercept)) ** 2)))
    if residual > residual_tol:
        raise FitQualityError(
            f"coherence {pair} is not exponential (rms log-residual "
            f"{residual:.3e} > {residual_tol:.1e})",
            residual=residual,
        )
    return RateFit(rate=float(-2.0 * slope), residual=residual, n_points=cut)


# ---------------------------------------------------------------------------
# Stochastic-trajectory oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseRealization:
    """A discretized noise record for one trajectory."""

    seed: int
    dt: float
    samples: np.ndarray


def _noise_samples(
    rng: np.random.Generator,
    n_steps: int,
    dt: float,
    s0: float,
    bandwidth: Optional[float],
) -> np.ndarray:
    """Zero-mean samples with zero-frequency spectral density s0.

    bandwidth=None gives white noise (Var = s0/dt); a finite bandwidth
    gives a stationary Ornstein-Uhlenbeck sequence with correlation time
    1/bandwidth and the same S(0).
    """
    if bandwidth is None:
        return rng.normal(0.0, math.sqrt(s0 / dt), size=n_steps)
    tau = 1.0 / bandwidth
    sigma = math.sqrt(s0 / (2.0 * tau))
    alpha = math.exp(-dt / tau)
    kick = sigma * math.sqrt(1.0 - alpha * alpha)
    xi = rng.normal(0.0, 1.0, size=n_steps)
    out = np.empty(n_steps)
    f = rng.normal(0.0, sigma)
    for i in range(n_steps):
        f = alpha * f + kick * xi[i]
        out[i] = f
    return out


def white_noise_realization(
    seed: int, dt: float, n_samples: int, s0: float, bandwidth: Optional[float] = None
) -> NoiseRealization:
    rng = np.random.default_rng(seed)
    return NoiseRealization(seed, dt, _noise_samples(rng, n_samples, dt, s0, bandwidth))


def _sample_schedule(t_final: float, dt: float, store_every: Optional[int]):
    n_steps = max(1, int(round(t_final / dt)))
    dt = t_final / n_steps
    if store_every is None:
        store_every = max(1, n_steps // 400)
    sample_steps = sorted(
        {0} | {s for s in range(1, n_steps + 1) if s % store_every == 0} | {n_steps}
    )
    return n_steps, dt, sample_steps


def _trajectory_blocks(
    h: ArrayLike,
    channel_op: ArrayLike,
    s0: float,
    psi0: np.ndarray,
    n_traj: int,
    t_final: float,
    dt: float,
    seed: int,
    bandwidth: Optional[float],
    store_every: Optional[int],
    block_size: int,
    antithetic: bool,
    on_sample,
):
    """Shared stepping core: exact split-step unitaries over trajectory blocks.

    `on_sample(sample_idx, psi_full, start, stop)` receives the full-basis
    amplitudes (dim x block) at each sample time and accumulates whatever
    the caller needs.  Returns (sample times, number of samples).
    """
    if n_traj < 100:
        raise ContractViolationError("stochastic oracle requires n_traj >= 100")
    hm = _as_matrix(h)
    om = _as_matrix(channel_op)
    dim = hm.shape[0]
    psi0 = np.asarray(psi0, dtype=complex).reshape(dim)
    psi0 = psi0 / np.linalg.norm(psi0)

    e_h, v_h = np.linalg.eigh(0.5 * (hm + hm.conj().T))
    e_o, v_o = np.linalg.eigh(0.5 * (om + om.conj().T))
    w = v_o.conj().T @ v_h

    n_steps, dt, sample_steps = _sample_schedule(t_final, dt, store_every)
    sample_index = {s: i for i, s in enumerate(sample_steps)}

    half = np.exp(-0.5j * dt * e_h)[:, None]
    children = np.random.SeedSequence(seed).spawn(n_traj)

    worst_norm_drift = 0.0
    for start in range(0, n_traj, block_size):
        stop = min(start + block_size, n_traj)
        nb = stop - start
        noise = np.empty((n_steps, nb))
        for col in range(nb):
            traj_idx = start + col
            if antithetic and traj_idx % 2 == 1:
                noise[:, col] = -_noise_samples(
                    np.random.default_rng(children[traj_idx - 1]), n_steps, dt, s0, bandwidth
                )
            else:
                noise[:, col] = _noise_samples(
                    np.random.default_rng(children[traj_idx]), n_steps, dt, s0, bandwidth
                )
        psi_h = np.repeat((v_h.conj().T @ psi0)[:, None], nb, axis=1)
        on_sample(0, v_h @ psi_h, start, stop)
        for step in range(1, n_steps + 1):
            psi_h = psi_h * half
            psi_o = w @ psi_h
            psi_o *= np.exp(-1j * dt * np.outer(e_o, noise[step - 1]))
            psi_h = w.conj().T @ psi_o
            psi_h = psi_h * half
            idx = sample_index.get(step)
            if idx is not None:
                on_sample(idx, v_h @ psi_h, start, stop)
        norms = np.linalg.norm(psi_h, axis=0)
        worst_norm_drift = max(worst_norm_drift, float(np.max(np.abs(norms - 1.0))))

    if worst_norm_drift > 1e-6:
        raise TraceDriftError(f"trajectory norm drift {worst_norm_drift:.3e} > 1e-6")
    times = np.array(sample_steps) * dt
    return times, len(sample_steps)


def stochastic_oracle(
    h: ArrayLike,
    channel_op: ArrayLike,
    s0: float,
    psi0: np.ndarray,
    n_traj: int,
    t_final: float,
    dt: float,
    seed: int,
    bandwidth: Optional[float] = None,
    store_every: Optional[int] = None,
    block_size: int = 256,
    antithetic: bool = False,
) -> DensityTrajectory:
    """Ensemble-averaged density matrix under H + f(t) O, exact unitary steps.

    Each step applies exp(-i H dt/2) exp(-i f_n O dt) exp(-i H dt/2) through
    cached eigenbases, so norms are preserved to machine precision.
    Trajectory noise streams are spawned deterministically from the master
    seed and the block reduction order is fixed, making the result
    bit-reproducible for a given n_traj.  With `antithetic`, odd-indexed
    trajectories use the sign-flipped noise of their predecessor (still a
    valid realization of the zero-mean Gaussian process; halves the phase
    variance of the ensemble mean).
    """
    dim = _as_matrix(h).shape[0]
    _, _, sample_steps = _sample_schedule(t_final, dt, store_every)
    rho_acc = np.zeros((len(sample_steps), dim, dim), dtype=complex)

    def on_sample(idx, psi_full, start, stop):
        rho_acc[idx] += np.einsum("is,js->ij", psi_full, psi_full.conj())

    times, _ = _trajectory_blocks(
        h, channel_op, s0, psi0, n_traj, t_final, dt, seed, bandwidth,
        store_every, block_size, antithetic, on_sample,
    )
    rho_acc /= n_traj
    return DensityTrajectory(
        times,
        rho_acc,
        {"n_traj": n_traj, "seed": seed, "dt": dt, "bandwidth": bandwidth},
    )


@dataclass(frozen=True)
class StationaryRateEstimate:
    """Coherence decay rate from stationary lag correlations."""

    rate: float
    lags: np.ndarray
    coherences: np.ndarray
    residual: float


def stochastic_coherence_rate(
    h: ArrayLike,
    channel_op: ArrayLike,
    s0: float,
    state_j: np.ndarray,
    state_k: np.ndarray,
    n_traj: int,
    t_final: float,
    dt: float,
    seed: int,
    bandwidth: Optional[float] = None,
    store_every: Optional[int] = None,
    block_size: int = 256,
    antithetic: bool = True,
    skip_time: float = 0.0,
    max_lag_fraction: float = 0.35,
    min_lag_time: Optional[float] = None,
) -> StationaryRateEstimate:
    """Dephasing rate of the (j,k) coherence from stochastic trajectories.

    Evolves (|j> + |k>)/sqrt(2) and estimates the ensemble coherence decay
    from lag correlations of the per-trajectory pair amplitude
    z(t) = <j|psi><psi|k>: R(L) = <z(t+L) z*(t)> / <|z(t)|^2> averaged over
    start times and trajectories.  Stationarity of the phase increments
    makes this far better conditioned than fitting the ensemble mean alone.
    Lags shorter than a few noise correlation times are excluded (their
    phase variance is sub-linear and would bias the slope); the default
    min lag is 5 correlation times of the band-limited noise.
    Returns the full-width rate (coherence ~ exp(-rate t / 2)).
    """
    sj = np.asarray(state_j, dtype=complex)
    sk = np.asarray(state_k, dtype=complex)
    psi0 = (sj + sk) / np.linalg.norm(sj + sk)
    _, _, sample_steps = _sample_schedule(t_final, dt, store_every)
    z = np.zeros((len(sample_steps), n_traj), dtype=complex)

    def on_sample(idx, psi_full, start, stop):
        z[idx, start:stop] = (sj.conj() @ psi_full) * np.conj(sk.conj() @ psi_full)

    times, n_samples = _trajectory_blocks(
        h, channel_op, s0, psi0, n_traj, t_final, dt, seed, bandwidth,
        store_every, block_size, antithetic, on_sample,
    )
    k0 = int(np.searchsorted(times, skip_time))
    k0 = min(k0, n_samples - 8)
    z = z[k0:]
    times = times[k0:]
    n = z.shape[0]
    sample_dt = float(times[1] - times[0])
    if min_lag_time is None:
        min_lag_time = 5.0 / bandwidth if bandwidth else 0.0
    min_lag = max(1, int(math.ceil(min_lag_time / sample_dt)))
    max_lag = max(min_lag + 4, int(n * max_lag_fraction))
    if max_lag >= n - 1:
        raise ContractViolationError("trajectory too short for the requested lag window")
    lags = np.arange(min_lag, max_lag + 1)
    coh = np.empty(len(lags))
    for i, lag in enumerate(lags):
        num = np.sum(z[lag:] * np.conj(z[:-lag]))
        den = np.sum(np.abs(z[:-lag]) ** 2)
        coh[i] = abs(num) / den
    lag_times = lags * sample_dt
    slope, intercept = np.polyfit(lag_times, np.log(coh), 1)
    residual = float(
        np.sqrt(np.mean((np.log(coh) - (slope * lag_times + intercept)) ** 2))
    )
    return StationaryRateEstimate(
        rate=float(-2.0 * slope), lags=lag_times, coherences=coh, residual=residual
    )


# ---------------------------------------------------------------------------
# Contracts and sanity reports
# ---------------------------------------------------------------------------

def density_contract_violations(traj: DensityTrajectory) -> Dict[str, float]:
    """Worst-case trace, Hermiticity and positivity defects along a trajectory."""
    trace = 0.0
    herm = 0.0
    neg = 0.0
    for rho in traj.states:
        trace = max(trace, abs(np.trace(rho).real - 1.0))
        herm = max(herm, float(np.max(np.abs(rho - rho.conj().T))))
        neg = max(neg, float(max(0.0, -np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))))))
    return {"trace": trace, "hermiticity": herm, "negativity": neg}


def population_drift(traj: DensityTrajectory) -> float:
    pops = np.real(np.einsum("tii->ti", traj.states))
    return float(np.max(np.abs(pops - pops[0])))


@dataclass
class OscillatorDephasingReport:
    """Pass/fail table for number-operator dephasing of a single oscillator."""

    rows: List[Dict[str, float]]
    populations_ok: bool

    @property
    def passed(self) -> bool:
        return self.populations_ok and all(r["passed"] for r in self.rows)


def oscillator_dephasing_check(
    omega0: float = 1.0, gamma0: float = 0.1, n_max: int = 4
) -> OscillatorDephasingReport:
    """Verify D[a^dag a] dephasing: rho_nm decays at (gamma0/2)(n-m)^2.

    Populations must stay put; rates are measured from a propagated
    superposition of the lowest n_max+1 number states.
    """
    from . import fock as _fock

    cutoff = max(n_max + 4, 8)
    n_op = _fock.number(cutoff)
    h = omega0 * n_op.matrix
    spec = _fock.hermitian_eig(Operator(_fock.boson_space(cutoff), omega0 * n_op.matrix, hermitian=True))
    n_levels = n_max + 2
    dis = build_dressed_dissipator(spec, n_op, zero_frequency_density(gamma0 / 2.0), n_levels)

    psi = np.zeros(n_levels, dtype=complex)
    psi[: n_max + 1] = 1.0 / math.sqrt(n_max + 1)
    rho0 = np.outer(psi, psi.conj())
    t_final = 6.0 / gamma0
    dt = 0.01 / (omega0 * max(n_levels - 1, 1))
    traj = propagate(rho0, None, dis, t_final, dt)

    rows = []
    for n in range(n_max + 1):
        for m in range(n + 1):
            expected = 0.5 * gamma0 * (n - m) ** 2
            if n == m:
                measured = float(
                    np.max(np.abs(np.abs(traj.coherence((n, m))) - np.abs(traj.coherence((n, m))[0])))
                )
                passed = measured < 1e-8
                rows.append(
                    {"n": n, "m": m, "expected": 0.0, "measured": 0.0, "passed": passed}
                )
                continue
            fit = extract_decay_rate(traj, (n, m), residual_tol=1e-2)
            rel = abs(fit.rate - expected) / expected
            rows.append(
                {
                    "n": n,
                    "m": m,
                    "expected": expected,
                    "measured": fit.rate,
                    "rel_err": rel,
                    "passed": bool(rel < 1e-3),
                }
            )
    pops_ok = population_drift(traj) < 1e-8
    return OscillatorDephasingReport(rows=rows, populations_ok=pops_ok)
