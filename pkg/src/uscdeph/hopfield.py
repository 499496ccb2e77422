"""Two-mode Hopfield model: Bogoliubov diagonalization and polariton rates.

Dipole gauge:

    H_D = omega_c a^dag a + omega_x b^dag b
          + i lambda omega_c (a^dag - a)(b + b^dag)
          + omega_c lambda^2 (b + b^dag)^2

Coulomb gauge:

    H_C = omega_c a^dag a + omega_x b^dag b
          - i omega_x lambda (b^dag - b)(a^dag + a)
          + omega_x lambda^2 (a^dag + a)^2

related by T = exp(-i lambda (a + a^dag)(b + b^dag)), H_D = T H_C T^dag.
The physical photon operator in the dipole gauge is a_D = a + i lambda
(b + b^dag); the physical matter operator in the Coulomb gauge is
b_C = b - i lambda (a + a^dag).

Polariton frequencies are gauge invariant; the Hopfield coefficient
quadruples (U_a, U_b, V_a, V_b) are not.  Coefficients are stored in the
matrix-element convention U_y = <G|y|1_mu>, V_y = -<1_mu|y|G>^*.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from . import fock
from .exceptions import ContractViolationError, InstabilityError, TruncationError
from .fock import Operator
from .sweep import SweepResult, SweepRow

FREQ_TIE_TOL = 1e-12
IMAG_TOL = 1e-9

# z-vector ordering used for all 4x4 symplectic work
_A, _B, _AD, _BD = 0, 1, 2, 3
_SWAP = (_AD, _BD, _A, _B)  # dagger permutation

_J = np.zeros((4, 4))
_J[_A, _AD] = _J[_B, _BD] = 1.0
_J[_AD, _A] = _J[_BD, _B] = -1.0


@dataclass(frozen=True)
class HopfieldParams:
    """Hopfield-model parameters in units of the cavity frequency."""

    omega_x: float
    lam: float
    omega_c: float = 1.0

    def __post_init__(self):
        if self.omega_c <= 0 or self.omega_x <= 0:
            raise ContractViolationError("omega_c and omega_x must be positive")
        if self.lam < 0:
            raise ContractViolationError("lambda must be >= 0")

    @property
    def detuning(self) -> float:
        return self.omega_x - self.omega_c


def _quadratic_form(p: HopfieldParams, gauge: str) -> np.ndarray:
    """Coefficient matrix W of H = (1/2) z^T W z over z = (a, b, a^dag, b^dag)."""
    wc, wx, lam = p.omega_c, p.omega_x, p.lam
    if gauge == "dipole":
        terms = [
            (_AD, _A, wc),
            (_BD, _B, wx),
            # i lam wc (a^dag - a)(b + b^dag)
            (_AD, _B, 1j * lam * wc),
            (_AD, _BD, 1j * lam * wc),
            (_A, _B, -1j * lam * wc),
            (_A, _BD, -1j * lam * wc),
            # wc lam^2 (b + b^dag)^2
            (_B, _B, lam * lam * wc),
            (_B, _BD, lam * lam * wc),
            (_BD, _B, lam * lam * wc),
            (_BD, _BD, lam * lam * wc),
        ]
    elif gauge == "coulomb":
        d = wx * lam * lam
        terms = [
            (_AD, _A, wc),
            (_BD, _B, wx),
            # -i wx lam (b^dag - b)(a^dag + a)
            (_BD, _AD, -1j * lam * wx),
            (_BD, _A, -1j * lam * wx),
            (_B, _AD, 1j * lam * wx),
            (_B, _A, 1j * lam * wx),
            # D (a^dag + a)^2
            (_A, _A, d),
            (_A, _AD, d),
            (_AD, _A, d),
            (_AD, _AD, d),
        ]
    else:
        raise ContractViolationError(f"unknown gauge {gauge!r}")
    w = np.zeros((4, 4), dtype=complex)
    for i, j, c in terms:
        w[i, j] += c
        w[j, i] += c
    return w


def dynamical_matrix(p: HopfieldParams, gauge: str) -> np.ndarray:
    """Heisenberg matrix A with [z_i, H] = sum_j A_ij z_j."""
    return _J @ _quadratic_form(p, gauge)


@dataclass(frozen=True)
class PolaritonDecomposition:
    """Polariton frequencies and Hopfield coefficients for one gauge.

    Arrays are indexed by branch in {0, 1} for the lower/upper polariton
    (reported to users as mu = 1, 2).
    """

    params: HopfieldParams
    gauge: str
    frequencies: np.ndarray
    u_a: np.ndarray
    u_b: np.ndarray
    v_a: np.ndarray
    v_b: np.ndarray

    def quadruple(self, branch: int) -> np.ndarray:
        """(U_a, U_b, V_a, V_b) for one branch."""
        return np.array(
            [self.u_a[branch], self.u_b[branch], self.v_a[branch], self.v_b[branch]]
        )

    def normalization_residual(self) -> np.ndarray:
        norm = (
            np.abs(self.u_b) ** 2
            + np.abs(self.u_a) ** 2
            - np.abs(self.v_b) ** 2
            - np.abs(self.v_a) ** 2
        )
        return np.abs(norm - 1.0)

    def photon_weight(self) -> np.ndarray:
        """|U_a|^2 + |V_a|^2 per branch."""
        return np.abs(self.u_a) ** 2 + np.abs(self.v_a) ** 2

    def matter_weight(self) -> np.ndarray:
        """|U_b|^2 + |V_b|^2 per branch."""
        return np.abs(self.u_b) ** 2 + np.abs(self.v_b) ** 2


def _symplectic_norm(c: np.ndarray) -> float:
    d = np.conj(c[list(_SWAP)])
    return float(np.real(c @ (_J @ d)))


def _fix_quadruple_phase(q: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(q)))
    pivot = q[idx]
    if np.abs(pivot) > 0:
        q = q * (np.abs(pivot) / pivot)
    return q


def _extract_modes(a_matrix: np.ndarray, lam: float):
    """Positive-frequency, symplectically normalized left eigenvector rows."""
    vals, vecs = np.linalg.eig(a_matrix.T)
    scale = max(1.0, float(np.max(np.abs(vals))))
    bad = np.abs(vals.imag) > IMAG_TOL * scale
    if np.any(bad):
        worst = vals[int(np.argmax(np.abs(vals.imag)))]
        raise InstabilityError(
            f"unstable normal mode at lambda={lam}: eigenvalue {worst}, "
            f"Omega^2 = {worst**2}",
            lam=lam,
            omega_sq=complex(worst**2),
        )
    pos = np.where(vals.real > 0)[0]
    if len(pos) != 2:
        raise InstabilityError(
            f"expected two positive-frequency modes at lambda={lam}, got {len(pos)}",
            lam=lam,
            omega_sq=None,
        )
    freqs = vals.real[pos]
    rows = []
    for i in pos:
        c = vecs[:, i]
        norm = _symplectic_norm(c)
        if norm <= 0:
            raise InstabilityError(
                f"positive-frequency mode with non-positive symplectic norm at "
                f"lambda={lam} (norm={norm:.3e})",
                lam=lam,
                omega_sq=complex(vals[i] ** 2),
            )
        rows.append(c / np.sqrt(norm))
    return freqs, rows


def symplectic_diagonalize(p: HopfieldParams, gauge: str) -> PolaritonDecomposition:
    """Exact polariton decomposition from the 4x4 symplectic eigenproblem."""
    freqs, rows = _extract_modes(dynamical_matrix(p, gauge), p.lam)
    # stored convention: conjugate of the P-definition coefficient row
    quads = [np.conj(r) for r in rows]

    order = list(np.argsort(freqs))
    if abs(freqs[order[0]] - freqs[order[1]]) < FREQ_TIE_TOL * max(1.0, float(freqs.max())):
        # degenerate branches: mu=1 is the matter-dominated one
        if np.abs(quads[order[0]][_B]) < np.abs(quads[order[1]][_B]):
            order = order[::-1]
    freqs = np.array([freqs[i] for i in order])
    quads = [_fix_quadruple_phase(quads[i]) for i in order]

    q = np.array(quads)
    return PolaritonDecomposition(
        params=p,
        gauge=gauge,
        frequencies=freqs,
        u_a=q[:, _A].copy(),
        u_b=q[:, _B].copy(),
        v_a=q[:, _AD].copy(),
        v_b=q[:, _BD].copy(),
    )


def _pdef_row(dec: PolaritonDecomposition, branch: int) -> np.ndarray:
    """P-definition coefficient row (P = c . z) for one branch."""
    return np.conj(dec.quadruple(branch))


def _expand_over(dec: PolaritonDecomposition, c_y: np.ndarray):
    """Expand y = c_y . z over dec's polaritons; stored-convention (U, V) pairs."""
    u = np.empty(2, dtype=complex)
    v = np.empty(2, dtype=complex)
    for mu in range(2):
        c_mu = _pdef_row(dec, mu)
        dag = np.conj(c_mu[list(_SWAP)])
        u[mu] = c_y @ (_J @ dag)  # [y, P_mu^dag] = U coefficient
        v[mu] = np.conj(c_y @ (_J @ c_mu))  # [y, P_mu] = V (expansion), stored as conj
    return u, v


def gauge_map_coefficients(dec: PolaritonDecomposition) -> PolaritonDecomposition:
    """Coefficients of the *other* gauge, computed inside this gauge.

    The physical operators of the other gauge (T^dag y T starting from the
    Coulomb gauge, T y T^dag starting from the dipole gauge) expand over
    this gauge's polaritons with exactly the other gauge's Hopfield
    coefficients, because polariton operators transform as P = T^dag P' T.
    At lambda = 0 this is the identity map.  The output quadruples are
    re-phased to the repo convention (per-gauge polariton phases are fixed
    independently, so the raw expansion carries a branch phase).
    """
    lam = dec.params.lam
    if dec.gauge == "coulomb":
        other = "dipole"
        c_a = np.array([1.0, -1j * lam, 0.0, -1j * lam])  # T^dag a T
        c_b = np.array([-1j * lam, 1.0, -1j * lam, 0.0])  # T^dag b T = b_C
    elif dec.gauge == "dipole":
        other = "coulomb"
        c_a = np.array([1.0, 1j * lam, 0.0, 1j * lam])  # T a T^dag = a_D
        c_b = np.array([1j * lam, 1.0, 1j * lam, 0.0])  # T b T^dag
    else:
        raise ContractViolationError(f"unknown gauge {dec.gauge!r}")

    u_a, v_a = _expand_over(dec, c_a)
    u_b, v_b = _expand_over(dec, c_b)
    quads = np.stack([u_a, u_b, v_a, v_b], axis=1)
    quads = np.array([_fix_quadruple_phase(quads[mu]) for mu in range(2)])
    return PolaritonDecomposition(
        params=dec.params,
        gauge=other,
        frequencies=dec.frequencies.copy(),
        u_a=quads[:, 0],
        u_b=quads[:, 1],
        v_a=quads[:, 2],
        v_b=quads[:, 3],
    )


@dataclass(frozen=True)
class PolaritonRates:
    """Per-branch pure-dephasing rates in units of the bare rates."""

    rates: np.ndarray
    gamma0_c: float
    gamma0_x: float
    mode: str

    def rate(self, mu: int) -> float:
        """Rate for branch mu in {1, 2}."""
        return float(self.rates[mu - 1])


def polariton_dephasing_rates(
    p: HopfieldParams,
    gamma0_c: float,
    gamma0_x: float,
    mode: str = "correct",
    naive_gauge: str = "coulomb",
    decompositions: Optional[Dict[str, PolaritonDecomposition]] = None,
) -> PolaritonRates:
    """Branch dephasing rates, correct or deliberately single-gauge (naive).

    correct: photon channel weighted with Coulomb-gauge coefficients and
    matter channel with dipole-gauge ones.  naive: both channels use the
    coefficients of `naive_gauge`, reproducing the wrong published-style
    curves (matter channel wrong for naive Coulomb, photon channel wrong
    for naive dipole).
    """
    if gamma0_c < 0 or gamma0_x < 0:
        raise ContractViolationError("bare rates must be >= 0")
    decs = decompositions or {}

    def dec_for(gauge: str) -> PolaritonDecomposition:
        if gauge not in decs:
            decs[gauge] = symplectic_diagonalize(p, gauge)
        return decs[gauge]

    if mode == "correct":
        w_a = dec_for("coulomb").photon_weight()
        w_b = dec_for("dipole").matter_weight()
    elif mode == "naive":
        if naive_gauge not in ("coulomb", "dipole"):
            raise ContractViolationError(f"unknown gauge {naive_gauge!r}")
        dec = dec_for(naive_gauge)
        w_a = dec.photon_weight()
        w_b = dec.matter_weight()
    else:
        raise ContractViolationError(f"unknown rate mode {mode!r}")

    rates = gamma0_c * w_a + gamma0_x * w_b
    return PolaritonRates(rates=rates, gamma0_c=gamma0_c, gamma0_x=gamma0_x, mode=mode)


def polariton_coherence_rate(
    p: HopfieldParams,
    gamma0_c: float,
    gamma0_x: float,
    decompositions: Optional[Dict[str, PolaritonDecomposition]] = None,
) -> np.ndarray:
    """Full-width decay rate of the (one-polariton, ground) coherence.

    This is the diagonal dressed-dephasing rate (gamma0/2)|<1|O|1> - <G|O|G>|^2
    with the gauge-correct channel operators; the jump in the channel
    expectation across the transition is exactly the branch weight, so the
    rate is quadratic in the weights.  It is what Lindblad propagation and
    the stochastic trajectories measure, and differs from the linear
    weighted sum reported by `polariton_dephasing_rates` (the published
    curve form) away from the decoupled limit.
    """
    decs = decompositions or {}
    if "coulomb" not in decs:
        decs["coulomb"] = symplectic_diagonalize(p, "coulomb")
    if "dipole" not in decs:
        decs["dipole"] = symplectic_diagonalize(p, "dipole")
    w_a = decs["coulomb"].photon_weight()
    w_b = decs["dipole"].matter_weight()
    return 0.5 * gamma0_c * w_a**2 + 0.5 * gamma0_x * w_b**2


def sweep_point(p: HopfieldParams, gamma0_c: float, gamma0_x: float) -> Dict[str, np.ndarray]:
    """All per-branch sweep quantities at one (lambda, detuning) point."""
    dec_c = symplectic_diagonalize(p, "coulomb")
    dec_d = symplectic_diagonalize(p, "dipole")
    decs = {"coulomb": dec_c, "dipole": dec_d}
    correct = polariton_dephasing_rates(
        p, gamma0_c, gamma0_x, "correct", decompositions=decs
    )
    naive_c = polariton_dephasing_rates(
        p, gamma0_c, gamma0_x, "naive", naive_gauge="coulomb", decompositions=decs
    )
    naive_d = polariton_dephasing_rates(
        p, gamma0_c, gamma0_x, "naive", naive_gauge="dipole", decompositions=decs
    )
    return {
        "omega": dec_c.frequencies,
        "w_a_coulomb": dec_c.photon_weight(),
        "w_b_coulomb": dec_c.matter_weight(),
        "w_a_dipole": dec_d.photon_weight(),
        "w_b_dipole": dec_d.matter_weight(),
        "rate_correct": correct.rates,
        "rate_naive_coulomb": naive_c.rates,
        "rate_naive_dipole": naive_d.rates,
    }


_SWEEP_MODES = {
    "omega": ("", ""),
    "w_a_coulomb": ("", "coulomb"),
    "w_b_coulomb": ("", "coulomb"),
    "w_a_dipole": ("", "dipole"),
    "w_b_dipole": ("", "dipole"),
    "rate_correct": ("correct", ""),
    "rate_naive_coulomb": ("naive", "coulomb"),
    "rate_naive_dipole": ("naive", "dipole"),
}


def dispersion_sweep(
    lams: Sequence[float],
    detunings: Sequence[float],
    gamma0_c: float = 0.0,
    gamma0_x: float = 1.0,
    omega_c: float = 1.0,
) -> SweepResult:
    """Polariton frequencies and rates over a (lambda, detuning) grid."""
    if len(lams) == 0 or len(detunings) == 0:
        raise ContractViolationError("empty sweep grid")
    rows = []
    for delta in sorted(detunings):
        for lam in sorted(lams):
            p = HopfieldParams(omega_x=omega_c + delta, lam=lam, omega_c=omega_c)
            try:
                point = sweep_point(p, gamma0_c, gamma0_x)
            except InstabilityError as err:
                raise InstabilityError(
                    f"grid point lambda={lam}, detuning={delta}: {err}",
                    lam=lam,
                    omega_sq=err.omega_sq,
                ) from err
            for quantity, values in point.items():
                mode, gauge = _SWEEP_MODES[quantity]
                for branch in range(2):
                    rows.append(
                        SweepRow(
                            coupling=lam,
                            detuning=delta,
                            label=str(branch + 1),
                            quantity=quantity,
                            value=float(values[branch]),
                            mode=mode,
                            gauge=gauge,
                        )
                    )
    result = SweepResult(
        rows=rows,
        meta={"model": "hopfield", "gamma0_c": gamma0_c, "gamma0_x": gamma0_x},
    )
    result.sort()
    return result


# ---------------------------------------------------------------------------
# Truncated-Fock oracle
# ---------------------------------------------------------------------------

def hopfield_space(cutoff_b: int, cutoff_a: int):
    return fock.boson_space(cutoff_b) * fock.boson_space(cutoff_a)


def fock_operators(cutoff_b: int, cutoff_a: int) -> Dict[str, np.ndarray]:
    """Embedded mode operators on the (matter x field) product space."""
    ida = np.eye(cutoff_a, dtype=complex)
    idb = np.eye(cutoff_b, dtype=complex)
    a1 = fock.annihilation(cutoff_a).matrix
    b1 = fock.annihilation(cutoff_b).matrix
    return {"a": np.kron(idb, a1), "b": np.kron(b1, ida)}


def build_hopfield_hamiltonian(
    p: HopfieldParams,
    gauge: str,
    cutoff: int = 40,
    cutoff_b: Optional[int] = None,
) -> Operator:
    """Truncated-Fock Hamiltonian, used as the oracle for the symplectic path."""
    n_a = cutoff
    n_b = cutoff_b if cutoff_b is not None else cutoff
    ops = fock_operators(n_b, n_a)
    a, b = ops["a"], ops["b"]
    xa = a + a.conj().T
    xb = b + b.conj().T
    h0 = p.omega_c * a.conj().T @ a + p.omega_x * b.conj().T @ b
    if gauge == "dipole":
        h = h0 + 1j * p.lam * p.omega_c * (a.conj().T - a) @ xb + p.omega_c * p.lam**2 * xb @ xb
    elif gauge == "coulomb":
        h = h0 - 1j * p.omega_x * p.lam * (b.conj().T - b) @ xa + p.omega_x * p.lam**2 * xa @ xa
    else:
        raise ContractViolationError(f"unknown gauge {gauge!r}")
    return Operator(hopfield_space(n_b, n_a), 0.5 * (h + h.conj().T), hermitian=True)


def hopfield_gauge_unitary(p: HopfieldParams, cutoff: int = 40, cutoff_b: Optional[int] = None) -> Operator:
    """T = exp(-i lambda (a + a^dag)(b + b^dag)) in truncated Fock space."""
    n_a = cutoff
    n_b = cutoff_b if cutoff_b is not None else cutoff
    ops = fock_operators(n_b, n_a)
    xa = ops["a"] + ops["a"].conj().T
    xb = ops["b"] + ops["b"].conj().T
    gen = Operator(
        hopfield_space(n_b, n_a), p.lam * 0.5 * ((xa @ xb) + (xa @ xb).conj().T), hermitian=True
    )
    return fock.expm_hermitian_generator(gen, scale=1.0)


def polariton_operator_matrix(
    dec: PolaritonDecomposition, branch: int, cutoff: int = 40, cutoff_b: Optional[int] = None
) -> np.ndarray:
    """P_mu as a truncated-Fock matrix (for gauge-relation checks)."""
    n_a = cutoff
    n_b = cutoff_b if cutoff_b is not None else cutoff
    ops = fock_operators(n_b, n_a)
    c = _pdef_row(dec, branch)
    return (
        c[_A] * ops["a"]
        + c[_B] * ops["b"]
        + c[_AD] * ops["a"].conj().T
        + c[_BD] * ops["b"].conj().T
    )


def fock_oracle_spectrum(p: HopfieldParams, gauge: str, cutoff: int = 40, check: bool = True):
    """Eigensystem of the truncated-Fock Hamiltonian (convergence-checked)."""
    spec = fock.hermitian_eig(build_hopfield_hamiltonian(p, gauge, cutoff))
    if check:
        bigger = fock.hermitian_eig(build_hopfield_hamiltonian(p, gauge, cutoff + 4))
        drift = fock.relative_drift(spec.excitations()[:8], bigger.excitations()[:8])
        if drift >= 1e-7:
            raise TruncationError(
                f"Hopfield Fock spectrum not converged at cutoff {cutoff} "
                f"(lambda={p.lam}, drift={drift:.3e})",
                cutoff=cutoff,
                drift=drift,
            )
    return spec


def fock_one_polariton_indices(spec, cutoff: int = 40, cutoff_b: Optional[int] = None):
    """Indices of the one-polariton eigenstates, identified by <G|a|k>, <G|b|k>.

    The mode operators are exactly linear in the polariton operators, so
    only one-polariton states have nonzero single-operator matrix elements
    with the ground state.
    """
    n_a = cutoff
    n_b = cutoff_b if cutoff_b is not None else cutoff
    ops = fock_operators(n_b, n_a)
    ground = spec.vectors[:, 0]
    n_scan = min(12, spec.vectors.shape[1])
    weights = []
    for k in range(1, n_scan):
        vk = spec.vectors[:, k]
        w = abs(ground.conj() @ ops["a"] @ vk) ** 2 + abs(ground.conj() @ ops["b"] @ vk) ** 2
        weights.append((w, k))
    chosen = sorted([wk for wk in weights if wk[0] > 0.05], key=lambda t: spec.values[t[1]])
    if len(chosen) < 2:
        raise ContractViolationError("could not identify two one-polariton states")
    return chosen[0][1], chosen[1][1]
