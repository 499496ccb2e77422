"""Command-line front end: validated JSON configs in, bit-stable CSV out.

Subcommands:

    uscdeph run CONFIG [--out DIR] [--jobs N] [--seed S] [--allow-partial]
    uscdeph verify CONFIG [--out DIR] [--seed S]
    uscdeph list-configs

Exit codes: 0 success, 2 config validation, 3 truncation non-convergence,
4 property-check failure.  Outputs carry a provenance sidecar (config
hash, code version, cutoffs, convergence status) and contain no
timestamps, so re-running a config is byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__, fock, hopfield, rabi
from .exceptions import (
    ConfigError,
    InstabilityError,
    TruncationError,
    UscdephError,
)
from .lindblad import oscillator_dephasing_check

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_PROPERTY = 4

_MODELS = ("rabi", "hopfield", "oscillator")
_RABI_MODES = ("correct", "naive_coulomb", "naive_dipole")


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def _require(cfg: dict, field: str, types, reason: str):
    if field not in cfg:
        raise ConfigError(field, "missing")
    value = cfg[field]
    if not isinstance(value, types):
        raise ConfigError(field, reason)
    return value


def parse_grid(spec) -> List[float]:
    """A grid is either an explicit list or a {"from","to","n"} linspace,
    optionally {"log": true} for logarithmic spacing."""
    if isinstance(spec, list):
        if not spec:
            raise ConfigError("grid", "must be nonempty")
        vals = [float(v) for v in spec]
    elif isinstance(spec, dict):
        for key in ("from", "to", "n"):
            if key not in spec:
                raise ConfigError("grid", f"linspace spec missing {key!r}")
        n = spec["n"]
        if not isinstance(n, int) or n < 1:
            raise ConfigError("grid", "n must be a positive integer")
        lo, hi = float(spec["from"]), float(spec["to"])
        if spec.get("log"):
            if lo <= 0 or hi <= 0:
                raise ConfigError("grid", "log grid endpoints must be positive")
            vals = list(np.geomspace(lo, hi, n))
        else:
            vals = list(np.linspace(lo, hi, n))
    else:
        raise ConfigError("grid", "must be a list or a linspace object")
    if any(v < 0 for v in vals):
        raise ConfigError("grid", "couplings must be >= 0")
    return [float(v) for v in vals]


def load_config(path: Path) -> dict:
    try:
        raw = path.read_bytes()
    except OSError as err:
        raise ConfigError("path", f"cannot read {path}: {err}") from err
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as err:
        raise ConfigError("json", f"parse error: {err}") from err
    if not isinstance(cfg, dict):
        raise ConfigError("json", "top level must be an object")
    cfg["_sha256"] = hashlib.sha256(raw).hexdigest()
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    schema = _require(cfg, "schema", int, "must be an integer")
    if schema != 1:
        raise ConfigError("schema", f"unsupported version {schema}")
    _require(cfg, "name", str, "must be a string")
    model = _require(cfg, "model", str, "must be a string")
    if model not in _MODELS:
        raise ConfigError("model", f"must be one of {_MODELS}")
    outputs = _require(cfg, "outputs", dict, "must be an object")
    if "csv" not in outputs or not isinstance(outputs["csv"], str):
        raise ConfigError("outputs.csv", "missing output file name")
    if "seed" in cfg and not isinstance(cfg["seed"], int):
        raise ConfigError("seed", "must be an integer")
    if "cutoff" in cfg and cfg["cutoff"] is not None:
        if not isinstance(cfg["cutoff"], int) or cfg["cutoff"] < 2:
            raise ConfigError("cutoff", "must be an integer >= 2")

    if model == "oscillator":
        osc = cfg.get("oscillator", {})
        if not isinstance(osc, dict):
            raise ConfigError("oscillator", "must be an object")
        if float(osc.get("gamma0", 0.1)) <= 0:
            raise ConfigError("oscillator.gamma0", "must be > 0")
        return

    cfg["_grid"] = parse_grid(_require(cfg, "grid", (list, dict), "must be list or object"))
    detunings = _require(cfg, "detunings", list, "must be a list")
    if not detunings:
        raise ConfigError("detunings", "must be nonempty")
    cfg["_detunings"] = [float(d) for d in detunings]

    channels = _require(cfg, "channels", list, "must be a list")
    if not channels:
        raise ConfigError("channels", "must be nonempty")
    for i, chan in enumerate(channels):
        if not isinstance(chan, dict) or "target" not in chan:
            raise ConfigError(f"channels[{i}]", "must be an object with a target")
        if float(chan.get("gamma0", 0.0)) < 0:
            raise ConfigError(f"channels[{i}].gamma0", "must be >= 0")

    if model == "rabi":
        if len(channels) != 1:
            raise ConfigError("channels", "rabi configs take exactly one channel")
        if channels[0]["target"] not in ("qubit", "cavity"):
            raise ConfigError("channels[0].target", "must be qubit or cavity")
        modes = cfg.get("gauge_modes", ["correct"])
        if not isinstance(modes, list) or not modes:
            raise ConfigError("gauge_modes", "must be a nonempty list")
        for m in modes:
            if m not in _RABI_MODES:
                raise ConfigError("gauge_modes", f"unknown mode {m!r}")
        cfg["_modes"] = modes
        transitions = cfg.get("transitions", [["1-", "0"], ["1+", "0"]])
        if not isinstance(transitions, list) or not transitions:
            raise ConfigError("transitions", "must be a nonempty list")
        for t in transitions:
            if not (isinstance(t, list) and len(t) == 2):
                raise ConfigError("transitions", "each entry must be a [j, k] pair")
        cfg["_transitions"] = [tuple(t) for t in transitions]
    else:
        targets = {chan["target"] for chan in channels}
        if not targets <= {"cavity", "exciton"}:
            raise ConfigError("channels", "hopfield channels are cavity / exciton")


def _channel_gamma(cfg: dict, target: str) -> float:
    for chan in cfg["channels"]:
        if chan["target"] == target:
            return float(chan.get("gamma0", 0.0))
    return 0.0


# ---------------------------------------------------------------------------
# Runners (one unit of work per detuning; deterministic merge)
# ---------------------------------------------------------------------------

def _rabi_unit(args) -> List[dict]:
    cfg, detuning, mode = args
    omega_q = 1.0 + detuning
    gamma0 = float(cfg["channels"][0].get("gamma0", 1.0))
    ch = rabi.DephasingChannel(
        cfg["channels"][0]["target"], gamma0, gauge_mode=mode
    )
    grid = [
        rabi.RabiParams(omega_q, eta, cutoff=cfg.get("cutoff")) for eta in cfg["_grid"]
    ]
    result = rabi.rate_sweep(grid, ch, cfg["_transitions"])
    rows = []
    for row in result.rows:
        rows.append(
            {
                "eta": row.coupling,
                "transition": row.label,
                "rate_over_gamma0": row.value / gamma0 if gamma0 > 0 else 0.0,
                "mode": row.mode,
                "gauge": row.gauge,
                "detuning": row.detuning,
                "converged": int(row.converged),
            }
        )
    return rows


def _hopfield_unit(args) -> List[dict]:
    cfg, detuning = args
    g_c = _channel_gamma(cfg, "cavity")
    g_x = _channel_gamma(cfg, "exciton")
    rows = []
    for lam in sorted(cfg["_grid"]):
        p = hopfield.HopfieldParams(omega_x=1.0 + detuning, lam=lam)
        point = hopfield.sweep_point(p, g_c, g_x)
        norm = g_c + g_x if (g_c + g_x) > 0 else 1.0
        for branch in range(2):
            rows.append(
                {
                    "lambda": lam,
                    "detuning": detuning,
                    "mu": branch + 1,
                    "omega_over_omegac": float(point["omega"][branch]),
                    "w_a_coulomb": float(point["w_a_coulomb"][branch]),
                    "w_b_coulomb": float(point["w_b_coulomb"][branch]),
                    "w_a_dipole": float(point["w_a_dipole"][branch]),
                    "w_b_dipole": float(point["w_b_dipole"][branch]),
                    "rate_correct_over_gamma0": float(point["rate_correct"][branch]) / norm,
                    "rate_naive_coulomb_over_gamma0": float(point["rate_naive_coulomb"][branch]) / norm,
                    "rate_naive_dipole_over_gamma0": float(point["rate_naive_dipole"][branch]) / norm,
                    "converged": 1,
                }
            )
    return rows


_RABI_COLUMNS = [
    "eta", "transition", "rate_over_gamma0", "mode", "gauge", "detuning", "converged",
]
_HOPFIELD_COLUMNS = [
    "lambda", "detuning", "mu", "omega_over_omegac",
    "w_a_coulomb", "w_b_coulomb", "w_a_dipole", "w_b_dipole",
    "rate_correct_over_gamma0", "rate_naive_coulomb_over_gamma0",
    "rate_naive_dipole_over_gamma0", "converged",
]
_OSC_COLUMNS = ["n", "m", "expected_rate", "measured_rate", "rel_err", "passed"]


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return v
    x = float(v)
    if x == 0.0:
        return "0"
    return format(x, ".17g")


def _write_csv(path: Path, columns: Sequence[str], rows: List[dict]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_value(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _sort_key(columns):
    def key(row):
        return tuple(
            (0, row[c]) if isinstance(row[c], (int, float)) else (1, str(row[c]))
            for c in columns
        )

    return key


def run_config(cfg: dict, out_dir: Path, jobs: int = 1, allow_partial: bool = False) -> Path:
    """Execute a run config; returns the CSV path."""
    model = cfg["model"]
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / cfg["outputs"]["csv"]
    failures: List[str] = []

    if model == "oscillator":
        osc = cfg.get("oscillator", {})
        report = oscillator_dephasing_check(
            omega0=float(osc.get("omega0", 1.0)),
            gamma0=float(osc.get("gamma0", 0.1)),
        )
        rows = [
            {
                "n": r["n"],
                "m": r["m"],
                "expected_rate": r["expected"],
                "measured_rate": r.get("measured", 0.0),
                "rel_err": r.get("rel_err", 0.0),
                "passed": int(r["passed"]),
            }
            for r in report.rows
        ]
        columns = _OSC_COLUMNS
    elif model == "rabi":
        units = [
            (cfg, d, m) for d in sorted(cfg["_detunings"]) for m in cfg["_modes"]
        ]
        chunks = _map_units(_rabi_unit, units, jobs, failures, allow_partial)
        rows = [r for chunk in chunks for r in chunk]
        columns = _RABI_COLUMNS
        rows.sort(key=lambda r: (r["detuning"], r["eta"], r["transition"], r["mode"]))
    else:
        units = [(cfg, d) for d in sorted(cfg["_detunings"])]
        chunks = _map_units(_hopfield_unit, units, jobs, failures, allow_partial)
        rows = [r for chunk in chunks for r in chunk]
        columns = _HOPFIELD_COLUMNS
        rows.sort(key=lambda r: (r["detuning"], r["lambda"], r["mu"]))

    if failures and not allow_partial:
        raise TruncationError(
            "non-convergent grid points:\n  " + "\n  ".join(failures)
        )

    _write_csv(csv_path, columns, rows)
    provenance = {
        "code_version": __version__,
        "config_name": cfg["name"],
        "config_sha256": cfg["_sha256"],
        "convergence": failures if failures else "ok",
        "model": model,
        "rows": len(rows),
        "seed": int(cfg.get("seed", 0)),
        "cutoff": cfg.get("cutoff"),
    }
    sidecar = csv_path.with_suffix(csv_path.suffix + ".provenance.json")
    sidecar.write_text(
        json.dumps(provenance, indent=2, sort_keys=True) + "\n", encoding="ascii"
    )
    return csv_path


def _map_units(fn, units, jobs, failures, allow_partial):
    chunks = []
    if jobs <= 1:
        for unit in units:
            chunks.append(_run_unit_catching(fn, unit, failures, allow_partial))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for result in pool.map(_UnitRunner(fn), units):
                payload, err = result
                if err is not None:
                    failures.append(err)
                    chunks.append([])
                else:
                    chunks.append(payload)
    return chunks


def _run_unit_catching(fn, unit, failures, allow_partial):
    try:
        return fn(unit)
    except (TruncationError, InstabilityError) as err:
        failures.append(str(err))
        return []


class _UnitRunner:
    """Picklable wrapper returning (rows, error) across process boundaries."""

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, unit):
        try:
            return self.fn(unit), None
        except (TruncationError, InstabilityError) as err:
            return None, str(err)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _check(name: str, measured: float, tolerance: float) -> dict:
    return {
        "name": name,
        "measured": float(measured),
        "tolerance": float(tolerance),
        "passed": bool(measured < tolerance),
    }


def verify_config(cfg: dict, out_dir: Path) -> dict:
    """Property checks (gauge invariance, normalization, oracle agreement)
    at the config's parameters; returns the machine-readable report."""
    model = cfg["model"]
    checks: List[dict] = []

    if model == "oscillator":
        osc = cfg.get("oscillator", {})
        report = oscillator_dephasing_check(
            omega0=float(osc.get("omega0", 1.0)), gamma0=float(osc.get("gamma0", 0.1))
        )
        worst = max(r.get("rel_err", 0.0) for r in report.rows)
        checks.append(_check("oscillator_rate_agreement", worst, 1e-3))
        checks.append(_check("oscillator_population_drift", 0.0 if report.populations_ok else 1.0, 0.5))
    elif model == "rabi":
        detuning = sorted(cfg["_detunings"])[0]
        omega_q = 1.0 + detuning
        grid = sorted(cfg["_grid"])
        probes = sorted({grid[0], grid[len(grid) // 2], grid[-1]})
        worst_spec = 0.0
        for eta in probes:
            p = rabi.RabiParams(omega_q, eta, cutoff=cfg.get("cutoff"))
            sc = rabi.dressed_spectrum(p, "coulomb")
            sd = rabi.dressed_spectrum(p, "dipole")
            k = min(10, len(sc.values))
            worst_spec = max(
                worst_spec,
                fock.relative_drift(sc.excitations()[:k], sd.excitations()[:k]),
            )
        checks.append(_check("rabi_spectrum_gauge_invariance", worst_spec, 1e-8))

        eta_mid = probes[len(probes) // 2]
        if eta_mid == 0.0:
            eta_mid = probes[-1]
        if eta_mid > 0.0:
            p = rabi.RabiParams(omega_q, eta_mid, cutoff=cfg.get("cutoff"))
            gamma0 = float(cfg["channels"][0].get("gamma0", 1.0))
            ch = rabi.DephasingChannel(cfg["channels"][0]["target"], gamma0)
            rd = rabi.transition_dephasing_rate(p, ch, ("1-", "0"), gauge="dipole")
            rc = rabi.transition_dephasing_rate(p, ch, ("1-", "0"), gauge="coulomb")
            scale = max(abs(rd), abs(rc), 1e-3)
            checks.append(_check("rabi_rate_gauge_invariance", abs(rd - rc) / scale, 1e-8))

            n_fock = p.resolved_cutoff
            t_matrix = rabi.gauge_unitary(p).matrix
            sz_d = rabi.channel_operator(
                rabi.DephasingChannel("qubit", 1.0), p, "dipole"
            ).matrix
            sz_c = rabi.channel_operator(
                rabi.DephasingChannel("qubit", 1.0), p, "coulomb"
            ).matrix
            oracle = t_matrix.conj().T @ sz_d @ t_matrix
            margin = max(n_fock - 12, 2)
            keep = [q * n_fock + n for q in range(2) for n in range(margin)]
            block = np.ix_(keep, keep)
            checks.append(
                _check(
                    "rabi_channel_conjugation_closure",
                    float(np.max(np.abs(sz_c[block] - oracle[block]))),
                    1e-10,
                )
            )
    else:
        grid = sorted(cfg["_grid"])
        worst_norm = 0.0
        worst_freq = 0.0
        worst_rate = 0.0
        for detuning in cfg["_detunings"]:
            for lam in grid:
                p = hopfield.HopfieldParams(omega_x=1.0 + detuning, lam=lam)
                dec_c = hopfield.symplectic_diagonalize(p, "coulomb")
                dec_d = hopfield.symplectic_diagonalize(p, "dipole")
                worst_norm = max(
                    worst_norm,
                    float(dec_c.normalization_residual().max()),
                    float(dec_d.normalization_residual().max()),
                )
                worst_freq = max(
                    worst_freq,
                    float(np.max(np.abs(dec_c.frequencies - dec_d.frequencies))),
                )
                from_c = hopfield.polariton_dephasing_rates(
                    p, 1.0, 1.0, "correct",
                    decompositions={"coulomb": dec_c, "dipole": hopfield.gauge_map_coefficients(dec_c)},
                )
                from_d = hopfield.polariton_dephasing_rates(
                    p, 1.0, 1.0, "correct",
                    decompositions={"dipole": dec_d, "coulomb": hopfield.gauge_map_coefficients(dec_d)},
                )
                worst_rate = max(worst_rate, float(np.max(np.abs(from_c.rates - from_d.rates))))
        checks.append(_check("hopfield_normalization_identity", worst_norm, 1e-10))
        checks.append(_check("hopfield_frequency_gauge_invariance", worst_freq, 1e-9))
        checks.append(_check("hopfield_rate_assembly_gauge_consistency", worst_rate, 1e-9))

        lam_probe = min(max(grid), 0.5)
        if lam_probe > 0:
            p = hopfield.HopfieldParams(omega_x=1.0 + cfg["_detunings"][0], lam=lam_probe)
            dec = hopfield.symplectic_diagonalize(p, "dipole")
            cutoff = 20
            spec = hopfield.fock_oracle_spectrum(p, "dipole", cutoff=cutoff)
            i1, i2 = hopfield.fock_one_polariton_indices(spec, cutoff=cutoff)
            gaps = np.array(
                [spec.values[i1] - spec.values[0], spec.values[i2] - spec.values[0]]
            )
            checks.append(
                _check(
                    "hopfield_fock_oracle_frequencies",
                    float(np.max(np.abs(dec.frequencies - gaps))),
                    1e-6,
                )
            )

    report = {
        "checks": checks,
        "code_version": __version__,
        "config_name": cfg["name"],
        "config_sha256": cfg["_sha256"],
        "passed": all(c["passed"] for c in checks),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{cfg['name']}.verify.json"
    out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="ascii")
    return report


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def bundled_configs() -> Dict[str, Path]:
    root = resources.files("uscdeph").joinpath("configs")
    out = {}
    for entry in sorted(root.iterdir()):
        if entry.name.endswith(".json"):
            out[entry.name[: -len(".json")]] = Path(str(entry))
    return out


def _resolve_config(arg: str) -> Path:
    path = Path(arg)
    if path.exists():
        return path
    bundled = bundled_configs()
    if arg in bundled:
        return bundled[arg]
    raise ConfigError("path", f"no such config file or bundled name: {arg}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="uscdeph",
        description="Gauge-correct pure-dephasing sweeps for the Rabi and Hopfield models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a sweep config, write CSV + provenance")
    p_run.add_argument("config", help="config path or bundled config name")
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--allow-partial", action="store_true",
                       help="keep going past non-convergent grid points")

    p_ver = sub.add_parser("verify", help="run property checks at the config parameters")
    p_ver.add_argument("config", help="config path or bundled config name")
    p_ver.add_argument("--out", default=".", help="output directory")
    p_ver.add_argument("--seed", type=int, default=None, help="override config seed")
    p_ver.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; checks run serially")

    sub.add_parser("list-configs", help="list bundled configs")

    args = parser.parse_args(argv)

    if args.command == "list-configs":
        for name, path in bundled_configs().items():
            try:
                desc = json.loads(path.read_text()).get("description", "")
            except (OSError, json.JSONDecodeError):
                desc = "(unreadable)"
            print(f"{name:12s} {desc}")
        return EXIT_OK

    try:
        cfg = load_config(_resolve_config(args.config))
        if args.seed is not None:
            cfg["seed"] = args.seed
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            csv_path = run_config(
                cfg, Path(args.out), jobs=args.jobs, allow_partial=args.allow_partial
            )
            print(f"wrote {csv_path}")
            return EXIT_OK
        report = verify_config(cfg, Path(args.out))
        for check in report["checks"]:
            status = "PASS" if check["passed"] else "FAIL"
            print(f"[{status}] {check['name']}: {check['measured']:.3e} (tol {check['tolerance']:.1e})")
        return EXIT_OK if report["passed"] else EXIT_PROPERTY
    except TruncationError as err:
        print(f"convergence failure: {err}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except UscdephError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PROPERTY


if __name__ == "__main__":
    sys.exit(main())
