"""Renderer tests against schema-true synthetic CSVs (the file interface),
plus an end-to-end run against the producer CLI when it is installed."""

import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from figrender import FIGURE_SPECS, RenderError, render
from figrender.cli import main as cli_main

RABI_HEADER = "eta,transition,rate_over_gamma0,mode,gauge,detuning,converged"
HOP_HEADER = (
    "lambda,detuning,mu,omega_over_omegac,w_a_coulomb,w_b_coulomb,w_a_dipole,"
    "w_b_dipole,rate_correct_over_gamma0,rate_naive_coulomb_over_gamma0,"
    "rate_naive_dipole_over_gamma0,converged"
)


def write_rabi_csv(path: Path, name: str, modes, converged="1"):
    rows = [RABI_HEADER]
    for mode in modes:
        gauge = "coulomb" if "coulomb" in mode else "dipole"
        for i, eta in enumerate([0.0, 0.5, 1.0, 1.5]):
            for tr, rate in (("1-:0", 2.0 / (1 + 5 * eta)), ("1+:0", 0.01 + eta)):
                rows.append(
                    f"{eta},{tr},{rate},{mode},{gauge},-0.003,{converged}"
                )
    (path / f"{name}.csv").write_text("\n".join(rows) + "\n")


def write_hopfield_csv(path: Path, name: str, detunings=(-0.2, 0.0, 0.2, -0.003),
                       converged="1"):
    rows = [HOP_HEADER]
    for det in detunings:
        for lam in (0.01, 0.1, 1.0, 3.0):
            for mu, om in ((1, 1.0 / (1 + lam)), (2, 1.0 + lam)):
                w = 0.5 + 0.1 * mu
                rows.append(
                    f"{lam},{det},{mu},{om},{w},{w},{w},{w},"
                    f"{0.9 / (1 + lam * mu)},{0.4 * lam},{0.2 * lam},{converged}"
                )
    (path / f"{name}.csv").write_text("\n".join(rows) + "\n")


def make_run_dir(tmp_path: Path) -> Path:
    data = tmp_path / "run"
    data.mkdir()
    write_rabi_csv(data, "fig2", ["correct", "naive_coulomb"])
    write_rabi_csv(data, "figS1", ["correct", "naive_dipole"])
    write_hopfield_csv(data, "fig3")
    write_hopfield_csv(data, "fig4")
    write_hopfield_csv(data, "figS2")
    return data


def test_all_five_figures_render(tmp_path):
    data = make_run_dir(tmp_path)
    for figure_id in sorted(FIGURE_SPECS):
        out = tmp_path / f"{figure_id}.pdf"
        result = render(figure_id, data, out)
        assert result == out
        assert out.exists()
        assert out.stat().st_size > 500


def test_unknown_figure_id():
    with pytest.raises(RenderError, match="unknown figure id"):
        render("fig99", Path("."), Path("out.pdf"))


def test_missing_csv_aborts_without_partial_file(tmp_path):
    out = tmp_path / "fig2.pdf"
    with pytest.raises(RenderError, match="missing input CSV"):
        render("fig2", tmp_path, out)
    assert not out.exists()


def test_missing_column_aborts(tmp_path):
    data = tmp_path / "run"
    data.mkdir()
    (data / "fig2.csv").write_text("eta,transition\n0.0,1-:0\n")
    with pytest.raises(RenderError, match="missing required columns"):
        render("fig2", data, tmp_path / "fig2.pdf")
    assert not (tmp_path / "fig2.pdf").exists()


def test_non_converged_rows_refused(tmp_path):
    data = tmp_path / "run"
    data.mkdir()
    write_rabi_csv(data, "fig2", ["correct", "naive_coulomb"], converged="0")
    out = tmp_path / "fig2.pdf"
    with pytest.raises(RenderError, match="non-converged"):
        render("fig2", data, out)
    assert not out.exists()


def test_missing_curve_selection_aborts(tmp_path):
    data = tmp_path / "run"
    data.mkdir()
    write_rabi_csv(data, "fig2", ["correct"])  # wrong-gauge rows absent
    with pytest.raises(RenderError, match="no rows match"):
        render("fig2", data, tmp_path / "fig2.pdf")


def test_cli_roundtrip_and_exit_codes(tmp_path):
    data = make_run_dir(tmp_path)
    out = tmp_path / "cli_fig3.pdf"
    assert cli_main(["render", "fig3", "--data", str(data), "--out", str(out)]) == 0
    assert out.exists()
    missing = tmp_path / "empty"
    missing.mkdir()
    code = cli_main(["render", "fig3", "--data", str(missing), "--out", str(tmp_path / "x.pdf")])
    assert code == 1
    assert not (tmp_path / "x.pdf").exists()


@pytest.mark.skipif(
    shutil.which("uscdeph") is None, reason="producer CLI not installed"
)
def test_end_to_end_against_producer(tmp_path):
    data = tmp_path / "run"
    for name in ("fig2", "fig3", "fig4", "figS1", "figS2"):
        proc = subprocess.run(
            ["uscdeph", "run", name, "--out", str(data)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
    for figure_id in sorted(FIGURE_SPECS):
        out = tmp_path / f"{figure_id}.pdf"
        render(figure_id, data, out)
        assert out.exists() and out.stat().st_size > 500
