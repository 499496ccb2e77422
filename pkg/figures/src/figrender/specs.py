"""Figure layouts: which CSV, which columns, which curves per panel.

The renderer is a pure consumer of sweep CSVs; every curve is a column
selection (plus the axis scales recorded here), never a computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple


@dataclass(frozen=True)
class Curve:
    """One plotted line: row filter -> (x column, y column)."""

    filters: Dict[str, str]
    label: str
    style: Dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Panel:
    title: str
    x_column: str
    y_column: str
    curves: Tuple[Curve, ...]
    x_scale: str = "linear"
    y_scale: str = "linear"
    x_label: Optional[str] = None
    y_label: Optional[str] = None
    y_floor: Optional[float] = None  # drop rows below this on log axes


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    csv_name: str
    panels: Tuple[Panel, ...]
    required_columns: Tuple[str, ...]
    suptitle: str = ""


_TRANSITION_STYLE = {
    "1-:0": {"color": "tab:blue"},
    "1+:0": {"color": "tab:red"},
}

_BRANCH_COLORS = {"1": "tab:blue", "2": "tab:red"}
_DETUNING_DASHES = {"-0.2": "--", "0": "-", "0.2": ":"}


def _rabi_panels(modes: Tuple[str, str], titles: Tuple[str, str]) -> Tuple[Panel, ...]:
    panels = []
    for mode, title in zip(modes, titles):
        curves = tuple(
            Curve(
                filters={"mode": mode, "transition": tr},
                label=f"({tr.replace(':', ', ')})",
                style=dict(_TRANSITION_STYLE[tr]),
            )
            for tr in ("1-:0", "1+:0")
        )
        panels.append(
            Panel(
                title=title,
                x_column="eta",
                y_column="rate_over_gamma0",
                curves=curves,
                x_scale="linear",
                y_scale="log",
                x_label="normalized coupling",
                y_label="rate / bare rate",
                y_floor=1e-12,
            )
        )
    return tuple(panels)


def _hopfield_rate_panel(title: str, y_column: str, detunings: List[str]) -> Panel:
    curves = []
    for mu in ("1", "2"):
        for det in detunings:
            curves.append(
                Curve(
                    filters={"mu": mu, "detuning": det},
                    label=f"mu={mu}, detuning={det}",
                    style={
                        "color": _BRANCH_COLORS[mu],
                        "linestyle": _DETUNING_DASHES.get(det, "-"),
                    },
                )
            )
    return Panel(
        title=title,
        x_column="lambda",
        y_column=y_column,
        curves=tuple(curves),
        x_scale="log",
        y_scale="log",
        x_label="normalized coupling",
        y_label="rate / bare rate",
        y_floor=1e-12,
    )


def build_specs() -> Dict[str, FigureSpec]:
    specs = {}

    specs["fig2"] = FigureSpec(
        figure_id="fig2",
        csv_name="fig2.csv",
        required_columns=("eta", "transition", "rate_over_gamma0", "mode", "converged"),
        suptitle="Rabi model: qubit pure dephasing",
        panels=_rabi_panels(
            ("correct", "naive_coulomb"), ("(a) gauge-correct", "(b) wrong Coulomb")
        ),
    )

    specs["figS1"] = FigureSpec(
        figure_id="figS1",
        csv_name="figS1.csv",
        required_columns=("eta", "transition", "rate_over_gamma0", "mode", "converged"),
        suptitle="Rabi model: cavity pure dephasing",
        panels=_rabi_panels(
            ("correct", "naive_dipole"), ("(a) gauge-correct", "(b) wrong dipole")
        ),
    )

    hop_cols = (
        "lambda", "detuning", "mu", "omega_over_omegac",
        "rate_correct_over_gamma0", "rate_naive_coulomb_over_gamma0",
        "rate_naive_dipole_over_gamma0", "converged",
    )

    specs["fig3"] = FigureSpec(
        figure_id="fig3",
        csv_name="fig3.csv",
        required_columns=hop_cols,
        suptitle="Hopfield model: exciton dephasing, gauge-correct",
        panels=(
            _hopfield_rate_panel(
                "polariton rates", "rate_correct_over_gamma0", ["-0.2", "0", "0.2"]
            ),
        ),
    )

    specs["fig4"] = FigureSpec(
        figure_id="fig4",
        csv_name="fig4.csv",
        required_columns=hop_cols,
        suptitle="Hopfield model: wrong-gauge rates and polariton frequencies",
        panels=(
            _hopfield_rate_panel(
                "(a) wrong, detuning -0.2", "rate_naive_coulomb_over_gamma0", ["-0.2"]
            ),
            _hopfield_rate_panel(
                "(b) wrong, detuning +0.2", "rate_naive_coulomb_over_gamma0", ["0.2"]
            ),
            Panel(
                title="(c) polariton frequencies",
                x_column="lambda",
                y_column="omega_over_omegac",
                curves=tuple(
                    Curve(
                        filters={"mu": mu, "detuning": "-0.003"},
                        label=f"mu={mu}",
                        style={"color": _BRANCH_COLORS[mu]},
                    )
                    for mu in ("1", "2")
                ),
                x_scale="log",
                y_scale="linear",
                x_label="normalized coupling",
                y_label="frequency / cavity frequency",
            ),
        ),
    )

    specs["figS2"] = FigureSpec(
        figure_id="figS2",
        csv_name="figS2.csv",
        required_columns=hop_cols,
        suptitle="Hopfield model: cavity dephasing",
        panels=(
            _hopfield_rate_panel(
                "(a) gauge-correct", "rate_correct_over_gamma0", ["-0.2", "0", "0.2"]
            ),
            _hopfield_rate_panel(
                "(b) wrong dipole", "rate_naive_dipole_over_gamma0", ["-0.2", "0", "0.2"]
            ),
        ),
    )

    return specs


FIGURE_SPECS = build_specs()
