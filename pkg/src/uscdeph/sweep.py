"""Sweep result container shared by the model modules and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List


@dataclass
class SweepRow:
    """One computed quantity at one grid point."""

    coupling: float
    detuning: float
    label: str
    quantity: str
    value: float
    mode: str
    gauge: str
    converged: bool = True

    def key(self):
        return (self.detuning, self.coupling, self.label, self.quantity, self.mode)


@dataclass
class SweepResult:
    """Deterministically ordered sweep output plus provenance metadata."""

    rows: List[SweepRow] = field(default_factory=list)
    meta: Dict[str, object] = field(default_factory=dict)

    def sort(self) -> None:
        self.rows.sort(key=SweepRow.key)

    def extend(self, other: "SweepResult") -> None:
        self.rows.extend(other.rows)

    def select(self, **criteria) -> List[SweepRow]:
        out = []
        for row in self.rows:
            if all(getattr(row, k) == v for k, v in criteria.items()):
                out.append(row)
        return out
