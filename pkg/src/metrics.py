"""
Work accounting and solver efficiency metrics.

Work is measured in units of one fine-level residual, i.e. ``nnz(L_0)``
multiply-adds. Every operator application (residuals, smoother products,
restrictions, interpolations, coarse solves) and every Krylov vector
operation is charged to a :class:`WorkCounter` with the nonzeros it
touches.

    WDA = -work / log10(r_final / r_initial)
    TDA = -time / log10(r_final / r_initial)
"""

import math
from collections import Counter
from dataclasses import dataclass, field

WORK_EVENTS = (
    "residual",
    "smoother",
    "restrict",
    "prolong",
    "coarse_solve",
    "vector_op",
    "jacobi",
)
MAX_DIGITS = 16.0


@dataclass
class WorkCounter:
    """Work tally for one solve; ``unit_nnz`` is nnz of the finest operator."""
    unit_nnz: int
    total: float = 0.0
    per_level: Counter = field(default_factory=Counter)
    events: Counter = field(default_factory=Counter)
    visits: Counter = field(default_factory=Counter)

    def __post_init__(self):
        if self.unit_nnz <= 0:
            raise ValueError(f"work unit must be positive, got {self.unit_nnz}")

    def count_work(self, event: str, nnz_applied: float, level: int = 0) -> None:
        """Charge ``nnz_applied`` multiply-adds to ``event`` on ``level``."""
        if event not in WORK_EVENTS:
            raise ValueError(f"unknown work event {event!r}")
        units = nnz_applied / self.unit_nnz
        self.total += units
        self.per_level[level] += units
        self.events[event] += units

    def visit(self, level: int) -> None:
        self.visits[level] += 1

    def snapshot(self) -> dict:
        return {
            "total": self.total,
            "per_level": dict(self.per_level),
            "events": dict(self.events),
            "visits": dict(self.visits),
        }


def digits_gained(r_initial: float, r_final: float) -> float | None:
    """-log10 of the residual reduction; None when nothing was gained."""
    if r_initial <= 0:
        raise ValueError(f"initial residual must be positive, got {r_initial}")
    if r_final >= r_initial:
        return None
    # Reductions below double precision count as MAX_DIGITS.
    return min(-math.log10(max(r_final / r_initial, 1e-300)), MAX_DIGITS)


def wda(r_initial: float, r_final: float, work: float) -> float | None:
    """Work per digit of accuracy; None for a non-convergent (non-reducing) solve."""
    if work <= 0:
        raise ValueError(f"work must be positive, got {work}")
    digits = digits_gained(r_initial, r_final)
    if digits is None:
        return None
    return work / digits


def tda(r_initial: float, r_final: float, seconds: float) -> float | None:
    """Time per digit of accuracy."""
    digits = digits_gained(r_initial, r_final)
    if digits is None or seconds <= 0:
        return None
    return seconds / digits


def operator_complexity(level_nnz: list[int]) -> float:
    """Total nonzeros over all level operators divided by the finest operator's nonzeros."""
    if not level_nnz or level_nnz[0] <= 0:
        return 1.0
    return sum(level_nnz) / level_nnz[0]


def efficiency(nnz: int, tda_seconds: float | None, solve_seconds: float, work: float,
               processes: int) -> dict:
    """Nonzeros processed per second of solve per process, by time and by work."""
    per_tda = nnz / (tda_seconds * processes) if tda_seconds else None
    per_work = None
    if solve_seconds > 0 and work > 0:
        per_work = nnz / ((solve_seconds / work) * processes)
    return {"processes": processes, "nnz_per_tda": per_tda, "nnz_per_wda_time": per_work}
