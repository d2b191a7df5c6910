"""
Pydantic models for solver parameters and solve reports.

``SolverParams`` is the single configuration object threaded through
setup and solve. ``SolveReport`` is the versioned JSON document written by
``laplace-amg solve --json`` and returned by the tool server; its JSON
schema is exported to ``schema/solve_report_schema.json``.

Usage:
    from src.solver_schema import SolverParams, SolveReport

    params = SolverParams(cycle="k", tol=1e-10)
    report = SolveReport.model_validate_json(text)
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

REPORT_SCHEMA_VERSION = "1.0"

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 500
DEFAULT_MAX_LEVELS = 40
DEFAULT_COARSE_NNZ = 1000


# =============================================================================
# Parameters
# =============================================================================

class SolverParams(BaseModel):
    """Hierarchy setup and iteration parameters."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    tol: float = Field(DEFAULT_TOL, gt=0, lt=1, description="Relative residual target")
    max_iter: int = Field(DEFAULT_MAX_ITER, ge=1, description="Outer iteration cap")
    cycle: Literal["v", "w", "k"] = Field("v", description="V-cycle, W-cycle or K-cycle")
    precond: Literal["mg", "jacobi"] = Field("mg", description="Multigrid or diagonal")
    smoother: Literal["jacobi-chebyshev", "chebyshev"] = "jacobi-chebyshev"

    cheby_degree: int = Field(2, ge=1, description="Chebyshev polynomial degree")
    pre_sweeps: int = Field(1, ge=1)
    post_sweeps: int = Field(1, ge=1)
    kcycle_inner: int = Field(2, ge=1, description="Inner FCG iterations per K-cycle level")

    elim_gate: float = Field(0.05, gt=0, lt=1, description="Minimum eliminated fraction")
    elim_rounds: int = Field(1, ge=1, description="Elimination levels attempted before aggregating")
    max_degree: int = Field(4, ge=1, description="Largest degree eligible for elimination")

    vote_threshold: int = Field(8, ge=1)
    voting_rounds: int = Field(10, ge=1)
    test_vectors: int = Field(4, ge=1)
    test_sweeps: int = Field(3, ge=1)

    max_levels: int = Field(DEFAULT_MAX_LEVELS, ge=1)
    coarse_nnz: int = Field(DEFAULT_COARSE_NNZ, ge=1, description="Coarsest nonzero target")
    seed: int = Field(0, ge=0)
    randomize: bool = Field(True, description="Randomly relabel the finest level")

    grid_rows: int = Field(1, ge=1)
    grid_cols: int = Field(1, ge=1)

    @property
    def gamma(self) -> int:
        return 2 if self.cycle in ("w", "k") else 1

    @model_validator(mode="after")
    def validate_cycle(self) -> "SolverParams":
        if self.cycle == "k" and self.precond == "jacobi":
            raise ValueError("K-cycles need the multigrid preconditioner")
        return self


# =============================================================================
# Reports
# =============================================================================

class LevelInfo(BaseModel):
    """One row of the hierarchy table."""
    kind: Literal["elimination", "aggregation", "coarsest"]
    n: int = Field(..., ge=0)
    nnz: int = Field(..., ge=0)
    imbalance: float = Field(1.0, ge=0, description="Largest block nnz over mean block nnz")


class Efficiency(BaseModel):
    processes: int = Field(..., ge=1)
    nnz_per_tda: Optional[float] = Field(None, description="nnz(L) / (TDA * processes)")
    nnz_per_wda_time: Optional[float] = Field(
        None, description="nnz(L) / ((solve_seconds / work_units) * processes)"
    )


class SolveReport(BaseModel):
    """Outcome of one solve."""
    schema_version: str = REPORT_SCHEMA_VERSION
    graph: str
    n: int = Field(..., ge=0)
    nnz: int = Field(..., ge=0)
    params: SolverParams
    levels: list[LevelInfo] = Field(default_factory=list)
    residuals: list[float] = Field(..., min_length=1)
    iterations: int = Field(..., ge=0)
    converged: bool
    work_units: float = Field(..., ge=0)
    wda: Optional[float] = None
    tda: Optional[float] = None
    setup_seconds: float = Field(0.0, ge=0)
    solve_seconds: float = Field(0.0, ge=0)
    operator_complexity: float = Field(1.0, ge=1.0)
    dropped_self_loops: int = Field(0, ge=0)
    efficiency: Optional[Efficiency] = None

    @model_validator(mode="after")
    def validate_wda(self) -> "SolveReport":
        if self.converged and self.iterations > 0 and (self.wda is None or self.wda <= 0):
            raise ValueError("a converged solve with iterations must report a positive WDA")
        return self

    @property
    def relative_residual(self) -> float:
        r0 = self.residuals[0]
        return self.residuals[-1] / r0 if r0 > 0 else 0.0


def report_json_schema() -> dict:
    return SolveReport.model_json_schema()
