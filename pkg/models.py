import json
import platform
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import scipy
from pydantic import BaseModel, Field, field_validator, model_validator

from rational_filter import RULES

# Purpose: Defines the data shapes passed between the solvers, the service layer, the CLI
# and the HTTP API.
#
# - Solver configurations are pydantic models so every entry point (CLI flags, JSON request
#   bodies, tests) gets the same validation.
# - EigResult is a plain dataclass: it carries numpy arrays and is produced by the solvers.
# - RunRecord is the JSON document written by `cli solve` and returned by `POST /solve`.


# --- Solver configurations --- #

class FilterConfig(BaseModel):
    """Interval and quadrature shared by both solvers."""

    alpha: float
    beta: float
    n_c: int = Field(2, ge=1, description="Quadrature nodes in the upper half-plane.")
    rule: str = "midpoint"
    tol: float = Field(1e-6, gt=0)
    check_every: int = Field(10, ge=1)
    max_iter: Optional[int] = Field(None, ge=1)
    seed: int = 0
    workers: int = Field(1, ge=1)

    @field_validator("rule")
    @classmethod
    def known_rule(cls, v: str) -> str:
        if v not in RULES:
            raise ValueError(f"rule must be one of {RULES}")
        return v

    @model_validator(mode="after")
    def interval_not_empty(self):
        if not self.alpha < self.beta:
            raise ValueError(f"alpha must be < beta, got [{self.alpha}, {self.beta}]")
        return self


class KrylovConfig(FilterConfig):
    """RF-KRYLOV: Arnoldi on the filtered full pencil."""


class RfDdesConfig(FilterConfig):
    """RF-DDES: interface Lanczos plus per-subdomain interior subspaces."""

    sigma: float = 0.0
    p: int = Field(2, ge=1)
    nev_b: int = Field(100, ge=0)
    psi: int = Field(3, ge=1)
    # Overrides nev_b subdomain by subdomain; length must equal p.
    nev_b_per_subdomain: Optional[List[int]] = None
    partition_seed: int = 0

    @field_validator("nev_b_per_subdomain")
    @classmethod
    def non_negative_counts(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        if v is not None and any(count < 0 for count in v):
            raise ValueError("per-subdomain nev_B values must be >= 0")
        return v

    @model_validator(mode="after")
    def overrides_match_p(self):
        if self.nev_b_per_subdomain is not None and len(self.nev_b_per_subdomain) != self.p:
            raise ValueError(f"nev_b_per_subdomain has {len(self.nev_b_per_subdomain)} entries, p={self.p}")
        return self

    def nev_b_for(self, j: int) -> int:
        if self.nev_b_per_subdomain is not None:
            return self.nev_b_per_subdomain[j]
        return self.nev_b


# --- API request bodies --- #

class SolveRequest(BaseModel):
    method: str = "rfddes"
    a_name: str
    m_name: Optional[str] = None  # identity mass when omitted
    config: Dict[str, Any]

    @field_validator("method")
    @classmethod
    def known_method(cls, v: str) -> str:
        if v not in ("rfddes", "rfkrylov"):
            raise ValueError("method must be 'rfddes' or 'rfkrylov'")
        return v


class GenerateRequest(BaseModel):
    name: str
    nx: int = Field(..., ge=1)
    ny: int = Field(..., ge=1)


class MatrixInfo(BaseModel):
    name: str
    n: int
    nnz: int
    symmetric: bool


# --- Results --- #

@dataclass
class EigResult:
    """Ritz pairs in the ORIGINAL variable ordering plus run metadata."""

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    method: str
    iterations: int = 0  # mu: Lanczos (RF-DDES) or Arnoldi (RF-KRYLOV) steps
    converged: bool = True
    dim_z: int = 0
    s: int = 0
    d: List[int] = field(default_factory=list)
    rank_deficient: bool = False
    trace_history: List[float] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def count(self) -> int:
        return int(self.values.size)

    def summary(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "count": self.count,
            "values": self.values.tolist(),
            "residuals": self.residuals.tolist(),
            "mu": self.iterations,
            "converged": self.converged,
            "dim_Z": self.dim_z,
            "s": self.s,
            "d": list(self.d),
            "rank_deficient": self.rank_deficient,
            "trace_history": list(self.trace_history),
        }


def environment_info() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


class RunRecord(BaseModel):
    method: str
    inputs: Dict[str, Optional[str]]
    config: Dict[str, Any]
    result: Dict[str, Any]
    environment: Dict[str, str] = Field(default_factory=environment_info)
    timings: Dict[str, float] = Field(default_factory=dict)

    def to_json(self, omit_timings: bool = False) -> str:
        payload = self.model_dump()
        if omit_timings:
            payload.pop("timings")
        return json.dumps(payload, indent=2, sort_keys=True)
