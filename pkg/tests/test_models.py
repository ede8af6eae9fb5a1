import json

import numpy as np
import pytest
from pydantic import ValidationError

from models import EigResult, FilterConfig, GenerateRequest, KrylovConfig, RfDdesConfig, RunRecord, SolveRequest

# Purpose: Tests for configuration validation and the run record format.


def test_defaults():
    cfg = RfDdesConfig(alpha=0.0, beta=1.0)

    assert (cfg.p, cfg.n_c, cfg.sigma, cfg.tol, cfg.check_every) == (2, 2, 0.0, 1e-6, 10)
    assert (cfg.nev_b, cfg.psi, cfg.rule) == (100, 3, "midpoint")
    assert cfg.nev_b_for(1) == 100


@pytest.mark.parametrize("bad", [
    {"alpha": 1.0, "beta": 1.0},
    {"alpha": 2.0, "beta": 1.0},
    {"alpha": 0.0, "beta": 1.0, "n_c": 0},
    {"alpha": 0.0, "beta": 1.0, "rule": "simpson"},
    {"alpha": 0.0, "beta": 1.0, "tol": 0.0},
    {"alpha": 0.0, "beta": 1.0, "check_every": 0},
])
def test_filter_config_rejects(bad):
    with pytest.raises(ValidationError):
        FilterConfig(**bad)


def test_rf_ddes_config_rejects():
    with pytest.raises(ValidationError):
        RfDdesConfig(alpha=0.0, beta=1.0, psi=0)
    with pytest.raises(ValidationError):
        RfDdesConfig(alpha=0.0, beta=1.0, nev_b_per_subdomain=[1, 2, 3])
    with pytest.raises(ValidationError):
        RfDdesConfig(alpha=0.0, beta=1.0, nev_b_per_subdomain=[1, -2])


def test_per_subdomain_override():
    cfg = RfDdesConfig(alpha=0.0, beta=1.0, p=3, nev_b_per_subdomain=[5, 0, 9])
    assert [cfg.nev_b_for(j) for j in range(3)] == [5, 0, 9]


def test_krylov_config_ignores_ddes_only_keys():
    cfg = KrylovConfig(alpha=0.0, beta=1.0, psi=3, nev_b=10)
    assert not hasattr(cfg, "psi")


def test_request_bodies():
    assert SolveRequest(a_name="fd", config={}).method == "rfddes"
    with pytest.raises(ValidationError):
        SolveRequest(method="lanczos", a_name="fd", config={})
    with pytest.raises(ValidationError):
        GenerateRequest(name="fd", nx=0, ny=3)


def _result() -> EigResult:
    return EigResult(values=np.array([0.5, 1.5]), vectors=np.eye(3, 2), residuals=np.array([1e-12, 2e-12]),
                     method="rfddes", iterations=7, dim_z=12, s=4, d=[10, 9], timings={"partition": 0.1})


def test_result_summary():
    summary = _result().summary()

    assert summary["count"] == 2
    assert summary["values"] == [0.5, 1.5]
    assert summary["mu"] == 7
    assert summary["dim_Z"] == 12
    assert summary["d"] == [10, 9]


def test_run_record_json_is_sorted_and_can_omit_timings():
    result = _result()
    record = RunRecord(method="rfddes", inputs={"A": "a.mtx", "M": None}, config={"alpha": 0.0},
                       result=result.summary(), timings=result.timings)

    full = json.loads(record.to_json())
    trimmed = record.to_json(omit_timings=True)

    assert full["timings"] == {"partition": 0.1}
    assert "timings" not in json.loads(trimmed)
    assert set(full["environment"]) == {"python", "numpy", "scipy", "platform"}
    assert trimmed == record.to_json(omit_timings=True)
    assert list(json.loads(trimmed)) == sorted(json.loads(trimmed))
