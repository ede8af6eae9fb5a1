import logging
from typing import Any, Dict, List, Optional

from fastapi import Depends, FastAPI, HTTPException, Query, status
from pydantic import ValidationError

from errors import PhaseError, RfDdesError
from models import GenerateRequest, MatrixInfo, SolveRequest
from repositories import MatrixRepository
from services import EigenService
from settings import get_repository

logger = logging.getLogger(__name__)

# Purpose: HTTP front end. Every endpoint is a thin wrapper around EigenService; the
# repository comes from the get_repository dependency so tests can point it at a
# temporary directory.

app = FastAPI(title="RF-DDES eigensolver")


def get_service(repository: MatrixRepository = Depends(get_repository)) -> EigenService:
    return EigenService(repository)


def _not_found(name: str) -> HTTPException:
    return HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"Matrix '{name}' not found")


@app.get("/")
def read_root():
    return {"message": "Welcome to the RF-DDES eigensolver API! Go to /docs for details."}


# --- Matrices (BREAD) --- #

# Browse
@app.get("/matrices", response_model=List[str])
def browse_matrices(skip: int = 0, limit: int = 100, service: EigenService = Depends(get_service)):
    return service.repository.browse(skip=skip, limit=limit)


# Add (generated finite-difference Laplacian)
@app.post("/matrices/fd", response_model=MatrixInfo, status_code=status.HTTP_201_CREATED)
def add_fd_matrix(request: GenerateRequest, service: EigenService = Depends(get_service)):
    try:
        return service.generate_fd(request.name, request.nx, request.ny)
    except ValueError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))


# Read
@app.get("/matrices/{name}", response_model=MatrixInfo)
def read_matrix(name: str, service: EigenService = Depends(get_service)):
    try:
        info = service.repository.info(name)
    except ValueError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))
    if info is None:
        raise _not_found(name)
    return info


# Delete
@app.delete("/matrices/{name}", status_code=status.HTTP_204_NO_CONTENT)
def delete_matrix(name: str, service: EigenService = Depends(get_service)):
    try:
        deleted = service.repository.delete(name)
    except ValueError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))
    if not deleted:
        raise _not_found(name)
    return None


@app.get("/matrices/{name}/partition-stats")
def partition_stats(name: str, p: int = Query(2, ge=1), seed: int = 0, m_name: Optional[str] = None,
                    service: EigenService = Depends(get_service)) -> Dict[str, Any]:
    try:
        return service.partition_stats(name, m_name, p, seed)
    except LookupError as exc:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=str(exc))
    except ValueError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))


# --- Filter and solves --- #

@app.get("/filter")
def filter_curve(alpha: float, beta: float, nc: int = Query(2, ge=1), rule: str = "midpoint",
                 num: int = Query(401, ge=2, le=100000), scaled: bool = False):
    try:
        return EigenService.filter_curve(alpha, beta, nc, rule, num=num, scaled=scaled)
    except ValueError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))


@app.post("/solve")
def solve(request: SolveRequest, omit_timings: bool = False, service: EigenService = Depends(get_service)):
    try:
        record = service.solve(request.method, request.a_name, request.m_name, request.config)
    except LookupError as exc:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=str(exc))
    except ValidationError as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
                            detail=exc.errors(include_url=False, include_context=False))
    except PhaseError as exc:
        logger.error(f"Solve failed in phase '{exc.phase}': {exc.cause}")
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
                            detail={"phase": exc.phase, "message": str(exc.cause)})
    except (ValueError, RfDdesError) as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))
    payload = record.model_dump()
    if omit_timings:
        payload.pop("timings")
    return payload
