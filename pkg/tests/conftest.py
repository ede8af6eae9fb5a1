import pytest
import scipy.sparse as sp
from fastapi.testclient import TestClient
from typing import Generator

from main import app
from partitioner import partition_pencil
from pencil_blocks import DDPencil, split_blocks
from repositories import MatrixRepository
from settings import get_repository
from sparse_core import gen_fd_laplacian, random_sparse_pencil

# Purpose: This file sets up shared fixtures for pytest tests.
# Fixtures provide the baseline state for tests: a matrix store in a temporary directory,
# an HTTP client wired to it, and a few small pencils that are cheap enough to solve
# densely inside every test module.

# --- Matrix store and API client --- #

@pytest.fixture(scope="function")
def matrix_repository(tmp_path) -> MatrixRepository:
    """A repository rooted in a fresh temporary directory for every test."""
    return MatrixRepository(tmp_path / "matrices")


@pytest.fixture(scope="function")
def client(matrix_repository: MatrixRepository) -> Generator[TestClient, None, None]:
    """Yield a TestClient whose get_repository dependency points at the temporary store."""
    def override_get_repository():
        yield matrix_repository

    app.dependency_overrides[get_repository] = override_get_repository
    with TestClient(app) as c:
        yield c
    app.dependency_overrides.clear()


# --- Small pencils --- #

@pytest.fixture(scope="module")
def fd_pencil():
    """12 x 10 finite-difference Laplacian with identity mass (n = 120)."""
    a_matrix = gen_fd_laplacian(12, 10)
    return a_matrix, sp.identity(a_matrix.shape[0], format="csr")


@pytest.fixture(scope="module")
def random_pencil():
    """Random symmetric A and SPD, non-diagonal M on a 10 x 5 grid (n = 50)."""
    return random_sparse_pencil(10, 5, seed=0)


@pytest.fixture(scope="module")
def random_dd(random_pencil) -> DDPencil:
    a_matrix, m_matrix = random_pencil
    meta = partition_pencil(a_matrix, m_matrix, p=2, seed=0)
    return split_blocks(a_matrix, m_matrix, meta)


@pytest.fixture(scope="module")
def fd_dd(fd_pencil) -> DDPencil:
    a_matrix, m_matrix = fd_pencil
    meta = partition_pencil(a_matrix, m_matrix, p=2, seed=0)
    return split_blocks(a_matrix, m_matrix, meta)


@pytest.fixture(scope="module")
def mesh_pencil():
    """40 x 38 finite-difference Laplacian (n = 1,520); bisection cuts it between columns 19 and 20."""
    a_matrix = gen_fd_laplacian(40, 38)
    return a_matrix, sp.identity(a_matrix.shape[0], format="csr")


@pytest.fixture(scope="module")
def mesh_dd(mesh_pencil) -> DDPencil:
    a_matrix, m_matrix = mesh_pencil
    meta = partition_pencil(a_matrix, m_matrix, p=2, seed=0)
    return split_blocks(a_matrix, m_matrix, meta)
