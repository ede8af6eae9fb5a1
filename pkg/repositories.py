import logging
import re
from pathlib import Path
from typing import List, Optional

import scipy.sparse as sp

from models import MatrixInfo
from sparse_core import SparseSym, is_symmetric, load_matrix_market, save_matrix_market

logger = logging.getLogger(__name__)

# Purpose: Implements the data access layer for matrices. A matrix store is a directory of
# Matrix Market files, one per matrix, named "<name>.mtx". The repository is the only place
# that knows about paths and file naming; services and endpoints work with names.

NAME_PATTERN = re.compile(r"^[A-Za-z0-9_.-]+$")
SUFFIX = ".mtx"


class MatrixRepository:
    """Repository for matrices stored as Matrix Market files.

    Methods correspond to BREAD operations (Browse, Read, Edit, Add, Delete). Edit is
    an overwrite through `add(..., overwrite=True)`.
    """

    def __init__(self, root: Path):
        self.root = Path(root)

    def _path(self, name: str) -> Path:
        if not NAME_PATTERN.match(name) or name in (".", ".."):
            raise ValueError(f"Invalid matrix name '{name}': use letters, digits, '_', '.', '-'")
        return self.root / f"{name}{SUFFIX}"

    # --- Add --- #
    def add(self, name: str, matrix: sp.spmatrix, overwrite: bool = False) -> MatrixInfo:
        """Stores a matrix under `name`.

        Raises:
            ValueError: invalid name, or the name is taken and overwrite is False.
        """
        path = self._path(name)
        if path.exists() and not overwrite:
            raise ValueError(f"Matrix '{name}' already exists.")
        self.root.mkdir(parents=True, exist_ok=True)
        save_matrix_market(path, matrix)
        logger.info(f"Stored matrix '{name}' ({matrix.shape[0]}x{matrix.shape[1]}, nnz={matrix.nnz})")
        return self._info(name, sp.csr_matrix(matrix))

    # --- Read --- #
    def exists(self, name: str) -> bool:
        return self._path(name).is_file()

    def get(self, name: str) -> Optional[SparseSym]:
        """Loads a stored matrix; None when the name is unknown."""
        path = self._path(name)
        if not path.is_file():
            return None
        return load_matrix_market(path)

    def path_of(self, name: str) -> Optional[Path]:
        path = self._path(name)
        return path if path.is_file() else None

    def info(self, name: str) -> Optional[MatrixInfo]:
        matrix = self.get(name)
        return None if matrix is None else self._info(name, matrix)

    @staticmethod
    def _info(name: str, matrix: sp.csr_matrix) -> MatrixInfo:
        return MatrixInfo(name=name, n=matrix.shape[0], nnz=int(matrix.nnz), symmetric=is_symmetric(matrix))

    # --- Browse --- #
    def browse(self, skip: int = 0, limit: int = 100) -> List[str]:
        """Names of stored matrices in sorted order, paginated like a database browse."""
        if not self.root.is_dir():
            return []
        names = sorted(path.name[:-len(SUFFIX)] for path in self.root.glob(f"*{SUFFIX}"))
        return names[skip:skip + limit]

    # --- Delete --- #
    def delete(self, name: str) -> bool:
        """True if a matrix was found and removed."""
        path = self._path(name)
        if not path.is_file():
            return False
        path.unlink()
        logger.info(f"Deleted matrix '{name}'")
        return True
