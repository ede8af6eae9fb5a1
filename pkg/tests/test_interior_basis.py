import numpy as np
import pytest
import scipy.sparse as sp

from errors import DimensionMismatchError, SingularShiftError
from interior_basis import (build_interior_subspace, compute_phi_psi, factor_shifted_interior,
                            interior_eigenspaces, resolvent_blocks, smallest_eigs_B)
from oracle import block_inverse
from sparse_core import fd_laplacian_eigenvalues, gen_fd_laplacian

# Purpose: Tests for the per-subdomain interior eigenvectors and resolvent expansion blocks.


def _random_interface_basis(s: int, mu: int, seed: int = 0) -> np.ndarray:
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((s, mu)))
    return q


# --- Nearest eigenpairs --- #

def test_dense_path_returns_pairs_nearest_sigma(random_dd):
    """Small blocks: the nev_B eigenpairs closest to sigma, M_B-orthonormal."""
    b, mb = random_dd.B[0], random_dd.M_B[0]
    sigma = 1.0

    vectors, values = smallest_eigs_B(b, mb, sigma, 4)

    all_values = np.linalg.eigvals(np.linalg.solve(mb.toarray(), b.toarray())).real
    expected = np.sort(all_values[np.argsort(np.abs(all_values - sigma))[:4]])
    assert np.allclose(values, expected, atol=1e-10)
    assert np.allclose(vectors.T @ (mb @ vectors), np.eye(4), atol=1e-10)
    assert np.allclose(b @ vectors, (mb @ vectors) * values, atol=1e-10)


def test_shift_invert_path_matches_analytic_values():
    """Blocks above the dense limit go through shift-invert Lanczos."""
    b = gen_fd_laplacian(20, 15)
    mb = sp.identity(300, format="csr")

    vectors, values = smallest_eigs_B(b, mb, 0.0, 6)

    assert np.allclose(values, fd_laplacian_eigenvalues(20, 15)[:6], atol=1e-8)
    assert np.allclose(vectors.T @ vectors, np.eye(6), atol=1e-8)
    assert np.all(np.diff(values) >= 0)


def test_nev_is_clamped_to_block_size(random_dd):
    b, mb = random_dd.B[0], random_dd.M_B[0]
    d = b.shape[0]

    vectors, values = smallest_eigs_B(b, mb, 0.0, d + 10)

    assert vectors.shape == (d, d)
    assert values.shape == (d,)


def test_zero_nev_gives_empty_block(random_dd):
    vectors, values = smallest_eigs_B(random_dd.B[0], random_dd.M_B[0], 0.0, 0)
    assert vectors.shape == (random_dd.B[0].shape[0], 0)
    assert values.size == 0


def test_singular_shift_is_reported():
    b = sp.csr_matrix(np.diag([1.0, 2.0, 3.0]))
    with pytest.raises(SingularShiftError):
        factor_shifted_interior(b, sp.identity(3, format="csr"), 2.0)


# --- Resolvent expansion --- #

def test_phi_and_psi_blocks(random_dd):
    q = _random_interface_basis(random_dd.n_interface, 3)
    sigma = 0.5
    window = random_dd.meta.interface_slice(0)

    phi, psi = compute_phi_psi(random_dd, 0, sigma, q)

    edge = random_dd.E_hat[0].toarray() - sigma * random_dd.M_E_hat[0].toarray()
    assert np.allclose(phi, edge @ q[window])
    assert np.allclose(psi, random_dd.M_E_hat[0].toarray() @ q[window])


def test_identity_mass_has_no_psi_block(fd_dd):
    q = _random_interface_basis(fd_dd.n_interface, 2)
    _, psi = compute_phi_psi(fd_dd, 1, 0.0, q)
    assert psi is None


def test_phi_rejects_wrong_basis_size(random_dd):
    with pytest.raises(DimensionMismatchError):
        compute_phi_psi(random_dd, 0, 0.0, np.zeros((random_dd.n_interface + 1, 2)))


def test_resolvent_blocks_follow_the_recursion(random_dd):
    """X_1 = B_sigma^{-1} Phi and X_{t+1} = B_sigma^{-1} M_B X_t."""
    sigma = 0.3
    b, mb = random_dd.B[1], random_dd.M_B[1]
    factor = factor_shifted_interior(b, mb, sigma)
    phi = np.random.default_rng(4).standard_normal((b.shape[0], 2))
    b_sigma = b.toarray() - sigma * mb.toarray()

    sigma_blocks, gamma_blocks = resolvent_blocks(factor, mb, phi, None, depth=3)

    x1 = np.linalg.solve(b_sigma, phi)
    x2 = np.linalg.solve(b_sigma, mb @ x1)
    x3 = np.linalg.solve(b_sigma, mb @ x2)
    assert gamma_blocks is None
    assert np.allclose(sigma_blocks, np.hstack([x1, x2, x3]))


def test_first_resolvent_block_is_the_interior_part_of_the_inverse(random_dd):
    """(A - sigma M)^{-1} [0; y] has interior part -B_sigma^{-1} E_sigma S_sigma^{-1} y."""
    # Arrange
    sigma = 0.3
    meta = random_dd.meta
    d = meta.n_interior
    inverse = block_inverse(random_dd, sigma)
    y = np.random.default_rng(2).standard_normal((meta.n_interface, 1))
    schur_solve = np.real(inverse[d:, d:] @ y)
    expected = np.real(inverse[:d, d:] @ y)

    for j in range(meta.p):
        # Act
        factor = factor_shifted_interior(random_dd.B[j], random_dd.M_B[j], sigma)
        phi, psi_block = compute_phi_psi(random_dd, j, sigma, schur_solve)
        sigma_blocks, _ = resolvent_blocks(factor, random_dd.M_B[j], phi, psi_block, 1)

        # Assert
        scale = max(np.linalg.norm(expected), 1.0)
        assert np.allclose(-sigma_blocks, expected[meta.interior_slice(j)], atol=1e-9 * scale)


def test_resolvent_depth_must_be_positive(random_dd):
    factor = factor_shifted_interior(random_dd.B[0], random_dd.M_B[0], 0.1)
    with pytest.raises(ValueError):
        resolvent_blocks(factor, random_dd.M_B[0], np.zeros((random_dd.B[0].shape[0], 1)), None, depth=0)


# --- Whole subspace --- #

def test_interior_subspace_shapes(random_dd):
    mu, psi = 3, 2
    q = _random_interface_basis(random_dd.n_interface, mu)

    spaces = interior_eigenspaces(random_dd, 0.1, [4, 5], workers=2)
    subspace = build_interior_subspace(random_dd, 0.1, q, psi, spaces, workers=2)

    assert subspace.n_eigvecs == 9
    assert [v.shape[1] for v in subspace.V] == [4, 5]
    for j in range(random_dd.p):
        d_j = random_dd.meta.d[j]
        assert subspace.Sigma[j].shape == (d_j, psi * mu)
        assert subspace.Gamma[j].shape == (d_j, psi * mu)


def test_interior_subspace_without_mass_coupling(fd_dd):
    q = _random_interface_basis(fd_dd.n_interface, 2)
    spaces = interior_eigenspaces(fd_dd, 0.0, [3, 3])

    subspace = build_interior_subspace(fd_dd, 0.0, q, 1, spaces)

    assert subspace.Gamma is None


def test_eigenspace_count_must_match_p(random_dd):
    with pytest.raises(DimensionMismatchError):
        interior_eigenspaces(random_dd, 0.0, [3])
