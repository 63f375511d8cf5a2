"""Traceless 2x2 involutions, their seeds, projectors and logarithm."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from balancenets.errors import SingularSeedError, ValidationError
from balancenets.involution import (
    E2,
    Z_SWAP,
    InvolutionMatrix,
    involution_from_seed,
    involution_log,
    seed_from_involution,
    spectral_projectors,
)

finite = st.floats(-3.0, 3.0, allow_nan=False)


def test_swap_matrix_is_the_canonical_involution():
    inv = InvolutionMatrix(0.0, 1.0, 1.0)
    assert np.allclose(inv.matrix, Z_SWAP)
    assert np.allclose(inv.matrix @ inv.matrix, E2)


def test_constraint_violation_raises():
    with pytest.raises(ValidationError):
        InvolutionMatrix(0.5, 1.0, 1.0)


def test_from_matrix_round_trip_and_traceless_check():
    inv = InvolutionMatrix(0.6, 0.8, 0.8)
    again = InvolutionMatrix.from_matrix(inv.matrix)
    assert again == inv
    with pytest.raises(ValidationError):
        InvolutionMatrix.from_matrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValidationError):
        InvolutionMatrix.from_matrix(np.eye(3))


@pytest.mark.parametrize(
    "a,b,c",
    [
        (0.0, 1.0, 1.0),
        (0.6, 0.8, 0.8),
        (0.5, -1.5, -0.5),
        (1.0, 0.0, 0.7),
        (-1.0, 0.0, -0.3),
        (2.0, 1.0, -3.0),
    ],
)
def test_eigenvectors_carry_the_signed_eigenvalues(a, b, c):
    inv = InvolutionMatrix(a, b, c)
    plus, minus = inv.eigenvectors()
    assert np.linalg.norm(plus) > 0
    assert np.linalg.norm(minus) > 0
    assert np.allclose(inv.matrix @ plus, plus)
    assert np.allclose(inv.matrix @ minus, -minus)


def test_involution_from_seed_matches_explicit_conjugation():
    seed = np.array([[1.0, 2.0], [0.5, 3.0]])
    inv = involution_from_seed(seed)
    direct = seed @ Z_SWAP @ np.linalg.inv(seed)
    assert np.allclose(inv.matrix, direct)


def test_singular_seed_rejected():
    with pytest.raises(SingularSeedError):
        involution_from_seed(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_seed_round_trip():
    inv = InvolutionMatrix(0.6, 0.8, 0.8)
    v = np.array([1.0, 0.25])
    seed = seed_from_involution(inv, v)
    assert np.allclose(seed[:, 0], v)
    assert np.allclose(seed[:, 1], inv.matrix @ v)
    rebuilt = involution_from_seed(seed)
    assert np.allclose(rebuilt.matrix, inv.matrix)


def test_eigenvector_makes_no_seed():
    inv = InvolutionMatrix(0.6, 0.8, 0.8)
    plus, _ = inv.eigenvectors()
    with pytest.raises(SingularSeedError):
        seed_from_involution(inv, plus)
    with pytest.raises(SingularSeedError):
        seed_from_involution(inv, np.zeros(2))


def test_spectral_projectors_split_the_plane():
    inv = InvolutionMatrix(0.5, -1.5, -0.5)
    z1, z2 = spectral_projectors(inv)
    assert np.allclose(z1 + z2, E2)
    assert np.allclose(z1 @ z1, z1)
    assert np.allclose(z2 @ z2, z2)
    assert np.allclose(z1 @ z2, np.zeros((2, 2)))
    assert np.allclose(z1 - z2, inv.matrix)


def test_log_exponentiates_back():
    # exp(iB) with B = pi * Z2 recovers A on the principal branch.
    for a, b, c in [(0.0, 1.0, 1.0), (0.6, 0.8, 0.8), (0.5, -1.5, -0.5)]:
        inv = InvolutionMatrix(a, b, c)
        log_part = involution_log(inv)
        assert np.allclose(expm(1j * log_part), inv.matrix, atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(finite, finite, finite, finite)
def test_every_nonsingular_seed_yields_an_involution(a, b, c, d):
    seed = np.array([[a, b], [c, d]])
    det = a * d - b * c
    if abs(det) <= 1e-3:
        return
    inv = involution_from_seed(seed, tol=1e-6)
    m = inv.matrix
    assert np.allclose(m @ m, E2, atol=1e-6)
    assert abs(np.trace(m)) <= 1e-9
