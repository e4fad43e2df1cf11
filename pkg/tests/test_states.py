import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catline.errors import DegenerateStateError, DimensionError, TruncationError
from catline.operators import DensityMatrix, annihilation, expectation, number
from catline.states import (
    Ket,
    auto_dim,
    bloch_vector,
    cat,
    cat_basis,
    cat_normalization,
    coherent,
    fidelity,
    fock,
    logical_state,
    plus_state,
    required_dim,
)


def test_sizing_rules():
    assert required_dim(2) == 26
    assert required_dim(1) == 17
    assert auto_dim(2) >= required_dim(2)
    with pytest.raises(TruncationError):
        coherent(2.0, 25)
    coherent(2.0, 26)


def test_coherent_vacuum_is_exact():
    assert np.array_equal(coherent(0, 12).amplitudes, fock(0, 12).amplitudes)


def test_coherent_mean_photon_number():
    psi = coherent(1.0, 20)
    assert abs(expectation(psi.dm(), number(20)) - 1.0) < 1e-6


def test_coherent_eigenvector_of_a():
    psi = coherent(2.0, 30).amplitudes
    assert np.linalg.norm(annihilation(30) @ psi - 2.0 * psi) <= 1e-6


def test_odd_cat_at_zero_is_degenerate():
    with pytest.raises(DegenerateStateError):
        cat(0.0, "odd", 12)
    assert np.array_equal(cat(0.0, "even", 12).amplitudes, fock(0, 12).amplitudes)


def test_cat_matches_closed_form():
    alpha, dim = 1.0, auto_dim(1.0)
    # 1/sqrt(2(1 + e^-2)) evaluated to 30 digits
    assert cat_normalization(alpha, "even") == pytest.approx(0.663625300142287, abs=1e-12)
    n = cat_normalization(alpha, "even")
    analytic = n * (coherent(alpha, dim).amplitudes + coherent(-alpha, dim).amplitudes)
    analytic /= np.linalg.norm(analytic)
    assert abs(np.vdot(analytic, cat(alpha, "even", dim).amplitudes)) >= 1 - 1e-9


def test_cat_orthogonality_alpha2():
    b = cat_basis(2.0, auto_dim(2.0))
    assert abs(b.c_plus.overlap(b.c_minus)) <= 1e-12


def test_cat_rejects_bad_parity_and_amplitude():
    with pytest.raises(ValueError):
        cat(1.0, "neither", 20)
    with pytest.raises(ValueError):
        cat(-1.0, "even", 20)


def test_ket_norm_checked_and_immutable():
    with pytest.raises(ValueError):
        Ket([1.0, 1.0])
    k = fock(1, 3)
    with pytest.raises(AttributeError):
        k.amplitudes = None
    with pytest.raises(DimensionError):
        fock(3, 3)


def test_basis_pauli_actions():
    b = cat_basis(1.5, auto_dim(1.5))
    p, m = b.c_plus.amplitudes, b.c_minus.amplitudes
    assert np.allclose(b.sigma_z @ p, p, atol=1e-12)
    assert np.allclose(b.sigma_x @ p, m, atol=1e-12)
    total = (b.sigma_x @ b.sigma_x + b.sigma_y @ b.sigma_y + b.sigma_z @ b.sigma_z).data
    assert np.allclose(total, 3 * b.projector.data, atol=1e-10)
    assert np.allclose((b.sigma_z @ b.sigma_z).data, b.projector.data, atol=1e-12)


def test_logical_state_examples():
    b = cat_basis(1.0, auto_dim(1.0))
    assert np.allclose(logical_state(b, 0.0).amplitudes, b.c_plus.amplitudes, atol=1e-15)
    flipped = logical_state(b, math.pi).amplitudes
    assert abs(abs(np.vdot(b.c_minus.amplitudes, flipped)) - 1) < 1e-12
    x, y, z = bloch_vector(logical_state(b, math.pi / 2).dm(), b)
    assert abs(z) < 1e-12 and abs(x - 1) < 1e-12


def test_plus_state():
    b = cat_basis(2.0, auto_dim(2.0))
    x, y, z = bloch_vector(plus_state(b).dm(), b)
    assert abs(z) <= 1e-12 and abs(x - 1) <= 1e-12
    overlap = abs(np.vdot(coherent(2.0, b.dim).amplitudes, plus_state(b).amplitudes)) ** 2
    assert overlap >= 0.999


def test_bloch_examples():
    b = cat_basis(1.0, auto_dim(1.0))
    assert np.allclose(bloch_vector(b.c_plus.dm(), b), (0, 0, 1), atol=1e-12)
    mixed = DensityMatrix(0.5 * (b.c_plus.dm().data + b.c_minus.dm().data))
    assert np.allclose(bloch_vector(mixed, b), (0, 0, 0), atol=1e-12)
    with pytest.raises(DimensionError):
        bloch_vector(np.eye(5) / 5, b)


def test_y_pole_sign_convention():
    # with the e^{-i phi} amplitude the phi = pi/2 state sits at y = -1
    b = cat_basis(1.0, auto_dim(1.0))
    x, y, z = bloch_vector(logical_state(b, math.pi / 2, math.pi / 2).dm(), b)
    assert abs(y + 1) < 1e-12


def test_fidelity_examples():
    b = cat_basis(1.0, auto_dim(1.0))
    assert fidelity(b.c_plus.dm(), b.c_plus) == pytest.approx(1.0, abs=1e-12)
    assert abs(fidelity(b.c_plus.dm(), b.c_minus)) <= 1e-12
    mixed = 0.5 * (b.c_plus.dm().data + b.c_minus.dm().data)
    assert fidelity(mixed, b.c_plus) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DimensionError):
        fidelity(np.eye(3) / 3, b.c_plus)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 4.0])
def test_cat_invariants(alpha):
    dim = auto_dim(alpha)
    b = cat_basis(alpha, dim)
    p, m = b.c_plus.amplitudes, b.c_minus.amplitudes
    assert abs(np.vdot(p, m)) <= 1e-12
    assert np.max(np.abs(p[1::2])) <= 1e-14 and np.max(np.abs(m[0::2])) <= 1e-14
    # norm of the unnormalized truncated sum against the closed form
    coh = np.exp(-alpha**2 / 2) * np.array([alpha**n / math.sqrt(math.factorial(n)) for n in range(dim)])
    for parity, vec in (("even", coh + coh * (-1) ** np.arange(dim)), ("odd", coh - coh * (-1) ** np.arange(dim))):
        n_num = 1 / np.linalg.norm(vec)
        assert abs(n_num / cat_normalization(alpha, parity) - 1) <= 1e-8


@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi), st.sampled_from([0.5, 1.0, 2.0]))
def test_logical_state_bloch_property(theta, phi, alpha):
    b = cat_basis(alpha, auto_dim(alpha))
    x, y, z = bloch_vector(logical_state(b, theta, phi).dm(), b)
    assert abs(z - math.cos(theta)) <= 1e-10
    assert abs(x - math.sin(theta) * math.cos(phi)) <= 1e-10
    assert abs(math.sqrt(x * x + y * y + z * z) - 1) <= 1e-8


@given(st.floats(0.05, 4.5))
def test_auto_dim_is_accepted(alpha):
    assert auto_dim(alpha) >= required_dim(alpha)
    coherent(alpha, auto_dim(alpha))
