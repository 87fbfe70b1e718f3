import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qerrdist import hilbert as hb
from qerrdist import oscillator as osc
from qerrdist.errors import ShapeError, ValidationError
from qerrdist.measurement import PAULI

X, Y, Z, I2 = PAULI["x"], PAULI["y"], PAULI["z"], PAULI["I"]
PLUS_X = np.array([1, 1], complex) / math.sqrt(2)
UP = np.array([1, 0], complex)


def test_tensor_identity_and_spectrum():
    assert np.allclose(hb.tensor_product(I2, I2), np.eye(4))
    w, _ = hb.hermitian_eig(hb.tensor_product(Z, I2))
    assert np.allclose(w, [-1, -1, 1, 1])


def test_tensor_trace_multiplicative(rng):
    rho = hb.random_density(3, seed=rng)
    alpha = hb.random_density(4, seed=rng)
    assert abs(np.trace(hb.tensor_product(rho, alpha)) - 1) < 1e-12


def test_partial_trace_product_and_bell(rng):
    rho = hb.random_density(2, seed=rng)
    sigma = hb.random_density(3, seed=rng)
    assert np.allclose(hb.partial_trace(np.kron(rho, sigma), (2, 3), keep=1), sigma, atol=1e-12)
    assert np.allclose(hb.partial_trace(np.kron(rho, sigma), (2, 3), keep=0), rho, atol=1e-12)
    plus, minus = PLUS_X, np.array([1, -1], complex) / math.sqrt(2)
    psi = (np.kron(plus, plus) + np.kron(minus, minus)) / math.sqrt(2)
    red = hb.partial_trace(np.outer(psi, psi.conj()), (2, 2), keep=1)
    assert np.allclose(red, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_random_unit_trace(rng):
    rho = hb.random_density(4, seed=rng)
    assert abs(np.trace(hb.partial_trace(rho, (2, 2), keep=0)) - 1) < 1e-12


def test_partial_trace_shape_error():
    with pytest.raises((ShapeError, ValueError)):
        hb.partial_trace(np.eye(6) / 6, (2, 2), keep=0)


def test_hermitian_eig_examples():
    w, _ = hb.hermitian_eig(X)
    assert np.allclose(w, [-1, 1])
    w, V = hb.hermitian_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [1, 2, 3])
    assert np.allclose(np.abs(V), np.eye(3)[:, [1, 2, 0]])
    w, _ = hb.hermitian_eig(osc.number_op(osc.OscillatorRep(10)))
    assert np.allclose(w, np.arange(10), atol=1e-12)


def test_hermitian_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        hb.hermitian(np.array([[0, 1], [0, 0]]))


def test_density_rejects_negative():
    with pytest.raises(ValidationError):
        hb.density(np.diag([1.5, -0.5]))


def test_expm_examples(rng):
    H = hb.random_hermitian(5, seed=rng)
    assert np.allclose(hb.expm_i(H, 0.0), np.eye(5))
    assert np.allclose(hb.expm_i(Z, math.pi / 2), np.diag([1j, -1j]))


def test_expectation_and_uncertainty():
    assert abs(hb.expectation(np.eye(2), np.eye(2) / 2) - 1) < 1e-15
    assert abs(hb.expectation(Z, PLUS_X)) < 1e-15
    assert abs(hb.uncertainty(Z, PLUS_X) - 1) < 1e-12
    assert hb.uncertainty(Z, UP) < 1e-12
    rep = osc.OscillatorRep(40)
    coh = osc.coherent_state(rep, math.sqrt(2), 0.0)  # amplitude 1
    assert abs(hb.expectation(osc.number_op(rep), coh) - 1) < 1e-8
    rep = osc.OscillatorRep(30, hbar=0.7, mass=2.0, omega=1.3)
    g = osc.fock_state(rep, 0)
    target = math.sqrt(rep.hbar / (2 * rep.mass * rep.omega))
    assert abs(hb.uncertainty(osc.position_op(rep), g) - target) < 1e-12


def test_commutators():
    assert np.allclose(hb.commutator(X, Y), 2j * Z)
    assert np.allclose(hb.anticommutator(X, X), 2 * np.eye(2))


def test_canonical_commutator_on_interior():
    rep = osc.OscillatorRep(40)
    C = hb.commutator(osc.position_op(rep), osc.momentum_op(rep))
    k = rep.interior_dim
    assert k == 36
    assert np.max(np.abs(C[:35, :35] - 1j * rep.hbar * np.eye(35))) < 1e-9
    assert np.max(np.abs(C - 1j * rep.hbar * np.eye(40))) > 1.0  # top corner deviates


# -- properties ----------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 4))
def test_partial_trace_inverts_tensor(seed, da, db):
    rng = np.random.default_rng(seed)
    a, b = hb.random_density(da, seed=rng), hb.random_density(db, seed=rng)
    ab = hb.tensor_product(a, b)
    assert np.allclose(hb.partial_trace(ab, (da, db), 0), a, atol=1e-12)
    assert np.allclose(hb.partial_trace(ab, (da, db), 1), b, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_expm_group_law(seed, s, t):
    H = hb.random_hermitian(6, seed=seed)
    lhs = hb.expm_i(H, s) @ hb.expm_i(H, t)
    assert np.max(np.abs(lhs - hb.expm_i(H, s + t))) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(-50, 50))
def test_uncertainty_shift_invariant(seed, c):
    rng = np.random.default_rng(seed)
    A = hb.random_hermitian(4, seed=rng)
    rho = hb.random_density(4, seed=rng)
    assert abs(hb.uncertainty(A, rho) - hb.uncertainty(A + c * np.eye(4), rho)) < 1e-10


def test_eig_reconstruction_population():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(1, 65))
        H = hb.random_hermitian(d, seed=rng)
        w, V = hb.hermitian_eig(H)
        res = np.linalg.norm(V @ np.diag(w) @ V.conj().T - H, 2) / max(np.linalg.norm(H, 2), 1e-300)
        worst = max(worst, res)
        assert np.all(np.diff(w) >= 0)
    assert worst <= 1e-9
