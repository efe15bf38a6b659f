"""Exact diagonalization: independent two-particle oracle, analytic moments."""

import numpy as np
import pytest

from socsqueeze.algebra import GENERATOR_LABELS, CollectiveOperatorSpec, generator_matrix
from socsqueeze.errors import ConfigError
from socsqueeze.fockspace import (
    build_effective_hamiltonian,
    ed_ground_state,
    ed_moment_set,
    ed_moments,
    fock_basis,
)
from socsqueeze.metrics import xi_x
from socsqueeze.params import ModelParams, effective_coefficients


def two_particle_oracle_energy(coeffs):
    """Ground energy for N=2 built on the raw 9-dim product space.

    Constructs collective operators as G x I + I x G, projects onto the
    symmetric (bosonic) block, and diagonalizes densely.  Shares no code
    with the Fock-space implementation.
    """
    def coll(label):
        m = generator_matrix(label)
        return np.kron(m, np.eye(3)) + np.kron(np.eye(3), m)

    fz, fx, fy = coll("Jz"), coll("Jx"), coll("Y")
    h = -coeffs.q * fz @ fz + coeffs.hx * fx + coeffs.hz * fz + coeffs.hY * fy
    swap = np.zeros((9, 9))
    for i in range(3):
        for j in range(3):
            swap[i * 3 + j, j * 3 + i] = 1.0
    w, v = np.linalg.eigh(swap)
    sym = v[:, w > 0.5]
    assert sym.shape[1] == 6
    return float(np.linalg.eigvalsh(sym.T @ h @ sym)[0])


def test_basis_dimension_and_lexicographic_order():
    basis = fock_basis(3)
    assert basis.dim == 10
    pairs = list(zip(basis.n_plus, basis.n_minus))
    assert pairs == sorted(pairs)
    assert basis.index(2, 1) == pairs.index((2, 1))
    assert np.all(basis.n_zero == 3 - basis.n_plus - basis.n_minus)


def test_transfer_matrices_satisfy_bosonic_algebra():
    basis = fock_basis(4)
    tp0 = basis.transfer(1, 0).toarray()
    t0p = basis.transfer(0, 1).toarray()
    # [a0^dag a+, a+^dag a0] = n0 - n+ on the symmetric subspace
    comm = t0p @ tp0 - tp0 @ t0p
    expected = np.diag(basis.n_zero - basis.n_plus).astype(float)
    assert np.max(np.abs(comm - expected)) <= 1e-12


def test_collective_operators_are_hermitian_and_close_algebra():
    basis = fock_basis(5)
    ops = {lbl: basis.collective(generator_matrix(lbl)).toarray() for lbl in GENERATOR_LABELS}
    for m in ops.values():
        assert np.max(np.abs(m - m.conj().T)) <= 1e-12
    # collective operators inherit the single-particle commutators
    dev = ops["Jy"] @ ops["Jz"] - ops["Jz"] @ ops["Jy"] - 1j * ops["Jx"]
    assert np.max(np.abs(dev)) <= 1e-12
    dev = ops["Qyz"] @ ops["Y"] - ops["Y"] @ ops["Qyz"] - np.sqrt(3.0) * 1j * ops["Jx"]
    assert np.max(np.abs(dev)) <= 1e-12


def test_ground_energy_matches_two_particle_oracle():
    coeffs = effective_coefficients(ModelParams(omega_R=2.0, delta=1.0, epsilon=6.0, N=2))
    state = ed_ground_state(coeffs, 2)
    assert abs(state.energy - two_particle_oracle_energy(coeffs)) <= 1e-10


def test_ground_state_normalized_with_real_positive_gauge():
    coeffs = effective_coefficients(ModelParams(omega_R=1.5, delta=0.3, epsilon=2.0, N=30))
    state = ed_ground_state(coeffs, 30)
    amp = state.amplitudes
    assert abs(np.linalg.norm(amp) - 1.0) <= 1e-12
    i0 = int(np.argmax(np.abs(amp)))
    assert amp[i0].real > 0.0
    assert abs(amp[i0].imag) <= 1e-12


def test_uncoupled_ground_state_is_single_fock_state():
    # Omega_R = 0, positive quadratic shift: every atom sits in the middle mode
    n = 40
    coeffs = effective_coefficients(ModelParams(omega_R=0.0, delta=0.0, epsilon=6.0, N=n))
    state = ed_ground_state(coeffs, n)
    basis = state.basis
    i = basis.index(0, 0)
    assert abs(abs(state.amplitudes[i]) - 1.0) <= 1e-12
    moments = ed_moment_set(state)
    # frozen analytic moments of |0, N, 0>
    assert abs(moments.cov("Jx", "Jx") - n) <= 1e-9
    assert abs(moments.mean("Y") + 2.0 * n / np.sqrt(3.0)) <= 1e-9
    assert abs(moments.mean("Jz")) <= 1e-12
    assert abs(xi_x(moments) - 1.0) <= 1e-9


def test_dense_and_lanczos_paths_agree():
    # dimension 2016 > cutoff forces Lanczos; compare against the dense solve
    coeffs = effective_coefficients(ModelParams(omega_R=2.0, delta=0.5, epsilon=6.0, N=62))
    sparse_state = ed_ground_state(coeffs, 62)
    import scipy.linalg

    h = build_effective_hamiltonian(coeffs, 62).toarray()
    w = scipy.linalg.eigvalsh(h, subset_by_index=[0, 0])
    assert abs(sparse_state.energy - float(w[0])) <= 1e-9


def test_moments_variance_floor_and_psd():
    coeffs = effective_coefficients(ModelParams(omega_R=2.0, delta=0.0, epsilon=6.0, N=60))
    state = ed_ground_state(coeffs, 60)
    moments = ed_moment_set(state).validate()
    for lbl in GENERATOR_LABELS:
        assert moments.cov(lbl, lbl) >= 0.0


def test_energy_non_increasing_in_coupling():
    # stronger transverse drive can only lower the variational ground energy
    energies = []
    for omr in (0.0, 1.0, 2.0, 3.0):
        coeffs = effective_coefficients(ModelParams(omega_R=omr, delta=0.0, epsilon=6.0, N=25))
        energies.append(ed_ground_state(coeffs, 25).energy)
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))


def test_atom_cap_enforced():
    coeffs = effective_coefficients(ModelParams(omega_R=1.0, delta=0.0, epsilon=6.0, N=301))
    with pytest.raises(ConfigError):
        ed_ground_state(coeffs, 301)


def test_moments_of_weighted_spec_match_label_combination():
    coeffs = effective_coefficients(ModelParams(omega_R=2.0, delta=0.7, epsilon=4.0, N=20))
    state = ed_ground_state(coeffs, 20)
    spec = CollectiveOperatorSpec.from_weights({"Jx": 0.6, "Jy": -0.8})
    means, cov = ed_moments(state, [spec])
    moments = ed_moment_set(state)
    expect_mean = 0.6 * moments.mean("Jx") - 0.8 * moments.mean("Jy")
    expect_var = (
        0.36 * moments.cov("Jx", "Jx")
        + 0.64 * moments.cov("Jy", "Jy")
        - 2.0 * 0.48 * moments.cov("Jx", "Jy")
    )
    assert abs(means[0] - expect_mean) <= 1e-9
    assert abs(cov[0, 0] - expect_var) <= 1e-9
