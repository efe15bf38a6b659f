"""Operator basis: commutation identities, normalization, weight vectors."""

import numpy as np
import pytest

from socsqueeze.algebra import (
    GENERATOR_LABELS,
    CollectiveOperatorSpec,
    commutator,
    generator,
    generator_matrix,
    generator_stack,
    generators,
    verify_algebra,
)

TOL = 1e-14


def test_eight_labels_in_canonical_order():
    assert GENERATOR_LABELS == ("Jx", "Jy", "Jz", "Qxy", "Qyz", "Qzx", "D", "Y")
    assert [op.label for op in generators()] == list(GENERATOR_LABELS)


def test_all_generators_hermitian_and_traceless():
    for op in generators():
        m = op.matrix
        assert np.max(np.abs(m - m.conj().T)) <= TOL
        assert abs(np.trace(m)) <= TOL


def test_pairwise_trace_normalization():
    stack = generator_stack()
    gram = np.einsum("aij,bji->ab", stack, stack)
    assert np.max(np.abs(gram.imag)) <= TOL
    assert np.max(np.abs(gram.real - 2.0 * np.eye(8))) <= TOL


def test_verify_algebra_reports_six_identities_below_tolerance():
    report = verify_algebra()
    assert len(report) == 6
    for name, dev in report:
        assert isinstance(name, str) and dev <= TOL, (name, dev)


def test_specific_commutators_match_matrix_level_signs():
    jx, jy, jz = (generator_matrix(l) for l in ("Jx", "Jy", "Jz"))
    qxy, qyz, qzx = (generator_matrix(l) for l in ("Qxy", "Qyz", "Qzx"))
    d, y = generator_matrix("D"), generator_matrix("Y")
    s3 = np.sqrt(3.0)
    assert np.max(np.abs(commutator(jy, jz) - 1j * jx)) <= TOL
    # the quadrupole pair closes on +i Jx (sign fixed by these matrices)
    assert np.max(np.abs(commutator(qxy, qzx) - 1j * jx)) <= TOL
    assert np.max(np.abs(commutator(qyz, d) - 1j * jx)) <= TOL
    assert np.max(np.abs(commutator(qyz, y) - s3 * 1j * jx)) <= TOL
    assert np.max(np.abs(commutator(jx, qyz) - 1j * (s3 * y + d))) <= TOL
    assert np.max(np.abs(commutator(jy, qzx) - 1j * (-s3 * y + d))) <= TOL


def test_angular_momentum_closes_cyclically():
    for a, b, c in (("Jx", "Jy", "Jz"), ("Jy", "Jz", "Jx"), ("Jz", "Jx", "Jy")):
        dev = commutator(generator_matrix(a), generator_matrix(b)) - 1j * generator_matrix(c)
        assert np.max(np.abs(dev)) <= TOL


def test_spin_casimir_is_two():
    total = sum(generator_matrix(l) @ generator_matrix(l) for l in ("Jx", "Jy", "Jz"))
    assert np.max(np.abs(total - 2.0 * np.eye(3))) <= TOL


def test_unknown_label_rejected():
    with pytest.raises(ValueError):
        generator("Qxz")


def test_spec_weights_build_the_right_matrix():
    spec = CollectiveOperatorSpec.from_weights({"Jx": 0.5, "Y": -1.0})
    expected = 0.5 * generator_matrix("Jx") - generator_matrix("Y")
    assert np.max(np.abs(spec.matrix() - expected)) <= TOL


def test_spec_requires_real_8_vector():
    with pytest.raises(ValueError):
        CollectiveOperatorSpec(np.zeros(7))


def test_spec_for_label_single_unit_weight():
    spec = CollectiveOperatorSpec.for_label("Qzx")
    assert spec.coefficients[GENERATOR_LABELS.index("Qzx")] == 1.0
    assert np.sum(np.abs(spec.coefficients)) == 1.0
