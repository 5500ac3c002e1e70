import math

import numpy as np
import pytest

from kreinfield._validation import hermitian_part, opnorm
from kreinfield.errors import ClusterNotIsolated, ConfigError, NotAdmissible
from kreinfield.krein import (
    IntervalUnion,
    KreinStructure,
    SpectralDecomposition,
    classify_spectrum,
    complex_part_projection,
    definitizing_polynomial,
    is_krein_positive,
    krein_adjoint,
    krein_min_eig,
    matrix_polynomial,
    riesz_projection,
)

SWAP2 = np.array([[0.0, 1.0], [1.0, 0.0]])


def random_krein_selfadjoint(rng, n, G):
    """A = G^{-1} H for Hermitian H is Krein self-adjoint for G."""
    H = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return np.linalg.solve(G, H + H.conj().T)


# ---------------------------------------------------------------- structure


def test_krein_structure_rejects_bad_gram():
    with pytest.raises(ConfigError):
        KreinStructure(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ConfigError):
        KreinStructure(np.zeros((2, 2)))


def test_adjoint_identities(rng, ds1):
    model, _ = ds1
    K = model.K
    d = K.dim
    assert np.allclose(krein_adjoint(np.eye(d), K), np.eye(d))
    b = model.b
    assert opnorm(krein_adjoint(b, K) - b) <= 1e-10 * opnorm(b)
    assert opnorm(krein_adjoint(1j * b, K) + 1j * b) <= 1e-10 * opnorm(b)
    X, Y = rng.standard_normal((2, d, d))
    # anti-multiplicative
    assert opnorm(krein_adjoint(X @ Y, K) - krein_adjoint(Y, K) @ krein_adjoint(X, K)) < 1e-8 * opnorm(X) * opnorm(Y)


def test_adjoint_dimension_mismatch():
    with pytest.raises(ConfigError):
        krein_adjoint(np.eye(3), KreinStructure(SWAP2))


def test_form_matches_gram(rng):
    K = KreinStructure(SWAP2)
    u, v = rng.standard_normal(2) + 1j * rng.standard_normal(2), rng.standard_normal(2)
    assert K.form(u, v) == pytest.approx(np.conj(u[0]) * v[1] + np.conj(u[1]) * v[0])


def test_krein_positivity_basic():
    K = KreinStructure(np.diag([1.0, -1.0]))
    assert is_krein_positive(np.zeros((2, 2)), K)
    assert is_krein_positive(np.diag([1.0, 0.0]), K)
    assert not is_krein_positive(np.diag([0.0, 1.0]), K)
    assert krein_min_eig(np.diag([0.0, 1.0]), K) == pytest.approx(-1.0)


# ---------------------------------------------------------------- intervals


def test_interval_union_algebra():
    J = IntervalUnion(((0, 1), (2, None)))
    assert J.contains([0.5, 1.5, 3.0]).tolist() == [True, False, True]
    assert J.intersect(IntervalUnion(((0.5, 2.5),))).intervals == ((0.5, 1.0), (2.0, 2.5))
    assert J.complement().intervals == ((-math.inf, 0.0), (1.0, 2.0))
    assert IntervalUnion(((0, 1), (1, 2))).intervals == ((0.0, 2.0),)
    assert J.remove(3.0, 0.5).intervals == ((0.0, 1.0), (2.0, 2.5), (3.5, math.inf))
    assert IntervalUnion.from_json(J.to_json()) == J
    assert J.distance_to_boundary(1.2) == pytest.approx(0.2)
    with pytest.raises(ConfigError):
        IntervalUnion(((1, 0),))


# ---------------------------------------------------------------- Riesz projections


def test_riesz_diag():
    A = np.diag([1.0, 2.0])
    assert np.allclose(riesz_projection(A, [0], [1.0, 2.0]), np.diag([1.0, 0.0]))


def test_riesz_all_is_identity(rng):
    A = rng.standard_normal((6, 6))
    assert np.allclose(riesz_projection(A, range(6)), np.eye(6))


def test_riesz_matches_decomposition(rng):
    G = np.diag([1.0, 1.0, -1.0, -1.0, 1.0])
    A = random_krein_selfadjoint(rng, 5, G)
    dec = SpectralDecomposition(A, KreinStructure(G))
    for c in dec.clusters:
        idx = [int(np.argmin(np.abs(dec.eigenvalues - z))) for z in c.eigenvalues]
        P = riesz_projection(A, idx, dec.eigenvalues)
        assert opnorm(P - c.projection) < 1e-9 * max(1.0, opnorm(P))
        assert opnorm(P @ P - P) < 1e-9 * max(1.0, opnorm(P))
        assert opnorm(A @ P - P @ A) < 1e-9 * opnorm(A) * max(1.0, opnorm(P))


def test_riesz_not_isolated():
    A = np.diag([1.0, 1.0 + 1e-12, 3.0])
    with pytest.raises(ClusterNotIsolated):
        riesz_projection(A, [0], np.diag(A))


def test_decomposition_completeness(ds1, ds2):
    for _, dec in (ds1, ds2):
        assert dec.completeness_residual() < 1e-8


# ---------------------------------------------------------------- classification


def test_hermitian_all_positive(rng):
    H = rng.standard_normal((8, 8))
    H = H + H.T
    rep = classify_spectrum(H, KreinStructure.hilbert(8))
    assert all(e["sign_type"] == "positive" for e in rep.eigenvalues)
    assert not rep.has_critical and not rep.has_complex
    p = definitizing_polynomial(rep)
    assert p.degree() == 0 and p.coef[0] > 0


def test_ds1_sign_types(ds1):
    _, dec = ds1
    rep = dec.report()
    assert not rep.has_complex and not rep.has_critical
    for c in dec.real_clusters:
        assert c.sign_type == ("positive" if c.center.real > 0 else "negative")


def test_ds2_has_complex_pair_and_critical_point(ds2):
    _, dec = ds2
    rep = dec.report()
    assert rep.has_complex and rep.has_critical
    crit = [c for c in dec.real_clusters if c.critical]
    assert len(crit) == 1 and crit[0].mult == 2 and crit[0].sign_type == "mixed"
    assert crit[0].inertia == (1, 1, 0)


def test_definitizing_polynomial_ds1(ds1):
    _, dec = ds1
    p = definitizing_polynomial(dec.report())
    # p(b) = b up to a positive factor
    assert p.degree() == 1
    assert abs(p.coef[0]) < 1e-12 * abs(p.coef[1]) and p.coef[1] > 0


def test_definitizing_polynomial_ds2(ds2):
    model, dec = ds2
    p = definitizing_polynomial(dec.report())
    assert p.degree() >= 4
    # independent a-posteriori check of Krein positivity of p(b)
    P = matrix_polynomial(p, model.b)
    w = np.linalg.eigvalsh(hermitian_part(model.K.G @ P))
    assert w[0] >= -1e-8 * np.max(np.abs(w))


def test_matrix_polynomial_horner(rng):
    A = rng.standard_normal((4, 4))
    from numpy.polynomial import Polynomial

    p = Polynomial([1.0, -2.0, 0.5])
    assert np.allclose(matrix_polynomial(p, A), np.eye(4) - 2 * A + 0.5 * A @ A)


def test_jordan_block_is_critical():
    # nilpotent A = [[0, 1], [0, 0]] is Krein self-adjoint for G = swap and has a neutral eigenvector
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    G = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(krein_adjoint(A, KreinStructure(G)), A)
    A = A + 0.5 * np.eye(2)
    dec = SpectralDecomposition(A, KreinStructure(G))
    (c,) = dec.clusters
    assert c.defective and c.critical and c.nilpotency == 2


# ---------------------------------------------------------------- complex part


def test_complex_part_two_by_two():
    A = np.array([[0.0, 1.0], [-0.09, 0.0]])
    K = KreinStructure(SWAP2)
    assert np.allclose(krein_adjoint(A, K), A)
    dec = SpectralDecomposition(A, K)
    assert sorted(np.round(dec.eigenvalues.imag, 12)) == [-0.3, 0.3]
    P = complex_part_projection(A, K, decomposition=dec)
    assert np.allclose(P, np.eye(2))


def test_complex_part_empty_for_ds1(ds1):
    model, dec = ds1
    assert np.all(complex_part_projection(model.b, model.K, decomposition=dec) == 0)


def test_complex_root_spaces_are_neutral(ds2):
    model, dec = ds2
    G = model.K.G
    P = complex_part_projection(model.b, model.K, decomposition=dec)
    assert np.linalg.matrix_rank(P, 1e-8) == 2 * len(dec.complex_pairs)
    for c in dec.complex_clusters:
        # the root space of one non-real eigenvalue is neutral: R^H G R = 0
        Q, _ = np.linalg.qr(c.R)
        assert opnorm(Q.conj().T @ G @ Q) < 1e-10
    # the sum over a conjugate pair is a Krein self-adjoint projection with inertia (k, k)
    GP = G @ P
    assert opnorm(GP - GP.conj().T) < 1e-10 * opnorm(GP)
    w = np.linalg.eigvalsh(hermitian_part(GP))
    big = np.abs(w) > 1e-8 * np.max(np.abs(w))
    assert np.sum(w[big] > 0) == np.sum(w[big] < 0) == len(dec.complex_pairs)


# ---------------------------------------------------------------- admissibility


def test_select_rejects_boundary_on_eigenvalue(ds1):
    _, dec = ds1
    x = dec.real_clusters[3].center.real
    with pytest.raises(NotAdmissible):
        dec.select(IntervalUnion(((x, x + 10.0),)))
