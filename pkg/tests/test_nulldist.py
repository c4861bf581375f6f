import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from submardia.core import InsufficientSampleError, enumerate_subsets, whiten
from submardia.measures import b1_sample, b2_sample
from submardia.nulldist import (
    Block,
    G_statistic,
    KurtNullModel,
    ModelInvalidError,
    SkewNullModel,
    K_of_q,
    build_kurt_null,
    build_skew_null,
    elliptical_kernel_eigenvalues,
    kernel_matrix,
    psd_factor,
    sample_kurt_null,
    sample_skew_null,
    u_features,
    y_kurt,
)


def test_K_of_q():
    assert [K_of_q(q) for q in range(1, 6)] == [1, 4, 10, 20, 35]
    assert sum(K_of_q(len(s)) for s in enumerate_subsets(5)) == 280
    with pytest.raises(ValueError):
        K_of_q(0)


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_gaussian_kernel_eigenvalues_are_six(q):
    g1, g2, (m1, m2) = elliptical_kernel_eigenvalues(q * (q + 2), q * (q + 2) * (q + 4), q)
    assert (g1, g2) == pytest.approx((6.0, 6.0))
    assert m1 + m2 == K_of_q(q)


def test_kernel_eigenvalue_edge_cases():
    assert elliptical_kernel_eigenvalues(8, 0, 2)[1] == 0
    assert elliptical_kernel_eigenvalues(15, 105, 3)[2] == (3, 7)
    with pytest.raises(ValueError):
        elliptical_kernel_eigenvalues(3, 15, 1)


def test_kernel_matrix_diagonal_and_symmetry(rng):
    x = rng.standard_normal((30, 3))
    h = kernel_matrix(x)
    y = whiten(x)
    m = np.einsum("ja,ja->j", y, y)
    np.testing.assert_allclose(np.diag(h), m ** 3 - 6 * m ** 2 + 15 * m, rtol=1e-10)
    np.testing.assert_array_equal(h, h.T)


def test_kernel_vanishes_for_orthogonal_whitened_points(rng):
    y = whiten(rng.standard_normal((20, 2)))
    h = kernel_matrix(y)
    g = y @ y.T
    j, k = np.unravel_index(np.argmin(np.abs(g)), g.shape)
    assert abs(h[j, k]) <= 50 * abs(g[j, k])


def test_kernel_matrix_requires_two_columns():
    with pytest.raises(ValueError):
        kernel_matrix(np.array([[0.0], [1.0], [3.0]]))


def test_univariate_feature():
    x = np.array([0.0, 0.0, 3.0])
    u = u_features(x)
    assert u.shape == (3, 1)
    assert np.var(u[:, 0], ddof=1) == pytest.approx(6.0)
    y = whiten(x)[:, 0]
    score = y ** 3 - 3 * y
    assert abs(np.corrcoef(score, u[:, 0])[0, 1]) == pytest.approx(1.0)


def test_feature_variance_and_centering(rng):
    n = 500
    x = rng.standard_normal((n, 2))
    u = u_features(x)
    assert u.shape == (n, 4)
    np.testing.assert_allclose(u.var(axis=0, ddof=1), 6.0, rtol=0.25)
    assert np.all(np.abs(u.mean(axis=0)) <= 4 * u.std(axis=0, ddof=1) / np.sqrt(n))


def test_insufficient_sample(rng):
    with pytest.raises(InsufficientSampleError):
        u_features(rng.standard_normal((10, 3)))


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2 ** 32 - 1))
def test_lowrank_and_dense_span_the_same_eigenspace(q, seed):
    x = np.random.default_rng(seed).standard_t(6, size=(80, q))
    a = u_features(x, "dense")
    b = u_features(x, "lowrank")
    # eigenvectors agree up to sign and rotation within repeated eigenvalues
    np.testing.assert_allclose(a @ a.T, b @ b.T, atol=1e-7 * np.abs(a @ a.T).max())


def test_build_skew_null_shapes(rng):
    x = rng.standard_normal((400, 2))
    model = build_skew_null(x, list(enumerate_subsets(2)))
    assert model.dim == 6
    assert [(b.offset, b.width) for b in model.blocks] == [(0, 1), (1, 1), (2, 4)]
    assert model.omega_hat[0, 0] == pytest.approx(6.0)
    assert abs(model.omega_hat[0, 1]) <= 6 * 4 / np.sqrt(400)
    np.testing.assert_array_equal(model.omega_hat, model.omega_hat.T)
    assert np.linalg.eigvalsh(model.omega_hat).min() > -1e-8


def test_single_univariate_block(rng):
    model = build_skew_null(rng.standard_normal((100, 1)), [(1,)])
    assert model.omega_hat.shape == (1, 1)
    assert model.omega_hat[0, 0] == pytest.approx(6.0)


def test_restrict_matches_direct_build(rng):
    x = rng.standard_normal((200, 3))
    full = build_skew_null(x, list(enumerate_subsets(3)))
    pairs = enumerate_subsets(3).of_size(2)
    sub = full.restrict(pairs)
    direct = build_skew_null(x, pairs)
    np.testing.assert_allclose(sub.omega_hat, direct.omega_hat, atol=1e-10)
    assert sub.blocks == direct.blocks


def test_G_statistic_examples():
    one = (Block((1,), 0, 1),)
    assert G_statistic(np.zeros(1), one) == pytest.approx(-6 / np.sqrt(72))
    assert G_statistic(np.array([np.sqrt(6)]), one) == pytest.approx(0.0)
    two = (Block((1,), 0, 1), Block((2,), 1, 1))
    w = np.sqrt(6 + np.sqrt(72) * np.array([-0.3, 1.2]))
    assert G_statistic(w, two) == pytest.approx(1.2)


def test_G_statistic_vectorised_matches_loop(rng):
    blocks = (Block((1,), 0, 1), Block((1, 2), 1, 4), Block((2,), 5, 1))
    w = rng.standard_normal((7, 6))
    loop = [max((np.sum(r[b.offset:b.offset + b.width] ** 2) - b.q * (b.q + 1) * (b.q + 2))
                / np.sqrt(12 * b.q * (b.q + 1) * (b.q + 2)) for b in blocks) for r in w]
    np.testing.assert_allclose(G_statistic(w, blocks), loop)


def test_skew_null_draws_match_chi_square():
    model = SkewNullModel((Block((1,), 0, 1),), np.array([[6.0]]))
    d = sample_skew_null(model, 2000, seed=5)
    assert d.reps == 2000
    ref = stats.chi2(1, loc=-6 / np.sqrt(72), scale=6 / np.sqrt(72))
    assert stats.kstest(d.values, ref.cdf).statistic < 0.05


def test_null_sampling_validation():
    model = SkewNullModel((Block((1,), 0, 1),), np.array([[6.0]]))
    with pytest.raises(ValueError):
        sample_skew_null(model, 0)
    bad = SkewNullModel((Block((1,), 0, 1), Block((2,), 1, 1)), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ModelInvalidError):
        sample_skew_null(bad, 10)


def test_psd_factor_clips_roundoff():
    m = np.array([[1.0, 1.0], [1.0, 1.0 - 1e-14]])
    f = psd_factor(m)
    np.testing.assert_allclose(f @ f.T, m, atol=1e-12)


def test_y_kurt_examples(rng):
    x = np.array([[-1.0], [0.0], [1.0]])
    assert y_kurt(x)[1] == 0.0
    y = whiten(x)
    m = y[:, 0] ** 2
    np.testing.assert_allclose(y_kurt(x), m * (m - 6))
    big = rng.standard_normal(100_000)
    assert np.var(y_kurt(big), ddof=1) == pytest.approx(24, rel=0.1)


def test_build_kurt_null(rng):
    n = 2000
    x = rng.standard_normal((n, 2))
    model = build_kurt_null(x, [(1,), (2,), (1, 2)])
    g = model.gamma_hat
    np.testing.assert_array_equal(np.diag(g), 1.0)
    assert np.all(np.abs(g) <= 1)
    assert abs(g[0, 1]) < 4 / np.sqrt(n)
    assert g[0, 2] > 0.2
    np.testing.assert_allclose(model.y_tilde.mean(axis=0), 0, atol=1e-9)
    assert build_kurt_null(x, [(1,)]).gamma_hat.tolist() == [[1.0]]


def test_kurt_null_draws():
    d = sample_kurt_null(KurtNullModel(((1,),), np.array([[1.0]])), 5000, seed=1)
    assert d.values.mean() == pytest.approx(np.sqrt(2 / np.pi), abs=0.03)
    d2 = sample_kurt_null(KurtNullModel(((1,), (2,)), np.eye(2)), 5000, seed=2)
    assert np.mean(d2.values > 1.96) == pytest.approx(1 - 0.95 ** 2, abs=0.02)


def test_draws_are_deterministic(rng):
    x = rng.standard_normal((150, 3))
    subsets = list(enumerate_subsets(3))
    sm, km = build_skew_null(x, subsets), build_kurt_null(x, subsets)
    np.testing.assert_array_equal(sample_skew_null(sm, 300, 9).values, sample_skew_null(sm, 300, 9).values)
    np.testing.assert_array_equal(sample_kurt_null(km, 300, 9).values, sample_kurt_null(km, 300, 9).values)
    assert not np.array_equal(sample_skew_null(sm, 300, 9).values, sample_skew_null(sm, 300, 10).values)


def test_p_value_is_strict_proportion():
    from submardia.nulldist import NullDraws

    d = NullDraws(np.array([0.0, 1.0, 2.0, 3.0]))
    assert d.p_value(1.0) == 0.5
    assert d.p_value(3.0) == 0.0
    assert d.p_value(-1.0) == 1.0


# properties -----------------------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_feature_columns_are_centred(q, seed):
    n = 300
    u = u_features(np.random.default_rng(seed).standard_normal((n, q)))
    assert np.all(np.abs(u.mean(axis=0)) <= 4 * u.std(axis=0, ddof=1) / np.sqrt(n))


def linearization_gap(seed: int, n: int = 2000, q: int = 2) -> float:
    x = np.random.default_rng(seed).standard_normal((n, q))
    u = u_features(x)
    nb1 = n * b1_sample(x)
    lin = n * np.sum(u.mean(axis=0) ** 2)
    return abs(nb1 - lin) / nb1


@pytest.mark.slow
@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_skewness_linearization(q):
    gaps = [linearization_gap(1000 + r, 2000, q) for r in range(50)]
    assert np.mean(gaps) < 0.15


@pytest.mark.slow
def test_skewness_linearization_univariate():
    # for q = 1 the gap is |1 - 6 / v| with v the sample variance of y^3 - 3y,
    # whose relative sd at n = 2000 is sqrt(3312) / (6 sqrt(2000)) = 0.21
    gaps = [linearization_gap(1000 + r, 2000, 1) for r in range(50)]
    assert np.mean(gaps) < 0.25


def kurtosis_remainder(n: int, reps: int, q: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(reps):
        x = rng.standard_normal((n, q))
        m = np.einsum("ja,ja->j", x, x)
        y = m * m - 2 * (q + 2) * m + q * (q + 2)  # population score, centred
        out.append(np.sqrt(n) * (b2_sample(x) - q * (q + 2)) - np.sqrt(n) * y.mean())
    return np.array(out)


@pytest.mark.slow
@pytest.mark.parametrize("q", [1, 2])
def test_kurtosis_linearization_decays(q):
    small = kurtosis_remainder(500, 200, q, 1).std(ddof=1)
    large = kurtosis_remainder(4000, 200, q, 2).std(ddof=1)
    assert large < small / 2


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sign_flips_leave_null_functionals_unchanged(seed):
    rng = np.random.default_rng(seed)
    blocks = (Block((1,), 0, 1), Block((1, 2), 1, 4), Block((2,), 5, 1))
    w = rng.standard_normal((5, 6))
    signs = rng.choice([-1.0, 1.0], size=6)
    np.testing.assert_allclose(G_statistic(w * signs, blocks), G_statistic(w, blocks))
    np.testing.assert_allclose(np.abs(w * signs).max(axis=1), np.abs(w).max(axis=1))


def test_sign_flipped_model_gives_same_p_value(rng):
    x = rng.standard_t(8, size=(200, 3))
    subsets = list(enumerate_subsets(3))
    model = build_skew_null(x, subsets)
    signs = rng.choice([-1.0, 1.0], size=model.dim)
    flipped = SkewNullModel(model.blocks, model.omega_hat * np.outer(signs, signs), model.u_hat * signs)
    reps = 4000
    a = sample_skew_null(model, reps, 1).p_value(1.0)
    b = sample_skew_null(flipped, reps, 2).p_value(1.0)
    se = np.sqrt(a * (1 - a) / reps)
    assert abs(a - b) < 2 * np.sqrt(2) * se + 1e-12
