import numpy as np
import pytest

from plsrmt.model_gen import Dimensions, ModelSpec, SignalSpectrum, build_signal_factors, sample_pair
from plsrmt.rmt_theory import AspectRatios, bulk_law
from plsrmt.spectral_core import (
    alignment_measure,
    cross_covariance,
    extract_spikes,
    full_svd,
    mean_direction,
    pca_top,
    resolvent_bilinear,
    resolvent_trace,
    squared_singular_spectrum,
)


def test_noiseless_cross_covariance_is_signal_product():
    spec = ModelSpec(Dimensions(30, 12, 8), SignalSpectrum((10,), (4,)), 1)
    f = build_signal_factors(spec)
    X, Y = f.T @ f.P.T, f.T @ f.R.T
    S = cross_covariance(X, Y).matrix
    assert np.allclose(S, f.P @ f.R.T / np.sqrt(12 * 8), atol=1e-12)


def test_zero_view_gives_zero_matrix():
    S = cross_covariance(np.zeros((10, 4)), np.ones((10, 3))).matrix
    assert S.shape == (4, 3) and not S.any()


def test_matches_naive_triple_loop():
    rng = np.random.default_rng(0)
    X, Y = rng.standard_normal((50, 30)), rng.standard_normal((50, 20))
    naive = np.zeros((30, 20))
    for i in range(30):
        for j in range(20):
            acc = 0.0
            for k in range(50):
                acc += X[k, i] * Y[k, j]
            naive[i, j] = acc / np.sqrt(30 * 20)
    assert np.abs(cross_covariance(X, Y).matrix - naive).max() < 1e-12


def test_dimension_mismatch_is_an_error():
    with pytest.raises(ValueError):
        cross_covariance(np.zeros((10, 3)), np.zeros((9, 3)))


def test_rank_one_spectrum():
    rng = np.random.default_rng(1)
    u, v = rng.standard_normal(7), rng.standard_normal(5)
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    rep = squared_singular_spectrum(3.0 * np.outer(u, v), top_k=1)
    assert abs(rep.squared_singular_values[0] - 9.0) < 1e-12
    assert np.all(rep.squared_singular_values[1:] < 1e-20)
    assert abs(abs(rep.left_vectors[:, 0] @ u) - 1) < 1e-12
    assert abs(abs(rep.right_vectors[:, 0] @ v) - 1) < 1e-12


def test_spectrum_invariants_and_shared_kernels():
    rng = np.random.default_rng(2)
    S = cross_covariance(rng.standard_normal((60, 40)), rng.standard_normal((60, 30)))
    rep = squared_singular_spectrum(S, top_k=4)
    vals = rep.squared_singular_values
    assert vals.size == 30 and np.all(vals >= 0) and np.all(np.diff(vals) <= 0)
    assert np.allclose(np.linalg.norm(rep.left_vectors, axis=0), 1)
    k = np.sort(np.linalg.eigvalsh(S.kernel()))[::-1]
    kt = np.sort(np.linalg.eigvalsh(S.kernel_tilde()))[::-1][:30]
    assert np.allclose(k, kt, atol=1e-8)
    assert np.allclose(vals, k, atol=1e-8)
    assert rep.counts.sum() == 30


def test_sign_convention_is_consistent_between_routes():
    rng = np.random.default_rng(3)
    S = rng.standard_normal((9, 6))
    U, s2, V = full_svd(S)
    rep = squared_singular_spectrum(S, top_k=6)
    assert np.allclose(U, rep.left_vectors) and np.allclose(V, rep.right_vectors)
    assert np.allclose(U @ np.diag(np.sqrt(s2)) @ V.T, S)


def test_noise_only_top_value_near_edge():
    spec = ModelSpec(Dimensions(400, 400, 400), seed=4)
    vals = squared_singular_spectrum(cross_covariance(sample_pair(spec))).squared_singular_values
    assert abs(vals[0] - 6.75) / 6.75 < 0.10


def test_extract_spikes_noise_only_confinement():
    law = bulk_law(AspectRatios(2.0, 4.0))
    empty = 0
    for seed in range(20):
        spec = ModelSpec(Dimensions(2000, 1000, 500), seed=seed)
        vals = squared_singular_spectrum(cross_covariance(sample_pair(spec))).squared_singular_values
        empty += not extract_spikes(vals, law.x_plus, 0.05)
    assert empty >= 19


def test_extract_spikes_edge_cases():
    assert extract_spikes(np.array([]), 1.0) == []
    assert extract_spikes(np.array([3.0, 1.06, 1.0]), 1.0, 0.05) == [(0, 3.0), (1, 1.06)]
    with pytest.raises(ValueError):
        extract_spikes(np.array([1.0]), 1.0, -0.1)


def test_alignment_measure():
    e = np.eye(3)
    assert alignment_measure(e[0], e[0]) == 1.0
    assert alignment_measure(e[0], e[1]) == 0.0
    with pytest.raises(ValueError):
        alignment_measure(np.zeros(3), e[0])


def test_alignment_isotropy():
    rng = np.random.default_rng(5)
    ref = rng.standard_normal(500)
    ref /= np.linalg.norm(ref)
    draws = rng.standard_normal((100, 500))
    draws /= np.linalg.norm(draws, axis=1, keepdims=True)
    vals = np.array([alignment_measure(d, ref) for d in draws])
    # Beta(1/2, (p-1)/2): mean 1/p, std about sqrt(2)/p.
    assert abs(vals.mean() - 1 / 500) < 3 * vals.std(ddof=1) / np.sqrt(100)


def test_mean_direction():
    w = np.array([0.6, 0.8])
    mean, norm = mean_direction([w, w, w], w)
    assert np.allclose(mean, w) and abs(norm - 1) < 1e-12
    signs = np.array([1, -1, -1, 1, -1])
    mean, norm = mean_direction(signs[:, None] * w, w)
    assert np.allclose(mean, w)
    with pytest.raises(ValueError):
        mean_direction([], w)


def test_pca_noiseless_rank_one_and_noise_edge():
    rng = np.random.default_rng(6)
    t, P = rng.standard_normal((50, 1)), rng.standard_normal((8, 1))

    class Pair:
        X = t @ P.T
        Y = t @ P.T

    res = pca_top(Pair, 1)
    assert abs(abs(res.vectors_X[:, 0] @ P[:, 0] / np.linalg.norm(P)) - 1) < 1e-12
    assert pca_top(Pair, 0).vectors_X.shape == (8, 0)

    spec = ModelSpec(Dimensions(4000, 400, 400), seed=7)
    res = pca_top(sample_pair(spec), 1)
    edge = 10 * (1 + 1 / np.sqrt(10)) ** 2
    assert abs(res.values_X[0] - edge) / edge < 0.10


def test_resolvent_helpers_match_dense_inverse():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((12, 5))
    K = A @ A.T
    vals, vecs = np.linalg.eigh(A.T @ A)
    V = A @ vecs / np.sqrt(vals)
    z = -0.7
    Q = np.linalg.inv(K - z * np.eye(12))
    a, b = rng.standard_normal(12), rng.standard_normal(12)
    assert abs(resolvent_trace(vals, 12, z) - np.trace(Q) / 12) < 1e-12
    assert abs(resolvent_bilinear(vals, V, z, a, b) - a @ Q @ b) < 1e-10
