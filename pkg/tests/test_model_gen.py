import json

import numpy as np
import pytest

from plsrmt.model_gen import (
    Dimensions,
    ModelSpec,
    SignalSpectrum,
    build_signal_factors,
    rng_stream,
    rotation_2d,
    sample_noise,
    sample_pair,
)


def full_spec(seed=3):
    spectrum = SignalSpectrum((25, 10), (3.5, 1.5), (8,), (6, 2), rotation_R=rotation_2d(30))
    return ModelSpec(Dimensions(120, 60, 40), spectrum, seed)


def test_dimensions_derived_ratios():
    d = Dimensions(200, 100, 80)
    assert d.d == 80
    assert d.beta_p == 2.0 and d.beta_q == 2.5 and d.beta == 2.5


@pytest.mark.parametrize("bad", [(0, 1, 1), (1, -2, 1), (1, 1, 1.5)])
def test_dimensions_reject_invalid(bad):
    with pytest.raises(ValueError):
        Dimensions(*bad)


def test_spectrum_rejects_negative_and_unsorted():
    with pytest.raises(ValueError):
        SignalSpectrum((-1.0,), (1.0,))
    with pytest.raises(ValueError):
        SignalSpectrum((1.0, 2.0), (2.0, 1.0))
    with pytest.raises(ValueError):
        SignalSpectrum(lambdas_M=(0.0,))


def test_spectrum_rejects_non_orthogonal_rotation():
    with pytest.raises(ValueError):
        SignalSpectrum((2, 1), (2, 1), rotation_R=np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_rank_overflow_is_an_error():
    with pytest.raises(ValueError, match="exceeds n"):
        ModelSpec(Dimensions(2, 10, 10), SignalSpectrum((3, 2), (3, 2), (1,)))


def test_orthogonality_and_kernel_spectra():
    spec = full_spec()
    f = build_signal_factors(spec)
    p, q = spec.dims.p, spec.dims.q
    assert np.allclose(f.T.T @ f.T, np.eye(2), atol=1e-9)
    assert np.abs(f.M.T @ f.T).max() < 1e-9 * np.abs(f.M).max()
    assert np.abs(f.N.T @ f.T).max() < 1e-9 * np.abs(f.N).max()
    assert np.abs(f.M.T @ f.N).max() < 1e-9 * np.abs(f.M).max() * np.abs(f.N).max()
    assert np.allclose(np.sort(np.linalg.eigvalsh(f.P.T @ f.P / p))[::-1], [25, 10], atol=1e-9)
    assert np.allclose(np.sort(np.linalg.eigvalsh(f.R.T @ f.R / q))[::-1], [3.5, 1.5], atol=1e-9)
    top_m = np.sort(np.linalg.eigvalsh(f.M.T @ f.M / p))[::-1][:2]
    assert np.allclose(top_m, [8, 0], atol=1e-9)
    top_n = np.sort(np.linalg.eigvalsh(f.N.T @ f.N / q))[::-1][:3]
    assert np.allclose(top_n, [6, 2, 0], atol=1e-9)


def test_rank_one_kernel_is_exact():
    spec = ModelSpec(Dimensions(50, 30, 20), SignalSpectrum((10,), (4,)), 0)
    f = build_signal_factors(spec)
    assert abs((f.P.T @ f.P / 30)[0, 0] - 10) < 1e-12


def test_no_specific_components_gives_zero_matrices():
    spec = ModelSpec(Dimensions(50, 30, 20), SignalSpectrum((10,), (4,)), 0)
    f = build_signal_factors(spec)
    assert f.M.shape == (50, 30) and f.N.shape == (50, 20)
    assert not f.M.any() and not f.N.any()


def test_rotated_kernels_do_not_commute():
    s = SignalSpectrum((25, 10), (3.5, 1.5), rotation_R=rotation_2d(30))
    direct = s.K_P @ s.K_R - s.K_R @ s.K_P
    # Direct oracle: diag(25, 10) against the rotated diag(3.5, 1.5).
    c, t = np.cos(np.pi / 6), np.sin(np.pi / 6)
    K_R = np.array([[3.5 * c * c + 1.5 * t * t, 2.0 * c * t], [2.0 * c * t, 3.5 * t * t + 1.5 * c * c]])
    K_P = np.diag([25.0, 10.0])
    assert np.allclose(direct, K_P @ K_R - K_R @ K_P, atol=1e-12)
    assert np.linalg.norm(direct) > 1.0


def test_noise_only_pair_is_pure_noise():
    spec = ModelSpec(Dimensions(40, 20, 10), seed=5)
    pair = sample_pair(spec)
    E, F = sample_noise(spec)
    assert np.array_equal(pair.X, E) and np.array_equal(pair.Y, F)


def test_same_seed_is_bit_identical():
    a, b = sample_pair(full_spec(), 2), sample_pair(full_spec(), 2)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.Y, b.Y)
    c = sample_pair(full_spec(), 3)
    assert not np.array_equal(a.X, c.X)


def test_noise_moments():
    spec = ModelSpec(Dimensions(200, 100, 80), seed=11)
    E, _ = sample_noise(spec)
    assert abs(E.mean()) < 4 / np.sqrt(200 * 100)
    assert abs(E.var() - 1) < 0.05


def test_streams_are_independent_per_name_and_trial():
    a = rng_stream(1, "E", 0).standard_normal(5)
    assert not np.array_equal(a, rng_stream(1, "F", 0).standard_normal(5))
    assert not np.array_equal(a, rng_stream(1, "E", 1).standard_normal(5))
    assert np.array_equal(a, rng_stream(1, "E", 0).standard_normal(5))
    with pytest.raises(ValueError):
        rng_stream(-1, "E")


def test_signal_arrays_are_read_only():
    pair = sample_pair(full_spec())
    with pytest.raises(ValueError):
        pair.X[0, 0] = 1.0


def test_round_trip_json_and_toml(tmp_path):
    spec = full_spec(seed=2**63 + 5)
    for name in ("m.json", "m.toml"):
        spec.save(tmp_path / name)
        back = ModelSpec.load(tmp_path / name)
        assert back == spec
        assert back.digest() == spec.digest()
    keys = set(json.loads(spec.to_json()))
    assert keys == {"n", "p", "q", "r", "r_M", "r_N", "lambdas_P", "lambdas_R", "lambdas_M", "lambdas_N",
                    "rotation_P", "rotation_R", "seed"}


def test_from_dict_rejects_inconsistent_rank():
    data = full_spec().to_dict()
    data["r"] = 3
    with pytest.raises(ValueError):
        ModelSpec.from_dict(data)


def test_structured_bases_override_is_validated():
    spec = ModelSpec(Dimensions(50, 30, 20), SignalSpectrum((10,), (4,)), 0)
    with pytest.raises(ValueError):
        build_signal_factors(spec, {"W_P": np.ones((30, 1))})
    w = np.zeros((30, 1))
    w[0, 0] = 1.0
    f = build_signal_factors(spec, {"W_P": w})
    assert np.allclose(f.P[:, 0] / np.linalg.norm(f.P[:, 0]), w[:, 0])
