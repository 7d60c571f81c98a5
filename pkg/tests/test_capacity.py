import math

import numpy as np
import pytest

from mimocorr.capacity import (BLOCK_SIZE, CapacityCurve, RealizationEngine, average_mi,
                               draw_channel, draw_channels, mutual_information, psd_sqrt)
from mimocorr.errors import InvalidArgumentError, NotPositiveSemidefiniteError


def random_correlation(n, rank=None, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, rank or n)) + 1j * rng.standard_normal((n, rank or n))
    R = A @ A.conj().T
    return R * n / np.trace(R).real


def test_sqrt_identity():
    np.testing.assert_allclose(psd_sqrt(np.eye(9)), np.eye(9), atol=1e-15)


def test_sqrt_diagonal():
    np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 1.0])), np.diag([2.0, 1.0]), atol=1e-15)


def test_sqrt_reconstructs():
    R = random_correlation(9, seed=3)
    S = psd_sqrt(R)
    np.testing.assert_allclose(S, S.conj().T, atol=1e-13)
    assert np.linalg.norm(S @ S.conj().T - R) / np.linalg.norm(R) <= 1e-10


def test_sqrt_of_rank_deficient_matrix():
    R = random_correlation(9, rank=2, seed=5)
    S = psd_sqrt(R)
    assert np.linalg.norm(S @ S - R) / np.linalg.norm(R) <= 1e-10


def test_sqrt_rejects_indefinite():
    with pytest.raises(NotPositiveSemidefiniteError) as info:
        psd_sqrt(np.diag([1.0, -0.5]))
    assert info.value.eigenvalue == pytest.approx(-0.5)


def test_sqrt_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        psd_sqrt(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InvalidArgumentError):
        psd_sqrt(np.ones((2, 3)))
    with pytest.raises(InvalidArgumentError):
        psd_sqrt(np.array([[np.nan, 0], [0, 1.0]]))


def test_engine_size_check():
    with pytest.raises(InvalidArgumentError):
        RealizationEngine.from_correlation(np.eye(9), 2, 3)


def test_draws_are_deterministic():
    engine = RealizationEngine.from_correlation(random_correlation(6), 2, 3, seed=11)
    a = draw_channels(engine, 50)
    b = draw_channels(engine, 50)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (50, 3, 2)
    other = RealizationEngine.from_correlation(random_correlation(6), 2, 3, seed=12)
    assert not np.allclose(a, draw_channels(other, 50))


def test_trial_depends_only_on_seed_and_index():
    engine = RealizationEngine.from_correlation(np.eye(4), 2, 2, seed=7)
    full = draw_channels(engine, BLOCK_SIZE + 10)
    np.testing.assert_array_equal(draw_channels(engine, 20, BLOCK_SIZE - 10), full[BLOCK_SIZE - 10:])
    np.testing.assert_array_equal(draw_channel(engine, BLOCK_SIZE + 3), full[BLOCK_SIZE + 3])


def test_white_channel_statistics():
    engine = RealizationEngine.from_correlation(np.eye(9), 3, 3, seed=1)
    H = draw_channels(engine, 40000)
    assert np.mean(np.abs(H) ** 2) == pytest.approx(1.0, abs=0.02)
    assert abs(np.mean(H.real * H.imag)) < 0.01
    assert abs(np.mean(H)) < 0.01


def test_empirical_covariance_matches():
    R = random_correlation(6, seed=9)
    engine = RealizationEngine.from_correlation(R, 3, 2, seed=4)
    n = 100000
    H = draw_channels(engine, n)
    v = H.transpose(0, 2, 1).reshape(n, 6)  # column-stacked vec(H)
    prod = v[:, :, None] * v[:, None, :].conj()
    est = prod.mean(axis=0)
    se = np.sqrt(prod.real.var(axis=0) / n) + 1j * np.sqrt(prod.imag.var(axis=0) / n)
    assert np.all(np.abs(est.real - R.real) <= 5 * se.real)
    assert np.all(np.abs(est.imag - R.imag) <= 5 * se.imag + 1e-15)


def test_mutual_information_examples():
    assert mutual_information(np.zeros((3, 3)), 10.0) == 0.0
    assert mutual_information(np.eye(3), 3.0) == pytest.approx(3.0, abs=1e-12)
    assert mutual_information(np.ones((1, 1)), 1.0) == pytest.approx(1.0, abs=1e-12)


def test_mutual_information_validation():
    with pytest.raises(InvalidArgumentError):
        mutual_information(np.array([[np.inf]]), 1.0)
    with pytest.raises(InvalidArgumentError):
        mutual_information(np.eye(2), 0.0)


def brute_force_mi(R, n_T, n_R, snr_db, trials, seed):
    """Naive loop with an independent generator and a determinant per trial."""
    rng = np.random.default_rng(seed)
    w, V = np.linalg.eigh(R)
    S = V @ np.diag(np.sqrt(np.maximum(w, 0))) @ V.conj().T
    snr = 10 ** (snr_db / 10)
    vals = []
    for _ in range(trials):
        g = (rng.standard_normal(n_T * n_R) + 1j * rng.standard_normal(n_T * n_R)) / math.sqrt(2)
        H = (S @ g).reshape(n_T, n_R).T
        d = np.linalg.det(np.eye(n_R) + snr / n_T * H @ H.conj().T)
        vals.append(math.log2(d.real))
    vals = np.array(vals)
    return vals.mean(), vals.std(ddof=1) / math.sqrt(trials)


def test_average_mi_against_brute_force():
    R = random_correlation(9, seed=21)
    engine = RealizationEngine.from_correlation(R, 3, 3, seed=2)
    curve = average_mi(engine, [10.0], 8000)
    ref, ref_se = brute_force_mi(R, 3, 3, 10.0, 8000, seed=99)
    assert abs(curve.mean_mi[0] - ref) <= 2 * math.hypot(curve.std_err[0], ref_se)


def test_average_mi_matches_pointwise_formula():
    engine = RealizationEngine.from_correlation(random_correlation(4, seed=8), 2, 2, seed=3)
    curve = average_mi(engine, [0.0, 20.0], 50)
    H = draw_channels(engine, 50)
    for k, snr_db in enumerate((0.0, 20.0)):
        direct = np.mean([mutual_information(h, 10 ** (snr_db / 10)) for h in H])
        assert curve.mean_mi[k] == pytest.approx(direct, rel=1e-12)


def test_single_trial_has_undefined_error():
    engine = RealizationEngine.from_correlation(np.eye(4), 2, 2)
    curve = average_mi(engine, [0.0, 10.0], 1)
    assert np.all(np.isnan(curve.std_err))
    assert np.all(np.isfinite(curve.mean_mi))
    with pytest.raises(InvalidArgumentError):
        average_mi(engine, [0.0], 0)


def test_rank_one_channel_below_iid():
    n = 9
    iid = average_mi(RealizationEngine.from_correlation(np.eye(n), 3, 3, seed=5), [20.0], 4000)
    rank1 = average_mi(RealizationEngine.from_correlation(np.ones((n, n)), 3, 3, seed=5), [20.0], 4000)
    assert rank1.mean_mi[0] < iid.mean_mi[0]
    # a rank-one channel has a single non-zero singular value
    H = draw_channel(RealizationEngine.from_correlation(np.ones((n, n)), 3, 3), 0)
    s = np.linalg.svd(H, compute_uv=False)
    assert s[1] < 1e-6 * s[0]


def test_correlation_reduces_mi():
    snr = [0.0, 10.0, 20.0, 30.0]
    iid = average_mi(RealizationEngine.from_correlation(np.eye(9), 3, 3, seed=5), snr, 4000)
    cor = average_mi(RealizationEngine.from_correlation(random_correlation(9, rank=3, seed=1), 3, 3,
                                                        seed=5), snr, 4000)
    assert np.all(cor.mean_mi < iid.mean_mi)
    assert np.all(np.diff(iid.mean_mi) > 0)
    assert np.all(np.diff(cor.mean_mi) > 0)


def test_curve_csv_round_trip(tmp_path):
    engine = RealizationEngine.from_correlation(np.eye(4), 2, 2)
    curve = average_mi(engine, [0.0, 5.0], 20, scenario_id="demo/x/iid")
    path = tmp_path / "c.csv"
    curve.to_csv(path)
    back = CapacityCurve.from_csv(path)
    np.testing.assert_array_equal(back.mean_mi, curve.mean_mi)
    np.testing.assert_array_equal(back.std_err, curve.std_err)
    assert back.trials == 20 and back.scenario_id == "demo/x/iid"
    assert path.read_text().splitlines()[0] == "snr_db,mean_mi_bits,std_err,trials,scenario_id"
