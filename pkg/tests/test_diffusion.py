import math

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform

from icpqr import core, diffusion as dm
from icpqr.datagen import swiss_roll
from icpqr.distortion import max_distortion
from icpqr.exceptions import ConnectivityError, ShapeError, ValidationError


def small_cloud(n=60, seed=0):
    return np.random.default_rng(seed).standard_normal((3, n))


def test_kernel_diagonal_and_half_point():
    eps = 2.0
    X = np.array([[0.0, math.sqrt(eps * math.log(2))]])
    K = dm.gaussian_kernel(X, eps)
    assert np.allclose(np.diag(K), 1.0)
    assert K[0, 1] == pytest.approx(0.5, abs=1e-15)


def test_kernel_three_points_by_hand():
    X = np.array([[0.0, 1.0, 3.0]])
    K = dm.gaussian_kernel(X, 2.0)
    expect = [[1, math.exp(-0.5), math.exp(-4.5)],
              [math.exp(-0.5), 1, math.exp(-2.0)],
              [math.exp(-4.5), math.exp(-2.0), 1]]
    assert np.allclose(K, expect, rtol=1e-15, atol=0)
    assert np.array_equal(K, K.T)


def test_kernel_rejects_bad_epsilon():
    with pytest.raises(ValidationError):
        dm.gaussian_kernel(np.ones((2, 2)), 0.0)


def test_markov_examples():
    P, d = dm.markov(np.ones((2, 2)))
    assert np.array_equal(P, np.full((2, 2), 0.5))
    K = np.array([[1.0, 0.2, 0.3], [0.2, 1.0, 0.7], [0.3, 0.7, 1.0]])
    P, d = dm.markov(K)
    assert np.array_equal(d, [1.5, 1.9, 2.0])
    assert P[1, 2] == 0.7 / 1.9 and P[0, 0] == 1.0 / 1.5
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
    with pytest.raises(ConnectivityError):
        dm.markov(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ShapeError):
        dm.markov(np.ones((2, 3)))


def test_two_point_chain_by_hand():
    a = 0.3
    K = np.array([[1.0, a], [a, 1.0]])
    P, d = dm.markov(K)
    G = dm.g_matrix(P, d, 1)
    # weights 1/dhat = 2 on both states, each entry differs by (1-a)/(1+a)
    expect = 2 * (1 - a) / (1 + a)
    assert np.linalg.norm(G[:, 0] - G[:, 1]) == pytest.approx(expect, rel=1e-14)
    assert dm.diffusion_distances(P, d, 1)[0, 1] == pytest.approx(expect, rel=1e-14)
    cdm = dm.classical_dm(K, 1)
    assert np.allclose(cdm.eigenvalues, [1.0, (1 - a) / (1 + a)], atol=1e-14)
    assert dm.diffusion_distances(P, d, 1)[0, 0] == 0


@pytest.mark.parametrize("t", [1, 2, 4])
def test_three_routes_to_diffusion_distance_agree(t):
    X = small_cloud(80, seed=t)
    K = dm.gaussian_kernel(X, 1.5)
    P, d = dm.markov(K)
    direct = dm.diffusion_distances(P, d, t)
    via_g = squareform(pdist(dm.g_matrix(P, d, t).T))
    cdm = dm.classical_dm(K, t)
    via_psi = squareform(pdist(cdm.psi.T))
    assert np.abs(direct - via_g).max() <= 1e-6
    assert np.abs(direct - via_psi).max() <= 1e-6


def test_classical_spectrum_sanity():
    K = dm.gaussian_kernel(small_cloud(50), 1.0)
    cdm = dm.classical_dm(K, 1)
    assert cdm.eigenvalues[0] == pytest.approx(1.0, abs=1e-8)
    assert np.all(np.abs(cdm.eigenvalues) <= 1 + 1e-12)
    assert np.all(np.diff(np.abs(cdm.eigenvalues)) <= 1e-15)
    # top right eigenvector of P is constant: first coordinate equal for all points
    assert np.ptp(cdm.psi[0]) <= 1e-8 * np.abs(cdm.psi[0]).max()
    P, d = dm.markov(K)
    assert (d / d.sum()).sum() == pytest.approx(1.0)


@pytest.mark.parametrize("t", [1, 3])
def test_truncation_obeys_analytic_bound(t):
    K = dm.gaussian_kernel(small_cloud(40, seed=9), 2.0)
    cdm = dm.classical_dm(K, t)
    for k in range(0, 41, 3):
        assert max_distortion(cdm.psi, cdm.truncate(k)) <= cdm.analytic_bound(k) + 1e-10


def test_zero_mu_is_exact():
    X = small_cloud(10, seed=3)
    K = dm.gaussian_kernel(X, 1.0)
    model = dm.fit_dm(K, 1, 0.0)
    cdm = dm.classical_dm(K, 1)
    assert max_distortion(cdm.psi, dm.embedding(model)) <= 1e-8


def test_fit_dm_two_mu_bound_and_mu_strict():
    X = small_cloud(120, seed=4)
    model = dm.fit_dm_points(X, 1.0, 2, 0.2)
    P, d = dm.markov(dm.gaussian_kernel(X, 1.0))
    D = dm.diffusion_distances(P, d, 2)
    H = dm.embedding(model)
    assert np.abs(D - squareform(pdist(H.T))).max() <= 2 * model.mu + 1e-8
    G = dm.g_matrix(P, d, 2)
    assert model.mu_strict_t == pytest.approx(max(np.linalg.norm(G - core.expand_q(model.icpqr) @ H, axis=0)), abs=1e-9)


def test_separated_clusters_both_get_pivots():
    rng = np.random.default_rng(5)
    X = np.hstack([rng.standard_normal((2, 5)) * 0.3, rng.standard_normal((2, 5)) * 0.3 + 50])
    model = dm.fit_dm_points(X, 1.0, 1, 0.5)
    piv = set(model.icpqr.pivots.tolist())
    assert piv & set(range(5)) and piv & set(range(5, 10))


def test_oos_in_sample_matches_transition_row():
    X = small_cloud(30, seed=6)
    model = dm.fit_dm_points(X, 1.0, 1, 0.1)
    P, _ = dm.markov(dm.gaussian_kernel(X, 1.0))
    for i in (0, 7, 29):
        p, far = dm.oos_probabilities(model, X[:, i])
        assert not far
        assert np.allclose(p, P[i], atol=1e-12)


def test_oos_equidistant_point():
    X = np.array([[-1.0, 1.0, 100.0, -100.0, 0.0], [0.0, 0.0, 0.0, 0.0, 100.0]])
    model = dm.fit_dm_points(X, 1.0, 1, 0.0)
    p, far = dm.oos_probabilities(model, np.zeros(2))
    assert not far
    assert np.allclose(p, [0.5, 0.5, 0, 0, 0], atol=1e-12)
    assert p.sum() == pytest.approx(1.0, abs=1e-10)


def test_oos_far_point_flagged_and_abnormal():
    X = small_cloud(40, seed=7)
    eps = 0.5
    model = dm.fit_dm_points(X, eps, 1, 0.1)
    x = X[:, 0] + np.array([100 * math.sqrt(eps) + np.abs(X).max() * 2, 0, 0])
    mass = dm.cross_kernel(x[:, None], X, eps).sum()
    assert mass < model.far_threshold
    p, far = dm.oos_probabilities(model, x)
    assert far and not p.any()
    ext = dm.extend_points(model, x[:, None])
    assert ext.far[0] and not ext.normal[0] and ext.report(0).verdict == "abnormal"


@pytest.mark.parametrize("t", [1, 3])
def test_in_sample_probability_extends_to_own_embedding(t):
    X = small_cloud(50, seed=8)
    model = dm.fit_dm_points(X, 1.0, t, 0.05)
    P, _ = dm.markov(dm.gaussian_kernel(X, 1.0))
    Pt = np.linalg.matrix_power(P, t)
    H = dm.embedding(model)
    for i in range(50):
        rep = dm.extend_dm(model, Pt[i])
        assert np.allclose(rep.coords, H[:, i], atol=1e-9)
    ext = dm.extend_points(model, X)
    assert np.allclose(ext.coords, H, atol=1e-9)


def test_stationary_distribution_extension():
    X = small_cloud(40, seed=10)
    model = dm.fit_dm_points(X, 1.0, 1, 0.1)
    dhat = model.degrees / model.degrees.sum()
    rep = dm.extend_dm(model, dhat)
    assert np.all(np.isfinite(rep.coords))
    g = np.sqrt(model.degrees.sum()) * dhat / np.sqrt(model.degrees)
    Q = core.expand_q(model.icpqr)
    assert np.allclose(rep.coords, Q.T @ g, atol=1e-9)
    assert rep.distortion == pytest.approx(np.linalg.norm(g - Q @ (Q.T @ g)), abs=1e-9)


def test_extend_dm_validates_probability_vector():
    model = dm.fit_dm_points(small_cloud(10), 1.0, 1, 0.1)
    with pytest.raises(ShapeError):
        dm.extend_dm(model, np.full(9, 1 / 9))
    with pytest.raises(ValidationError):
        dm.extend_dm(model, np.full(10, 0.2))


def test_kernel_models_need_points_for_raw_extension():
    K = dm.gaussian_kernel(small_cloud(10), 1.0)
    model = dm.fit_dm(K, 1, 0.1)
    with pytest.raises(ValidationError):
        dm.oos_probabilities(model, np.zeros(3))


def test_epsilon_monotonicity_small():
    X, _ = swiss_roll(600, seed=11)
    s = [dm.fit_dm_points(X, eps, 1, 1.0).s for eps in (1.0, 5.0, 25.0)]
    assert s[2] <= s[1] <= s[0]


def test_icpqr_not_worse_than_analytic_dimension():
    X, _ = swiss_roll(200, seed=12)
    K = dm.gaussian_kernel(X, 3.0)
    cdm = dm.classical_dm(K, 1)
    for mu in (0.5, 2.0, 5.0):
        model = dm.fit_dm(K, 1, mu)
        achieved = max_distortion(cdm.psi, dm.embedding(model))
        assert model.s <= dm.analytic_dimension(cdm, achieved)


def test_swiss_roll_g_columns_match_direct_formula():
    X, _ = swiss_roll(500, seed=13)
    P, d = dm.markov(dm.gaussian_kernel(X, 3.0))
    direct = dm.diffusion_distances(P, d, 1)
    via_g = squareform(pdist(dm.g_matrix(P, d, 1).T))
    assert np.linalg.norm(direct - via_g) <= 1e-6


def test_median2():
    X = np.array([[0.0, 1.0, 3.0]])
    assert dm.median2_epsilon(X) == 4.0
    model = dm.fit_dm_points(X, "median2", 1, 0.0)
    assert model.epsilon == 4.0
    with pytest.raises(ValidationError):
        dm.fit_dm_points(X, "mean", 1, 0.0)


def test_bad_time():
    with pytest.raises(ValidationError):
        dm.fit_dm(np.eye(2), 0, 0.1)
