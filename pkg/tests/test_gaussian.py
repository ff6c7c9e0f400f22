import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simpson import gaussian as gs
from simpson.gaussian import GaussianCauseModel
from simpson.errors import DegenerateB, DimensionMismatch, NotPositiveDefinite


def random_model(rng, nA=2, nB=2, nX=2):
    def spd(n):
        L = rng.standard_normal((n, n))
        return L @ L.T + 0.5 * np.eye(n)

    return GaussianCauseModel(spd(nA), spd(nB), spd(nX), rng.uniform(-1, 1, (nA + nB, nX)))


def minimal(a12, c, s, b):
    return GaussianCauseModel([[1.0, a12], [a12, 1.0]], [[b]], [[s]], np.reshape(c, (3, 1)))


# -- model validation ---------------------------------------------------------


def test_spd_checks():
    with pytest.raises(NotPositiveDefinite):
        gs.check_spd([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotPositiveDefinite):
        gs.check_spd([[1.0, 0.1], [0.0, 1.0]])
    with pytest.raises(DimensionMismatch):
        gs.check_spd(np.ones((2, 3)))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        GaussianCauseModel(np.eye(2), np.eye(1), np.eye(1), np.ones((2, 1)))


def test_json_round_trip():
    m = random_model(np.random.default_rng(0))
    back = GaussianCauseModel.from_json(m.to_json())
    for k in ("covA", "covB", "covX", "coupling"):
        assert np.array_equal(getattr(m, k), getattr(back, k))


# -- covariances --------------------------------------------------------------


def test_decoupled_cause_gives_block_diagonal():
    m = GaussianCauseModel(np.eye(2) * 2, np.eye(1), np.eye(1), np.zeros((3, 1)))
    assert np.array_equal(gs.marginal_covariance(m), np.diag([2.0, 2.0, 1.0]))


def test_scalar_cause_is_rank_one_update():
    rng = np.random.default_rng(1)
    m = random_model(rng, 2, 1, 1)
    c = m.coupling[:, 0]
    expected = m.Q() + m.covX[0, 0] * np.outer(c, c)
    assert np.allclose(gs.marginal_covariance(m), expected, atol=1e-14)


def test_uncoupled_b_gives_plain_sum():
    rng = np.random.default_rng(2)
    m = random_model(rng)
    c = m.coupling.copy()
    c[2:] = 0.0
    m = GaussianCauseModel(m.covA, m.covB, m.covX, c)
    J = c[:2] @ m.covX @ c[:2].T
    assert np.allclose(gs.conditional_cov_a_given_b(m), m.covA + J, atol=1e-14)


def test_two_paths_agree():
    rng = np.random.default_rng(3)
    for _ in range(200):
        m = random_model(rng, *rng.integers(1, 5, size=3))
        a = gs.conditional_cov_a_given_b(m)
        b = gs.conditional_cov_via_precision(m)
        assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.abs(a).max())


def test_minimal_model_closed_form():
    m = minimal(0.3, [0.7, -0.4, 1.3], 2.0, 0.5)
    eps = 0.5 / (0.5 + 1.3**2 * 2.0)
    assert gs.conditional_cov_a_given_b(m)[0, 1] == pytest.approx(0.3 + 0.7 * -0.4 * 2.0 * eps, abs=1e-14)
    assert gs.marginal_covariance(m)[0, 1] == pytest.approx(0.3 + 0.7 * -0.4 * 2.0, abs=1e-14)


def mc_within_3se(model, n, seed):
    """Sample x then y | x with plain numpy and compare second moments."""
    rng = np.random.default_rng(seed)
    x = rng.multivariate_normal(np.zeros(model.nX), model.covX, size=n)
    y = x @ model.coupling.T + rng.multivariate_normal(np.zeros(model.nA + model.nB), model.Q(), size=n)
    S = gs.marginal_covariance(model)
    est = y.T @ y / n
    se = np.sqrt((np.outer(np.diag(S), np.diag(S)) + S**2) / n)
    ok_marg = np.all(np.abs(est - S) < 3 * se)
    # residuals after regressing a on b
    nA = model.nA
    a, b = y[:, :nA], y[:, nA:]
    beta = np.linalg.lstsq(b, a, rcond=None)[0]
    r = a - b @ beta
    C = gs.conditional_cov_a_given_b(model)
    se_c = np.sqrt((np.outer(np.diag(C), np.diag(C)) + C**2) / n)
    ok_cond = np.all(np.abs(r.T @ r / n - C) < 3 * se_c)
    return ok_marg and ok_cond


def test_monte_carlo_agreement():
    rng = np.random.default_rng(4)
    ok = [mc_within_3se(random_model(rng), 200_000, seed) for seed in range(20)]
    assert sum(ok) >= 19


def test_package_monte_carlo_matches_analytic():
    m = random_model(np.random.default_rng(5), 2, 1, 1)
    marg, cond, n = gs.monte_carlo_covariances(m, 400_000, seed=1)
    S = gs.marginal_covariance(m)
    se = np.sqrt((np.outer(np.diag(S), np.diag(S)) + S**2) / n)
    assert np.all(np.abs(marg - S) < 4 * se)


def test_monte_carlo_thread_independent():
    m = random_model(np.random.default_rng(6))
    a = gs.monte_carlo_covariances(m, 200_000, seed=2, threads=1)
    b = gs.monte_carlo_covariances(m, 200_000, seed=2, threads=4)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


# -- continuous paradox -------------------------------------------------------


def test_diagonal_covariance_no_paradox():
    r = gs.detect_continuous_simpson(np.diag([1.0, 2.0, 3.0]))
    assert not r.is_paradox and r.marginal == 0 and r.conditional == 0


def test_worked_covariance_paradox():
    cov = [[1, 0.1, 0.6], [0.1, 1, 0.6], [0.6, 0.6, 1]]
    assert np.linalg.eigvalsh(cov).min() > 0
    r = gs.detect_continuous_simpson(cov)
    assert r.conditional == pytest.approx(-0.26, abs=1e-15)
    assert r.is_paradox


def test_degenerate_b():
    with pytest.raises(DegenerateB):
        gs.detect_continuous_simpson(np.diag([1.0, 1.0, 0.0]))


def test_detect_on_minimal_models_matches_closed_form():
    p = gs.random_minimal_models(2000, seed=3)
    marg, cond, xcond, _ = gs.minimal_case_arrays(p)
    for j in range(2000):
        m = gs.minimal_model(p, j)
        r = gs.detect_continuous_simpson(gs.marginal_covariance(m))
        assert r.marginal == pytest.approx(marg[j], abs=1e-10)
        assert r.conditional == pytest.approx(cond[j], abs=1e-10 * max(1, abs(marg[j])))
        if r.is_paradox:
            assert np.sign(xcond[j]) != np.sign(marg[j])


def test_minimal_uncoupled_b():
    t = gs.minimal_case(minimal(0.3, [0.5, 0.5, 0.0], 1.0, 1.0))
    assert t.epsilon == 1.0
    assert t.b_conditional_a1a2 == t.marginal_a1a2
    assert not t.paradox


def test_minimal_worked_example():
    # A12 = -0.2, c11 c21 covX = 0.5, eps = 1 / (1 + 9) = 0.1
    c = np.sqrt(0.5)
    t = gs.minimal_case(minimal(-0.2, [c, c, 3.0], 1.0, 1.0))
    assert t.epsilon == pytest.approx(0.1)
    assert t.marginal_a1a2 == pytest.approx(0.3)
    assert t.b_conditional_a1a2 == pytest.approx(-0.15)
    assert t.paradox and t.fine_sign_agrees


def test_minimal_case_needs_minimal_dimensions():
    with pytest.raises(DimensionMismatch):
        gs.minimal_case(random_model(np.random.default_rng(0)))


@settings(max_examples=200)
@given(st.floats(-0.9, 0.9), st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.floats(1e-2, 1e2), st.floats(1e-2, 1e2))
def test_epsilon_bounds(a12, c, s, b):
    t = gs.minimal_case(minimal(a12, c, s, b))
    if c[2] == 0:
        assert t.epsilon == 1.0
    else:
        assert 0 < t.epsilon <= 1.0
        if c[2] ** 2 * s > 1e-12 * b:
            assert t.epsilon < 1.0


@settings(max_examples=200)
@given(st.floats(-0.9, 0.9), st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.floats(1e-2, 1e2), st.floats(1e-2, 1e2))
def test_closed_form_matches_schur(a12, c, s, b):
    m = minimal(a12, c, s, b)
    t = gs.minimal_case(m)
    scale = max(1.0, abs(t.marginal_a1a2))
    assert abs(gs.conditional_cov_a_given_b(m)[0, 1] - t.b_conditional_a1a2) < 1e-10 * scale
    assert abs(gs.marginal_covariance(m)[0, 1] - t.marginal_a1a2) < 1e-10 * scale


def test_minimal_sign_rule_random_models():
    chk = gs.minimal_sign_check(100_000, seed=1)
    assert chk.n_paradox > 1000
    assert chk.holds


# -- two-component counterexample ---------------------------------------------


@pytest.mark.parametrize("sign", [1, -1])
def test_counterexample_both_signs(sign):
    m = gs.two_component_counterexample(1e6, sign)
    marg = gs.marginal_covariance(m)[0, 1]
    cond = gs.conditional_cov_a_given_b(m)[0, 1]
    assert marg > 0 > cond
    assert np.sign(m.covA[0, 1]) == sign


def test_counterexample_large_scale_limit():
    s = 1e6
    m = gs.two_component_counterexample(s, 1, covB=1.0)
    # b couples only to the second component, so the first component's
    # product c11 c21 = -1 survives conditioning
    expected = m.covA[0, 1] + s * (1.0 * -1.0)
    assert gs.conditional_cov_a_given_b(m)[0, 1] == pytest.approx(expected, rel=1e-4)


def test_counterexample_small_scale_decouples():
    r = gs.analyze(gs.two_component_counterexample(1e-8, 1))
    assert not r["paradox"]


# -- matrix identities --------------------------------------------------------


def test_woodbury_with_zero_update():
    Z = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert gs.woodbury_residual(Z, np.zeros((2, 1)), np.eye(1), np.zeros((1, 2))) == 0.0


def test_woodbury_dims_4_2():
    rng = np.random.default_rng(7)
    Z = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    Z = Z @ Z.T
    U, W, V = rng.standard_normal((4, 2)), np.eye(2) + 0.1 * rng.standard_normal((2, 2)), rng.standard_normal((2, 4))
    direct = np.linalg.inv(Z + U @ W @ V)
    Zi = np.linalg.inv(Z)
    formula = Zi - Zi @ U @ np.linalg.inv(np.linalg.inv(W) + V @ Zi @ U) @ V @ Zi
    assert np.max(np.abs(direct - formula)) < 1e-10 * np.abs(direct).max()
    assert gs.woodbury_residual(Z, U, W, V) < 1e-10


def test_sylvester_3_5():
    rng = np.random.default_rng(8)
    K, L = 0.3 * rng.standard_normal((3, 5)), 0.3 * rng.standard_normal((5, 3))
    lhs = np.linalg.det(np.eye(3) - K @ L)
    rhs = np.linalg.det(np.eye(5) - L @ K)
    assert abs(lhs - rhs) < 1e-10 * abs(lhs)
    assert gs.sylvester_residual(K, L) < 1e-10


def test_block_inverse_against_dense():
    rng = np.random.default_rng(9)
    m = rng.standard_normal((6, 6)) + 3 * np.eye(6)
    assert np.allclose(gs.block_inverse(m, 2), np.linalg.inv(m), atol=1e-12)


def test_identity_suite():
    d = gs.matrix_identity_suite(300, seed=3)
    assert d.passed
    assert set(d.max_residuals) == {"woodbury", "generalized_sylvester", "sylvester",
                                    "block_inverse", "block_determinant"}
