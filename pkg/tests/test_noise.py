import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spiked_wigner import noise

A, B = 1 / math.sqrt(5), 2 / math.sqrt(5)


def _mp_mixture_pdf(x):
    a, b = mpmath.mpf(1) / mpmath.sqrt(5), 2 / mpmath.sqrt(5)
    c = 1 / (2 * a * mpmath.sqrt(2 * mpmath.pi))
    return c * (mpmath.exp(-((x - b) / a) ** 2 / 2) + mpmath.exp(-((x + b) / a) ** 2 / 2))


# frozen with 30-digit mpmath quadrature of p'^2 / p
FISHER_MIXTURE = 3.628051824


def test_fisher_oracle_is_independent():
    mpmath.mp.dps = 30
    dp = lambda x: mpmath.diff(_mp_mixture_pdf, x)
    val = mpmath.quad(lambda x: dp(x) ** 2 / _mp_mixture_pdf(x), [-mpmath.inf, -B, 0, B, mpmath.inf])
    assert abs(float(val) - FISHER_MIXTURE) < 1e-9


def test_pdf_values(gaussian, mixture):
    assert gaussian.pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    # the normalized mixture density; see the decisions ledger for the constant
    norm = math.sqrt(5) / (2 * math.sqrt(2 * math.pi))
    assert mixture.pdf(0.0) == pytest.approx(norm * 2 * math.exp(-2), rel=1e-14)
    assert mixture.pdf(B) == pytest.approx(norm * (1 + math.exp(-8)), rel=1e-14)
    assert float(mixture.pdf(0.0)) == pytest.approx(float(_mp_mixture_pdf(0)), rel=1e-14)


@pytest.mark.parametrize("kind", ["gaussian", "mixture"])
def test_builtin_moments(kind):
    m = noise.from_spec({"kind": kind})
    assert abs(m.expect(lambda x: np.ones_like(x), atol=1e-12) - 1) < 1e-10
    assert abs(m.expect(lambda x: x, atol=1e-12)) < 1e-8
    assert abs(m.expect(lambda x: x * x, atol=1e-12) - 1) < 1e-8
    m.validate()


def test_expectations(gaussian, mixture):
    assert gaussian.expect(lambda x: x**4) == pytest.approx(3.0, abs=1e-9)
    assert mixture.expect(lambda x: x**2) == pytest.approx(1.0, abs=1e-9)
    assert gaussian.expect(lambda x: (x * x + 3 * x - 1) ** 2 / 11) == pytest.approx(1.0, abs=1e-9)


def test_score_values(gaussian, mixture):
    xs = np.array([-1.0, 0.0, 2.5])
    np.testing.assert_array_equal(gaussian.score(xs), xs)
    assert mixture.score(0.0) == 0.0
    closed = 5 * (1 - B * math.tanh(B / A**2))
    assert mixture.score(1.0) == pytest.approx(closed, rel=1e-14)
    fd = -float(mpmath.diff(lambda t: mpmath.log(_mp_mixture_pdf(t)), 1))
    assert mixture.score(1.0) == pytest.approx(fd, rel=1e-12)


def test_score_matches_log_density_derivative(mixture):
    rng = np.random.default_rng(1)
    x = rng.uniform(-3, 3, 100)
    h = 1e-5
    fd = -(np.log(mixture.pdf(x + h)) - np.log(mixture.pdf(x - h))) / (2 * h)
    assert np.max(np.abs(mixture.score(x) - fd)) < 1e-6


def test_score_derivatives_closed_form(mixture):
    x = np.linspace(-3, 3, 41)
    for k in (1, 2, 3):
        fd = noise._central_diff(lambda t: mixture.score_derivative(t, k - 1), x, 1)
        assert np.max(np.abs(mixture.score_derivative(x, k) - fd)) < 1e-6


def test_score_tail_error(gaussian):
    with pytest.raises(noise.TailEvaluationError, match="tail evaluation"):
        gaussian.score(60.0)


def test_fisher_information(gaussian, mixture):
    assert gaussian.fisher_information() == pytest.approx(1.0, abs=1e-9)
    assert mixture.fisher_information() == pytest.approx(FISHER_MIXTURE, abs=1e-6)
    assert abs(mixture.fisher_information() - 3.628) <= 0.002
    assert mixture.fisher_information() == pytest.approx(mixture.expect(lambda x: mixture.score(x) ** 2), abs=1e-6)


def test_sampling_moments(gaussian, mixture):
    n = 10**5
    g = gaussian.sample(np.random.default_rng(3), n)
    assert abs(g.mean()) < 4 / math.sqrt(n)
    m = mixture.sample(np.random.default_rng(3), n)
    assert abs(m.var() - 1) < 5 / math.sqrt(n)


def test_sampling_deterministic(mixture):
    a = mixture.sample(np.random.default_rng(9), 1000)
    b = mixture.sample(np.random.default_rng(9), 1000)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("g", [lambda x: x, lambda x: x**2, lambda x: x**4])
def test_sampling_agrees_with_quadrature(mixture, g):
    draws = g(mixture.sample(np.random.default_rng(11), 10**6))
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean() - mixture.expect(g)) < 5 * se


def test_sampling_score_squared(mixture):
    draws = mixture.score(mixture.sample(np.random.default_rng(12), 10**6)) ** 2
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean() - mixture.fisher_information()) < 5 * se


def test_custom_density_rejection_and_fd_derivatives():
    # logistic law rescaled to unit variance
    s = math.sqrt(3) / math.pi

    def pdf(x):
        e = np.exp(-np.abs(x) / s)
        return e / (s * (1 + e) ** 2)

    noise.register_density("logistic-test", pdf)
    m = noise.custom_density("logistic-test", noise.QuadratureSpec(window=40.0, panels=64))
    m.validate()
    x = np.linspace(-2, 2, 9)
    exact = np.tanh(x / (2 * s)) / s  # -p'/p
    assert np.max(np.abs(m.score(x) - exact)) < 1e-7
    draws = m.sample(np.random.default_rng(5), 20000)
    assert abs(draws.var() - 1) < 0.05
    assert np.array_equal(draws, m.sample(np.random.default_rng(5), 20000))


def test_bad_models():
    with pytest.raises(ValueError):
        noise.gaussian_rademacher_mixture(0.5, 0.5)
    with pytest.raises(ValueError):
        noise.from_spec({"kind": "cauchy"})
    with pytest.raises(ValueError):
        noise.custom_density("never-registered")
    with pytest.raises(ValueError):
        noise.from_spec({"kind": "gaussian", "scale": 2})


def test_spec_round_trip(mixture):
    assert noise.from_spec(noise.to_spec(mixture)) == mixture


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 0.99))
def test_mixture_family_unit_variance(a):
    m = noise.gaussian_rademacher_mixture(a)
    assert abs(m.expect(lambda x: x * x, atol=1e-12) - 1) < 1e-8
    assert m.fisher_information() >= 1 - 1e-6  # Cramer-Rao: unit variance forces F >= 1
