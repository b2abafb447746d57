import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spiked_wigner import noise, theory, transform as tr

# GOE Tracy-Widom constants from high-precision literature values
TW_MEAN = -1.2065335745820
TW_VAR = 1.6077810345810
# left-tail values, frozen from an mpmath Fredholm evaluation at 40 digits
F1_MINUS8 = 1.80682792118542e-12
F1_MINUS10 = 3.15903790319956e-22


def test_supercritical_prediction(mixture, optimal):
    p = theory.predict(0.8, optimal, mixture)
    assert p.regime == theory.SUPERCRITICAL and p.reference_law == theory.GAUSSIAN_LAW
    assert p.lambda_e == pytest.approx(2.902, abs=1e-3)
    assert p.location == pytest.approx(2.2905, abs=2e-4)
    assert p.variance == pytest.approx(1.3108, abs=2e-4)
    assert p.scale_exponent == -0.5


def test_subcritical_prediction(mixture, optimal):
    p = theory.predict(0.1, optimal, mixture)
    assert p.regime == theory.SUBCRITICAL and p.location == 2.0
    assert p.reference_law == theory.TW_LAW and p.scale_exponent == pytest.approx(-2 / 3)


def test_simple_predictions(gaussian):
    assert theory.predict(2.0, tr.identity(), gaussian).variance == 1.0
    with pytest.raises(theory.NearCriticalError, match="near-critical"):
        theory.predict(1.02, tr.identity(), gaussian)


def test_scaled_prediction(gaussian):
    h = tr.normalize(tr.hermite2(), gaussian)
    lam0 = 2 * math.sqrt(2)
    p = theory.predict_scaled(lam0, h, gaussian, w4=1.0)
    assert p.lambda_e == pytest.approx(lam0**2 / 2, rel=1e-9)
    assert p.variance == pytest.approx(1.5, rel=1e-9)
    assert p.shift == pytest.approx(0.5 * 1.0 * 2.5, rel=1e-8)
    with pytest.raises(theory.NearCriticalError):
        theory.predict_scaled(math.sqrt(2), h, gaussian, w4=1.0)
    with pytest.raises(ValueError, match="critical index 2"):
        theory.predict_scaled(1.0, tr.identity(), gaussian, w4=1.0)
    sub = theory.predict_scaled(0.5, h, gaussian, w4=1.0)
    assert sub.reference_law == theory.TW_LAW and sub.centre(100) == pytest.approx(2.0 + 0.1)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 10.0))
def test_prediction_prescale_invariant(c):
    g = noise.standard_gaussian()
    a = theory.predict(2.5, tr.normalize(tr.quadratic_example(), g), g)
    b = theory.predict(2.5, tr.normalize(tr.make_polynomial(c * np.array([-1.0, 3.0, 1.0])), g), g)
    assert abs(a.location - b.location) < 1e-8 and abs(a.variance - b.variance) < 1e-8


def test_location_and_variance_limits():
    le = np.linspace(1.001, 20, 200)
    loc = np.array([theory.outlier_location(v) for v in le])
    assert np.all(np.diff(loc) > 0)
    assert theory.outlier_location(1 + 1e-10) == pytest.approx(2.0, abs=1e-9)
    assert theory.outlier_variance(1 + 1e-10) == pytest.approx(0.0, abs=1e-9)


def test_rescale_round_trip(mixture, optimal):
    for lam in (0.8, 0.1):
        p = theory.predict(lam, optimal, mixture)
        mu = np.array([1.9, 2.05, 2.31])
        np.testing.assert_allclose(p.unrescale(p.rescale(mu, 1024), 1024), mu, atol=1e-12)


def test_gaussian_cdf():
    assert theory.gaussian_cdf(0.0) == 0.5
    assert theory.gaussian_cdf(1.0, 1.0, 4.0) == 0.5
    assert theory.gaussian_cdf(2.0, 0.0, 4.0) == pytest.approx(0.8413447460685429, rel=1e-14)


def test_tw_table_integrity():
    table = theory.tw1_table()
    assert np.all(np.diff(table.cdf_values) > 0)
    assert theory.table_checksum(theory._shipped_table_text()) == theory.TW1_TABLE_SHA256


def test_tw_moments():
    table = theory.tw1_table()
    assert abs(table.mean - TW_MEAN) < 1e-7
    assert abs(table.variance - TW_VAR) < 1e-6


def test_tw_tails():
    assert theory.tw1_cdf(-10.0) < 1e-5 and theory.tw1_cdf(6.0) > 1 - 1e-5
    assert theory.tw1_cdf(-8.0) == pytest.approx(F1_MINUS8, rel=1e-5)
    assert theory.tw1_cdf(-10.0) == pytest.approx(F1_MINUS10, rel=1e-2)
    val, flag = theory.tw1_table().cdf(np.array([-12.0, 0.0, 7.0]), return_flag=True)
    assert flag and val[0] == 0.0 and val[2] == 1.0


def test_tw_methods_agree():
    for s in (-5.0, -3.5):
        assert theory.tw1_painleve([s])[0] == pytest.approx(theory.tw1_fredholm(s), rel=1e-7)
    for s in (-2.37, 0.415, 2.0):
        assert theory.tw1_cdf(s) == pytest.approx(theory.tw1_fredholm(s), abs=1e-9)


def test_tw_quantile_inverts_cdf():
    grid = np.linspace(-5.5, 3.5, 37)
    back = np.array([theory.tw1_quantile(float(theory.tw1_cdf(s))) for s in grid])
    assert np.max(np.abs(back - grid)) < 1e-4
    with pytest.raises(ValueError):
        theory.tw1_quantile(1.0)


def test_tw_pdf_integrates_to_one():
    s = np.linspace(-10, 6, 8001)
    pdf = theory.tw1_pdf(s)
    assert np.all(pdf >= 0)
    assert abs(np.sum((pdf[1:] + pdf[:-1]) / 2 * np.diff(s)) - 1) < 1e-5


def test_table_csv_round_trip():
    table = theory.tw1_table()
    text = table.to_csv()
    assert text == theory._shipped_table_text()
    assert text.splitlines()[0] == "s,cdf"
