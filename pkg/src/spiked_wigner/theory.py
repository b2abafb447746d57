"""Limit laws for the largest eigenvalue of transformed spiked Wigner matrices.

``predict`` gives the fixed-SNR picture (Gaussian outlier above the
effective-SNR threshold, Tracy-Widom GOE edge below it) and
``predict_scaled`` the ``lambda = lambda0 sqrt(N)`` regime used when
``E[f'] = 0``.  The GOE Tracy-Widom law ships as a tabulated cdf with a
monotone cubic interpolant.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import io
import math
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.integrate import simpson
from scipy.optimize import brentq
from scipy.special import ndtr

from .noise import NoiseModel
from .transform import (
    ZERO_MOMENT_TOL,
    Transform,
    critical_index,
    derivative_moment,
    effective_snr,
    scaled_c2,
)

SUPERCRITICAL = "supercritical"
SUBCRITICAL = "subcritical"
SCALED = "scaled-k2"

GAUSSIAN_LAW = "gaussian"
TW_LAW = "tracy-widom-goe"

DEFAULT_MARGIN = 0.05

TW1_TABLE_FILE = "tw1_table.csv"
#: sha256 of the shipped table, checked on load and by ``tw-table check``
TW1_TABLE_SHA256 = "8cec15900bf0b63a2aa09dfcc2aef4774a3c9460ea644d202788462a7888917c"


class NearCriticalError(ValueError):
    """The effective SNR is within the configured margin of 1."""


@dataclass(frozen=True)
class TheoryPrediction:
    """Regime, centring and reference law of the rescaled top eigenvalue.

    For the Gaussian law the rescaled statistic is
    ``N^{1/2} (mu1 - location)`` with reference ``N(shift, variance)``.  For
    Tracy-Widom it is ``N^{2/3} (mu1 - 2 - shift N^{-1/2})``; ``shift`` is
    nonzero only in the scaled subcritical branch.
    """

    regime: str
    location: float
    scale_exponent: float
    reference_law: str
    lambda_e: float
    variance: float = float("nan")
    shift: float = 0.0
    c2: float = float("nan")

    @property
    def mean(self) -> float:
        return self.shift if self.reference_law == GAUSSIAN_LAW else tw1_table().mean

    def centre(self, N: int) -> float:
        if self.reference_law == TW_LAW:
            return self.location + self.shift / math.sqrt(N)
        return self.location

    def rescale(self, mu1, N: int):
        return N ** (-self.scale_exponent) * (np.asarray(mu1) - self.centre(N))

    def unrescale(self, value, N: int):
        return np.asarray(value) * N**self.scale_exponent + self.centre(N)

    def threshold(self, N: int, epsilon: float, c: float = 1.0) -> float:
        """Rigidity window ``c N^{exponent + eps}`` around the location."""
        return c * N ** (self.scale_exponent + epsilon)

    def reference_cdf(self, s):
        if self.reference_law == GAUSSIAN_LAW:
            return gaussian_cdf(s, self.shift, self.variance)
        return tw1_cdf(s)

    def reference_pdf(self, s):
        s = np.asarray(s, dtype=float)
        if self.reference_law == GAUSSIAN_LAW:
            return np.exp(-0.5 * (s - self.shift) ** 2 / self.variance) / math.sqrt(2 * math.pi * self.variance)
        return tw1_table().pdf(s)

    def to_dict(self) -> dict:
        return asdict(self)


def outlier_location(lambda_e: float) -> float:
    return math.sqrt(lambda_e) + 1.0 / math.sqrt(lambda_e)


def outlier_variance(lambda_e: float) -> float:
    return 2.0 * (lambda_e - 1.0) / lambda_e


def predict(lam: float, t: Transform, model: NoiseModel, margin: float = DEFAULT_MARGIN) -> TheoryPrediction:
    """Limit law of ``mu1`` for fixed SNR ``lam``.

    >>> from spiked_wigner import noise, transform
    >>> g = noise.standard_gaussian()
    >>> predict(2.0, transform.identity(), g).variance
    1.0
    """
    le = effective_snr(lam, t, model)
    if abs(le - 1.0) < margin:
        raise NearCriticalError(f"near-critical, no prediction (lambda_e = {le:.6g})")
    if le > 1.0:
        return TheoryPrediction(SUPERCRITICAL, outlier_location(le), -0.5, GAUSSIAN_LAW, le, outlier_variance(le))
    return TheoryPrediction(SUBCRITICAL, 2.0, -2.0 / 3.0, TW_LAW, le)


def predict_scaled(lambda0: float, t: Transform, model: NoiseModel, w4: float,
                   margin: float = DEFAULT_MARGIN, zero_tol: float = ZERO_MOMENT_TOL) -> TheoryPrediction:
    """Limit law when ``E[f'] = 0``, ``E[f''] != 0`` and ``lambda = lambda0 sqrt(N)``.

    ``w4`` is the fourth moment of ``sqrt(N) x_i``.  The effective SNR is
    ``lambda0^2 w4^2 E[f'']^2 / 4``; above threshold the Gaussian limit is
    shifted by ``(C2 / 2) (sqrt(le) + 1/sqrt(le))`` with
    ``C2 = E[f^2] + E[f f''] - E[f] E[f'']``.  Below threshold the edge is
    displaced by ``C2 N^{-1/2}`` before Tracy-Widom rescaling.
    """
    k = critical_index(t, model, zero_tol)
    if k != 2:
        raise ValueError(f"scaled prediction needs critical index 2, got {k}"
                         + (" (k_f = 3 scaling is not implemented)" if k == 3 else ""))
    e2 = derivative_moment(t, model, 2)
    le = lambda0**2 * w4**2 * e2**2 / 4.0
    c2 = scaled_c2(t, model)
    if abs(le - 1.0) < margin:
        raise NearCriticalError(f"near-critical, no prediction (scaled lambda_e = {le:.6g})")
    if le > 1.0:
        loc = outlier_location(le)
        return TheoryPrediction(SCALED, loc, -0.5, GAUSSIAN_LAW, le, outlier_variance(le), 0.5 * c2 * loc, c2)
    return TheoryPrediction(SCALED, 2.0, -2.0 / 3.0, TW_LAW, le, shift=c2, c2=c2)


def gaussian_cdf(s, mean=0.0, var=1.0):
    return ndtr((np.asarray(s, dtype=float) - mean) / math.sqrt(var))


# GOE Tracy-Widom ----------------------------------------------------------------

class TW1Table:
    """Tabulated GOE Tracy-Widom cdf with monotone cubic interpolation."""

    def __init__(self, grid, cdf):
        self.grid = np.asarray(grid, dtype=float)
        self.cdf_values = np.asarray(cdf, dtype=float)
        if np.any(np.diff(self.cdf_values) <= 0):
            raise ValueError("TW table must be strictly increasing")
        self._interp = PchipInterpolator(self.grid, self.cdf_values, extrapolate=False)
        self._dens = self._interp.derivative()

    @property
    def lo(self):
        return self.grid[0]

    @property
    def hi(self):
        return self.grid[-1]

    def cdf(self, s, return_flag=False):
        s = np.asarray(s, dtype=float)
        out = np.where(s < self.lo, 0.0, np.where(s > self.hi, 1.0, 0.0))
        inside = (s >= self.lo) & (s <= self.hi)
        out = np.where(inside, self._interp(np.clip(s, self.lo, self.hi)), out)
        out = out if out.ndim else float(out)
        if return_flag:
            return out, bool(np.any(~inside))
        return out

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s >= self.lo) & (s <= self.hi)
        out = np.where(inside, self._dens(np.clip(s, self.lo, self.hi)), 0.0)
        return out if out.ndim else float(out)

    def quantile(self, q: float) -> float:
        if not 0.0 < q < 1.0:
            raise ValueError("quantile level must lie in (0, 1)")
        if q <= self.cdf_values[0]:
            return float(self.lo)
        if q >= self.cdf_values[-1]:
            return float(self.hi)
        i = int(np.searchsorted(self.cdf_values, q))
        a, b = self.grid[i - 1], self.grid[i]
        return float(brentq(lambda s: float(self._interp(s)) - q, a, b, xtol=1e-12, rtol=1e-14))

    def _right_tail(self, power: int) -> float:
        # int_hi^inf s^power (1 - F) ds with 1 - F ~ exp(-(2/3) s^{3/2}) / s^{3/4},
        # matched to the table at its right end
        from scipy.integrate import quad

        b = self.hi
        g = lambda s: np.exp(-2.0 / 3.0 * (s**1.5 - b**1.5)) * (b / s) ** 0.75
        return (1.0 - self.cdf_values[-1]) * quad(lambda s: s**power * g(s), b, np.inf)[0]

    @functools.cached_property
    def mean(self) -> float:
        # E S = int_0^inf (1 - F) - int_-inf^0 F; the left tail beyond the table is < 1e-21
        a, b = self.lo, self.hi
        area = float(self._interp.integrate(a, b))
        return b - area + self._right_tail(0)

    @functools.cached_property
    def variance(self) -> float:
        # E S^2 = b^2 - 2 int_a^b s F(s) ds + 2 int_b^inf s (1 - F)
        a, b = self.lo, self.hi
        s = np.linspace(a, b, 16001)
        second = b * b - 2.0 * simpson(s * self.cdf(s), x=s) + 2.0 * self._right_tail(1)
        return second - self.mean**2

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("s,cdf\n")
        for s, f in zip(self.grid, self.cdf_values):
            buf.write(f"{s:.2f},{f:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TW1Table":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls([float(r["s"]) for r in rows], [float(r["cdf"]) for r in rows])


def table_checksum(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _shipped_table_text() -> str:
    return resources.files("spiked_wigner").joinpath("data", TW1_TABLE_FILE).read_text()


@functools.lru_cache(maxsize=1)
def tw1_table() -> TW1Table:
    text = _shipped_table_text()
    digest = table_checksum(text)
    if digest != TW1_TABLE_SHA256:
        raise RuntimeError(f"TW table checksum mismatch: {digest}")
    return TW1Table.from_csv(text)


def tw1_cdf(s):
    return tw1_table().cdf(s)


def tw1_quantile(q: float) -> float:
    return tw1_table().quantile(q)


def tw1_pdf(s):
    return tw1_table().pdf(s)


def tw1_fredholm(s: float, nodes: int = 140) -> float:
    """``F_1(s) = det(I - K)`` on ``L^2(s, inf)`` with ``K(x, y) = Ai((x + y)/2) / 2``.

    Gauss-Legendre discretization on ``[s, 32 - s]``, beyond which the kernel
    is below 1e-19.  Accurate to roughly 1e-14 absolute; in the far left
    tail the relative accuracy degrades (see :func:`tw1_painleve`).
    """
    from scipy.special import airy

    upper = 32.0 - s
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (upper - s) * x + 0.5 * (upper + s)
    w = 0.5 * (upper - s) * w
    sw = np.sqrt(w)
    K = 0.5 * airy(0.5 * (x[:, None] + x[None, :]))[0]
    return float(np.linalg.det(np.eye(nodes) - sw[:, None] * K * sw[None, :]))


def tw1_painleve(grid, s0: float = 8.0) -> np.ndarray:
    """``F_1`` from the Hastings-McLeod solution of Painleve II.

    ``q'' = s q + 2 q^3`` with ``q ~ Ai`` at ``s0`` is integrated towards
    ``min(grid)`` together with ``int_s^inf q`` and ``int_s^inf (x - s) q^2``;
    ``F_1 = exp(-(1/2) int (x - s) q^2 - (1/2) int q)``.  Keeps relative
    accuracy in the left tail where the determinant underflows.
    """
    from scipy.integrate import quad, solve_ivp
    from scipy.special import airy

    grid = np.asarray(grid, dtype=float)
    ai, aip, _, _ = airy(s0)
    a0 = quad(lambda x: airy(x)[0] ** 2, s0, 40.0, epsabs=0.0, epsrel=1e-13)[0]
    i0 = quad(lambda x: (x - s0) * airy(x)[0] ** 2, s0, 40.0, epsabs=0.0, epsrel=1e-13)[0]
    u0 = quad(lambda x: airy(x)[0], s0, 40.0, epsabs=0.0, epsrel=1e-13)[0]

    def rhs(s, y):
        q, dq, a, i, u = y
        return [dq, s * q + 2.0 * q**3, -q * q, -a, -q]

    sol = solve_ivp(rhs, (s0, float(grid.min())), [ai, aip, a0, i0, u0], method="DOP853",
                    rtol=1e-13, atol=1e-40, dense_output=True)
    y = sol.sol(grid)
    return np.exp(-0.5 * y[3] - 0.5 * y[4])


def build_tw1_table(lo=-10.0, hi=6.0, step=0.01, nodes=140, splice=-7.0, check_nodes=200):
    """Generate the shipped table and certify it.

    Fredholm values on ``[splice, hi]``, Painleve II values below.  Raises if
    the Fredholm values move by more than 1e-6 under node refinement, or if
    the two methods disagree by more than 1e-6 (relative) on ``[splice, -3]``.
    Returns ``(table, report)``.
    """
    n = int(round((hi - lo) / step))
    grid = np.round(lo + step * np.arange(n + 1), 10)
    fred = grid >= splice - 1e-12
    vals = np.empty_like(grid)
    vals[fred] = [tw1_fredholm(s, nodes) for s in grid[fred]]
    refined = np.array([tw1_fredholm(s, check_nodes) for s in grid[fred]])
    refine_dev = float(np.max(np.abs(refined - vals[fred])))
    pain = tw1_painleve(grid)
    vals[~fred] = pain[~fred]
    overlap = (grid >= splice) & (grid <= -3.0)
    splice_dev = float(np.max(np.abs(pain[overlap] / vals[overlap] - 1.0)))
    report = {"refinement_max_abs_diff": refine_dev, "splice_max_rel_diff": splice_dev}
    if refine_dev > 1e-6 or splice_dev > 1e-6:
        raise RuntimeError(f"TW table failed certification: {report}")
    table = TW1Table(grid, vals)
    report["checksum"] = table_checksum(table.to_csv())
    return table, report
