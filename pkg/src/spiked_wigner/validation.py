"""Invariant suites: numerical checks of the structural facts the theory rests on.

Each suite returns a :class:`SuiteResult` holding named checks with the
measured value and the bound it was held to.  The CLI ``validate`` command
and the acceptance tests both run these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from . import ensemble, noise, spectra, theory
from . import transform as tr
from .experiment import trial_seed


@dataclass
class Check:
    label: str
    value: float
    bound: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.label}: {self.value:.6g} (bound {self.bound:.6g})"


@dataclass
class SuiteResult:
    name: str
    checks: list[Check] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, label, value, bound, passed=None):
        value, bound = float(value), float(bound)
        ok = value <= bound if passed is None else bool(passed)
        self.checks.append(Check(label, value, bound, ok))

    def report(self) -> str:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"
        return "\n".join([head] + ["  " + c.line() for c in self.checks])


def _rng(seed, index):
    return np.random.default_rng(trial_seed(seed, index))


def _loglog_slope(Ns, values):
    return float(np.polyfit(np.log(Ns), np.log(values), 1)[0])


def _mixture_optimal():
    model = noise.gaussian_rademacher_mixture()
    return model, tr.make_optimal(model)


def _gaussian_quadratic():
    model = noise.standard_gaussian()
    return model, tr.normalize(tr.quadratic_example(), model)


# rank-2 spike ------------------------------------------------------------------

def _dense_pair(A, theta2):
    ev = np.linalg.eigvalsh(A)
    # the two nonzero eigenvalues: the top one, and the bottom one when the
    # smaller closed-form value is negative
    return ev[-1], (ev[0] if theta2 < 0 else ev[-2])


def rank2(N: int = 64, instances: int = 100, tol: float = 1e-10, seed: int = 0,
          asym_N: int = 1024, asym_draws: int = 200, asym_quantile: float = 0.95) -> SuiteResult:
    """Closed-form eigenvalues of the rank-2 spike against a dense oracle.

    Instances cycle through three priors and three normalized transforms
    (score transform on bimodal noise, quadratic and Hermite on Gaussian
    noise) with log-uniform SNR.  The asymptotic part checks
    ``|theta1 - sqrt(lam_e)| <= 5/N`` and ``|theta2| <= 5/sqrt(N)`` for iid priors.
    """
    res = SuiteResult("rank2")
    setups = [_mixture_optimal(), _gaussian_quadratic(),
              (noise.standard_gaussian(), tr.normalize(tr.hermite2(), noise.standard_gaussian()))]
    priors = [ensemble.SpikePrior(ensemble.RADEMACHER), ensemble.SpikePrior(ensemble.SPHERICAL),
              ensemble.SpikePrior(ensemble.IID_CUSTOM, entry_law=noise.gaussian_rademacher_mixture())]
    worst = 0.0
    for i in range(instances):
        rng = _rng(seed, i)
        model, t = setups[i % 3]
        prior = priors[(i // 3) % 3]
        lam = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
        x = ensemble.sample_spike(prior, N, rng)
        A, th1, th2 = ensemble.rank2_spike(x, lam, t, model)
        d1, d2 = _dense_pair(A, th2)
        worst = max(worst, abs(th1 - d1), abs(th2 - d2))
    res.add(f"max |closed form - dense| over {instances} instances at N={N}", worst, tol)

    model, t = _gaussian_quadratic()
    lam = 2.5
    root_le = math.sqrt(tr.effective_snr(lam, t, model))
    for prior in priors[:1] + priors[2:]:
        ok = 0
        for i in range(asym_draws):
            x = ensemble.sample_spike(prior, asym_N, _rng(seed + 1, i))
            _, th1, th2 = ensemble.rank2_spike(x, lam, t, model)
            ok += abs(th1 - root_le) <= 5.0 / asym_N and abs(th2) <= 5.0 / math.sqrt(asym_N)
        frac = ok / asym_draws
        res.add(f"fraction within asymptotic bounds, {prior.kind} prior, N={asym_N}",
                frac, asym_quantile, passed=frac >= asym_quantile)
    return res


# vector equation ---------------------------------------------------------------

def qve(Ns=(64, 256), seed: int = 0, tol: float = 1e-10) -> SuiteResult:
    """Residuals of the vector-equation solver and the flat-profile identity."""
    res = SuiteResult("qve")
    zs = [complex(2.0, 0.1), complex(0.5, 1.0), complex(-1.5, 0.05), complex(3.0, 0.01)]
    flat_err, worst = 0.0, 0.0
    model, t = _gaussian_quadratic()
    for N in Ns:
        flat = np.full((N, N), 1.0 / N)
        zs_n = zs + [spectra.edge_window(N, "subcritical", 0.01)]
        for z in zs_n:
            m = spectra.solve_qve(flat, z, tol=1e-12)
            flat_err = max(flat_err, float(np.max(np.abs(m - spectra.msc(z)))))
            worst = max(worst, spectra.qve_residual(flat, z, m))
        sample = ensemble.sample(model, ensemble.SpikePrior(ensemble.SPHERICAL), N, 2.5, _rng(seed, N))
        for tpoint in (0.0, 0.5, 1.0):
            S = ensemble.variance_profile(sample, t, model, tpoint)
            for z in zs_n:
                worst = max(worst, spectra.qve_residual(S, z, spectra.solve_qve(S, z, tol=1e-12)))
        rng = _rng(seed + 7, N)
        R = rng.uniform(0.5, 1.5, size=(N, N))
        R = (R + R.T) / (2.0 * N)
        for z in zs:
            worst = max(worst, spectra.qve_residual(R, z, spectra.solve_qve(R, z, tol=1e-12)))
    res.add("flat profile: max |m_i - m_sc|", flat_err, 1e-12)
    res.add("max vector-equation residual", worst, tol)
    return res


# local law ---------------------------------------------------------------------

def local_law(Ns=(256, 512, 1024), draws: int = 3, epsilon: float = 0.01, seed: int = 0,
              slope_margin: float = 0.1) -> SuiteResult:
    """Diagonal resolvent deviation from the vector-equation solution, versus ``N``.

    Supercritical: ``H`` at ``L + i N^{-1/2-eps}`` with ``L`` the outlier
    location.  Subcritical: ``V`` at ``2 + i N^{-2/3-eps}``.  The median over
    ``draws`` samples must decay with log-log slope below ``-slope_margin``.
    """
    res = SuiteResult("local-law")
    model, t = _gaussian_quadratic()
    prior = ensemble.SpikePrior(ensemble.RADEMACHER)
    for regime, lam in (("supercritical", 2.5), ("subcritical", 0.1)):
        pred = theory.predict(lam, t, model)
        meds = []
        for N in Ns:
            z = spectra.edge_window(N, regime, epsilon, pred.location)
            devs = []
            for d in range(draws):
                sample = ensemble.sample(model, prior, N, lam, _rng(seed, 1000 * N + d))
                mat = (ensemble.build_H if regime == "supercritical" else ensemble.build_V)(sample, t, model)
                m = spectra.solve_qve(ensemble.variance_profile(sample, t, model, 1.0), z)
                with threadpool_limits(limits=1):
                    G = spectra.resolvent(mat, z)
                devs.append(float(np.max(np.abs(np.diagonal(G) - m))))
            meds.append(float(np.median(devs)))
        slope = _loglog_slope(Ns, meds)
        res.data[regime] = dict(zip(Ns, meds))
        res.add(f"{regime}: log-log slope of median max |G_ii - m_i| "
                f"({', '.join(f'{v:.3g}' for v in meds)})", slope, -slope_margin)
    return res


# approximation chain -------------------------------------------------------------

def approximation_gap(Ns=(256, 512, 1024), trials: int = 200, lam: float = 0.8, seed: int = 0,
                      const: float = 10.0, power: float = 0.9) -> SuiteResult:
    """Median ``|mu1(M~) - mu1(H)|`` for the score transform on bimodal noise."""
    res = SuiteResult("approximation-gap")
    model, t = _mixture_optimal()
    prior = ensemble.SpikePrior(ensemble.RADEMACHER)
    meds = []
    for N in Ns:
        gaps = []
        for i in range(trials):
            sample = ensemble.sample(model, prior, N, lam, _rng(seed, i))
            with threadpool_limits(limits=1):
                m1 = spectra.top_eigenvalues(ensemble.transformed(sample, t)).mu1
                h1 = spectra.top_eigenvalues(ensemble.build_H(sample, t, model)).mu1
            gaps.append(abs(m1 - h1))
        med = float(np.median(gaps))
        meds.append(med)
        res.add(f"N={N}: median |mu1(M~) - mu1(H)|", med, const * N**-power)
    res.data["medians"] = dict(zip(Ns, meds))
    dec = all(b < a for a, b in zip(meds, meds[1:]))
    res.add("medians strictly decreasing in N (1 = yes)", float(dec), 1.0, passed=dec)
    return res


# interpolation -------------------------------------------------------------------

def interpolation(N: int = 256, draws: int = 20, seed: int = 0, tol: float = 1e-14) -> SuiteResult:
    """``V(1) == V``, ``H(t) - V(t) = A`` and ``mu1(H) >= mu1(V)`` when ``E[f''] >= 0``."""
    res = SuiteResult("interpolation")
    setups = [(*_gaussian_quadratic(), 2.5), (*_gaussian_quadratic(), 0.1), (*_mixture_optimal(), 0.8)]
    identical, gap, order_ok, tested = True, 0.0, True, 0
    for d in range(draws):
        model, t, lam = setups[d % len(setups)]
        prior = ensemble.SpikePrior(ensemble.RADEMACHER if d % 2 == 0 else ensemble.SPHERICAL)
        sample = ensemble.sample(model, prior, N, lam, _rng(seed, d))
        V = ensemble.build_V(sample, t, model)
        A, _, _ = ensemble.rank2_spike(sample.x, lam, t, model)
        for tpoint in (0.0, 0.5, 1.0):
            Vt, Ht = ensemble.build_interpolants(sample, t, model, tpoint)
            if tpoint == 1.0:
                identical &= bool(np.array_equal(Vt, V))
            gap = max(gap, float(np.max(np.abs(Ht - Vt - A))))
        if tr.derivative_moment(t, model, 2) >= 0.0:
            tested += 1
            H = ensemble.build_H(sample, t, model)
            order_ok &= spectra.top_eigenvalues(H).mu1 >= spectra.top_eigenvalues(V).mu1
    res.add("V(1) bitwise equal to V (1 = yes)", float(identical), 1.0, passed=identical)
    res.add("max |H(t) - V(t) - A| over t in {0, 0.5, 1}", gap, tol)
    res.add(f"mu1(H) >= mu1(V) on all {tested} draws with E[f''] >= 0 (1 = yes)",
            float(order_ok), 1.0, passed=order_ok)
    return res


SUITES = {
    "rank2": rank2,
    "qve": qve,
    "local-law": local_law,
    "approximation-gap": approximation_gap,
    "interpolation": interpolation,
}


def run_suite(name: str, **kwargs) -> SuiteResult:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](**kwargs)
