"""Deterministic Monte Carlo runs of the top eigenvalue and their analysis.

Trial ``i`` draws from a generator seeded by a SplitMix64 mix of
``(master_seed, i)``, so the record list depends only on the config and not
on the number of workers or on scheduling.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats
from threadpoolctl import threadpool_limits

from . import ensemble, noise, spectra, theory
from . import transform as tr

_MASK64 = (1 << 64) - 1

RESULTS_HEADER = ["trial", "mu1", "mu2", "rescaled", "seed", "wall_ms"]
SUMMARY_KEYS = ("mean", "var", "ks", "n", "regime", "location", "reference")
HISTOGRAM_HEADER = ["bin_left", "bin_right", "count", "ref_density"]
NO_THEORY = "no-theory"

MAX_FAILURE_FRACTION = 0.01


class ExperimentError(RuntimeError):
    def __init__(self, message, records=None):
        super().__init__(message)
        self.records = records


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(master_seed: int, index: int) -> int:
    """64-bit seed of trial ``index``; independent of every other trial's seed."""
    return splitmix64(splitmix64(master_seed & _MASK64) ^ (index & _MASK64))


@dataclass
class ExperimentConfig:
    N: int = 256
    trials: int = 100
    # fixed SNR, or ``lambda0`` with ``scaled=True`` for lambda = lambda0 sqrt(N)
    lam: float | None = None
    lambda0: float | None = None
    scaled: bool = False
    noise: dict = field(default_factory=lambda: {"kind": noise.GAUSSIAN})
    transform: dict = field(default_factory=lambda: {"type": "identity"})
    prior: dict = field(default_factory=lambda: {"kind": ensemble.RADEMACHER})
    regime: str = "auto"
    margin: float = theory.DEFAULT_MARGIN
    zero_tol: float = tr.ZERO_MOMENT_TOL
    master_seed: int = 0
    workers: int = 1
    record_mu2: bool = False
    eig_method: str = "auto"
    outputs: dict = field(default_factory=lambda: {"path": "results", "format": "csv"})

    # file keys that differ from attribute names
    _ALIASES = {"lambda": "lam"}

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.scaled and self.lambda0 is None:
            raise ValueError("scaled runs need lambda0")
        if not self.scaled and self.lam is None:
            raise ValueError("config needs lambda (or lambda0 with scaled = true)")
        if self.regime not in ("auto", theory.SUPERCRITICAL, theory.SUBCRITICAL):
            raise ValueError(f"regime must be auto, supercritical or subcritical; got {self.regime!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            key = cls._ALIASES.get(key, key)
            if key not in names:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["lambda"] = out.pop("lam")
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # resolved objects ----------------------------------------------------------

    def noise_model(self) -> noise.NoiseModel:
        return noise.from_spec(self.noise)

    def build_transform(self, model=None) -> tr.Transform:
        return tr.from_spec(self.transform, model or self.noise_model())

    def spike_prior(self) -> ensemble.SpikePrior:
        return ensemble.prior_from_spec(self.prior)

    def snr(self) -> float:
        return self.lambda0 * math.sqrt(self.N) if self.scaled else float(self.lam)

    def prediction(self, model=None, t=None):
        """Theory for this config, or ``None`` when it is near-critical."""
        model = model or self.noise_model()
        t = t or self.build_transform(model)
        margin = self.margin if self.regime == "auto" else 0.0
        try:
            if self.scaled:
                pred = theory.predict_scaled(self.lambda0, t, model, self.spike_prior().fourth_moment(),
                                             margin, self.zero_tol)
            else:
                pred = theory.predict(self.snr(), t, model, margin)
        except theory.NearCriticalError:
            return None
        if self.regime != "auto" and pred.reference_law != (
                theory.GAUSSIAN_LAW if self.regime == theory.SUPERCRITICAL else theory.TW_LAW):
            raise ValueError(f"forced regime {self.regime} contradicts lambda_e = {pred.lambda_e:.6g}")
        return pred


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(read_config_file(path))


def read_config_file(path) -> dict:
    path = Path(path)
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib

        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        return json.load(fh)


@dataclass
class TrialRecord:
    trial_index: int
    mu1: float
    mu2: float | None
    rescaled: float | None
    seed_used: int
    wall_time: float = 0.0
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)


# trial execution ----------------------------------------------------------------

class _TrialContext:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.model = config.noise_model()
        self.transform = config.build_transform(self.model)
        self.prior = config.spike_prior()
        self.prediction = config.prediction(self.model, self.transform)
        self.lam = config.snr()

    def run_trial(self, index: int) -> TrialRecord:
        cfg = self.config
        seed = trial_seed(cfg.master_seed, index)
        start = time.perf_counter()
        try:
            rng = np.random.default_rng(seed)
            sample = ensemble.sample(self.model, self.prior, cfg.N, self.lam, rng, seed)
            Mt = ensemble.transformed(sample, self.transform)
            res = spectra.top_eigenvalues(Mt, 2 if cfg.record_mu2 else 1, cfg.eig_method)
            mu1 = float(res.eigenvalues[0])
            mu2 = float(res.eigenvalues[1]) if cfg.record_mu2 else None
            rescaled = float(self.prediction.rescale(mu1, cfg.N)) if self.prediction else None
            err = ""
        except Exception as exc:  # recorded per trial, aborts only above the failure budget
            mu1, mu2, rescaled, err = float("nan"), None, None, f"{type(exc).__name__}: {exc}"
        return TrialRecord(index, mu1, mu2, rescaled, seed, time.perf_counter() - start, err)


_CONTEXT: _TrialContext | None = None


def _init_worker(config_dict):
    global _CONTEXT
    _CONTEXT = _TrialContext(ExperimentConfig.from_dict(config_dict))


def _single_threaded(func, *args):
    # BLAS reductions must not depend on the thread count
    with threadpool_limits(limits=1):
        return func(*args)


def _worker_trial(index):
    return _single_threaded(_CONTEXT.run_trial, index)


def run(config: ExperimentConfig, indices=None, progress=None) -> list[TrialRecord]:
    """Run all trials (or ``indices``) and return records sorted by trial index."""
    indices = list(range(config.trials)) if indices is None else list(indices)
    if config.workers <= 1:
        ctx = _TrialContext(config)
        records = []
        for i in indices:
            records.append(_single_threaded(ctx.run_trial, i))
            if progress:
                progress(len(records), len(indices))
    else:
        chunk = max(1, len(indices) // (4 * config.workers))
        with ProcessPoolExecutor(config.workers, initializer=_init_worker,
                                 initargs=(config.to_dict(),)) as pool:
            records = list(pool.map(_worker_trial, indices, chunksize=chunk))
    records.sort(key=lambda r: r.trial_index)
    failed = sum(r.failed for r in records)
    if failed > MAX_FAILURE_FRACTION * len(records):
        raise ExperimentError(f"{failed}/{len(records)} trials failed", records)
    return records


# analysis ---------------------------------------------------------------------

def ks_statistic(samples, reference_cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance to a continuous reference cdf."""
    x = np.sort(np.asarray(samples, dtype=float))
    if np.isnan(x).any():
        raise ValueError("NaN in samples")
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples")
    F = np.asarray(reference_cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def rigidity_report(records, prediction: theory.TheoryPrediction, N: int, epsilon: float, c: float = 1.0) -> float:
    """Fraction of trials with ``|mu1 - location| > c N^{exponent + eps}``."""
    mu1 = np.array([r.mu1 for r in records if not r.failed])
    bound = prediction.threshold(N, epsilon, c)
    return float(np.mean(np.abs(mu1 - prediction.centre(N)) > bound))


@dataclass
class AnalysisSummary:
    n: int
    mean: float
    var: float
    skew: float
    ks: float
    regime: str
    location: float
    reference: dict
    bin_edges: np.ndarray
    counts: np.ndarray
    ref_density: np.ndarray

    def to_json_dict(self) -> dict:
        return {k: getattr(self, k) for k in SUMMARY_KEYS}


def _reference_description(pred):
    if pred is None:
        return {"law": NO_THEORY}
    if pred.reference_law == theory.GAUSSIAN_LAW:
        return {"law": theory.GAUSSIAN_LAW, "mean": pred.shift, "var": pred.variance,
                "lambda_e": pred.lambda_e}
    return {"law": theory.TW_LAW, "shift": pred.shift, "lambda_e": pred.lambda_e}


def summarize(records, prediction, bins="fd") -> AnalysisSummary:
    """Moments, KS distance and histogram of the rescaled top eigenvalue."""
    good = sorted((r for r in records if not r.failed), key=lambda r: r.trial_index)
    if not good:
        raise ValueError("no successful records to summarize")
    if prediction is None:
        values = np.array([r.mu1 for r in good])
    else:
        values = np.array([r.rescaled for r in good], dtype=float)
    n = values.size
    edges = np.histogram_bin_edges(values, bins=bins)
    counts, _ = np.histogram(values, bins=edges)
    if prediction is None:
        ks = float("nan")
        dens = np.full(counts.shape, float("nan"))
    else:
        ks = ks_statistic(values, prediction.reference_cdf)
        cdf = np.asarray(prediction.reference_cdf(edges), dtype=float)
        dens = np.diff(cdf) / np.diff(edges)
    return AnalysisSummary(
        n=n,
        mean=float(values.mean()),
        var=float(values.var(ddof=1)) if n > 1 else 0.0,
        skew=float(stats.skew(values)) if n > 2 else 0.0,
        ks=ks,
        regime=prediction.regime if prediction else NO_THEORY,
        location=prediction.location if prediction else float("nan"),
        reference=_reference_description(prediction),
        bin_edges=edges,
        counts=counts,
        ref_density=dens,
    )


# persistence ------------------------------------------------------------------

def _fmt(v):
    return "" if v is None else repr(float(v))


def export_records(records, path, canonical: bool = False):
    """CSV with one trial per row; ``canonical`` zeroes the wall-time column."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for r in sorted(records, key=lambda r: r.trial_index):
            wall = 0 if canonical else int(round(1000 * r.wall_time))
            w.writerow([r.trial_index, _fmt(r.mu1), _fmt(r.mu2), _fmt(r.rescaled), r.seed_used, wall])


def load_records(path) -> list[TrialRecord]:
    def opt(s):
        return None if s == "" else float(s)

    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [TrialRecord(int(r["trial"]), float(r["mu1"]), opt(r["mu2"]), opt(r["rescaled"]),
                        int(r["seed"]), int(r["wall_ms"]) / 1000.0) for r in rows]


def export_summary(summary: AnalysisSummary, path):
    with open(path, "w") as fh:
        json.dump(summary.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def export_histogram(summary: AnalysisSummary, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTOGRAM_HEADER)
        e = summary.bin_edges
        for left, right, cnt, dens in zip(e[:-1], e[1:], summary.counts, summary.ref_density):
            w.writerow([repr(float(left)), repr(float(right)), int(cnt), repr(float(dens))])


def export(obj, path, format=None, canonical=False):
    """Write records (CSV) or a summary (JSON, or CSV histogram rows)."""
    format = format or Path(path).suffix.lstrip(".")
    if isinstance(obj, AnalysisSummary):
        if format == "json":
            return export_summary(obj, path)
        if format == "csv":
            return export_histogram(obj, path)
    elif format == "csv":
        return export_records(obj, path, canonical)
    raise ValueError(f"cannot export {type(obj).__name__} as {format!r}")


# paper presets --------------------------------------------------------------------

def _mixture_optimal(lam):
    return {"N": 1024, "trials": 5000, "lambda": lam, "noise": {"kind": noise.MIXTURE},
            "transform": {"type": "optimal"}, "prior": {"kind": ensemble.RADEMACHER}}


def _gaussian_quadratic(lam):
    return {"N": 1024, "trials": 5000, "lambda": lam, "noise": {"kind": noise.GAUSSIAN},
            "transform": {"type": "polynomial", "coeffs": [-1.0, 3.0, 1.0], "normalize": True},
            "prior": {"kind": ensemble.RADEMACHER}}


#: N = 1024, 5000 trials; bimodal noise with the score transform (2a/2b) and
#: Gaussian noise with the quadratic transform (3a/3b)
FIGURE_PRESETS = {
    "2a": _mixture_optimal(0.8),
    "2b": _mixture_optimal(0.1),
    "3a": _gaussian_quadratic(2.5),
    "3b": _gaussian_quadratic(0.1),
}


def figure_config(name: str, **runtime) -> ExperimentConfig:
    """Preset config; only ``master_seed``, ``workers`` and ``outputs`` may be supplied."""
    if name not in FIGURE_PRESETS:
        raise ValueError(f"unknown figure {name!r}; choose from {sorted(FIGURE_PRESETS)}")
    bad = set(runtime) - {"master_seed", "workers", "outputs"}
    if bad:
        raise ValueError(f"figure presets refuse overrides of {sorted(bad)}")
    return ExperimentConfig.from_dict({**FIGURE_PRESETS[name], **runtime})
