"""Laws of the normalized noise entries sqrt(N) * W_ij.

A :class:`NoiseModel` bundles a density, a sampler, its score function
``h = -p'/p`` and an expectation engine based on composite Gauss-Legendre
quadrature over a fixed window.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

GAUSSIAN = "standard-gaussian"
MIXTURE = "gaussian-rademacher-mixture"
CUSTOM = "custom-density"

_SQRT2PI = math.sqrt(2.0 * math.pi)
_TINY = np.finfo(float).tiny


class QuadratureError(RuntimeError):
    """Raised when successive quadrature refinements fail to agree."""


class TailEvaluationError(ValueError):
    """Raised when the score is requested where the density underflows."""


@dataclass(frozen=True)
class CustomDensity:
    """A named density registered in code.

    ``dpdf`` and ``sampler`` are optional; without them derivatives fall back
    to central differences and sampling to rejection over the window.
    """

    name: str
    pdf: Callable[[np.ndarray], np.ndarray]
    dpdf: Callable[[np.ndarray], np.ndarray] | None = None
    sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None


_REGISTRY: dict[str, CustomDensity] = {}


def register_density(name, pdf, dpdf=None, sampler=None):
    """Register a custom density preset under ``name`` and return it."""
    _REGISTRY[name] = CustomDensity(name, pdf, dpdf, sampler)
    return _REGISTRY[name]


def registered_densities():
    return sorted(_REGISTRY)


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre rule on ``[-window, window]``.

    ``order`` nodes per panel; the panel count starts at ``panels`` and is
    doubled until two successive estimates agree.
    """

    window: float = 10.0
    order: int = 20
    panels: int = 16
    max_doublings: int = 8


@functools.lru_cache(maxsize=64)
def _panel_rule(window, order, panels):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-window, window, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def integrate(func, spec: QuadratureSpec = QuadratureSpec(), atol=1e-9, rtol=1e-12):
    """Integrate a vectorized ``func`` over the window of ``spec``.

    Panels are doubled until successive estimates differ by less than
    ``max(atol, rtol * |I|)``; otherwise :class:`QuadratureError` is raised.
    """
    panels = spec.panels
    prev = None
    for _ in range(spec.max_doublings + 1):
        nodes, weights = _panel_rule(spec.window, spec.order, panels)
        est = float(np.dot(weights, _vectorized(func, nodes)))
        if prev is not None and abs(est - prev) <= max(atol, rtol * abs(est)):
            return est
        prev = est
        panels *= 2
    raise QuadratureError(
        f"quadrature did not converge: last two estimates {prev!r} differ beyond {atol:g}"
    )


def _vectorized(func, x):
    y = func(x)
    y = np.asarray(y, dtype=float)
    if y.shape != x.shape:
        # scalar-only callables, or constants such as ``lambda x: 1.0``
        y = np.broadcast_to(y, x.shape) if y.ndim == 0 else np.vectorize(func)(x)
    return y


@dataclass(frozen=True)
class NoiseModel:
    """Centered unit-variance law of one normalized noise entry.

    Parameters
    ----------
    kind : {"standard-gaussian", "gaussian-rademacher-mixture", "custom-density"}
    params : tuple
        ``(a, b)`` for the mixture ``a*Z + b*R`` with ``a**2 + b**2 == 1``;
        ``(name,)`` for a registered custom density; empty for the Gaussian.
    quadrature : QuadratureSpec
    """

    kind: str
    params: tuple = ()
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        if self.kind == MIXTURE:
            a, b = self.params
            if a <= 0 or b < 0 or abs(a * a + b * b - 1.0) > 1e-12:
                raise ValueError(f"mixture needs a > 0, b >= 0, a^2 + b^2 = 1; got {self.params}")
        elif self.kind == CUSTOM:
            if len(self.params) != 1 or self.params[0] not in _REGISTRY:
                raise ValueError(f"unknown custom density {self.params!r}")
        elif self.kind != GAUSSIAN:
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @property
    def custom(self) -> CustomDensity:
        return _REGISTRY[self.params[0]]

    def __repr__(self):
        return f"NoiseModel({self.kind!r}, {self.params!r})"

    # density and its derivative -------------------------------------------------

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == GAUSSIAN:
            return np.exp(-0.5 * x * x) / _SQRT2PI
        if self.kind == MIXTURE:
            a, b = self.params
            c = 1.0 / (2.0 * a * _SQRT2PI)
            return c * (np.exp(-0.5 * ((x - b) / a) ** 2) + np.exp(-0.5 * ((x + b) / a) ** 2))
        return np.asarray(self.custom.pdf(x), dtype=float)

    def dpdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind in (GAUSSIAN, MIXTURE):
            return self._dpdf_closed(x)
        if self.custom.dpdf is not None:
            return np.asarray(self.custom.dpdf(x), dtype=float)
        return _central_diff(self.pdf, x, 1)

    def _dpdf_closed(self, x):
        if self.kind == GAUSSIAN:
            return -x * self.pdf(x)
        a, b = self.params
        c = 1.0 / (2.0 * a**3 * _SQRT2PI)
        return -c * ((x - b) * np.exp(-0.5 * ((x - b) / a) ** 2)
                     + (x + b) * np.exp(-0.5 * ((x + b) / a) ** 2))

    # score -----------------------------------------------------------------------

    def score(self, x):
        """Return ``h(x) = -p'(x) / p(x)``.

        Raises :class:`TailEvaluationError` where ``p(x)`` underflows.
        """
        x = np.asarray(x, dtype=float)
        p = self.pdf(x)
        if np.any(p <= _TINY):
            raise TailEvaluationError("tail evaluation: density underflows at requested point")
        if self.kind == GAUSSIAN:
            return x.copy()
        if self.kind == MIXTURE:
            a, b = self.params
            a2 = a * a
            return (x - b * np.tanh(b * x / a2)) / a2
        return -self.dpdf(x) / p

    def score_derivative(self, x, k):
        """k-th derivative of the score, ``k`` in 0..3."""
        x = np.asarray(x, dtype=float)
        if k == 0:
            return self.score(x)
        if self.kind == GAUSSIAN:
            return np.ones_like(x) if k == 1 else np.zeros_like(x)
        if self.kind == MIXTURE:
            a, b = self.params
            a2 = a * a
            u = b * x / a2
            th = np.tanh(u)
            sech2 = 1.0 - th * th
            if k == 1:
                return (1.0 - (b * b / a2) * sech2) / a2
            if k == 2:
                return 2.0 * b**3 / a2**3 * sech2 * th
            if k == 3:
                return 2.0 * b**4 / a2**4 * (sech2 * sech2 - 2.0 * sech2 * th * th)
            raise ValueError("score derivatives available up to order 3")
        return _central_diff(self.score, x, k)

    # sampling --------------------------------------------------------------------

    def sample(self, rng: np.random.Generator, n: int, max_rounds: int = 64):
        """Draw ``n`` i.i.d. values; deterministic given the generator state."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == GAUSSIAN:
            return rng.standard_normal(n)
        if self.kind == MIXTURE:
            a, b = self.params
            z = rng.standard_normal(n)
            r = rng.integers(0, 2, size=n) * 2.0 - 1.0
            return a * z + b * r
        if self.custom.sampler is not None:
            return np.asarray(self.custom.sampler(rng, n), dtype=float)
        return self._rejection_sample(rng, n, max_rounds)

    def _rejection_sample(self, rng, n, max_rounds):
        w = self.quadrature.window
        grid = np.linspace(-w, w, 20001)
        bound = 1.1 * float(self.pdf(grid).max())
        rate = 1.0 / (2.0 * w * bound)  # expected acceptance probability
        out = np.empty(n)
        filled = 0
        for _ in range(max_rounds):
            m = max(int(1.25 * (n - filled) / rate), 64)
            cand = rng.uniform(-w, w, m)
            keep = cand[rng.uniform(0.0, bound, m) < self.pdf(cand)]
            take = min(len(keep), n - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
            if filled == n:
                return out
        raise RuntimeError(f"rejection sampling produced {filled}/{n} draws in {max_rounds} rounds")

    # expectations ----------------------------------------------------------------

    def expect(self, g, atol=1e-9):
        """``E[g(X)]`` by adaptive composite Gauss-Legendre quadrature."""
        return integrate(lambda x: _vectorized(g, x) * self.pdf(x), self.quadrature, atol=atol)

    def fisher_information(self) -> float:
        return _fisher(self)

    def validate(self):
        """Check normalization, centering, unit variance and positivity."""
        mass = self.expect(lambda x: np.ones_like(x), atol=1e-12)
        mean = self.expect(lambda x: x, atol=1e-12)
        var = self.expect(lambda x: x * x, atol=1e-12)
        if abs(mass - 1.0) > 1e-10:
            raise ValueError(f"density integrates to {mass!r}")
        if abs(mean) > 1e-8 or abs(var - 1.0) > 1e-8:
            raise ValueError(f"noise law must be centered with unit variance; got mean={mean}, var={var}")
        nodes, _ = _panel_rule(self.quadrature.window, self.quadrature.order, self.quadrature.panels)
        if np.any(self.pdf(nodes) <= 0.0):
            raise ValueError("density must be strictly positive on the quadrature window")
        return self


@functools.lru_cache(maxsize=None)
def _fisher(model: NoiseModel) -> float:
    def integrand(x):
        p = model.pdf(x)
        dp = model.dpdf(x)
        return np.where(p > _TINY, dp * dp / np.where(p > _TINY, p, 1.0), 0.0)

    return integrate(integrand, model.quadrature, atol=1e-6)


def _central_diff(func, x, k):
    # 5-point stencils; step grows with the order to balance rounding
    step = {1: 1e-4, 2: 1e-3, 3: 5e-3}[k] * np.maximum(1.0, np.abs(x))
    f = lambda t: np.asarray(func(t), dtype=float)
    if k == 1:
        return (f(x - 2 * step) - 8 * f(x - step) + 8 * f(x + step) - f(x + 2 * step)) / (12 * step)
    if k == 2:
        return (-f(x - 2 * step) + 16 * f(x - step) - 30 * f(x) + 16 * f(x + step)
                - f(x + 2 * step)) / (12 * step**2)
    if k == 3:
        return (-f(x - 2 * step) + 2 * f(x - step) - 2 * f(x + step) + f(x + 2 * step)) / (2 * step**3)
    raise ValueError("central differences implemented up to order 3")


def standard_gaussian(quadrature: QuadratureSpec | None = None) -> NoiseModel:
    return NoiseModel(GAUSSIAN, (), quadrature or QuadratureSpec())


def gaussian_rademacher_mixture(a=1.0 / math.sqrt(5.0), b=None, quadrature=None) -> NoiseModel:
    """``a * Z + b * R`` with Z standard normal and R a Rademacher sign.

    The defaults ``a = 1/sqrt(5)``, ``b = 2/sqrt(5)`` give the bimodal law used
    in the non-Gaussian experiments.
    """
    if b is None:
        b = math.sqrt(1.0 - a * a)
    return NoiseModel(MIXTURE, (float(a), float(b)), quadrature or QuadratureSpec())


def custom_density(name, quadrature=None) -> NoiseModel:
    return NoiseModel(CUSTOM, (name,), quadrature or QuadratureSpec())


def from_spec(spec: dict) -> NoiseModel:
    """Build a model from a config mapping such as ``{"kind": "mixture"}``."""
    spec = dict(spec)
    kind = spec.pop("kind", GAUSSIAN)
    quad = spec.pop("quadrature", None)
    quad = QuadratureSpec(**quad) if quad else None
    if kind in (GAUSSIAN, "gaussian"):
        model = standard_gaussian(quad)
    elif kind in (MIXTURE, "mixture"):
        model = gaussian_rademacher_mixture(spec.pop("a", 1.0 / math.sqrt(5.0)), spec.pop("b", None), quad)
    elif kind in (CUSTOM, "custom"):
        model = custom_density(spec.pop("name"), quad)
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    if spec:
        raise ValueError(f"unknown noise keys {sorted(spec)}")
    return model


def to_spec(model: NoiseModel) -> dict:
    if model.kind == GAUSSIAN:
        out = {"kind": GAUSSIAN}
    elif model.kind == MIXTURE:
        out = {"kind": MIXTURE, "a": model.params[0], "b": model.params[1]}
    else:
        out = {"kind": CUSTOM, "name": model.params[0]}
    if model.quadrature != QuadratureSpec():
        q = model.quadrature
        out["quadrature"] = {"window": q.window, "order": q.order, "panels": q.panels,
                             "max_doublings": q.max_doublings}
    return out
