"""Entrywise transforms and their scalar functionals against a noise law.

A :class:`Transform` carries ``f`` and its first three derivatives.  The
functionals (effective SNR, detection threshold, variance-profile
coefficients, critical index) are all expectations of ``f`` and its
derivatives under a :class:`~spiked_wigner.noise.NoiseModel`.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .noise import NoiseModel, _central_diff

POLYNOMIAL = "polynomial"
OPTIMAL = "optimal-score"
CUSTOM = "custom"

#: default cut separating a vanishing moment E[f^(k)] from a small one
ZERO_MOMENT_TOL = 1e-8


class NotNormalizedError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Transform:
    """Entrywise map ``f`` with derivatives ``d1``, ``d2``, ``d3``.

    Instances hash by identity so moment caches can key on them.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    d3: Callable[[np.ndarray], np.ndarray]
    provenance: str = CUSTOM
    normalized: bool = False
    name: str = ""

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    def derivative(self, k: int):
        if k == 0:
            return self.eval
        try:
            return (self.d1, self.d2, self.d3)[k - 1]
        except IndexError:
            raise ValueError("derivatives are available up to order 3") from None

    def affine(self, scale: float, shift: float = 0.0, **kw) -> "Transform":
        """Return ``x -> scale * (f(x) - shift)``."""
        f, d1, d2, d3 = self.eval, self.d1, self.d2, self.d3
        return Transform(
            eval=lambda x: scale * (f(x) - shift),
            d1=lambda x: scale * d1(x),
            d2=lambda x: scale * d2(x),
            d3=lambda x: scale * d3(x),
            provenance=kw.get("provenance", self.provenance),
            normalized=kw.get("normalized", False),
            name=kw.get("name", self.name),
        )

    def __repr__(self):
        return f"Transform({self.name or self.provenance!r}, normalized={self.normalized})"


def make_polynomial(coeffs, name=None) -> Transform:
    """Polynomial transform with coefficients in ascending order.

    >>> f = make_polynomial(np.array([-1.0, 3.0, 1.0]) / np.sqrt(11.0))
    >>> round(float(f(1.0)), 4)
    0.9045
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size == 0:
        raise ValueError("empty coefficient list")
    p = np.polynomial.Polynomial(coeffs)
    if p.degree() < 1:
        raise ValueError("polynomial transform needs degree >= 1")
    derivs = [p.deriv(k) for k in (1, 2, 3)]
    return Transform(
        eval=lambda x: p(np.asarray(x, dtype=float)),
        d1=_poly_eval(derivs[0]),
        d2=_poly_eval(derivs[1]),
        d3=_poly_eval(derivs[2]),
        provenance=POLYNOMIAL,
        name=name or f"polynomial{tuple(float(c) for c in coeffs)}",
    )


def _poly_eval(p):
    # derivatives of low-degree polynomials may be constant; keep array shape
    return lambda x: p(np.asarray(x, dtype=float)) + np.zeros_like(np.asarray(x, dtype=float))


def make_custom(func, d1=None, d2=None, d3=None, name="custom") -> Transform:
    """Wrap an arbitrary C^3 map; missing derivatives use central differences."""
    f = lambda x: np.asarray(func(np.asarray(x, dtype=float)), dtype=float)
    derivs = []
    for k, given in enumerate((d1, d2, d3), start=1):
        if given is not None:
            derivs.append(given)
        else:
            derivs.append(functools.partial(_central_diff, f, k=k))
    return Transform(f, *derivs, provenance=CUSTOM, name=name)


def make_optimal(model: NoiseModel) -> Transform:
    """The score transform ``f = h / sqrt(F_h)`` with ``h = -p'/p``.

    For a unit-variance law this is already centered with unit second moment.
    """
    scale = 1.0 / math.sqrt(model.fisher_information())
    return Transform(
        eval=lambda x: scale * model.score(x),
        d1=lambda x: scale * model.score_derivative(x, 1),
        d2=lambda x: scale * model.score_derivative(x, 2),
        d3=lambda x: scale * model.score_derivative(x, 3),
        provenance=OPTIMAL,
        normalized=True,
        name=f"optimal[{model.kind}]",
    )


@functools.lru_cache(maxsize=4096)
def _moment(t: Transform, model: NoiseModel, key) -> float:
    ks = key if isinstance(key, tuple) else (key,)
    fs = [t.derivative(k) for k in ks]
    if len(fs) == 1:
        g = fs[0]
    else:
        g = lambda x: np.prod([np.asarray(fk(x), dtype=float) for fk in fs], axis=0)
    return model.expect(g)


def derivative_moment(t: Transform, model: NoiseModel, k: int) -> float:
    """``E[f^(k)(X)]`` for ``k`` in 0..3 under the noise law."""
    if not 0 <= k <= 3:
        raise ValueError("k must be in 0..3")
    return _moment(t, model, k)


def product_moment(t: Transform, model: NoiseModel, j: int, k: int) -> float:
    """``E[f^(j)(X) f^(k)(X)]``."""
    return _moment(t, model, (min(j, k), max(j, k)))


def is_normalized(t: Transform, model: NoiseModel) -> bool:
    return (abs(derivative_moment(t, model, 0)) < 1e-7
            and abs(product_moment(t, model, 0, 0) - 1.0) < 1e-6
            and derivative_moment(t, model, 1) >= -ZERO_MOMENT_TOL)


def _require_normalized(t, model):
    if not is_normalized(t, model):
        raise NotNormalizedError(f"{t!r} is not normalized against {model!r}; call normalize() first")


def normalize(t: Transform, model: NoiseModel) -> Transform:
    """Center, rescale to unit second moment, then fix the sign so E[f'] >= 0."""
    mean = derivative_moment(t, model, 0)
    var = product_moment(t, model, 0, 0) - mean * mean
    if not var > 1e-14:
        raise ValueError("degenerate transform: zero variance under the noise law")
    scale = 1.0 / math.sqrt(var)
    if derivative_moment(t, model, 1) < -ZERO_MOMENT_TOL:
        scale = -scale
    return t.affine(scale, mean, normalized=True)


def effective_snr(lam: float, t: Transform, model: NoiseModel) -> float:
    """``lambda * E[f']**2``."""
    _require_normalized(t, model)
    return lam * derivative_moment(t, model, 1) ** 2


def detection_threshold(t: Transform, model: NoiseModel, zero_tol=ZERO_MOMENT_TOL) -> float:
    """The SNR at which the effective SNR reaches 1, ``E[f']**-2``."""
    d1 = derivative_moment(t, model, 1)
    if abs(d1) <= zero_tol:
        raise ValueError("E[f'] vanishes: use scaled regime (k_f >= 2)")
    return 1.0 / d1**2


def variance_profile_coeffs(lam: float, t: Transform, model: NoiseModel):
    """Coefficients ``(C1, C2)`` of ``N E[V_ij^2] = 1 + C1 sqrt(N) x_i x_j + C2 N x_i^2 x_j^2``."""
    _require_normalized(t, model)
    m0 = derivative_moment(t, model, 0)
    m1 = derivative_moment(t, model, 1)
    c1 = 2.0 * math.sqrt(lam) * (product_moment(t, model, 0, 1) - m0 * m1)
    c2 = lam * (product_moment(t, model, 1, 1) - m1 * m1)
    return c1, max(c2, 0.0)


def critical_index(t: Transform, model: NoiseModel, zero_tol=ZERO_MOMENT_TOL) -> int:
    """Smallest ``k`` in 1..3 with ``|E[f^(k)]| > zero_tol``."""
    _require_normalized(t, model)
    for k in (1, 2, 3):
        if abs(derivative_moment(t, model, k)) > zero_tol:
            return k
    raise ValueError("no critical index <= 3")


def scaled_c2(t: Transform, model: NoiseModel) -> float:
    """``E[f^2] + E[f f''] - E[f] E[f'']`` from the scaled-SNR analysis."""
    return (product_moment(t, model, 0, 0) + product_moment(t, model, 0, 2)
            - derivative_moment(t, model, 0) * derivative_moment(t, model, 2))


# presets ----------------------------------------------------------------------

def quadratic_example() -> Transform:
    """``(x^2 + 3x - 1) / sqrt(11)``, normalized for standard Gaussian noise."""
    return make_polynomial(np.array([-1.0, 3.0, 1.0]) / math.sqrt(11.0), name="quadratic")


def hermite2() -> Transform:
    """``(x^2 - 1) / sqrt(2)``: E[f'] = 0 under Gaussian noise."""
    return make_polynomial(np.array([-1.0, 0.0, 1.0]) / math.sqrt(2.0), name="hermite2")


def identity() -> Transform:
    return make_polynomial([0.0, 1.0], name="identity")


def from_spec(spec: dict, model: NoiseModel) -> Transform:
    """Build from a config mapping, e.g. ``{"type": "polynomial", "coeffs": [-1, 3, 1], "normalize": True}``."""
    spec = dict(spec)
    kind = spec.pop("type", "identity")
    norm = spec.pop("normalize", None)
    if kind == "polynomial":
        t = make_polynomial(spec.pop("coeffs"))
        norm = True if norm is None else norm
    elif kind in ("optimal", OPTIMAL):
        t = make_optimal(model)
    elif kind == "identity":
        t = identity()
    elif kind == "quadratic":
        t = quadratic_example()
    elif kind == "hermite2":
        t = hermite2()
    else:
        raise ValueError(f"unknown transform type {kind!r}")
    if spec:
        raise ValueError(f"unknown transform keys {sorted(spec)}")
    if norm:
        t = normalize(t, model)
    return t
