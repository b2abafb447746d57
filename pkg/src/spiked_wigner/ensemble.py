"""Samplers for spiked Wigner matrices and the auxiliary matrices built from them.

Conventions: ``W`` has entries ``w_ij / sqrt(N)`` with ``w_ij`` drawn from a
:class:`~spiked_wigner.noise.NoiseModel` for every ``i <= j`` (diagonal
included) and mirrored.  All builders fill the upper triangle and mirror it,
so every returned matrix is exactly symmetric.
"""

from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass

import numpy as np

from .noise import NoiseModel
from .transform import (
    Transform,
    _require_normalized,
    derivative_moment,
    variance_profile_coeffs,
)

RADEMACHER = "iid-rademacher"
IID_CUSTOM = "iid-custom"
SPHERICAL = "spherical"


@dataclass(frozen=True)
class SpikePrior:
    """Law of the unit spike ``x``.

    ``iid-custom`` draws ``sqrt(N) x_i`` from ``entry_law`` (a unit-variance
    :class:`NoiseModel`); ``spherical`` is a normalized Gaussian vector.
    """

    kind: str = RADEMACHER
    post_normalize: bool = True
    entry_law: NoiseModel | None = None

    def __post_init__(self):
        if self.kind not in (RADEMACHER, IID_CUSTOM, SPHERICAL):
            raise ValueError(f"unknown spike prior {self.kind!r}")
        if self.kind == IID_CUSTOM and self.entry_law is None:
            raise ValueError("iid-custom prior needs an entry_law")

    def fourth_moment(self) -> float:
        """``E[(sqrt(N) x_i)^4]``, the ``w4`` of the scaled-SNR regime."""
        if self.kind == RADEMACHER:
            return 1.0
        if self.kind == SPHERICAL:
            return 3.0
        return self.entry_law.expect(lambda y: y**4)


@dataclass
class SpikedSample:
    """One draw ``(W, x, lambda)``; ``M = W + sqrt(lambda) x x^T``."""

    W: np.ndarray
    x: np.ndarray
    lam: float
    seed: int | None = None

    @property
    def N(self) -> int:
        return self.W.shape[0]

    @property
    def M(self) -> np.ndarray:
        return assemble(self.W, self.x, self.lam)

    @property
    def noise_entries(self) -> np.ndarray:
        """``sqrt(N) W`` as a full symmetric matrix."""
        return math.sqrt(self.N) * self.W


@functools.lru_cache(maxsize=16)
def _triu(n):
    iu = np.triu_indices(n)
    iu[0].flags.writeable = False
    iu[1].flags.writeable = False
    return iu


@functools.lru_cache(maxsize=16)
def _flat_pair(n):
    iu = _triu(n)
    upper = np.ravel_multi_index(iu, (n, n))
    lower = np.ravel_multi_index((iu[1], iu[0]), (n, n))
    upper.flags.writeable = False
    lower.flags.writeable = False
    return upper, lower


def symmetric_from_upper(n, values) -> np.ndarray:
    """Place packed upper-triangle ``values`` (row-major) into a symmetric matrix."""
    upper, lower = _flat_pair(n)
    out = np.empty(n * n)
    out[upper] = values
    out[lower] = values
    return out.reshape(n, n)


def _upper(S):
    return S[_triu(S.shape[0])]


def _sym_map(func, *mats):
    """Apply an entrywise ``func`` on the upper triangles and mirror the result."""
    n = mats[0].shape[0]
    return symmetric_from_upper(n, func(*(_upper(m) for m in mats)))


def sample_spike(prior: SpikePrior, N: int, rng: np.random.Generator) -> np.ndarray:
    if N < 2:
        raise ValueError("N must be >= 2")
    if prior.kind == RADEMACHER:
        # entries +-1/sqrt(N): unit norm up to one rounding of 1/sqrt(N)
        y = rng.integers(0, 2, size=N) * 2.0 - 1.0
    elif prior.kind == SPHERICAL:
        y = rng.standard_normal(N)
        return y / np.linalg.norm(y)
    else:
        y = prior.entry_law.sample(rng, N)
    x = y / math.sqrt(N)
    if prior.post_normalize and prior.kind != RADEMACHER:
        x = x / np.linalg.norm(x)
    return x


def sample_wigner(model: NoiseModel, N: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric ``W`` with ``sqrt(N) W_ij`` i.i.d. from ``model`` for ``i <= j``."""
    if N < 2:
        raise ValueError("N must be >= 2")
    w = model.sample(rng, N * (N + 1) // 2)
    return symmetric_from_upper(N, w / math.sqrt(N))


def sample(model: NoiseModel, prior: SpikePrior, N: int, lam: float, rng, seed=None) -> SpikedSample:
    """Draw the noise first, then the spike, from one generator."""
    W = sample_wigner(model, N, rng)
    x = sample_spike(prior, N, rng)
    return SpikedSample(W, x, float(lam), seed)


def assemble(W: np.ndarray, x: np.ndarray, lam: float) -> np.ndarray:
    if W.shape != (x.size, x.size):
        raise ValueError("shape mismatch between W and x")
    s = math.sqrt(lam)
    iu = _triu(x.size)
    return symmetric_from_upper(x.size, W[iu] + s * x[iu[0]] * x[iu[1]])


def transform_entrywise(M: np.ndarray, t: Transform) -> np.ndarray:
    """``N^{-1/2} f(sqrt(N) M_ij)`` for every entry."""
    rn = math.sqrt(M.shape[0])
    return _sym_map(lambda m: t(rn * m) / rn, M)


def transformed(sample: SpikedSample, t: Transform) -> np.ndarray:
    return transform_entrywise(sample.M, t)


def _outer_upper(v):
    iu = _triu(v.size)
    return v[iu[0]] * v[iu[1]]


def build_H(sample: SpikedSample, t: Transform, model: NoiseModel) -> np.ndarray:
    """Second-order Taylor surrogate of the transformed matrix.

    ``H_ij = f(w_ij)/sqrt(N) + sqrt(lam) f'(w_ij) x_i x_j + (lam/2) E[f''] sqrt(N) x_i^2 x_j^2``
    """
    _require_normalized(t, model)
    N, lam, x = sample.N, sample.lam, sample.x
    rn = math.sqrt(N)
    w = rn * _upper(sample.W)
    e2 = derivative_moment(t, model, 2)
    vals = t(w) / rn + math.sqrt(lam) * t.d1(w) * _outer_upper(x) + 0.5 * lam * e2 * rn * _outer_upper(x * x)
    return symmetric_from_upper(N, vals)


def _V_upper(sample, t, model):
    rn = math.sqrt(sample.N)
    w = rn * _upper(sample.W)
    e1 = derivative_moment(t, model, 1)
    return t(w) / rn + math.sqrt(sample.lam) * (t.d1(w) - e1) * _outer_upper(sample.x)


def build_V(sample: SpikedSample, t: Transform, model: NoiseModel) -> np.ndarray:
    """Wigner-type noise of ``H``: ``f(w)/sqrt(N) + sqrt(lam) (f'(w) - E f') x_i x_j``."""
    _require_normalized(t, model)
    return symmetric_from_upper(sample.N, _V_upper(sample, t, model))


def _profile_upper(sample, t, model, tpoint):
    # N E[V(t)_ij^2] on the upper triangle
    c1, c2 = variance_profile_coeffs(sample.lam, t, model)
    rn = math.sqrt(sample.N)
    xx = _outer_upper(sample.x)
    return 1.0 + (c1 * tpoint) * rn * xx + (c2 * tpoint) * sample.N * xx * xx


def variance_profile(sample: SpikedSample, t: Transform, model: NoiseModel, tpoint: float = 1.0) -> np.ndarray:
    """Matrix ``S_ij = E[V(t)_ij^2]`` of entry variances along the interpolation."""
    return symmetric_from_upper(sample.N, _profile_upper(sample, t, model, tpoint) / sample.N)


def build_interpolants(sample: SpikedSample, t: Transform, model: NoiseModel, tpoint: float):
    """Return ``(V(t), H(t))`` for ``tpoint`` in [0, 1].

    ``V(t)`` rescales each entry of ``V`` to variance
    ``(1 + C1 t sqrt(N) x_i x_j + C2 t N x_i^2 x_j^2) / N``, and
    ``H(t) = V(t) + A`` with ``A`` the rank-2 spike from :func:`rank2_spike`.
    """
    if not 0.0 <= tpoint <= 1.0:
        raise ValueError("tpoint must lie in [0, 1]")
    _require_normalized(t, model)
    full = _profile_upper(sample, t, model, 1.0)
    if np.any(full <= 0.0):
        raise ValueError("vanishing entry variance in the interpolation rescaling")
    target = _profile_upper(sample, t, model, float(tpoint))
    v = np.sqrt(target / full) * _V_upper(sample, t, model)
    Vt = symmetric_from_upper(sample.N, v)
    A, _, _ = rank2_spike(sample.x, sample.lam, t, model)
    Ht = symmetric_from_upper(sample.N, v + _upper(A))
    return Vt, Ht


def rank2_spike(x: np.ndarray, lam: float, t: Transform, model: NoiseModel):
    """Deterministic part ``A = sqrt(lam_e) x x^T + c x2 x2^T`` of ``H`` and its two nonzero eigenvalues.

    ``c = (lam/2) E[f''] sqrt(N)`` and ``x2`` is the entrywise square of
    ``x``.  The eigenvalues are those of the 2x2 matrix ``diag(a, c) G`` with
    ``G`` the Gram matrix of ``(x, x2)``; a negative ``c`` is handled by the
    same formula.  Returns ``(A, theta1, theta2)`` with ``theta1 >= theta2``.
    """
    _require_normalized(t, model)
    N = x.size
    a = math.sqrt(lam) * derivative_moment(t, model, 1)
    c = 0.5 * lam * derivative_moment(t, model, 2) * math.sqrt(N)
    x2 = x * x
    # products commute exactly, so A is symmetric bit for bit
    A = a * np.outer(x, x) + c * np.outer(x2, x2)
    g11 = float(x @ x)
    g12 = float(x @ x2)
    g22 = float(x2 @ x2)
    tr = a * g11 + c * g22
    det = a * c * (g11 * g22 - g12 * g12)
    disc = math.sqrt(max((a * g11 - c * g22) ** 2 + 4.0 * a * c * g12 * g12, 0.0))
    big = 0.5 * (tr + math.copysign(disc, tr)) if tr != 0.0 else 0.5 * disc
    small = det / big if big != 0.0 else 0.0
    theta1, theta2 = max(big, small), min(big, small)
    return A, theta1, theta2


def spike_diagnostics(x: np.ndarray) -> dict:
    """Empirical delocalization checks on one spike draw (flags, not errors)."""
    N = x.size
    bound = 10.0 * math.log(N)
    stats = {
        "max_entry": float(np.max(np.abs(x)) * math.sqrt(N)),
        "sum": float(abs(x.sum())),
        "sum_cubes": float(abs((x**3).sum()) * N),
    }
    stats["ok"] = all(v <= bound for v in stats.values())
    stats["bound"] = bound
    return stats


# matrix dump ------------------------------------------------------------------

_MAGIC = b"SPWM"
_HEADER = struct.Struct("<4sQ4s")


def write_matrix(path, S: np.ndarray):
    """Binary dump: header (magic, N, dtype code) then the packed upper triangle, little-endian."""
    S = np.asarray(S)
    N = S.shape[0]
    vals = _upper(S).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, N, b"<f8 "))
        fh.write(vals.tobytes())


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic, N, code = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a matrix dump")
        dtype = np.dtype(code.decode().strip())
        vals = np.frombuffer(fh.read(), dtype=dtype)
    if vals.size != N * (N + 1) // 2:
        raise ValueError(f"{path}: truncated matrix dump")
    return symmetric_from_upper(N, vals.astype(float))


def prior_from_spec(spec: dict) -> SpikePrior:
    from .noise import from_spec as noise_from_spec

    spec = dict(spec)
    kind = spec.pop("kind", RADEMACHER)
    post = spec.pop("post_normalize", True)
    entry = spec.pop("entry_law", None)
    if spec:
        raise ValueError(f"unknown prior keys {sorted(spec)}")
    return SpikePrior(kind, post, noise_from_spec(entry) if entry else None)
