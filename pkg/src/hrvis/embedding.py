"""Exact t-SNE: perplexity-calibrated affinities and KL gradient descent."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .errors import BisectionFailed, InvalidConfig, NumericalDivergence, TooFewRows

MAX_BISECTION_STEPS = 200
PERPLEXITY_RTOL = 1e-5
KL_EVERY = 50
_TINY = 1e-12


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    out_dims: int = 2
    iterations: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum: float = 0.5
    final_momentum: float = 0.8
    momentum_switch: int = 250
    min_gain: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.out_dims not in (2, 3):
            raise InvalidConfig("out_dims must be 2 or 3")
        if not self.perplexity > 1:
            raise InvalidConfig("perplexity must exceed 1")
        if self.iterations < 1 or self.learning_rate <= 0:
            raise InvalidConfig("iterations and learning_rate must be positive")

    def check_rows(self, n: int) -> None:
        if not 1 < self.perplexity < (n - 1) / 3:
            raise InvalidConfig(
                f"perplexity {self.perplexity} infeasible for {n} rows (need < {(n - 1) / 3:.2f})"
            )


@dataclass
class Embedding:
    points: np.ndarray
    kl_trace: list[float]
    kl_iterations: list[int]
    config: TsneConfig
    meta: dict = field(default_factory=dict)

    @property
    def final_kl(self) -> float:
        return self.kl_trace[-1]


def squared_distances(x: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", x, x)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def _row_entropy(d: np.ndarray, beta: np.ndarray):
    """Conditional probabilities and their entropy in bits for each row.

    ``d`` holds each row's distances with the self-distance removed and the
    row minimum subtracted (the shift cancels in the normalisation).
    """
    w = np.exp(-d * beta[:, None])
    z = w.sum(axis=1)
    p = w / z[:, None]
    h_nat = np.log(z) + beta * np.einsum("ij,ij->i", p, d)
    return p, h_nat / math.log(2.0)


def conditional_affinities(x: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic p_{j|i} with each row's perplexity matched by bisection."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 4:
        raise TooFewRows("need at least 4 rows")
    if not 1 < perplexity < n - 1:
        raise InvalidConfig(f"perplexity {perplexity} outside (1, {n - 1})")

    off = ~np.eye(n, dtype=bool)
    d = squared_distances(x)[off].reshape(n, n - 1)
    d = d - d.min(axis=1, keepdims=True)
    target = math.log2(perplexity)

    beta = np.ones(n)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    p = np.empty_like(d)
    # equidistant neighbours give a uniform row whatever the bandwidth
    flat = d.max(axis=1) == 0.0
    p[flat] = 1.0 / (n - 1)
    active = np.flatnonzero(~flat)
    for _ in range(MAX_BISECTION_STEPS):
        if active.size == 0:
            break
        pa, h = _row_entropy(d[active], beta[active])
        p[active] = pa
        done = np.abs(2.0**h - perplexity) <= PERPLEXITY_RTOL * perplexity
        too_flat = h > target
        b = beta[active]
        lo_a, hi_a = lo[active], hi[active]
        lo_a = np.where(too_flat, b, lo_a)
        hi_a = np.where(too_flat, hi_a, b)
        b_new = np.where(
            np.isinf(hi_a), b * 2.0, np.where(lo_a > 0, (lo_a + hi_a) / 2.0, hi_a / 2.0)
        )
        lo[active], hi[active] = lo_a, hi_a
        beta[active] = np.where(done, b, b_new)
        active = active[~done]
    else:
        raise BisectionFailed(int(active[0]))

    out = np.zeros((n, n))
    out[off] = p.ravel()
    return out


def perplexity_affinities(x: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetric joint affinities ``P = (P_cond + P_cond.T) / 2n``."""
    cond = conditional_affinities(x, perplexity)
    n = cond.shape[0]
    p = (cond + cond.T) / (2.0 * n)
    return p


def _student_kernel(y: np.ndarray) -> np.ndarray:
    num = 1.0 / (1.0 + squared_distances(y))
    np.fill_diagonal(num, 0.0)
    return num


def kl_divergence(p: np.ndarray, y: np.ndarray) -> float:
    num = _student_kernel(y)
    q = np.maximum(num / num.sum(), _TINY)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


@numba.njit(cache=True)
def _gradient_kernel(p, y, exaggeration):  # pragma: no cover - compiled
    # y has exactly 3 columns (2-D input is zero-padded). One pass:
    # grad_i = 4 (sum_j e p_ij num_ij dy_ij - (1/Z) sum_j num_ij^2 dy_ij)
    n = y.shape[0]
    attract = np.zeros((n, 3))
    repel = np.zeros((n, 3))
    z = 0.0
    for i in range(n):
        y0, y1, y2 = y[i, 0], y[i, 1], y[i, 2]
        a0 = a1 = a2 = r0 = r1 = r2 = 0.0
        for j in range(i + 1, n):
            d0 = y0 - y[j, 0]
            d1 = y1 - y[j, 1]
            d2 = y2 - y[j, 2]
            num = 1.0 / (1.0 + d0 * d0 + d1 * d1 + d2 * d2)
            z += 2.0 * num
            a = exaggeration * p[i, j] * num
            r = num * num
            a0 += a * d0
            a1 += a * d1
            a2 += a * d2
            r0 += r * d0
            r1 += r * d1
            r2 += r * d2
            attract[j, 0] -= a * d0
            attract[j, 1] -= a * d1
            attract[j, 2] -= a * d2
            repel[j, 0] -= r * d0
            repel[j, 1] -= r * d1
            repel[j, 2] -= r * d2
        attract[i, 0] += a0
        attract[i, 1] += a1
        attract[i, 2] += a2
        repel[i, 0] += r0
        repel[i, 1] += r1
        repel[i, 2] += r2
    return 4.0 * (attract - repel / z)


def _pad3(y: np.ndarray) -> np.ndarray:
    out = np.zeros((y.shape[0], 3))
    out[:, : y.shape[1]] = y
    return out


@numba.njit(cache=True)
def _kl_kernel(p, y):  # pragma: no cover - compiled
    # KL = sum p log p + sum p log(1 + d) + log Z, using sum(p) = 1
    n = y.shape[0]
    z = 0.0
    plogp = 0.0
    plogd = 0.0
    for i in range(n):
        y0, y1, y2 = y[i, 0], y[i, 1], y[i, 2]
        for j in range(i + 1, n):
            d0 = y0 - y[j, 0]
            d1 = y1 - y[j, 1]
            d2 = y2 - y[j, 2]
            d = d0 * d0 + d1 * d1 + d2 * d2
            z += 2.0 / (1.0 + d)
            pij = p[i, j]
            if pij > 0.0:
                plogp += 2.0 * pij * np.log(pij)
                plogd += 2.0 * pij * np.log1p(d)
    return plogp + plogd + np.log(z)


def kl_gradient(p: np.ndarray, y: np.ndarray, exaggeration: float = 1.0) -> np.ndarray:
    """dKL/dy_i = 4 sum_j (p_ij - q_ij) (1 + |y_i - y_j|^2)^-1 (y_i - y_j).

    ``p`` must be symmetric; ``exaggeration`` scales it without a copy.
    """
    y = np.asarray(y, dtype=np.float64)
    grad = _gradient_kernel(
        np.ascontiguousarray(p, dtype=np.float64), _pad3(y), float(exaggeration)
    )
    return grad[:, : y.shape[1]]


def content_init(x: np.ndarray, seed: int, dims: int) -> np.ndarray:
    """N(0, 1e-4) start coordinates seeded by (seed, row content)."""
    x = np.ascontiguousarray(x, dtype=float)
    out = np.empty((x.shape[0], dims))
    prefix = int(seed).to_bytes(8, "little", signed=False)
    for i, row in enumerate(x):
        digest = hashlib.blake2b(prefix + row.tobytes(), digest_size=16).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        out[i] = rng.normal(0.0, 1e-2, dims)
    return out


def tsne(x: np.ndarray, config: TsneConfig = TsneConfig(), p: np.ndarray | None = None) -> Embedding:
    """Embed the rows of ``x``; deterministic for a given seed and input.

    Rows are optimised in a canonical content order and the result is mapped
    back, so permuting the input rows permutes the output rows exactly. The
    optimiser is chaotic enough that a mere change in floating-point summation
    order would otherwise give a different layout.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    config.check_rows(n)
    order = np.lexsort(x.T[::-1]) if x.ndim == 2 and x.shape[1] else np.arange(n)
    x = x[order]
    if p is None:
        p = perplexity_affinities(x, config.perplexity)
    else:
        p = np.asarray(p, dtype=float)[np.ix_(order, order)]

    y = content_init(x, config.seed, config.out_dims)
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    p = np.ascontiguousarray(p, dtype=np.float64)
    trace: list[float] = []
    trace_at: list[int] = []

    for it in range(1, config.iterations + 1):
        exaggeration = config.early_exaggeration if it <= config.exaggeration_iters else 1.0
        momentum = config.momentum if it <= config.momentum_switch else config.final_momentum
        grad = kl_gradient(p, y, exaggeration)
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, config.min_gain, out=gains)
        update = momentum * update - config.learning_rate * gains * grad
        y = y + update
        y = y - y.mean(axis=0)
        if not np.all(np.isfinite(y)):
            raise NumericalDivergence(f"non-finite coordinates at iteration {it}")
        if it % KL_EVERY == 0 or it == config.iterations:
            trace.append(float(_kl_kernel(p, _pad3(y))))
            trace_at.append(it)

    out = np.empty_like(y)
    out[order] = y
    return Embedding(out, trace, trace_at, config, {"perplexity": config.perplexity})


def grid_sweep(
    x: np.ndarray, perplexities, dims: int = 2, base: TsneConfig = TsneConfig()
) -> list[Embedding]:
    """Independent runs per perplexity, seeded ``base.seed + index``."""
    out = []
    for i, perp in enumerate(perplexities):
        cfg = replace(base, perplexity=float(perp), out_dims=dims, seed=base.seed + i)
        emb = tsne(x, cfg)
        emb.meta.update({"index": i, "perplexity": float(perp), "dims": dims})
        out.append(emb)
    return out


def subsample_rows(n: int, max_rows: int) -> np.ndarray:
    """Evenly spaced row indices keeping at most ``max_rows``."""
    if n <= max_rows:
        return np.arange(n)
    return np.unique(np.floor(np.arange(max_rows) * (n / max_rows)).astype(int))


def silhouette(points: np.ndarray, labels) -> float:
    """Mean silhouette coefficient under Euclidean distance.

    Points in singleton clusters contribute 0, as is conventional.
    """
    pts = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    keys = np.unique(labels)
    if keys.size < 2:
        raise InvalidConfig("silhouette needs at least two labels")
    dist = np.sqrt(squared_distances(pts))
    member = labels[:, None] == keys[None, :]
    sums = dist @ member.astype(float)
    sizes = member.sum(axis=0).astype(float)
    own = member.argmax(axis=1)
    idx = np.arange(pts.shape[0])
    own_size = sizes[own]
    a = np.where(own_size > 1, sums[idx, own] / np.maximum(own_size - 1, 1), 0.0)
    other = sums / sizes[None, :]
    other[idx, own] = np.inf
    b = other.min(axis=1)
    s = np.where(own_size > 1, (b - a) / np.maximum(np.maximum(a, b), _TINY), 0.0)
    return float(s.mean())
