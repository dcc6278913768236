"""Loss functions, Bayes envelopes, and the affine-in-entropy approximation.

For a bounded loss l on binary symbols with predictions in [0, 1], the Bayes
envelope is phi(p) = min_q [(1-p) l(0,q) + p l(1,q)].  The minimax affine
approximation finds (alpha, beta) minimizing max_p |alpha*h_b(p) + beta -
phi(p)|; the resulting error eps bounds how sensitive optimal sequential
prediction loss is to reordering the data (any two scan orders with optimal
predictors differ by at most 2*eps per site in the limit).

Entropies default to bits.  Since alpha is free, eps itself is independent
of the entropy base (alpha absorbs a base change by a factor ln 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

LOG_CLAMP = 1e-9  # log loss is clamped so l_max stays finite


@dataclass(frozen=True)
class LossFn:
    """A bounded loss l(x, q) for binary x and predictions q in [0, 1].

    ``evaluate`` accepts scalars; ``eval_array`` is the vectorized form.
    ``envelope`` is the closed-form Bayes envelope phi(p), ``bayes_opt`` an
    optimal single prediction against Bernoulli(p).
    """

    name: str
    l_max: float
    evaluate: Callable[[float, float], float]
    eval_array: Callable[[np.ndarray, np.ndarray], np.ndarray]
    envelope: Callable[[np.ndarray], np.ndarray]
    bayes_opt: Callable[[float], float]
    neutral: float  # optimal prediction against a fair coin (ties -> 0)


def _hamming_eval(x: float, q: float) -> float:
    # linear extension to q in [0,1]; coincides with the 0/1 loss at q in {0,1}
    return 1.0 - q if x == 1 else q


def _log_eval(x: float, q: float) -> float:
    p = q if x == 1 else 1.0 - q
    return -math.log(max(p, LOG_CLAMP))


def _entropy_nats(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log(p), 0.0)
        t = t + np.where(p < 1, -(1 - p) * np.log(1 - p), 0.0)
    return t


HAMMING = LossFn(
    name="hamming",
    l_max=1.0,
    evaluate=_hamming_eval,
    eval_array=lambda x, q: np.where(x == 1, 1.0 - q, q),
    envelope=lambda p: np.minimum(p, 1.0 - np.asarray(p, dtype=np.float64)),
    bayes_opt=lambda p: 1.0 if p > 0.5 else 0.0,
    neutral=0.0,
)

SQUARED = LossFn(
    name="squared",
    l_max=1.0,
    evaluate=lambda x, q: (x - q) ** 2,
    eval_array=lambda x, q: (np.asarray(x, dtype=np.float64) - q) ** 2,
    envelope=lambda p: np.asarray(p, dtype=np.float64) * (1.0 - np.asarray(p, dtype=np.float64)),
    bayes_opt=lambda p: float(p),
    neutral=0.5,
)

ABSOLUTE = LossFn(
    name="absolute",
    l_max=1.0,
    evaluate=lambda x, q: abs(x - q),
    eval_array=lambda x, q: np.abs(np.asarray(x, dtype=np.float64) - q),
    envelope=lambda p: np.minimum(p, 1.0 - np.asarray(p, dtype=np.float64)),
    bayes_opt=lambda p: 1.0 if p > 0.5 else 0.0,  # a median of Bernoulli(p)
    neutral=0.0,
)

LOG = LossFn(
    name="log",
    l_max=-math.log(LOG_CLAMP),
    evaluate=_log_eval,
    eval_array=lambda x, q: -np.log(np.maximum(np.where(x == 1, q, 1.0 - q), LOG_CLAMP)),
    envelope=_entropy_nats,  # the log-loss envelope is the entropy, in nats
    bayes_opt=lambda p: float(p),
    neutral=0.5,
)

LOSSES: dict[str, LossFn] = {f.name: f for f in (HAMMING, SQUARED, ABSOLUTE, LOG)}


def get_loss(name: str) -> LossFn:
    try:
        return LOSSES[name]
    except KeyError:
        raise KeyError(f"unknown loss {name!r}; choose from {sorted(LOSSES)}") from None


# --- binary entropy -----------------------------------------------------

def binary_entropy(p, base: str = "bits"):
    """h_b(p), elementwise, with 0*log(0) = 0."""
    h = _entropy_nats(p)
    if base == "bits":
        h = h / math.log(2.0)
    elif base != "nats":
        raise ValueError(f"unknown base {base!r}")
    if np.isscalar(p) or np.asarray(p).ndim == 0:
        return float(h)
    return h


def inv_binary_entropy(y: float, tol: float = 1e-12) -> float:
    """The unique p in [0, 1/2] with h_b(p) = y (bits), by bisection."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"entropy value must be in [0, 1], got {y}")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fmg_gap(rho: float) -> float:
    """Excess-loss bound rho/2 - h_b^{-1}(rho) for compressibility rho (bits).

    This is the worst-case Hamming penalty of the Hilbert-scan-plus-optimal-
    predictor scheme versus the best finite-state scheme on an array whose
    finite-state compressibility is rho.  It peaks near 0.16 around
    rho ~ 0.72 bits/symbol and vanishes at both ends.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"compressibility must be in [0, 1], got {rho}")
    return 0.5 * rho - inv_binary_entropy(rho)


# --- Bayes envelope and its best affine-in-entropy fit -------------------

def bayes_envelope(loss: LossFn, p: float) -> float:
    """min_q [(1-p) l(0,q) + p l(1,q)] for Bernoulli(p)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p}")
    return float(loss.envelope(np.float64(p)))


@dataclass(frozen=True)
class AffineApprox:
    """Best affine approximation phi(p) ~ alpha*h_b(p) + beta.

    ``epsilon`` is the achieved sup-norm error on the certification mesh;
    ``argmax_points`` are the p values where |deviation| attains epsilon.
    """

    loss_name: str
    alpha: float
    beta: float
    epsilon: float
    base: str
    argmax_points: tuple[float, ...]

    def deviation(self, p) -> np.ndarray:
        """alpha*h_b(p) + beta - phi(p), elementwise."""
        h = binary_entropy(np.asarray(p, dtype=np.float64), base=self.base)
        return self.alpha * h + self.beta - get_loss(self.loss_name).envelope(p)


def minimax_affine(loss: LossFn, base: str = "bits", mesh: float = 1e-4) -> AffineApprox:
    """Solve min_{alpha,beta} max_p |alpha*h_b(p) + beta - phi(p)|.

    For fixed alpha the optimal beta centers the deviation, so
    eps(alpha) = (max_p g - min_p g)/2 with g = alpha*h - phi, which is
    convex in alpha; a golden-section search over alpha on a dense p mesh
    certifies eps to well within 5e-4.
    """
    p = np.arange(0.0, 1.0 + mesh / 2, mesh)
    h = binary_entropy(p, base=base)
    phi = loss.envelope(p)

    def halfspread(alpha: float) -> float:
        g = alpha * h - phi
        return 0.5 * (g.max() - g.min())

    lo, hi = 0.0, 2.0 * max(1.0, loss.l_max)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = halfspread(c), halfspread(d)
    for _ in range(200):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = halfspread(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = halfspread(d)
        if b - a < 1e-10:
            break
    alpha = 0.5 * (a + b)
    g = alpha * h - phi
    beta = -0.5 * (g.max() + g.min())
    dev = g + beta
    eps = float(np.abs(dev).max())
    at_max = np.abs(dev) >= eps - 1e-9
    argmax = tuple(round(float(x), 6) for x in p[at_max][:8])
    return AffineApprox(loss_name=loss.name, alpha=float(alpha), beta=float(beta),
                        epsilon=eps, base=base, argmax_points=argmax)


def equioscillation_points(approx: AffineApprox, mesh: float = 1e-4,
                           tol: float = 1e-3) -> list[tuple[float, int]]:
    """Local extrema of the deviation that attain +-epsilon, with signs.

    Optimality of the affine fit shows up as >= 3 such points with
    alternating signs (Chebyshev alternation for the system {h_b, 1}).
    """
    p = np.arange(0.0, 1.0 + mesh / 2, mesh)
    dev = approx.deviation(p)
    points: list[tuple[float, int]] = []
    for i in np.flatnonzero(np.abs(dev) >= approx.epsilon - tol):
        sign = 1 if dev[i] > 0 else -1
        if not points or points[-1][1] != sign:
            points.append((float(p[i]), sign))
    return points
