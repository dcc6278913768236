"""Seeded random-field generators with analytically known optimal losses.

Kinds:

* ``iid_bernoulli(p)`` — i.i.d. bits.
* ``markov_row(p)`` — a stationary binary symmetric Markov chain (flip
  probability p per step) laid out either as a 1 x n sequence or reshaped
  row-major into an n x n grid.
* ``shift_adversary`` — the two-scanner separation field: a uniform real U
  occupies one cell and the other n^2 - 1 cells carry the leading bits of
  U's binary expansion, the whole row-major layout cyclically shifted by a
  uniform J.  Until a scanner stumbles on the real-valued cell every
  observation is a fair bit (squared loss 1/4 per step); afterwards the
  expansion lookup predicts everything exactly.
* ``mixing_blocks(m, inner)`` — i.i.d. tiling of independently generated
  m x m patches, a strongly mixing field by construction.

All generation is seeded (PCG64) and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import BINARY, REAL, Alphabet, DataArray
from .loss import LossFn
from .predict import SequentialPredictor, bayes_predict


class NotTabulatedError(KeyError):
    """No analytic optimum is tabulated for this (field, scanner, loss)."""


@dataclass(frozen=True)
class FieldSpec:
    kind: str  # iid_bernoulli | markov_row | shift_adversary | mixing_blocks
    seed: int = 0
    p: float = 0.5
    layout: str = "2d"  # markov_row only: "1d" (1 x n) or "2d" (n x n)
    m: int = 2  # mixing_blocks tile side
    inner: "FieldSpec | None" = None  # mixing_blocks tile law


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def markov_chain_bits(p: float, length: int, rng: np.random.Generator) -> np.ndarray:
    """Stationary symmetric chain: x_1 ~ fair, flips with probability p."""
    flips = rng.random(length) < p
    x0 = int(rng.integers(0, 2))
    # cumulative xor of flips; flips[0] is unused so x[0] = x0
    flips[0] = False
    return (x0 ^ np.cumsum(flips) % 2).astype(np.int64)


def generate(spec: FieldSpec, n: int) -> DataArray:
    """Generate an instance; for layout='1d' the side n is the sequence length."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = _rng(spec.seed)
    if spec.kind == "iid_bernoulli":
        if not 0.0 <= spec.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {spec.p}")
        vals = (rng.random((n, n)) < spec.p).astype(np.int64)
        return DataArray(vals, BINARY)
    if spec.kind == "markov_row":
        if not 0.0 <= spec.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {spec.p}")
        if spec.layout == "1d":
            chain = markov_chain_bits(spec.p, n, rng)
            return DataArray(chain.reshape(1, n), BINARY)
        if spec.layout == "2d":
            chain = markov_chain_bits(spec.p, n * n, rng)
            return DataArray(chain.reshape(n, n), BINARY)
        raise ValueError(f"unknown layout {spec.layout!r}")
    if spec.kind == "shift_adversary":
        return shift_adversary_instance(n, spec.seed).array
    if spec.kind == "mixing_blocks":
        if spec.inner is None:
            raise ValueError("mixing_blocks needs an inner spec")
        if not 2 <= spec.m <= n:
            raise ValueError(f"tile side must be in [2, n], got {spec.m}")
        tiles_per_side = -(-n // spec.m)
        big = np.empty((tiles_per_side * spec.m, tiles_per_side * spec.m), dtype=np.int64)
        for ti in range(tiles_per_side):
            for tj in range(tiles_per_side):
                tile = _generate_tile(spec.inner, spec.m,
                                      _rng(spec.seed, ti * tiles_per_side + tj))
                big[ti * spec.m:(ti + 1) * spec.m, tj * spec.m:(tj + 1) * spec.m] = tile
        return DataArray(big[:n, :n], BINARY)
    raise ValueError(f"unknown field kind {spec.kind!r}")


def _generate_tile(spec: FieldSpec, m: int, rng: np.random.Generator) -> np.ndarray:
    if spec.kind == "iid_bernoulli":
        return (rng.random((m, m)) < spec.p).astype(np.int64)
    if spec.kind == "markov_row":
        return markov_chain_bits(spec.p, m * m, rng).reshape(m, m)
    raise ValueError(f"unsupported tile law {spec.kind!r}")


# --- the shifted-expansion adversarial field ---------------------------------

@dataclass
class ShiftAdversaryInstance:
    """One draw of the shifted-expansion field, with the exact side data.

    ``bits`` are the n^2 - 1 expansion bits of U (exact); ``shift`` is the
    cyclic shift J, so row-major cell J holds U and cell (J + t) mod n^2
    holds bits[t-1].  The stored array keeps U as its closest float64; the
    oracle machinery uses the exact bits, so "zero loss once located" holds
    exactly.
    """

    n: int
    bits: np.ndarray
    shift: int
    u_float: float
    array: DataArray

    @property
    def real_flat(self) -> int:
        return self.shift

    def bit_at_flat(self, f: int) -> int:
        """Expansion bit stored at row-major index f (f != shift)."""
        t = (f - self.shift) % (self.n * self.n)
        if t == 0:
            raise ValueError("cell holds the real value, not a bit")
        return int(self.bits[t - 1])

    def exact_scan_loss(self, flat_order: Sequence[int]) -> float:
        """Realized squared loss of the locate-then-reconstruct predictor.

        The optimal scheme predicts 1/2 (fair-bit Bayes act, loss exactly
        1/4 per bit) until the real-valued cell is observed, loses
        (U - 1/2)^2 there, and is exact afterwards.  Equals running the
        sequential oracle through the full pipeline.
        """
        pos = list(flat_order).index(self.shift)
        return 0.25 * pos + (self.u_float - 0.5) ** 2

    def oracle_predictor(self, flat_order: Sequence[int]) -> "ShiftOraclePredictor":
        return ShiftOraclePredictor(self, list(flat_order))


class ShiftOraclePredictor(SequentialPredictor):
    """Locate-then-reconstruct predictor for a fixed data-independent scan.

    Predicts 1/2 until it observes the (non-binary) real-valued cell; from
    the cell's position it recovers the shift and thereafter reads the
    expansion bits off the instance's exact side data.
    """

    def __init__(self, instance: ShiftAdversaryInstance, flat_order: list[int]):
        self.instance = instance
        self.flat_order = flat_order
        self.reset()

    def reset(self) -> None:
        self.t = 0
        self.located = False

    def predict(self) -> float:
        if not self.located:
            return 0.5
        return float(self.instance.bit_at_flat(self.flat_order[self.t]))

    def observe(self, x) -> None:
        if float(x) not in (0.0, 1.0):
            self.located = True
        self.t += 1


def shift_adversary_instance(n: int, seed: int = 0) -> ShiftAdversaryInstance:
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = _rng(seed)
    size = n * n
    bits = rng.integers(0, 2, size=size - 1, dtype=np.int64)
    shift = int(rng.integers(0, size))
    u = float(np.sum(bits[:53] * 0.5 ** np.arange(1, min(size, 54))))
    if u in (0.0, 1.0):  # keep the real cell distinguishable from a bit
        bits[0] = 1
        u = float(np.sum(bits[:53] * 0.5 ** np.arange(1, min(size, 54))))
    flat = np.empty(size, dtype=np.float64)
    flat[shift] = u
    idx = (shift + 1 + np.arange(size - 1)) % size
    flat[idx] = bits.astype(np.float64)
    return ShiftAdversaryInstance(n=n, bits=bits, shift=shift, u_float=u,
                                  array=DataArray(flat.reshape(n, n), REAL))


# --- chain conditionals and the scan-optimal chain predictor -----------------

def chain_flip_prob(p: float, d: int) -> float:
    """Flip probability across d steps of the symmetric chain."""
    return 0.5 * (1.0 - (1.0 - 2.0 * p) ** d)


def chain_conditional(p: float,
                      left: tuple[int, int] | None,
                      right: tuple[int, int] | None) -> float:
    """P(x = 1) given the nearest observed chain neighbors.

    ``left``/``right`` are (value, distance) pairs, or None when no neighbor
    exists on that side.  By the Markov property this conditional given the
    two nearest observed neighbors equals the conditional given everything
    observed.
    """
    w1 = w0 = 1.0
    for nb in (left, right):
        if nb is None:
            continue
        v, d = nb
        q = chain_flip_prob(p, d)
        w1 *= (1.0 - q) if v == 1 else q
        w0 *= q if v == 1 else (1.0 - q)
    if w0 + w1 == 0.0:
        return 0.5
    return w1 / (w0 + w1)


def _nearest_observed(flat_order: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each chain index, the nearest earlier-visited index on each side.

    rank[f] is the scan step at which index f is visited; the nearest
    observed left neighbor of f at that moment is the previous index with a
    smaller rank (and symmetrically on the right), found with the classic
    previous-smaller-element stack in O(n).
    """
    n = len(flat_order)
    rank = np.empty(n, dtype=np.int64)
    rank[flat_order] = np.arange(n)
    left = np.full(n, -1, dtype=np.int64)
    stack: list[int] = []
    for f in range(n):
        while stack and rank[stack[-1]] > rank[f]:
            stack.pop()
        if stack:
            left[f] = stack[-1]
        stack.append(f)
    right = np.full(n, n, dtype=np.int64)
    stack.clear()
    for f in range(n - 1, -1, -1):
        while stack and rank[stack[-1]] > rank[f]:
            stack.pop()
        if stack:
            right[f] = stack[-1]
        stack.append(f)
    return left, right


def chain_scan_losses(values: np.ndarray, flat_order: np.ndarray, p: float,
                      loss: LossFn) -> np.ndarray:
    """Per-step losses of the true-conditional Bayes predictor along a scan.

    ``values`` is the chain (row-major flat), ``flat_order`` the scan order
    as flat indices.  The prediction for each site uses the exact chain
    conditional given its nearest already-observed neighbors, which only
    involves values observed strictly earlier in the scan.
    """
    values = np.asarray(values, dtype=np.int64)
    flat_order = np.asarray(flat_order)
    left, right = _nearest_observed(flat_order)
    n = len(flat_order)
    f = np.arange(n)
    w1 = np.ones(n)
    w0 = np.ones(n)
    for nb, dist in ((left, f - left), (right, right - f)):
        have = (nb >= 0) & (nb < n)
        q = chain_flip_prob(p, dist[have].astype(np.float64))
        v = values[nb[have]]
        w1[have] *= np.where(v == 1, 1.0 - q, q)
        w0[have] *= np.where(v == 1, q, 1.0 - q)
    p1 = w1 / (w0 + w1)
    if loss.name in ("hamming", "absolute"):
        pred = (p1 > 0.5).astype(np.float64)  # tie predicts 0, as bayes_predict
    else:
        pred = p1
    return loss.eval_array(values[flat_order], pred[flat_order])


class ChainScanPredictor(SequentialPredictor):
    """Sequential form of the known-chain Bayes predictor for a fixed scan."""

    def __init__(self, flat_order: Sequence[int], p: float, loss: LossFn):
        self.flat_order = np.asarray(list(flat_order))
        self.p = p
        self.loss = loss
        self.left, self.right = _nearest_observed(self.flat_order)
        self.reset()

    def reset(self) -> None:
        self.t = 0
        self.observed: dict[int, int] = {}

    def predict(self) -> float:
        f = int(self.flat_order[self.t])
        lnb = rnb = None
        if self.left[f] >= 0:
            lf = int(self.left[f])
            lnb = (self.observed[lf], f - lf)
        if self.right[f] < len(self.flat_order):
            rf = int(self.right[f])
            rnb = (self.observed[rf], rf - f)
        return bayes_predict(chain_conditional(self.p, lnb, rnb), self.loss)

    def observe(self, x) -> None:
        self.observed[int(self.flat_order[self.t])] = int(x)
        self.t += 1


# --- analytic per-site optima -------------------------------------------------

def analytic_optimum(spec: FieldSpec, scanner_name: str, loss_name: str,
                     n: int | None = None) -> float:
    """Known expected loss baselines for (field, scanner, loss) triples.

    Tabulated values (asymptotic per-site rates unless noted):

    * (markov_row(p), raster, hamming)          -> p
    * (markov_row(p), odds_then_evens, hamming) -> see below
    * (markov_row(p), raster, squared)          -> p(1-p)
    * (markov_row(p), odds_then_evens, squared) -> see below
    * (shift_adversary, any scanner, squared)   -> (n^2+1)/8, a TOTAL-loss
      lower bound holding for every scanner.

    Odds-then-evens on the chain: odd-indexed sites are predicted from the
    previous odd site (two chain steps away, flip probability
    q2 = 2p(1-p)); even sites see both unit-distance neighbors, whose
    agreement has probability 1 - q2 and conditional error
    c = p^2/(p^2 + (1-p)^2) when they agree, 1/2 when they differ.
    """
    if spec.kind == "markov_row":
        p = spec.p
        q2 = chain_flip_prob(p, 2)
        c = p * p / (p * p + (1 - p) * (1 - p))
        if scanner_name == "raster":
            if loss_name == "hamming":
                return min(p, 1 - p)
            if loss_name == "squared":
                return p * (1 - p)
        if scanner_name == "odds_then_evens":
            if loss_name == "hamming":
                odd = min(q2, 1 - q2)
                even = (1 - q2) * min(c, 1 - c) + q2 * 0.5
                return 0.5 * (odd + even)
            if loss_name == "squared":
                odd = q2 * (1 - q2)
                even = (1 - q2) * c * (1 - c) + q2 * 0.25
                return 0.5 * (odd + even)
    if spec.kind == "shift_adversary" and loss_name == "squared":
        if n is None:
            raise ValueError("shift_adversary baseline needs the side n")
        return (n * n + 1) / 8.0
    raise NotTabulatedError(
        f"no analytic optimum for ({spec.kind}, {scanner_name}, {loss_name})")
