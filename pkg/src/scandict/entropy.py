"""Empirical window distributions, conditional entropies, LZ78 compressibility.

The order-(k+1) empirical distribution of a scanned sequence counts sliding
windows: P(s) = #{k < i <= n : x_{i-k..i} = s} / (n - k).  Marginals of
shorter strings sum out trailing symbols (so a length-j string is counted at
window starts); conditionals use the 0/0 := 1/2 rule.  Between two window
orders k+1 and j the marginals of any common string agree up to
(k+1-j)/(n-k), an exact counting fact checked here with rational arithmetic.

The conditional entropy of the scanned sequence sandwiches the loss of the
scan-optimal order-k Markov predictor through the affine envelope bound:
|alpha * H^{k+1}(X|X^k) + beta - per-site loss| <= eps + k*l_max/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .loss import AffineApprox, LossFn, get_loss, minimax_affine


@dataclass
class EmpiricalModel:
    """Sliding-window counts of order ``order`` over a finite sequence."""

    order: int  # window length (the k+1 of an order-k conditional model)
    seq_len: int
    counts: dict[tuple, int]
    seq_fingerprint: int

    @property
    def n_windows(self) -> int:
        return self.seq_len - self.order + 1

    def window_prob(self, s: tuple) -> float:
        return self.counts.get(tuple(s), 0) / self.n_windows

    def prefix_counts(self, length: int) -> dict[tuple, int]:
        """Occurrence counts of length-``length`` strings at window starts."""
        if not 1 <= length <= self.order:
            raise ValueError(f"length must be in [1, {self.order}]")
        if length == self.order:
            return dict(self.counts)
        out: dict[tuple, int] = {}
        for s, c in self.counts.items():
            key = s[:length]
            out[key] = out.get(key, 0) + c
        return out

    def prob(self, s: Sequence) -> float:
        """Marginal P(s) for a string of length <= order (trailing sum-out)."""
        s = tuple(s)
        return self.prefix_counts(len(s)).get(s, 0) / self.n_windows

    def conditional(self, x: int, ctx: tuple) -> float:
        """P(last symbol = x | preceding context), with 0/0 := 1/2."""
        num = self.counts.get(tuple(ctx) + (x,), 0)
        den = sum(self.counts.get(tuple(ctx) + (v,), 0) for v in (0, 1))
        return 0.5 if den == 0 else num / den


def empirical_dist(seq: Sequence[int], k: int) -> EmpiricalModel:
    """Order-(k+1) empirical window distribution of a binary sequence."""
    n = len(seq)
    if n <= k:
        raise ValueError(f"sequence of length {n} too short for order k={k}")
    seq = [int(v) for v in seq]
    r = k + 1
    counts: dict[tuple, int] = {}
    w = tuple(seq[:r])
    counts[w] = 1
    for i in range(r, n):
        w = w[1:] + (seq[i],)
        counts[w] = counts.get(w, 0) + 1
    return EmpiricalModel(order=r, seq_len=n, counts=counts,
                          seq_fingerprint=hash(tuple(seq)))


def cond_entropy(model: EmpiricalModel, context_len: int | None = None,
                 base: str = "nats") -> float:
    """Conditional entropy of the window's last symbol given its context.

    With the default ``context_len`` = order-1 this is H^{k+1}(X|X^k); a
    smaller context drops the oldest window symbols (conditioning on less
    can only increase the value).  Natural log internally, bits on request.
    """
    k = model.order - 1
    if context_len is None:
        context_len = k
    if not 0 <= context_len <= k:
        raise ValueError(f"context_len must be in [0, {k}]")
    pair_counts: dict[tuple, int] = {}
    ctx_counts: dict[tuple, int] = {}
    drop = k - context_len
    for s, c in model.counts.items():
        tail = s[drop:]
        pair_counts[tail] = pair_counts.get(tail, 0) + c
        ctx_counts[tail[:-1]] = ctx_counts.get(tail[:-1], 0) + c
    n = model.n_windows
    h = 0.0
    for s, c in pair_counts.items():
        h -= (c / n) * math.log(c / ctx_counts[s[:-1]])
    if base == "bits":
        h /= math.log(2.0)
    elif base != "nats":
        raise ValueError(f"unknown base {base!r}")
    return h


def consistency_gap(model_hi: EmpiricalModel, model_lo: EmpiricalModel) -> float:
    """max over strings s of |P_hi(s) - P_lo(s)| between two window orders.

    Both models must come from the same sequence; ``model_lo`` must have the
    smaller window (order j <= k where model_hi has window k+1).  The gap is
    bounded by (k+1-j)/(n-k); ``consistency_within_bound`` checks that
    inequality with exact rational arithmetic.
    """
    gap, _ = _consistency_fractions(model_hi, model_lo)
    return float(gap)


def consistency_within_bound(model_hi: EmpiricalModel,
                             model_lo: EmpiricalModel) -> bool:
    gap, bound = _consistency_fractions(model_hi, model_lo)
    return gap <= bound


def _consistency_fractions(model_hi: EmpiricalModel, model_lo: EmpiricalModel
                           ) -> tuple[Fraction, Fraction]:
    if model_hi.seq_fingerprint != model_lo.seq_fingerprint \
            or model_hi.seq_len != model_lo.seq_len:
        raise ValueError("models were built from different sequences")
    if model_lo.order > model_hi.order:
        raise ValueError("model_lo must have the smaller window order")
    n_hi, n_lo = model_hi.n_windows, model_lo.n_windows
    gap = Fraction(0)
    for length in range(1, model_lo.order + 1):
        hi = model_hi.prefix_counts(length)
        lo = model_lo.prefix_counts(length)
        for s in set(hi) | set(lo):
            d = abs(Fraction(hi.get(s, 0), n_hi) - Fraction(lo.get(s, 0), n_lo))
            if d > gap:
                gap = d
    bound = Fraction(model_hi.order - model_lo.order, n_hi)
    return gap, bound


def lz78_compressibility(seq: Sequence[int]) -> float:
    """Incremental-parsing estimate of compressibility, bits per symbol.

    Parses the sequence into c phrases, each the shortest prefix not yet in
    the dictionary, and returns c*(log2(c) + 1)/n.  An upper estimate of the
    best finite-state compression ratio: ~0 for constant or periodic input,
    and slightly above 1 for fair coin flips at moderate lengths.
    """
    n = len(seq)
    if n < 2:
        raise ValueError(f"need a sequence of length >= 2, got {n}")
    root: dict = {}
    node = root
    c = 0
    for v in seq:
        v = int(v)
        nxt = node.get(v)
        if nxt is None:
            node[v] = {}
            c += 1
            node = root
        else:
            node = nxt
    if node is not root:  # trailing partial phrase
        c += 1
    return c * (math.log2(c) + 1.0) / n


@lru_cache(maxsize=None)
def _affine(loss_name: str) -> AffineApprox:
    return minimax_affine(get_loss(loss_name))


def sandwich_check(seq: Sequence[int], k: int, loss: LossFn,
                   per_site_loss: float) -> float:
    """Residual |alpha*H^{k+1}(X|X^k) + beta - per_site_loss| (entropy in bits).

    When ``per_site_loss`` comes from scanning with the order-k Markov
    predictor fitted to the same sequence, the residual is at most
    eps + k*l_max/n.
    """
    approx = _affine(loss.name)
    h = cond_entropy(empirical_dist(seq, k), base="bits")
    return abs(approx.alpha * h + approx.beta - per_site_loss)


def sandwich_bound(k: int, n: int, loss: LossFn) -> float:
    """The eps + k*l_max/n budget that the sandwich residual must respect."""
    return _affine(loss.name).epsilon + k * loss.l_max / n
