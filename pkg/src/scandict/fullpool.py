"""Exponential weighting over *every* scanner/predictor pair for tiny blocks.

For an h x w block over binary symbols with predictions on a finite grid D,
the complete pool contains prod_{k=0}^{B-1} (B-k)^(2^k) scanners times
|D|^(2^B - 1) predictors (B = h*w); for a 2 x 2 binary block with D = {0,1}
that is 576 * 32768 = 18,874,368 scandictors.  Materializing them is
pointless: an expert is one choice of (site, prediction) at every node of
the binary value tree, its cumulative loss adds up node by node, and the
blocks reaching a node are determined by the shared ancestor choices.  The
exponential-weights sum, the pool minimum, the expected loss on a new block
and exact sampling of the acting expert therefore all factorize over that
tree and cost only a few thousand node visits per block.

``run_tiny_universal`` is the block-wise universal scandictor run against
this complete pool; its regret obeys the usual m(n+m) sqrt(log lambda)
l_max / sqrt(2) bound with log lambda = log of the pool size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import DataArray, block_partition, raster_block_order
from .loss import HAMMING, LossFn
from .predict import ConstantPredictor, sequence_loss
from .scan import raster_scan


def _logsumexp(vals: list[float]) -> float:
    m = max(vals)
    return m + math.log(sum(math.exp(v - m) for v in vals))


class TinyBlockPool:
    """Factorized exponential weighting over the complete scandictor pool.

    Histories are multisets of observed blocks, kept as counts over the 2^B
    value patterns (pattern bit s = value at site s, sites flat row-major).
    """

    def __init__(self, shape: tuple[int, int] = (2, 2), loss: LossFn = HAMMING,
                 pred_grid: tuple[float, ...] = (0.0, 1.0), eta: float = 1.0):
        h, w = shape
        self.B = h * w
        if self.B > 6:
            raise ValueError("complete pools beyond 6 sites are infeasible")
        self.shape = shape
        self.loss = loss
        self.pred_grid = pred_grid
        self.eta = eta
        self.n_patterns = 1 << self.B
        # bit s of pattern p = value at flat site s
        self.bits = [[(p >> s) & 1 for s in range(self.B)] for p in range(self.n_patterns)]
        # per-symbol loss row for each grid prediction
        self.lv = [(loss.evaluate(0, d), loss.evaluate(1, d)) for d in pred_grid]
        self._z_memo: dict = {}
        self._m_memo: dict = {}

    @property
    def log_pool_size(self) -> float:
        """log(#scanners * #predictors) for the full pool."""
        scanners = sum((2 ** k) * math.log(self.B - k) for k in range(self.B))
        predictors = (2 ** self.B - 1) * math.log(len(self.pred_grid))
        return scanners + predictors

    def empty_history(self) -> tuple[int, ...]:
        return (0,) * self.n_patterns

    def add_block(self, counts: tuple[int, ...], pattern: int) -> tuple[int, ...]:
        lst = list(counts)
        lst[pattern] += 1
        return tuple(lst)

    def encode_block(self, values) -> int:
        flat = np.asarray(values).ravel()
        return int(sum(int(v) << s for s, v in enumerate(flat)))

    # -- shared node arithmetic ------------------------------------------

    def _site_counts(self, counts: tuple[int, ...], s: int) -> tuple[int, int]:
        n1 = sum(c for p, c in enumerate(counts) if c and self.bits[p][s])
        return sum(counts) - n1, n1

    def _split(self, counts: tuple[int, ...], s: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        c0 = list(counts)
        c1 = list(counts)
        for p, c in enumerate(counts):
            if self.bits[p][s]:
                c0[p] = 0
            else:
                c1[p] = 0
        return tuple(c0), tuple(c1)

    def _node_terms(self, avail: tuple[int, ...], counts: tuple[int, ...]):
        """For each (site, pred): (-eta * history loss, child0, child1, site, pred)."""
        out = []
        for s in avail:
            n0, n1 = self._site_counts(counts, s)
            rest = tuple(a for a in avail if a != s)
            c0, c1 = self._split(counts, s)
            for d_idx, (l0, l1) in enumerate(self.lv):
                out.append((-self.eta * (n0 * l0 + n1 * l1), rest, c0, c1, s, d_idx))
        return out

    # -- weight sum, minimum, expectation, sampling ------------------------

    def log_weight_sum(self, counts: tuple[int, ...]) -> float:
        """log sum over the pool of exp(-eta * cumulative loss on history)."""
        return self._z(tuple(range(self.B)), counts)

    def _z(self, avail: tuple[int, ...], counts: tuple[int, ...]) -> float:
        if not avail:
            return 0.0
        key = (avail, counts)
        hit = self._z_memo.get(key)
        if hit is not None:
            return hit
        vals = [w + self._z(rest, c0) + self._z(rest, c1)
                for w, rest, c0, c1, _, _ in self._node_terms(avail, counts)]
        val = _logsumexp(vals)
        self._z_memo[key] = val
        return val

    def min_loss(self, counts: tuple[int, ...]) -> float:
        """Cumulative loss of the best expert in the pool on the history."""
        return self._min(tuple(range(self.B)), counts)

    def _min(self, avail: tuple[int, ...], counts: tuple[int, ...]) -> float:
        if not avail:
            return 0.0
        key = (avail, counts)
        hit = self._m_memo.get(key)
        if hit is not None:
            return hit
        best = math.inf
        for w, rest, c0, c1, _, _ in self._node_terms(avail, counts):
            v = -w / self.eta + self._min(rest, c0) + self._min(rest, c1)
            if v < best:
                best = v
        self._m_memo[key] = best
        return best

    def _posterior(self, avail, counts, terms):
        logw = [w + self._z(rest, c0) + self._z(rest, c1)
                for w, rest, c0, c1, _, _ in terms]
        mx = max(logw)
        q = np.exp(np.array(logw) - mx)
        return q / q.sum()

    def expected_block_loss(self, counts: tuple[int, ...], pattern: int) -> float:
        """E over the exponential-weights posterior of the new block's loss."""
        return self._expect(tuple(range(self.B)), counts, pattern)

    def _expect(self, avail, counts, pattern) -> float:
        if not avail:
            return 0.0
        terms = self._node_terms(avail, counts)
        q = self._posterior(avail, counts, terms)
        total = 0.0
        for qi, (_, rest, c0, c1, s, d_idx) in zip(q, terms):
            v = self.bits[pattern][s]
            step = self.lv[d_idx][v]
            child = c1 if v else c0
            total += qi * (step + self._expect(rest, child, pattern))
        return float(total)

    def root_action_probs(self, counts: tuple[int, ...]) -> dict[tuple[int, int], float]:
        """Posterior probability of each first (site, prediction) action."""
        avail = tuple(range(self.B))
        terms = self._node_terms(avail, counts)
        q = self._posterior(avail, counts, terms)
        return {(s, d): float(qi) for qi, (_, _, _, _, s, d) in zip(q, terms)}

    def sample_block_run(self, counts: tuple[int, ...], pattern: int,
                         rng: np.random.Generator) -> tuple[list[int], list[float], float]:
        """Draw an expert from the posterior and run it on the new block.

        Only the behavior along the realized path is sampled; the draw at
        each node depends on history alone, never on the unseen values.
        Returns (visited flat sites, predictions, realized loss).
        """
        avail = tuple(range(self.B))
        cnt = counts
        order: list[int] = []
        preds: list[float] = []
        total = 0.0
        while avail:
            terms = self._node_terms(avail, cnt)
            q = self._posterior(avail, cnt, terms)
            pick = int((np.cumsum(q) < rng.random()).sum())
            _, rest, c0, c1, s, d_idx = terms[pick]
            v = self.bits[pattern][s]
            order.append(s)
            preds.append(self.pred_grid[d_idx])
            total += self.lv[d_idx][v]
            avail = rest
            cnt = c1 if v else c0
        return order, preds, total


@dataclass
class TinyRunLog:
    """Ledger of one complete-pool universal run (edge blocks charged l_max)."""

    n: int
    m: int
    eta: float
    l_max: float
    log_pool_size: float
    expected_block: np.ndarray  # E_{P_i}[loss] per full block
    realized_block: np.ndarray  # sampled expert's loss per full block
    weight_ratio_margins: np.ndarray  # per full block, must be <= 0
    pool_min: float  # best expert's loss over the full blocks
    edge_charge: float
    edge_real: float

    @property
    def L_bar(self) -> float:
        return float(self.expected_block.sum() + self.edge_charge)

    @property
    def L_alg(self) -> float:
        return float(self.realized_block.sum() + self.edge_charge)

    @property
    def L_min(self) -> float:
        return self.pool_min + self.edge_charge

    @property
    def regret(self) -> float:
        return self.L_bar - self.L_min

    @property
    def regret_bound(self) -> float:
        return self.m * (self.n + self.m) * math.sqrt(self.log_pool_size) \
            * self.l_max / math.sqrt(2.0)


def run_tiny_universal(array: DataArray, loss: LossFn = HAMMING,
                       eta: float | None = None, seed: int = 0,
                       pred_grid: tuple[float, ...] = (0.0, 1.0)) -> TinyRunLog:
    """Universal scandiction of a square array against the full 2x2 pool."""
    n = array.n_rows
    if array.n_cols != n:
        raise ValueError("expected a square array")
    m = 2
    layout = block_partition(n, m)
    probe = TinyBlockPool((m, m), loss, pred_grid, eta=1.0)
    if eta is None:
        eta = math.sqrt(8.0 * probe.log_pool_size) / (m * loss.l_max * (n + m))
    pool = TinyBlockPool((m, m), loss, pred_grid, eta=eta)

    full_set = set(layout.full_blocks)
    rng = np.random.Generator(np.random.PCG64(seed))
    hoeffding = (m ** 4) * (loss.l_max ** 2) * eta ** 2 / 8.0
    counts = pool.empty_history()
    expected: list[float] = []
    realized: list[float] = []
    margins: list[float] = []
    edge_charge = 0.0
    edge_real = 0.0
    neutral = ConstantPredictor(loss.neutral)
    for rect in raster_block_order(layout):
        if rect in full_set:
            pattern = pool.encode_block(
                array.values[rect.row0:rect.row0 + m, rect.col0:rect.col0 + m])
            e = pool.expected_block_loss(counts, pattern)
            _, _, real = pool.sample_block_run(counts, pattern, rng)
            z_before = pool.log_weight_sum(counts)
            counts = pool.add_block(counts, pattern)
            z_after = pool.log_weight_sum(counts)
            margins.append((z_after - z_before) - (-eta * e + hoeffding))
            expected.append(e)
            realized.append(real)
        else:
            edge_charge += rect.area * loss.l_max
            edge_real += sequence_loss(raster_scan(rect).trajectory(array).values,
                                       neutral, loss)
    return TinyRunLog(n=n, m=m, eta=eta, l_max=loss.l_max,
                      log_pool_size=pool.log_pool_size,
                      expected_block=np.array(expected),
                      realized_block=np.array(realized),
                      weight_ratio_margins=np.array(margins),
                      pool_min=pool.min_loss(counts),
                      edge_charge=edge_charge, edge_real=edge_real)
