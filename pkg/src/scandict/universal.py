"""Block-wise exponential-weighting universal scan-and-predict.

The algorithm splits the n x n array into blocks, walks them boustrophedon,
and before each full block draws an expert (a scanner/predictor pair defined
for m x m blocks, restarted per block) with probability proportional to
exp(-eta * cumulative loss).  With the optimal learning rate

    eta* = sqrt(8 log lambda) / (m * l_max * (n + m)),

the expected cumulative loss exceeds the best expert's by at most

    m * (n + m) * sqrt(log lambda) * l_max / sqrt(2).

Edge blocks (the 2K+1 strips and corner): the runner really scans them with
a fixed raster and the neutral prediction, but the regret ledger charges
them l_max per site to every expert and to the algorithm alike, exactly as
the bound's accounting assumes; the charges cancel in the regret.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import BlockLayout, DataArray, Rect, block_partition, raster_block_order
from .loss import LossFn
from .predict import ConstantPredictor, RepeatLastPredictor, SequentialPredictor, sequence_loss
from .scan import Scanner, raster_scan


def weights_update(cumulative_losses: Sequence[float], eta: float) -> np.ndarray:
    """Exponential-weights distribution exp(-eta*L_j), normalized.

    Stabilized by subtracting the minimum loss before exponentiating.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    L = np.asarray(cumulative_losses, dtype=np.float64)
    w = np.exp(-eta * (L - L.min()))
    return w / w.sum()


def optimal_eta(m: int, n: int, lam: int, l_max: float) -> float:
    """Minimizer of log(lambda)/eta + m^2 l_max^2 eta (n+m)^2 / 8.

    For lambda = 1 there is nothing to mix over (zero regret); any positive
    rate works, so 1.0 is returned.
    """
    if min(m, n, lam) < 1 or l_max <= 0:
        raise ValueError("all arguments must be positive")
    if lam == 1:
        return 1.0
    return math.sqrt(8.0 * math.log(lam)) / (m * l_max * (n + m))


def regret_bound(m: int, n: int, lam: int, l_max: float) -> float:
    """m(n+m) sqrt(log lambda) l_max / sqrt(2); zero when lambda = 1."""
    if min(m, n, lam) < 1 or l_max <= 0:
        raise ValueError("all arguments must be positive")
    return m * (n + m) * math.sqrt(math.log(lam)) * l_max / math.sqrt(2.0)


def chernoff_tail(K: int, m: int, epsilon: float, l_max: float) -> float:
    """Tail bound exp(-2 (K+1)^2 eps^2 / (m^2 l_max)^2).

    Bounds the probability that the realized loss of the randomized expert
    selection exceeds its expectation by (K+1)^2 * eps over the (K+1)^2
    blocks, each block loss lying in [0, m^2 l_max].
    """
    if K < 0 or m < 1 or epsilon < 0 or l_max <= 0:
        raise ValueError("bad arguments")
    return math.exp(-2.0 * (K + 1) ** 2 * epsilon ** 2 / (m * m * l_max) ** 2)


# --- expert pools -------------------------------------------------------------

@dataclass
class Expert:
    """A scanner/predictor pair defined for every block rectangle.

    ``vector_rule`` enables a vectorized per-block loss path for the simple
    predictor families ("repeat_last", "constant"); anything else falls back
    to driving the sequential predictor site by site.  Scanner factories
    must behave identically on congruent rectangles (translation
    invariance), which all built-in scanners do.
    """

    label: str
    scanner_factory: Callable[[Rect], Scanner]
    predictor_factory: Callable[[], SequentialPredictor]
    vector_rule: str | None = None
    constant_q: float = 0.0

    def block_loss(self, array: DataArray, rect: Rect, loss: LossFn) -> float:
        scanner = self.scanner_factory(rect)
        traj = scanner.trajectory(array)
        return sequence_loss(traj.values, self.predictor_factory(), loss)


def repeat_last_expert(label: str, scanner_factory, loss: LossFn) -> Expert:
    return Expert(label=label, scanner_factory=scanner_factory,
                  predictor_factory=lambda: RepeatLastPredictor(loss.neutral),
                  vector_rule="repeat_last")


def constant_expert(label: str, scanner_factory, q: float) -> Expert:
    return Expert(label=label, scanner_factory=scanner_factory,
                  predictor_factory=lambda: ConstantPredictor(q),
                  vector_rule="constant", constant_q=q)


def _blocks_matrix(array: DataArray, rects: Sequence[Rect]) -> np.ndarray:
    return np.stack([
        array.values[r.row0:r.row0 + r.n_rows, r.col0:r.col0 + r.n_cols].ravel()
        for r in rects
    ])


def expert_block_losses(expert: Expert, array: DataArray, rects: Sequence[Rect],
                        loss: LossFn) -> np.ndarray:
    """Loss of the (restarted) expert on each block, as a vector."""
    shapes = {r.shape for r in rects}
    scanner0 = expert.scanner_factory(rects[0])
    if expert.vector_rule and len(shapes) == 1 and scanner0.data_independent:
        order = scanner0.flat_order()  # type: ignore[attr-defined]
        M = _blocks_matrix(array, rects)[:, order]
        if expert.vector_rule == "repeat_last":
            inner = loss.eval_array(M[:, 1:], M[:, :-1].astype(np.float64))
            first = loss.eval_array(M[:, 0], np.float64(loss.neutral))
            return inner.sum(axis=1) + first
        if expert.vector_rule == "constant":
            return loss.eval_array(M, np.float64(expert.constant_q)).sum(axis=1)
    return np.array([expert.block_loss(array, r, loss) for r in rects])


def pool_loss_matrix(experts: Sequence[Expert], array: DataArray,
                     rects: Sequence[Rect], loss: LossFn) -> np.ndarray:
    """Per-expert per-block losses, shape (n_experts, n_blocks)."""
    return np.stack([expert_block_losses(e, array, rects, loss) for e in experts])


# --- the runner ----------------------------------------------------------------

@dataclass
class RunLog:
    """Everything one universal run produced, ledger and realized.

    The ledger follows the regret accounting: edge blocks charge l_max per
    site to the algorithm and to every expert (so they cancel in the
    regret); full blocks carry the simulated expert losses.  Realized
    quantities use the actual edge-block raster scan with the neutral
    prediction.
    """

    n: int
    m: int
    eta: float
    l_max: float
    seed: int
    expert_labels: list[str]
    block_kinds: list[str]  # "full" or "edge", in visiting order
    loss_matrix: np.ndarray  # (lambda, n_full) simulated expert losses
    probs: np.ndarray  # (n_full, lambda) selection distribution per full block
    chosen: np.ndarray  # (n_full,) sampled expert index per full block
    edge_charges: np.ndarray  # ledger charge per edge block (area * l_max)
    edge_real_losses: np.ndarray  # realized raster+neutral loss per edge block
    weight_ratio_margins: np.ndarray = field(repr=False)  # per full block, <= 0

    @property
    def n_experts(self) -> int:
        return len(self.expert_labels)

    @property
    def L_alg(self) -> float:
        """Ledger loss of the realized run."""
        chosen_losses = self.loss_matrix[self.chosen, np.arange(len(self.chosen))]
        return float(chosen_losses.sum() + self.edge_charges.sum())

    @property
    def L_bar(self) -> float:
        """Expected ledger loss sum_i sum_j P_i(j) L_j(x^i) (+ edge charges)."""
        return float((self.probs * self.loss_matrix.T).sum() + self.edge_charges.sum())

    @property
    def per_expert_totals(self) -> np.ndarray:
        return self.loss_matrix.sum(axis=1) + self.edge_charges.sum()

    @property
    def L_min(self) -> float:
        return float(self.per_expert_totals.min())

    @property
    def best_expert(self) -> int:
        return int(self.per_expert_totals.argmin())

    @property
    def regret(self) -> float:
        return self.L_bar - self.L_min

    @property
    def regret_bound(self) -> float:
        return regret_bound(self.m, self.n, self.n_experts, self.l_max)

    @property
    def L_alg_real(self) -> float:
        chosen_losses = self.loss_matrix[self.chosen, np.arange(len(self.chosen))]
        return float(chosen_losses.sum() + self.edge_real_losses.sum())

    def to_csv(self, path) -> None:
        """Per-block CSV: index, chosen expert, losses, running totals."""
        with open(path, "w") as fh:
            labels = ",".join(f"L_{lbl}" for lbl in self.expert_labels)
            fh.write(f"block,kind,chosen,block_loss,cum_L_alg,cum_L_bar,{labels}\n")
            cum_alg = 0.0
            cum_bar = 0.0
            cum_experts = np.zeros(self.n_experts)
            i_full = 0
            i_edge = 0
            for b, kind in enumerate(self.block_kinds):
                if kind == "full":
                    j = int(self.chosen[i_full])
                    bl = float(self.loss_matrix[j, i_full])
                    cum_bar += float(self.probs[i_full] @ self.loss_matrix[:, i_full])
                    cum_experts += self.loss_matrix[:, i_full]
                    chosen_s = str(j)
                    i_full += 1
                else:
                    bl = float(self.edge_charges[i_edge])
                    cum_bar += bl
                    cum_experts += bl
                    chosen_s = "-1"
                    i_edge += 1
                cum_alg += bl
                per_exp = ",".join(f"{v:.10g}" for v in cum_experts)
                fh.write(f"{b},{kind},{chosen_s},{bl:.10g},{cum_alg:.10g},"
                         f"{cum_bar:.10g},{per_exp}\n")


def weight_ratio_margins(loss_matrix: np.ndarray, probs: np.ndarray, eta: float,
                         m: int, l_max: float) -> np.ndarray:
    """Per-block slack of log(W_{i+1}/W_i) <= -eta E_{P_i}[L] + m^4 l_max^2 eta^2/8.

    Returns lhs - rhs, which must be <= 0 at every step; W_i is the total
    weight sum_j exp(-eta L_{j,i}).
    """
    lam, nb = loss_matrix.shape
    cum = np.concatenate([np.zeros((lam, 1)), np.cumsum(loss_matrix, axis=1)], axis=1)
    shift = cum.min(axis=0)  # stabilize both logsumexp evaluations alike
    logW = np.log(np.exp(-eta * (cum - shift)).sum(axis=0)) - eta * shift
    lhs = logW[1:] - logW[:-1]
    rhs = -eta * (probs * loss_matrix.T).sum(axis=1) + (m ** 4) * (l_max ** 2) * eta ** 2 / 8.0
    return lhs - rhs


def run_universal(array: DataArray, experts: Sequence[Expert], m: int,
                  loss: LossFn, eta: float | None = None, seed: int = 0) -> RunLog:
    """One seeded run of the block-wise exponential-weighting algorithm.

    Simulates every expert on every full block (the weights need all
    cumulative losses), samples the acting expert per block independently
    from the exponential-weights distribution, and logs both the ledger and
    the realized accounting.
    """
    n = array.n_rows
    if array.n_cols != n:
        raise ValueError("universal runner expects a square array")
    layout = block_partition(n, m)
    lam = len(experts)
    if lam < 1:
        raise ValueError("need at least one expert")
    if eta is None:
        eta = optimal_eta(m, n, lam, loss.l_max)
    full_set = set(layout.full_blocks)
    ordered = raster_block_order(layout)
    full_rects = [r for r in ordered if r in full_set]
    edge_rects = [r for r in ordered if r not in full_set]
    block_kinds = ["full" if r in full_set else "edge" for r in ordered]

    Lmat = pool_loss_matrix(experts, array, full_rects, loss) if full_rects \
        else np.zeros((lam, 0))
    cum = np.concatenate([np.zeros((lam, 1)), np.cumsum(Lmat, axis=1)], axis=1)
    probs = np.stack([weights_update(cum[:, i], eta) for i in range(len(full_rects))]) \
        if full_rects else np.zeros((0, lam))

    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(len(full_rects))
    chosen = (probs.cumsum(axis=1) < u[:, None]).sum(axis=1) if full_rects \
        else np.zeros(0, dtype=np.int64)

    edge_charges = np.array([r.area * loss.l_max for r in edge_rects])
    neutral = ConstantPredictor(loss.neutral)
    edge_real = np.array([
        sequence_loss(raster_scan(r).trajectory(array).values, neutral, loss)
        for r in edge_rects
    ])
    margins = weight_ratio_margins(Lmat, probs, eta, m, loss.l_max) if full_rects \
        else np.zeros(0)
    return RunLog(n=n, m=m, eta=eta, l_max=loss.l_max, seed=seed,
                  expert_labels=[e.label for e in experts],
                  block_kinds=block_kinds, loss_matrix=Lmat, probs=probs,
                  chosen=chosen.astype(np.int64), edge_charges=edge_charges,
                  edge_real_losses=edge_real, weight_ratio_margins=margins)
