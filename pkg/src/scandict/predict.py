"""Predictors and the scan-and-predict driver.

A sequential predictor emits a prediction before each observation and then
sees the true value; fed the observation stream of a scanner this realizes
the scan-and-predict loop whose cumulative loss is
sum_t l(x_{t}, F_t(x_1 .. x_{t-1})).

``markov_fit`` builds the batch-optimal order-k Markov predictor for a given
observation sequence: for every length-k context the decision is the Bayes
act against the empirical conditional of the next symbol.  Contexts shorter
than k (the first steps of a scan or block) are padded with a distinguished
start marker so they form their own table entries.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import DataArray
from .loss import LossFn
from .scan import Scanner, ScanTrajectory

START = "^"  # start-of-scan marker used to pad short contexts


def bayes_predict(p: float, loss: LossFn) -> float:
    """Optimal single prediction against Bernoulli(p) under ``loss``.

    Attains the Bayes envelope: hamming/absolute pick the majority symbol
    (ties predict 0), squared and log predict p itself.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p}")
    return loss.bayes_opt(p)


class SequentialPredictor(ABC):
    """predict() before each symbol, observe() after; reset() restarts."""

    @abstractmethod
    def reset(self) -> None: ...

    @abstractmethod
    def predict(self) -> float: ...

    @abstractmethod
    def observe(self, x) -> None: ...


class ConstantPredictor(SequentialPredictor):
    def __init__(self, q: float):
        self.q = q

    def reset(self) -> None:
        pass

    def predict(self) -> float:
        return self.q

    def observe(self, x) -> None:
        pass


class RepeatLastPredictor(SequentialPredictor):
    """Predicts the previous observation; a neutral value at the first step."""

    def __init__(self, first: float = 0.0):
        self.first = first
        self.last: float | None = None

    def reset(self) -> None:
        self.last = None

    def predict(self) -> float:
        return self.first if self.last is None else self.last

    def observe(self, x) -> None:
        self.last = float(x)


@dataclass
class MarkovTable:
    """Batch-fitted order-k context table: counts and Bayes decisions.

    ``counts[ctx]`` is the (n0, n1) pair of next-symbol counts after the
    context; ``decisions[ctx]`` minimizes the empirical conditional risk.
    Unseen contexts map to the neutral prediction (the 0/0 := 1/2 rule).
    """

    order: int
    loss: LossFn
    counts: dict[tuple, np.ndarray]
    decisions: dict[tuple, float]

    def predict(self, context: tuple) -> float:
        return self.decisions.get(tuple(context), self.loss.neutral)

    def sequential(self) -> "MarkovPredictor":
        return MarkovPredictor(self)


def _context_at(seq: Sequence, t: int, k: int) -> tuple:
    if t >= k:
        return tuple(seq[t - k:t])
    return (START,) + tuple(seq[:t])


def markov_fit(seq: Sequence[int], k: int, loss: LossFn) -> MarkovTable:
    """Fit the loss-optimal order-k Markov predictor to a binary sequence."""
    n = len(seq)
    if k < 0:
        raise ValueError(f"order must be >= 0, got {k}")
    if n <= k:
        raise ValueError(f"sequence of length {n} too short for order {k}")
    counts: dict[tuple, np.ndarray] = {}
    for t in range(n):
        ctx = _context_at(seq, t, k)
        c = counts.get(ctx)
        if c is None:
            c = counts[ctx] = np.zeros(2, dtype=np.int64)
        c[int(seq[t])] += 1
    decisions = {
        ctx: bayes_predict(c[1] / (c[0] + c[1]), loss) for ctx, c in counts.items()
    }
    return MarkovTable(order=k, loss=loss, counts=counts, decisions=decisions)


class MarkovPredictor(SequentialPredictor):
    """Sequential view of a fitted MarkovTable."""

    def __init__(self, table: MarkovTable):
        self.table = table
        self._seen: list = []
        self._ctx: deque = deque(maxlen=table.order if table.order > 0 else 1)

    def reset(self) -> None:
        self._seen = []
        self._ctx.clear()

    def _context(self) -> tuple:
        k = self.table.order
        if k == 0:
            return ()
        if len(self._seen) >= k:
            return tuple(self._ctx)
        return (START,) + tuple(self._seen)

    def predict(self) -> float:
        return self.table.predict(self._context())

    def observe(self, x) -> None:
        self._seen.append(int(x))
        if self.table.order > 0:
            self._ctx.append(int(x))


class OnlineMarkovPredictor(SequentialPredictor):
    """Plug-in order-k rule: Bayes act against the counts seen so far.

    A fixed deterministic function of the observed prefix (so a legal
    predictor), convenient as a pool expert; contexts not seen yet predict
    the neutral value.
    """

    def __init__(self, k: int, loss: LossFn):
        self.k = k
        self.loss = loss
        self.reset()

    def reset(self) -> None:
        self.counts: dict[tuple, list[int]] = {}
        self._seen: list[int] = []

    def _context(self) -> tuple:
        if len(self._seen) >= self.k:
            return tuple(self._seen[len(self._seen) - self.k:])
        return (START,) + tuple(self._seen)

    def predict(self) -> float:
        c = self.counts.get(self._context())
        if c is None or c[0] + c[1] == 0:
            return self.loss.neutral
        return bayes_predict(c[1] / (c[0] + c[1]), self.loss)

    def observe(self, x) -> None:
        ctx = self._context()
        c = self.counts.setdefault(ctx, [0, 0])
        c[int(x)] += 1
        self._seen.append(int(x))


def sequence_loss(values: np.ndarray, predictor: SequentialPredictor,
                  loss: LossFn) -> float:
    """Cumulative loss of a sequential predictor on an observation stream."""
    predictor.reset()
    total = 0.0
    for x in values:
        q = predictor.predict()
        total += loss.evaluate(x, q)
        predictor.observe(x)
    return total


def scandict(array: DataArray, scanner: Scanner,
             predictor: SequentialPredictor, loss: LossFn
             ) -> tuple[float, ScanTrajectory]:
    """Scan ``array`` and predict each value from the observed prefix.

    Returns the cumulative loss sum_t l(x_t, F_t(x_1..x_{t-1})) together
    with the trajectory.  The site chosen at step t depends only on values
    observed before t, so scanning first and replaying the value stream
    through the predictor is equivalent to interleaving.
    """
    traj = scanner.trajectory(array)
    return sequence_loss(traj.values, predictor, loss), traj
