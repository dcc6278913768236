"""Scanners: data-independent site orders, finite-state machines, composition.

A scanner enumerates every site of its rectangular domain exactly once; at
each step it may look only at the values already observed.  Provided here:

* the 8 axis-aligned raster orientations and the boustrophedon (serpentine),
* the Hilbert space-filling order on 2^k x 2^k squares,
* the odds-then-evens order on 1 x n rows,
* finite-state scanner machines driven by (state, observed symbol) tables,
  with an EoF symbol read whenever the machine steps off the grid,
* block-wise composition: an inner scanner restarted on every block of a
  partition, blocks visited boustrophedon with the edge blocks last,
* the context-overlap count between two scans (how many sites keep their
  immediate predecessor within a window of the other scan).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import BlockLayout, DataArray, Rect, Site, raster_block_order


class InvalidScannerError(RuntimeError):
    """The machine revisited a site or failed to cover its domain in budget."""


class UnsupportedSizeError(ValueError):
    """The requested domain shape is not supported by this scanner."""


class DomainMismatchError(ValueError):
    """Two trajectories do not cover the same site set."""


@dataclass
class ScanTrajectory:
    """The ordered sites of a completed scan and the values observed."""

    sites: list[Site]
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.sites)


class Scanner(ABC):
    """One pass over a rectangular domain, one site per step."""

    domain: Rect
    data_independent: bool = False

    @abstractmethod
    def trajectory(self, array: DataArray) -> ScanTrajectory:
        """Scan ``array`` (which must contain the domain) and record values."""


class SiteOrderScanner(Scanner):
    """A data-independent scanner defined by a fixed site order."""

    data_independent = True

    def __init__(self, domain: Rect, order: Sequence[Site]):
        if len(order) != domain.area or len(set(order)) != domain.area:
            raise InvalidScannerError("site order is not a permutation of the domain")
        for s in order:
            if not domain.contains(s):
                raise InvalidScannerError(f"site {s} outside domain {domain}")
        self.domain = domain
        self._order = [Site(*s) for s in order]

    def site_order(self) -> list[Site]:
        return list(self._order)

    def flat_order(self) -> np.ndarray:
        """Scan order as row-major flat indices relative to the domain."""
        r0, c0, w = self.domain.row0, self.domain.col0, self.domain.n_cols
        return np.array([(s.row - r0) * w + (s.col - c0) for s in self._order])

    def trajectory(self, array: DataArray) -> ScanTrajectory:
        vals = np.array([array.values[s.row, s.col] for s in self._order])
        return ScanTrajectory(sites=list(self._order), values=vals)


# --- rasters --------------------------------------------------------------

RASTER_ORIENTATIONS = (
    "row-lr-tb", "row-rl-tb", "row-lr-bt", "row-rl-bt",
    "col-tb-lr", "col-bt-lr", "col-tb-rl", "col-bt-rl",
)


def raster_scan(rect: Rect, orientation: str = "row-lr-tb") -> SiteOrderScanner:
    """One of the 8 axis-aligned rasters.

    ``row-lr-tb`` reads: row-major, cells left-to-right, rows top-to-bottom.
    The 1 x n row with the default orientation is the classical prediction
    setting (identity order).
    """
    if orientation not in RASTER_ORIENTATIONS:
        raise ValueError(f"orientation must be one of {RASTER_ORIENTATIONS}")
    major, first, second = orientation.split("-")
    rows = list(range(rect.row0, rect.row0 + rect.n_rows))
    cols = list(range(rect.col0, rect.col0 + rect.n_cols))
    if major == "row":
        cols = cols if first == "lr" else cols[::-1]
        rows = rows if second == "tb" else rows[::-1]
        order = [Site(r, c) for r in rows for c in cols]
    else:
        rows = rows if first == "tb" else rows[::-1]
        cols = cols if second == "lr" else cols[::-1]
        order = [Site(r, c) for c in cols for r in rows]
    return SiteOrderScanner(rect, order)


def serpentine_scan(rect: Rect) -> SiteOrderScanner:
    """Boustrophedon rows: row 0 left-to-right, row 1 right-to-left, ..."""
    order: list[Site] = []
    for i, r in enumerate(range(rect.row0, rect.row0 + rect.n_rows)):
        cols = range(rect.col0, rect.col0 + rect.n_cols)
        if i % 2 == 1:
            cols = reversed(cols)
        order.extend(Site(r, c) for c in cols)
    return SiteOrderScanner(rect, order)


# --- Hilbert curve ----------------------------------------------------------

def _hilbert_xy(side: int, d: int) -> tuple[int, int]:
    # canonical variant: starts at the NW corner, first step downward
    rx = ry = 0
    x = y = 0
    t = d
    s = 1
    while s < side:
        rx = 1 & (t // 2)
        ry = 1 & (t ^ rx)
        if ry == 0:
            if rx == 1:
                x = s - 1 - x
                y = s - 1 - y
            x, y = y, x
        x += s * rx
        y += s * ry
        t //= 4
        s *= 2
    return x, y


def hilbert_order(k: int) -> list[Site]:
    """Hilbert traversal of the 2^k x 2^k square anchored at the origin.

    Consecutive sites are at l1 distance exactly 1; the first site is the
    corner (0, 0).
    """
    if k < 1:
        raise UnsupportedSizeError(f"order must be >= 1, got {k}")
    side = 1 << k
    return [Site(y, x) for x, y in (_hilbert_xy(side, d) for d in range(side * side))]


def hilbert_scan(k: int) -> SiteOrderScanner:
    side = 1 << k
    return SiteOrderScanner(Rect(0, 0, side, side), hilbert_order(k))


def hilbert_scan_rect(rect: Rect) -> SiteOrderScanner:
    """Hilbert scan translated to ``rect``; the rect must be a 2^k square."""
    side = rect.n_rows
    if rect.n_cols != side or side < 2 or side & (side - 1):
        raise UnsupportedSizeError(
            f"Hilbert scan needs a 2^k x 2^k square with k >= 1, got {rect.shape}")
    k = side.bit_length() - 1
    order = [Site(s.row + rect.row0, s.col + rect.col0) for s in hilbert_order(k)]
    return SiteOrderScanner(rect, order)


# --- odds then evens --------------------------------------------------------

def odds_then_evens(n: int) -> SiteOrderScanner:
    """On a 1 x n row: odd 1-based indices ascending, then even ascending.

    n=5 gives 1,3,5,2,4 (i.e. columns 0,2,4,1,3).
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    rect = Rect(0, 0, 1, n)
    order = [Site(0, c) for c in range(0, n, 2)] + [Site(0, c) for c in range(1, n, 2)]
    return SiteOrderScanner(rect, order)


# --- finite-state scanner machines -----------------------------------------

EOF_SYMBOL = "EoF"


@dataclass(frozen=True)
class FsmScannerSpec:
    """A finite-state scanner machine.

    After observing the value at the current site (or EoF when the machine
    has stepped off the grid) in state s, the machine moves to state
    s' = transitions[(s, symbol)] and displaces by displacement[s'].  EoF is
    an ordinary input symbol for the transition table.  Transition entries
    missing for a (state, symbol) pair default to staying in the state.
    """

    states: tuple[str, ...]
    initial_state: str
    initial_site: Site
    displacement: dict[str, tuple[int, int]] = field(hash=False)
    transitions: dict[tuple[str, str], str] = field(hash=False)

    def __post_init__(self) -> None:
        if self.initial_state not in self.states:
            raise ValueError(f"initial state {self.initial_state!r} not in states")
        for s in self.states:
            if s not in self.displacement:
                raise ValueError(f"missing displacement for state {s!r}")
        for (s, _), s2 in self.transitions.items():
            if s not in self.states or s2 not in self.states:
                raise ValueError("transition table mentions unknown state")

    def next_state(self, state: str, symbol: str) -> str:
        return self.transitions.get((state, symbol), state)

    # plain-text FSMSCAN format: header, initial line, displacement lines,
    # transition lines; round-trip stable.
    def to_text(self) -> str:
        lines = [f"FSMSCAN {len(self.states)}"]
        lines.append("states " + " ".join(self.states))
        lines.append(f"initial {self.initial_state} {self.initial_site.row} {self.initial_site.col}")
        for s in self.states:
            dr, dc = self.displacement[s]
            lines.append(f"disp {s} {dr} {dc}")
        for (s, sym), s2 in self.transitions.items():
            lines.append(f"trans {s} {sym} {s2}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FsmScannerSpec":
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0][0] != "FSMSCAN":
            raise ValueError("not an FSMSCAN table")
        states: tuple[str, ...] = ()
        initial_state = ""
        initial_site = Site(0, 0)
        displacement: dict[str, tuple[int, int]] = {}
        transitions: dict[tuple[str, str], str] = {}
        for parts in lines[1:]:
            if parts[0] == "states":
                states = tuple(parts[1:])
            elif parts[0] == "initial":
                initial_state = parts[1]
                initial_site = Site(int(parts[2]), int(parts[3]))
            elif parts[0] == "disp":
                displacement[parts[1]] = (int(parts[2]), int(parts[3]))
            elif parts[0] == "trans":
                transitions[(parts[1], parts[2])] = parts[3]
            else:
                raise ValueError(f"unknown FSMSCAN line {' '.join(parts)!r}")
        return cls(states=states, initial_state=initial_state,
                   initial_site=initial_site, displacement=displacement,
                   transitions=transitions)


class FsmScanner(Scanner):
    """Runs an FsmScannerSpec over a rectangular domain.

    The machine may step off the domain transiently (it then reads EoF), but
    every on-grid arrival must be a fresh site and the whole domain must be
    covered within the step budget, else the spec violates the coverage
    requirement and an InvalidScannerError is raised.  The budget allows a
    bounded number of off-grid excursion steps on top of the |B| visits.
    """

    def __init__(self, spec: FsmScannerSpec, domain: Rect):
        self.spec = spec
        self.domain = domain

    def trajectory(self, array: DataArray) -> ScanTrajectory:
        dom = self.domain
        if not (array.n_rows >= dom.row0 + dom.n_rows
                and array.n_cols >= dom.col0 + dom.n_cols):
            raise ValueError("array does not contain the scanner domain")
        budget = 4 * dom.area + 64
        pos = Site(dom.row0 + self.spec.initial_site.row,
                   dom.col0 + self.spec.initial_site.col)
        state = self.spec.initial_state
        visited: set[Site] = set()
        sites: list[Site] = []
        values: list = []
        for _ in range(budget):
            if dom.contains(pos):
                if pos in visited:
                    raise InvalidScannerError(f"machine revisited site {pos}")
                visited.add(pos)
                sites.append(pos)
                values.append(array[pos])
                if len(visited) == dom.area:
                    return ScanTrajectory(sites=sites, values=np.array(values))
                symbol = str(array[pos])
            else:
                symbol = EOF_SYMBOL
            state = self.spec.next_state(state, symbol)
            dr, dc = self.spec.displacement[state]
            pos = Site(pos.row + dr, pos.col + dc)
        raise InvalidScannerError(
            f"machine did not cover the {dom.area}-site domain within budget")


def fsm_scan(spec: FsmScannerSpec, array: DataArray) -> ScanTrajectory:
    """Execute a finite-state scanner spec over the whole array."""
    return FsmScanner(spec, array.rect).trajectory(array)


def serpentine_fsm(alphabet_symbols: Sequence[str] = ("0", "1")) -> FsmScannerSpec:
    """A 4-state machine realizing the boustrophedon raster on any rectangle.

    Moving right (state R) it reads EoF one step past the row end, turns via
    the diagonal displacement of state TR onto the next row's last cell, and
    continues left (L); symmetrically TL turns back to R.  One off-grid
    excursion step per row turn.
    """
    trans: dict[tuple[str, str], str] = {}
    for sym in alphabet_symbols:
        trans[("R", sym)] = "R"
        trans[("L", sym)] = "L"
        trans[("TR", sym)] = "L"
        trans[("TL", sym)] = "R"
    trans[("R", EOF_SYMBOL)] = "TR"
    trans[("L", EOF_SYMBOL)] = "TL"
    return FsmScannerSpec(
        states=("R", "L", "TR", "TL"),
        initial_state="R",
        initial_site=Site(0, 0),
        displacement={"R": (0, 1), "L": (0, -1), "TR": (1, -1), "TL": (1, 1)},
        transitions=trans,
    )


# --- block-wise composition -------------------------------------------------

class BlockwiseScanner(Scanner):
    """Inner scanner restarted on every block of a partition.

    Blocks are visited in raster_block_order (full blocks boustrophedon,
    then the edge blocks).  ``inner_factory`` builds the scanner for the
    m x m full blocks; ``edge_factory`` (default: row raster) covers the
    possibly smaller edge blocks.  Downstream, predictors are restarted at
    each block boundary as well.
    """

    def __init__(self, layout: BlockLayout,
                 inner_factory: Callable[[Rect], Scanner],
                 edge_factory: Callable[[Rect], Scanner] | None = None):
        if edge_factory is None:
            edge_factory = raster_scan
        self.layout = layout
        self.domain = Rect(0, 0, layout.n, layout.n)
        full = set(layout.full_blocks)
        self.block_rects = raster_block_order(layout)
        self.block_scanners = [
            (inner_factory if rect in full else edge_factory)(rect)
            for rect in self.block_rects
        ]
        self.data_independent = all(s.data_independent for s in self.block_scanners)

    def site_order(self) -> list[Site]:
        if not self.data_independent:
            raise InvalidScannerError("site order undefined for data-dependent blocks")
        order: list[Site] = []
        for s in self.block_scanners:
            order.extend(s.site_order())  # type: ignore[attr-defined]
        return order

    def trajectory(self, array: DataArray) -> ScanTrajectory:
        sites: list[Site] = []
        chunks: list[np.ndarray] = []
        for scanner in self.block_scanners:
            t = scanner.trajectory(array)
            sites.extend(t.sites)
            chunks.append(t.values)
        return ScanTrajectory(sites=sites, values=np.concatenate(chunks))


def blockwise_compose(layout: BlockLayout,
                      inner_factory: Callable[[Rect], Scanner],
                      edge_factory: Callable[[Rect], Scanner] | None = None) -> BlockwiseScanner:
    """Full-grid scanner that restarts ``inner_factory`` on each block."""
    return BlockwiseScanner(layout, inner_factory, edge_factory)


# --- context overlap ---------------------------------------------------------

def context_overlap(traj_a: ScanTrajectory, traj_b: ScanTrajectory, K: int) -> int:
    """Number of positions of ``traj_a`` whose immediate predecessor stays
    within the length-K context of the same site under ``traj_b``.

    Position i counts when (site_i, site_{i-1}) of traj_a appears in traj_b
    as (site'_j, site'_{j-k}) for some k <= K.  The first position has no
    past and never counts.  High overlap means an order-Kw Markov predictor
    on the second scan can essentially simulate an order-w one on the first.
    """
    if K < 1:
        raise ValueError(f"window must be >= 1, got {K}")
    if set(traj_a.sites) != set(traj_b.sites):
        raise DomainMismatchError("trajectories cover different site sets")
    pos_b = {site: j for j, site in enumerate(traj_b.sites)}
    count = 0
    for i in range(1, len(traj_a.sites)):
        j = pos_b[traj_a.sites[i]]
        jprev = pos_b[traj_a.sites[i - 1]]
        if 1 <= j - jprev <= K:
            count += 1
    return count
