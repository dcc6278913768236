"""Grids, sites, rectangles, and the block partition of an n x n array.

A square n x n array is split into K^2 full m x m blocks (K = ceil(n/m) - 1)
plus 2K+1 edge blocks: K blocks on the right strip, K on the bottom strip and
one corner block.  The full blocks tile [0, Km) x [0, Km); the edge blocks
cover the remaining L-shape.  Block-restarting scanners visit the full blocks
in a boustrophedon order and the edge blocks last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np


class InvalidPartitionError(ValueError):
    """Raised when a block partition is requested with an illegal block side."""


class Site(NamedTuple):
    """A grid position, (row, col), both >= 0."""

    row: int
    col: int


@dataclass(frozen=True)
class Rect:
    """An axis-aligned rectangle of sites, anchored at (row0, col0)."""

    row0: int
    col0: int
    n_rows: int
    n_cols: int

    def __post_init__(self) -> None:
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def area(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def contains(self, site: Site) -> bool:
        return (self.row0 <= site.row < self.row0 + self.n_rows
                and self.col0 <= site.col < self.col0 + self.n_cols)

    def sites(self) -> Iterator[Site]:
        """All sites of the rectangle in row-major order."""
        for r in range(self.row0, self.row0 + self.n_rows):
            for c in range(self.col0, self.col0 + self.n_cols):
                yield Site(r, c)


@dataclass(frozen=True)
class Alphabet:
    """Cell alphabet: 'binary' ({0,1}), 'finite' ({0..q-1}) or 'real' ([0,1])."""

    kind: str
    size: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "binary":
            object.__setattr__(self, "size", 2)
        elif self.kind == "finite":
            if self.size is None or self.size < 2:
                raise ValueError("finite alphabet needs size >= 2")
        elif self.kind == "real":
            object.__setattr__(self, "size", None)
        else:
            raise ValueError(f"unknown alphabet kind {self.kind!r}")

    @property
    def tag(self) -> str:
        """Header token used in the SDGRID file format."""
        if self.kind == "finite":
            return f"finite:{self.size}"
        return self.kind

    @classmethod
    def from_tag(cls, tag: str) -> "Alphabet":
        if tag == "binary":
            return cls("binary")
        if tag == "real":
            return cls("real")
        if tag.startswith("finite:"):
            return cls("finite", int(tag.split(":", 1)[1]))
        raise ValueError(f"unknown alphabet tag {tag!r}")


BINARY = Alphabet("binary")
REAL = Alphabet("real")


class DataArray:
    """A dense 2D grid of symbols with a declared alphabet.

    Binary/finite cells are stored as small ints, real cells as float64 in
    [0, 1].  One-dimensional sequences are the special case of a 1 x n grid.
    """

    def __init__(self, values: np.ndarray, alphabet: Alphabet = BINARY):
        values = np.asarray(values)
        if values.ndim != 2 or values.size == 0:
            raise ValueError("values must be a non-empty 2D array")
        if alphabet.kind == "real":
            values = values.astype(np.float64)
            if np.any(values < 0.0) or np.any(values > 1.0):
                raise ValueError("real cells must lie in [0, 1]")
        else:
            ivalues = values.astype(np.int64)
            if np.any(ivalues != values):
                raise ValueError("finite-alphabet cells must be integers")
            if np.any(ivalues < 0) or np.any(ivalues >= alphabet.size):
                raise ValueError(f"cells outside alphabet of size {alphabet.size}")
            values = ivalues
        self.values = values
        self.alphabet = alphabet

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def rect(self) -> Rect:
        return Rect(0, 0, self.n_rows, self.n_cols)

    def __getitem__(self, site: Site):
        v = self.values[site[0], site[1]]
        return float(v) if self.alphabet.kind == "real" else int(v)

    def flat(self) -> np.ndarray:
        """Row-major 1D view of the cells."""
        return self.values.reshape(-1)

    # --- SDGRID plain-text format -------------------------------------
    #
    # line 1: "SDGRID <n_rows> <n_cols> <alphabet-tag>"
    # then n_rows lines of whitespace-separated cell values, row-major.
    # Real cells are written with repr() so the round trip is bit exact.

    def to_sdgrid(self) -> str:
        lines = [f"SDGRID {self.n_rows} {self.n_cols} {self.alphabet.tag}"]
        if self.alphabet.kind == "real":
            for row in self.values:
                lines.append(" ".join(repr(float(v)) for v in row))
        else:
            for row in self.values:
                lines.append(" ".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_sdgrid(cls, text: str) -> "DataArray":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = lines[0].split()
        if len(header) != 4 or header[0] != "SDGRID":
            raise ValueError("not an SDGRID file")
        n_rows, n_cols = int(header[1]), int(header[2])
        alphabet = Alphabet.from_tag(header[3])
        tokens = " ".join(lines[1:]).split()
        if len(tokens) != n_rows * n_cols:
            raise ValueError(f"expected {n_rows * n_cols} cells, got {len(tokens)}")
        if alphabet.kind == "real":
            cells = np.array([float(t) for t in tokens], dtype=np.float64)
        else:
            cells = np.array([int(t) for t in tokens], dtype=np.int64)
        return cls(cells.reshape(n_rows, n_cols), alphabet)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_sdgrid())

    @classmethod
    def load(cls, path) -> "DataArray":
        with open(path) as fh:
            return cls.from_sdgrid(fh.read())


@dataclass(frozen=True)
class BlockLayout:
    """Partition of an n x n grid into K^2 full blocks and 2K+1 edge blocks.

    ``full_blocks`` is indexable by (block_row, block_col) as a row-major
    list of length K^2; ``edge_blocks`` holds the right strip top to bottom,
    then the bottom strip left to right, then the corner.
    """

    n: int
    m: int
    K: int
    full_blocks: tuple[Rect, ...] = field(repr=False)
    edge_blocks: tuple[Rect, ...] = field(repr=False)

    def full_block(self, i: int, j: int) -> Rect:
        return self.full_blocks[i * self.K + j]


def block_partition(n: int, m: int) -> BlockLayout:
    """Partition the n x n grid into m x m full blocks plus edge blocks.

    K = ceil(n/m) - 1.  Requires 1 <= m < n.  The full blocks tile the
    top-left Km x Km square; the remaining L-shape of width n - Km (which is
    m itself when m divides n) is covered by K right-strip blocks, K
    bottom-strip blocks and one corner block.
    """
    if m < 1 or m >= n:
        raise InvalidPartitionError(f"need 1 <= m < n, got n={n}, m={m}")
    K = math.ceil(n / m) - 1
    w = n - K * m  # edge strip thickness, in [1, m]
    full = tuple(Rect(i * m, j * m, m, m) for i in range(K) for j in range(K))
    right = tuple(Rect(i * m, K * m, m, w) for i in range(K))
    bottom = tuple(Rect(K * m, j * m, w, m) for j in range(K))
    corner = (Rect(K * m, K * m, w, w),)
    return BlockLayout(n=n, m=m, K=K, full_blocks=full,
                       edge_blocks=right + bottom + corner)


def full_block_index_order(K: int) -> list[tuple[int, int]]:
    """Boustrophedon order over the K x K full-block grid.

    Block row 0 runs left to right, block row 1 right to left, and so on.
    """
    order = []
    for i in range(K):
        cols = range(K) if i % 2 == 0 else range(K - 1, -1, -1)
        order.extend((i, j) for j in cols)
    return order


def raster_block_order(layout: BlockLayout) -> list[Rect]:
    """Block visiting order: full blocks boustrophedon, then edge blocks.

    Edge blocks keep their fixed documented order (right strip top to
    bottom, bottom strip left to right, corner).
    """
    full = [layout.full_block(i, j) for i, j in full_block_index_order(layout.K)]
    return full + list(layout.edge_blocks)
