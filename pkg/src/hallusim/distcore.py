"""Dense discrete-probability primitives over a finite statement universe.

Statements are integer ids in [0, N). Distributions are dense float64
vectors, partitions are cell-index vectors, corpora are count vectors.
Everything is immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

# Constructors renormalize inputs whose total drifts by at most DRIFT_TOL and
# reject anything further from 1; stored vectors always satisfy SUM_TOL.
SUM_TOL = 1e-9
DRIFT_TOL = 1e-6


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dist:
    """A probability distribution over N statements, stored densely."""

    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.ndim != 1 or mass.size == 0:
            raise ValueError("mass must be a nonempty 1-D vector")
        if not np.all(np.isfinite(mass)):
            raise ValueError("mass contains non-finite entries")
        if np.any(mass < 0):
            raise ValueError("mass contains negative entries")
        total = float(mass.sum())
        if abs(total - 1.0) > DRIFT_TOL:
            raise ValueError(f"mass sums to {total}, beyond drift tolerance {DRIFT_TOL}")
        if abs(total - 1.0) > SUM_TOL:
            mass = mass / total
        object.__setattr__(self, "mass", _as_readonly(mass))

    @property
    def n_statements(self) -> int:
        return self.mass.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Dist) and np.array_equal(self.mass, other.mass)

    def __hash__(self):
        return hash(self.mass.tobytes())

    def to_json(self) -> dict:
        return {"mass": self.mass.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Dist":
        return cls(np.asarray(obj["mass"], dtype=np.float64))

    @classmethod
    def uniform(cls, n: int) -> "Dist":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, n: int, y: int) -> "Dist":
        mass = np.zeros(n)
        mass[y] = 1.0
        return cls(mass)


@dataclass(frozen=True)
class Partition:
    """A partition of [0, N) into n_cells nonempty cells.

    cell_of[y] is the cell index of statement y; every index in
    [0, n_cells) occurs at least once.
    """

    cell_of: np.ndarray
    n_cells: int = field(default=-1)

    def __post_init__(self):
        cell_of = np.asarray(self.cell_of, dtype=np.int64)
        if cell_of.ndim != 1 or cell_of.size == 0:
            raise ValueError("cell_of must be a nonempty 1-D vector")
        n_cells = self.n_cells
        if n_cells < 0:
            n_cells = int(cell_of.max()) + 1
        if cell_of.min() < 0 or cell_of.max() >= n_cells:
            raise ValueError("cell indices out of range [0, n_cells)")
        if np.any(np.bincount(cell_of, minlength=n_cells) == 0):
            raise ValueError("every cell index in [0, n_cells) must be nonempty")
        object.__setattr__(self, "cell_of", _as_readonly(cell_of))
        object.__setattr__(self, "n_cells", n_cells)

    @property
    def n_statements(self) -> int:
        return self.cell_of.size

    @cached_property
    def cell_sizes(self) -> np.ndarray:
        return _as_readonly(np.bincount(self.cell_of, minlength=self.n_cells))

    def cells(self) -> list[np.ndarray]:
        """Member ids per cell, in cell-index order."""
        order = np.argsort(self.cell_of, kind="stable")
        return np.split(order, np.cumsum(self.cell_sizes)[:-1])

    def to_json(self) -> dict:
        return {"cell_of": self.cell_of.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Partition":
        return cls(np.asarray(obj["cell_of"], dtype=np.int64))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(n))

    @classmethod
    def single_cell(cls, n: int) -> "Partition":
        return cls(np.zeros(n, dtype=np.int64))


@dataclass(frozen=True)
class Corpus:
    """A multiset of statement draws, as per-statement counts."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a nonempty 1-D vector")
        if np.issubdtype(counts.dtype, np.floating):
            if not np.all(counts == np.floor(counts)):
                raise ValueError("counts must be integers")
        counts = counts.astype(np.int64)
        if counts.min() < 0:
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", _as_readonly(counts))

    @property
    def n_statements(self) -> int:
        return self.counts.size

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @cached_property
    def observed(self) -> np.ndarray:
        """Ids drawn at least once, ascending."""
        return _as_readonly(np.flatnonzero(self.counts > 0))

    @cached_property
    def unseen(self) -> np.ndarray:
        """Ids never drawn, ascending."""
        return _as_readonly(np.flatnonzero(self.counts == 0))


def _require_same_n(a, b, what: str = "inputs"):
    if a.n_statements != b.n_statements:
        raise ValueError(
            f"dimension mismatch: {what} over {a.n_statements} vs {b.n_statements} statements"
        )


def tv_distance(p: Dist, q: Dist) -> float:
    """Total variation distance, computed as half the L1 distance.

    On a finite universe this equals the max over statement sets S of
    |p(S) - q(S)|.
    """
    _require_same_n(p, q)
    return 0.5 * float(np.abs(p.mass - q.mass).sum())


def coarsen(p: Dist, pi: Partition) -> Dist:
    """Average p within each cell of pi: output(y) = p(B_y) / |B_y|."""
    _require_same_n(p, pi)
    cell_mass = np.bincount(pi.cell_of, weights=p.mass, minlength=pi.n_cells)
    return Dist((cell_mass / pi.cell_sizes)[pi.cell_of])


def level_set_partition(g: Dist, eps: float = 0.0) -> Partition:
    """Partition of [0, N) into the level sets of g.

    Statements share a cell iff their probabilities are bitwise equal
    (eps=0, the default), or within eps of the cell's smallest value when
    eps > 0 -- a convenience for float-noisy inputs. Cells are numbered by
    ascending probability value.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    values = np.unique(g.mass)  # sorted ascending
    if eps == 0.0:
        cell_of = np.searchsorted(values, g.mass)
        return Partition(cell_of, n_cells=values.size)
    # Greedily merge ascending values into groups of width <= eps.
    group_of_value = np.empty(values.size, dtype=np.int64)
    group = 0
    group_start = values[0]
    for i, v in enumerate(values):
        if v - group_start > eps:
            group += 1
            group_start = v
        group_of_value[i] = group
    cell_of = group_of_value[np.searchsorted(values, g.mass)]
    return Partition(cell_of, n_cells=group + 1)


def miscalibration(g: Dist, p: Dist) -> float:
    """TV distance between g and the coarsening of p induced by g's level sets.

    Zero iff g is calibrated to p, i.e. g equals some coarsening of p.
    """
    _require_same_n(g, p)
    return tv_distance(g, coarsen(p, level_set_partition(g)))


def mass_on(p: Dist, s: Iterable[int] | Sequence[int] | np.ndarray) -> float:
    """Total mass p(s) on a set of statement ids."""
    ids = np.asarray(sorted(s) if isinstance(s, (set, frozenset)) else s, dtype=np.int64)
    if ids.size == 0:
        return 0.0
    if ids.min() < 0 or ids.max() >= p.n_statements:
        raise ValueError(f"statement id out of range [0, {p.n_statements})")
    return float(p.mass[ids].sum())
