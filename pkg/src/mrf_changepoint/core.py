"""Domain types shared across the package.

``SymmetricParams`` stores the ``d = p(p+1)/2`` free parameters of a symmetric
matrix (diagonal = node potentials, off-diagonal = edge weights) in packed
lower-triangle order ``(j, k)`` with ``k <= j``.  ``ModelSpec`` describes a
finite-alphabet pairwise MRF family through its potential tables.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

SCHEMA_VERSION = 1


class MRFError(ValueError):
    """Invalid input to a model-level operation."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelSpec:
    """A pairwise MRF family over a finite ordered alphabet.

    Parameters
    ----------
    alphabet : sequence
        Distinct symbol values; index ``i`` is the internal code of
        ``alphabet[i]``.
    b0 : callable
        Node potential, ``b0(u) -> float``.
    b : callable
        Symmetric pair potential, ``b(u, v) -> float``.

    The potentials are tabulated once at construction (``b0_table`` and
    ``b_table``) so every numerical routine works on codes.
    """

    alphabet: tuple
    b0: Callable[[Hashable], float] = field(repr=False, compare=False)
    b: Callable[[Hashable, Hashable], float] = field(repr=False, compare=False)
    b0_table: np.ndarray = field(init=False, repr=False, compare=False)
    b_table: np.ndarray = field(init=False, repr=False, compare=False)
    c0: float = field(init=False)

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        if not alphabet:
            raise MRFError("alphabet must be non-empty")
        if len(set(alphabet)) != len(alphabet):
            raise MRFError("alphabet contains duplicate symbols")
        object.__setattr__(self, "alphabet", alphabet)
        b0_table = np.array([float(self.b0(u)) for u in alphabet])
        b_table = np.array([[float(self.b(u, v)) for v in alphabet] for u in alphabet])
        if not np.array_equal(b_table, b_table.T):
            raise MRFError("pair potential b must be symmetric")
        object.__setattr__(self, "b0_table", _freeze(np.ascontiguousarray(b0_table)))
        object.__setattr__(self, "b_table", _freeze(np.ascontiguousarray(b_table)))
        object.__setattr__(self, "c0", compute_c0(self))

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def index_of(self, symbol) -> int:
        return self.alphabet.index(symbol)


def make_ising_spec() -> ModelSpec:
    """Binary alphabet {0, 1} with ``b0(x) = x`` and ``b(x, y) = x * y``."""
    return ModelSpec((0, 1), lambda x: x, lambda x, y: x * y)


def compute_c0(spec: ModelSpec) -> float:
    """Largest fluctuation of the node and pair potentials over the alphabet.

    ``max(sup_{u,v} |b0(u) - b0(v)|, sup_{x,u,v} |b(x,u) - b(x,v)|)`` by
    exhaustive enumeration.
    """
    alphabet = spec.alphabet
    if not alphabet:
        raise MRFError("alphabet must be non-empty")
    node = max(abs(spec.b0(u) - spec.b0(v)) for u in alphabet for v in alphabet)
    pair = max(
        abs(spec.b(x, u) - spec.b(x, v))
        for x, u, v in itertools.product(alphabet, repeat=3)
    )
    return float(max(node, pair))


class SymmetricParams:
    """Immutable symmetric ``p x p`` parameter matrix in packed storage.

    ``entries[i]`` holds the value at ``(rows[i], cols[i])`` for the packed
    lower-triangle ordering returned by :func:`packed_indices`.  Reading
    ``(j, k)`` and ``(k, j)`` returns the same value.
    """

    __slots__ = ("p", "entries")

    def __init__(self, p: int, entries=None):
        p = int(p)
        if p < 1:
            raise MRFError("p must be positive")
        d = p * (p + 1) // 2
        if entries is None:
            values = np.zeros(d)
        else:
            values = np.array(entries, dtype=float).reshape(-1)
            if values.shape != (d,):
                raise MRFError(f"expected {d} packed entries for p={p}, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise MRFError("parameter entries must be finite")
        self.p = p
        self.entries = _freeze(values)

    @property
    def d(self) -> int:
        return self.p * (self.p + 1) // 2

    @classmethod
    def zeros(cls, p: int) -> "SymmetricParams":
        return cls(p)

    @classmethod
    def from_dense(cls, matrix, check_symmetric: bool = True) -> "SymmetricParams":
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise MRFError("expected a square matrix")
        if check_symmetric and not np.array_equal(m, m.T):
            raise MRFError("matrix is not symmetric")
        rows, cols = packed_indices(m.shape[0])
        return cls(m.shape[0], m[rows, cols])

    def dense(self) -> np.ndarray:
        """Full symmetric matrix as a fresh C-contiguous array."""
        rows, cols = packed_indices(self.p)
        m = np.zeros((self.p, self.p))
        m[rows, cols] = self.entries
        m[cols, rows] = self.entries
        return m

    def get(self, j: int, k: int) -> float:
        if not (0 <= j < self.p and 0 <= k < self.p):
            raise IndexError((j, k))
        if k > j:
            j, k = k, j
        return float(self.entries[j * (j + 1) // 2 + k])

    def with_entry(self, j: int, k: int, value: float) -> "SymmetricParams":
        if not (0 <= j < self.p and 0 <= k < self.p):
            raise IndexError((j, k))
        if k > j:
            j, k = k, j
        values = self.entries.copy()
        values[j * (j + 1) // 2 + k] = value
        return SymmetricParams(self.p, values)

    def diagonal(self) -> np.ndarray:
        idx = np.arange(self.p)
        return self.entries[idx * (idx + 1) // 2 + idx].copy()

    def offdiag_mask(self) -> np.ndarray:
        rows, cols = packed_indices(self.p)
        return rows != cols

    def l1_norm(self) -> float:
        return float(np.abs(self.entries).sum())

    def linf_norm(self) -> float:
        return float(np.abs(self.entries).max())

    def nnz(self, tol: float = 0.0) -> int:
        return int(np.count_nonzero(np.abs(self.entries) > tol))

    def edge_count(self, tol: float = 0.0) -> int:
        """Number of non-zero off-diagonal entries (sparsity count s)."""
        return int(np.count_nonzero(np.abs(self.entries[self.offdiag_mask()]) > tol))

    def __add__(self, other: "SymmetricParams") -> "SymmetricParams":
        _check_same_p(self, other)
        return SymmetricParams(self.p, self.entries + other.entries)

    def __sub__(self, other: "SymmetricParams") -> "SymmetricParams":
        _check_same_p(self, other)
        return SymmetricParams(self.p, self.entries - other.entries)

    def scaled(self, c: float) -> "SymmetricParams":
        return SymmetricParams(self.p, c * self.entries)

    def __eq__(self, other):
        if not isinstance(other, SymmetricParams):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.p, self.entries.tobytes()))

    def __repr__(self):
        return f"SymmetricParams(p={self.p}, nnz={self.nnz()})"

    def to_json(self) -> dict:
        """Sparse form ``{"p", "entries": [[j, k, value], ...]}``, 0-based, j >= k."""
        rows, cols = packed_indices(self.p)
        nz = np.nonzero(self.entries)[0]
        return {
            "p": self.p,
            "entries": [[int(rows[i]), int(cols[i]), float(self.entries[i])] for i in nz],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SymmetricParams":
        p = int(obj["p"])
        values = np.zeros(p * (p + 1) // 2)
        for j, k, value in obj["entries"]:
            j, k = int(j), int(k)
            if k > j:
                j, k = k, j
            if not (0 <= k <= j < p):
                raise MRFError(f"entry ({j}, {k}) out of range for p={p}")
            values[j * (j + 1) // 2 + k] = float(value)
        return cls(p, values)


def _check_same_p(a: SymmetricParams, b: SymmetricParams) -> None:
    if a.p != b.p:
        raise MRFError(f"dimension mismatch: p={a.p} vs p={b.p}")


_PACKED_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def packed_indices(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column index arrays of the packed ordering (k <= j)."""
    cached = _PACKED_CACHE.get(p)
    if cached is None:
        rows, cols = np.tril_indices(p)
        cached = (_freeze(rows), _freeze(cols))
        _PACKED_CACHE[p] = cached
    return cached


def rowwise_l1_gap(theta1: SymmetricParams, theta2: SymmetricParams) -> float:
    """``max_j sum_k |theta2_jk - theta1_jk|`` over the full symmetric matrix."""
    _check_same_p(theta1, theta2)
    diff = np.abs(theta2.dense() - theta1.dense())
    return float(diff.sum(axis=1).max())


@dataclass(frozen=True)
class Dataset:
    """``T`` time-ordered observations of ``p`` nodes, stored as alphabet codes."""

    values: np.ndarray
    node_labels: tuple | None = None
    time_labels: tuple | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.int32)
        if v.ndim != 2:
            raise MRFError("dataset values must be a 2-d array")
        if v.shape[0] < 2:
            raise MRFError("dataset needs at least two observations")
        if self.node_labels is not None:
            labels = tuple(str(x) for x in self.node_labels)
            if len(labels) != v.shape[1]:
                raise MRFError("node_labels length differs from p")
            object.__setattr__(self, "node_labels", labels)
        if self.time_labels is not None:
            labels = tuple(str(x) for x in self.time_labels)
            if len(labels) != v.shape[0]:
                raise MRFError("time_labels length differs from T")
            object.__setattr__(self, "time_labels", labels)
        object.__setattr__(self, "values", _freeze(v))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def validate(self, spec: ModelSpec) -> None:
        if self.values.size and (self.values.min() < 0 or self.values.max() >= spec.size):
            raise MRFError("dataset contains codes outside the alphabet")

    def rows(self, start: int, end: int) -> np.ndarray:
        """Rows for the 1-based inclusive time range ``[start, end]``."""
        check_range(start, end, self.T)
        return self.values[start - 1:end]

    def reversed(self) -> "Dataset":
        return Dataset(
            self.values[::-1].copy(),
            self.node_labels,
            None if self.time_labels is None else self.time_labels[::-1],
        )

    def subset(self, rows: Sequence[int]) -> "Dataset":
        """Dataset made of the given 0-based row indices, in that order."""
        return Dataset(self.values[np.asarray(rows, dtype=np.intp)], self.node_labels)


def check_range(start: int, end: int, T: int) -> None:
    if start > end:
        raise MRFError(f"empty time range [{start}, {end}]")
    if start < 1 or end > T:
        raise MRFError(f"time range [{start}, {end}] outside [1, {T}]")


@dataclass(frozen=True)
class GroupLabels:
    """Category of every node, e.g. party blocks for network summaries."""

    assignment: tuple

    def __post_init__(self):
        labels = tuple(self.assignment)
        if any(x is None or (isinstance(x, float) and math.isnan(x)) for x in labels):
            raise MRFError("every node needs a group label")
        object.__setattr__(self, "assignment", labels)

    @property
    def p(self) -> int:
        return len(self.assignment)

    def groups(self) -> list:
        """Distinct labels in first-appearance order."""
        return list(dict.fromkeys(self.assignment))

    def members(self, group) -> np.ndarray:
        return np.array([i for i, g in enumerate(self.assignment) if g == group], dtype=np.intp)

    def check(self, p: int) -> None:
        if self.p != p:
            raise MRFError(f"group labels cover {self.p} nodes, matrix has p={p}")
