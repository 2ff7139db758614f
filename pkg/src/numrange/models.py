"""Operator models: a finite matrix head direct-summed with a structured
diagonal tail whose accumulation points are declared up front.

The tail is an interleaving of closed-form streams (constant, periodic,
geometric).  Entries are materialized lazily in blocks; operations that
consume "fresh" coordinates claim them through the model so no two
constructions reuse an index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DimensionMismatch
from .linalg import as_matrix

BLOCK = 256
LIMIT_MATCH_TOL = 1e-9


class TailStream:
    """One closed-form diagonal stream."""

    def entry(self, k: int) -> complex:
        raise NotImplementedError

    def limit_set(self) -> tuple[complex, ...]:
        """Accumulation points of the entry sequence."""
        raise NotImplementedError

    def recurring_values(self) -> tuple[complex, ...]:
        """Values taken exactly, infinitely often."""
        return ()

    def bound(self) -> float:
        raise NotImplementedError

    def affine(self, a: complex, b: complex) -> "TailStream":
        return _AffineStream(self, complex(a), complex(b))

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(TailStream):
    c: complex

    def entry(self, k: int) -> complex:
        return self.c

    def limit_set(self):
        return (self.c,)

    def recurring_values(self):
        return (self.c,)

    def bound(self):
        return abs(self.c)

    def affine(self, a, b):
        return Constant(a * self.c + b)

    def to_json(self):
        return {"kind": "constant", "c": [self.c.real, self.c.imag]}


@dataclass(frozen=True)
class Periodic(TailStream):
    values: tuple[complex, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("periodic stream needs at least one value")
        object.__setattr__(self, "values", tuple(complex(v) for v in self.values))

    def entry(self, k: int) -> complex:
        return self.values[k % len(self.values)]

    def limit_set(self):
        return tuple(dict.fromkeys(self.values))

    def recurring_values(self):
        return tuple(dict.fromkeys(self.values))

    def bound(self):
        return max(abs(v) for v in self.values)

    def affine(self, a, b):
        return Periodic(tuple(a * v + b for v in self.values))

    def to_json(self):
        return {"kind": "periodic", "values": [[v.real, v.imag] for v in self.values]}


@dataclass(frozen=True)
class Geometric(TailStream):
    """Entries c * r^k with a rational ratio in (0, 1); the limit is 0."""

    c: complex
    r: Fraction

    def __post_init__(self):
        r = Fraction(self.r)
        if not (0 < r < 1):
            raise ValueError(f"geometric ratio must be in (0, 1), got {r}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c", complex(self.c))

    def entry(self, k: int) -> complex:
        return self.c * float(self.r) ** k

    def limit_set(self):
        return (0j,)

    def bound(self):
        return abs(self.c)

    def to_json(self):
        return {"kind": "geometric", "c": [self.c.real, self.c.imag],
                "r": f"{self.r.numerator}/{self.r.denominator}"}


@dataclass(frozen=True)
class _AffineStream(TailStream):
    """a * inner + b, used when a transformed stream has no closed-form kind."""

    inner: TailStream
    a: complex
    b: complex

    def entry(self, k: int) -> complex:
        return self.a * self.inner.entry(k) + self.b

    def limit_set(self):
        return tuple(self.a * p + self.b for p in self.inner.limit_set())

    def recurring_values(self):
        return tuple(self.a * v + self.b for v in self.inner.recurring_values())

    def bound(self):
        return abs(self.a) * self.inner.bound() + abs(self.b)

    def affine(self, a, b):
        return _AffineStream(self.inner, a * self.a, a * self.b + b)

    def to_json(self):
        raise ValueError("affinely transformed streams have no JSON form")


@dataclass
class OperatorModel:
    """Finite head ⊕ diagonal tail, with declared tail accumulation points.

    ``limit_points`` fully determine the essential behaviour of the model;
    every declared point must be an accumulation point the streams
    actually produce (checked at construction).
    """

    head: np.ndarray
    tails: tuple[TailStream, ...]
    limit_points: tuple[complex, ...]
    _entries: np.ndarray = field(init=False, repr=False)
    _claimed: np.ndarray = field(init=False, repr=False)
    claimed_count: int = field(init=False, default=0)
    max_index_touched: int = field(init=False, default=-1)

    def __post_init__(self):
        self.head = as_matrix(self.head) if np.asarray(self.head).size else np.zeros((0, 0), complex)
        self.tails = tuple(self.tails)
        if not self.tails:
            raise ValueError("a model needs at least one tail stream")
        self.limit_points = tuple(complex(p) for p in self.limit_points)
        if not self.limit_points:
            raise ValueError("a model needs at least one declared limit point")
        achievable = [p for s in self.tails for p in s.limit_set()]
        scale = 1.0 + max(s.bound() for s in self.tails)
        for p in self.limit_points:
            if not any(abs(p - q) <= LIMIT_MATCH_TOL * scale for q in achievable):
                raise ValueError(
                    f"declared limit point {p} is not an accumulation point of the tail")
        self._entries = np.zeros(0, dtype=complex)
        self._claimed = np.zeros(0, dtype=bool)
        self.claimed_count = 0
        self.max_index_touched = -1

    # -- geometry of the materialized section ---------------------------------

    @property
    def head_dim(self) -> int:
        return self.head.shape[0]

    @property
    def materialized(self) -> int:
        return len(self._entries)

    @property
    def dim(self) -> int:
        """Current ambient dimension: head plus materialized tail."""
        return self.head_dim + self.materialized

    def ensure(self, n: int) -> None:
        """Materialize tail entries up to index n-1 (in blocks)."""
        if n <= self.materialized:
            return
        target = ((n + BLOCK - 1) // BLOCK) * BLOCK
        k = len(self.tails)
        new = np.array([self.tails[j % k].entry(j // k)
                        for j in range(self.materialized, target)], dtype=complex)
        self._entries = np.concatenate([self._entries, new])
        self._claimed = np.concatenate(
            [self._claimed, np.zeros(target - len(self._claimed), dtype=bool)])

    def extend(self, blocks: int = 1) -> None:
        self.ensure(self.materialized + blocks * BLOCK)

    def tail_entry(self, j: int) -> complex:
        self.ensure(j + 1)
        self.max_index_touched = max(self.max_index_touched, j)
        return complex(self._entries[j])

    def tail_entries(self, n: int | None = None) -> np.ndarray:
        if n is None:
            n = max(self.materialized, BLOCK)
        self.ensure(n)
        self.max_index_touched = max(self.max_index_touched, n - 1)
        return self._entries[:n]

    # -- fresh-coordinate bookkeeping ------------------------------------------

    def claim(self, indices) -> None:
        """Mark tail indices as consumed by a construction."""
        idx = [int(j) for j in indices]
        if idx:
            self.ensure(max(idx) + 1)
        for j in idx:
            if self._claimed[j]:
                raise ValueError(f"tail index {j} claimed twice")
            self._claimed[j] = True
        self.claimed_count += len(idx)

    def is_claimed(self, j: int) -> bool:
        return j < len(self._claimed) and bool(self._claimed[j])

    @property
    def claimed_indices(self) -> frozenset:
        return frozenset(int(j) for j in np.nonzero(self._claimed)[0])

    # -- operator action --------------------------------------------------------

    def apply(self, x: np.ndarray) -> np.ndarray:
        """(head ⊕ diag-tail) @ x for x on the current ambient section."""
        x = np.asarray(x, dtype=complex)
        h = self.head_dim
        n = x.shape[-1] - h
        if n < 0 or n > self.materialized:
            raise DimensionMismatch(
                f"vector length {x.shape[-1]} does not match ambient {self.dim}")
        out = np.empty_like(x)
        out[..., :h] = x[..., :h] @ self.head.T
        out[..., h:] = x[..., h:] * self._entries[:n]
        return out

    def rayleigh(self, x: np.ndarray) -> complex:
        return complex(np.vdot(x, self.apply(x)))

    def rayleigh_many(self, rows: np.ndarray) -> np.ndarray:
        return np.einsum("ij,ij->i", rows.conj(), self.apply(rows))

    def section(self, n: int) -> np.ndarray:
        """Dense matrix of the head ⊕ first n tail entries."""
        self.ensure(n)
        self.max_index_touched = max(self.max_index_touched, n - 1)
        h = self.head_dim
        S = np.zeros((h + n, h + n), dtype=complex)
        S[:h, :h] = self.head
        S[h:, h:] = np.diag(self._entries[:n])
        return S

    def norm_bound(self) -> float:
        """Upper bound for the operator norm."""
        hb = float(np.linalg.norm(self.head, 2)) if self.head_dim else 0.0
        return max(hb, max(s.bound() for s in self.tails))

    def affine(self, a: complex, b: complex) -> "OperatorModel":
        """The model of a*T + b*I (head, tail entries, and limit points mapped)."""
        a, b = complex(a), complex(b)
        h = self.head_dim
        head = a * self.head + b * np.eye(h) if h else self.head
        return OperatorModel(
            head=head,
            tails=tuple(s.affine(a, b) for s in self.tails),
            limit_points=tuple(a * p + b for p in self.limit_points),
        )
