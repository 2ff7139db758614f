"""Catalog of the small integer matrices used throughout the test and
verification suites: a commuting 4x4 triple whose joint range misses the
midpoint of two attained points, a trace-free 2x2 pair that attains
nothing at the origin, and their zero-padded embeddings."""

from __future__ import annotations

import numpy as np

from .joint import OperatorTuple

DEFAULT_EMBED_DIM = 4


def commuting_triple() -> OperatorTuple:
    """Three mutually commuting 4x4 matrices (all products vanish).

    Attains (0, 0, 1/2) and (0, 1/2, 0) but not their midpoint
    (0, 1/4, 1/4): the first coordinate x3*conj(x1) can only vanish by
    killing x3 or x1, and either kills one of the other coordinates.
    """
    T1 = np.zeros((4, 4), dtype=complex)
    T2 = np.zeros((4, 4), dtype=complex)
    T3 = np.zeros((4, 4), dtype=complex)
    T1[0, 2] = 1.0
    T2[0, 3] = 1.0
    T3[1, 2] = 1.0
    return OperatorTuple((T1, T2, T3))


def triple_witnesses() -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors attaining (0, 0, 1/2) and (0, 1/2, 0) for the triple."""
    s = np.sqrt(2.0) / 2.0
    x_a = np.array([0.0, s, s, 0.0], dtype=complex)
    x_b = np.array([s, 0.0, 0.0, s], dtype=complex)
    return x_a, x_b


def embed_tuple(ts: OperatorTuple, extra: int = DEFAULT_EMBED_DIM) -> OperatorTuple:
    """Each member direct-summed with a zero block of the given size."""
    if extra < 0:
        raise ValueError("extra dimension must be nonnegative")
    n = ts.dim
    out = []
    for m in ts.members:
        M = np.zeros((n + extra, n + extra), dtype=complex)
        M[:n, :n] = m
        out.append(M)
    return OperatorTuple(tuple(out))


def embedded_triple(extra: int = DEFAULT_EMBED_DIM) -> OperatorTuple:
    return embed_tuple(commuting_triple(), extra)


def zero_trace_pair() -> OperatorTuple:
    """2x2 pair with zero traces whose joint range stays at distance 1/2
    from the origin: a nilpotent shift and diag(1, -1)."""
    T1 = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
    T2 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    return OperatorTuple((T1, T2))


def vanishing_sum_pair(extra: int = DEFAULT_EMBED_DIM) -> OperatorTuple:
    """The zero-trace pair padded with zeros: all standard-basis partial
    sums of the diagonal vanish from index 2 on, yet no orthonormal basis
    gives both operators a constant zero diagonal."""
    return embed_tuple(zero_trace_pair(), extra)
