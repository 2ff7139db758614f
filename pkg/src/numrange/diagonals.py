"""Constant-diagonal machinery.

Finite case: a recursive construction rotating any square matrix to a
basis whose diagonal is constantly trace/N.  Model case: averaging
chunks of tail coordinates to realize interior essential-range values,
a subspace-extension step that flattens compression traces below any
prescribed bound, and the nested tower whose partial sums shrink
like 1/k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (BadSignConfiguration, DegeneratePair, ExhaustedTail,
                     NumericalBreakdown, OutsideRange)
from .linalg import (Frame, as_matrix, gram_schmidt,
                     orthonormal_complement_within,
                     unitary_with_first_column)
from .models import OperatorModel
from .polygon import Polygon
from .ranges import (_convex_weights, boundary_polygon, essential_range,
                     inverse_numrange, polygon_membership, we_vector_growing)

EXACT_TOL = 1e-12


@dataclass(frozen=True)
class DiagonalReport:
    """A constructed orthonormal family together with its diagonal values
    <T u_j, u_j>, their running partial sums, and designated checkpoints."""

    frame: Frame
    values: np.ndarray
    partial_sums: np.ndarray
    checkpoints: tuple[int, ...]
    target: complex | None = None
    max_deviation: float | None = None
    depth_trace_errors: tuple[float, ...] = ()

    @classmethod
    def build(cls, frame: Frame, values, target=None,
              checkpoints: tuple[int, ...] | None = None,
              depth_trace_errors: tuple[float, ...] = (),
              validate_frame: bool = True) -> "DiagonalReport":
        if validate_frame:
            frame.validate()
        values = np.asarray(values, dtype=complex)
        sums = np.cumsum(values) if len(values) else np.zeros(0, dtype=complex)
        dev = None
        if target is not None and len(values):
            dev = float(np.max(np.abs(values - complex(target))))
        return cls(frame=frame, values=values, partial_sums=sums,
                   checkpoints=checkpoints or tuple(range(1, len(values) + 1)),
                   target=None if target is None else complex(target),
                   max_deviation=dev, depth_trace_errors=depth_trace_errors)

    def to_json(self, frame_entry_cap: int = 2_000_000) -> dict:
        out = {
            "values": [[z.real, z.imag] for z in self.values],
            "partial_sums": [[z.real, z.imag] for z in self.partial_sums],
            "checkpoints": list(self.checkpoints),
            "target": None if self.target is None else [self.target.real, self.target.imag],
            "max_deviation": self.max_deviation,
        }
        rows = getattr(self.frame, "vectors", None)
        if rows is None:  # sparse tower frame: densify only when reasonable
            if len(self.frame) * self.frame.ambient_dim <= frame_entry_cap:
                rows = self.frame.to_dense().vectors
        if rows is not None and rows.size <= frame_entry_cap:
            out["frame"] = [[[z.real, z.imag] for z in row] for row in rows]
        else:
            out["frame"] = None
            out["frame_note"] = "omitted: too large; rerun with fewer levels"
        return out


def constant_diag_value(T) -> complex:
    """The only value a constant diagonal of a finite matrix can take."""
    T = as_matrix(T)
    return complex(np.trace(T)) / T.shape[0]


def parker_basis(T, tol: float = 1e-8) -> DiagonalReport:
    """Orthonormal basis in which T has the constant diagonal trace/N.

    Recursion: attain the mean value on a unit vector, complete it to a
    basis by a Householder unitary, and continue on the complementary
    compression, whose normalized trace is again the mean.  The running
    trace error at each depth is recorded in ``depth_trace_errors``.
    """
    T = as_matrix(T)
    N = T.shape[0]
    lam = constant_diag_value(T)
    scale = 1.0 + float(np.abs(T).max())
    if float(np.abs(T - lam * np.eye(N)).max()) <= EXACT_TOL * scale:
        return DiagonalReport.build(Frame.standard(N), np.full(N, lam),
                                    target=lam, checkpoints=(N,))
    inner_tol = min(tol * 0.25, 1e-9)
    U = np.eye(N, dtype=complex)
    B = T.copy()
    fixed: list[complex] = []
    trace_errors: list[float] = []
    total = complex(np.trace(T))
    for k in range(N - 1):
        try:
            u = inverse_numrange(B, lam, inner_tol)
        except OutsideRange as exc:  # cannot happen exactly; guards drift
            raise NumericalBreakdown(
                f"mean value drifted outside the range at depth {k}") from exc
        V = unitary_with_first_column(u)
        B = V.conj().T @ B @ V
        fixed.append(complex(B[0, 0]))
        U[:, k:] = U[:, k:] @ V
        B = B[1:, 1:]
        trace_errors.append(abs(sum(fixed) + complex(np.trace(B)) - total))
    fixed.append(complex(B[0, 0]))
    report = DiagonalReport.build(Frame(U.T.copy(), N), fixed, target=lam,
                                  checkpoints=(N,),
                                  depth_trace_errors=tuple(trace_errors))
    if report.max_deviation > tol:
        raise NumericalBreakdown(
            f"diagonal deviation {report.max_deviation:.3e} exceeds {tol:.3e}")
    return report


# ---------------------------------------------------------------------------
# tail chunking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChunkPlan:
    """Disjoint finite sets of fresh tail indices whose entry averages sit
    within tolerance of a common target."""

    chunks: tuple[tuple[int, ...], ...]
    target: complex
    achieved: tuple[complex, ...]
    tolerance: float

    def __post_init__(self):
        flat = [j for ch in self.chunks for j in ch]
        if len(flat) != len(set(flat)):
            raise ValueError("chunks overlap")
        for avg in self.achieved:
            if abs(avg - self.target) > self.tolerance:
                raise ValueError("achieved averages violate the stated tolerance")


def _integer_combination(points: list[complex], weights: list[float],
                         target: complex, tol: float,
                         cap: int = 4096) -> tuple[list[int], int]:
    """Nonnegative integer multiplicities (m_p, sum M <= cap) whose average
    of ``points`` is within tol of ``target``; largest-remainder rounding
    of M * weights, with M searched upward."""
    for M in range(1, cap + 1):
        raw = [w * M for w in weights]
        m = [int(math.floor(r)) for r in raw]
        rem = M - sum(m)
        order = sorted(range(len(m)), key=lambda i: raw[i] - m[i], reverse=True)
        for i in order[:rem]:
            m[i] += 1
        avg = sum(mi * p for mi, p in zip(m, points)) / M
        if abs(avg - target) <= tol:
            return m, M
    raise ExhaustedTail(
        f"no integer averaging of {points} hits {target} within {tol} "
        f"(chunk size cap {cap})")


def chunk_selector(model: OperatorModel, lam: complex, tol: float,
                   chunk_budget: int, max_entries: int = 1 << 20) -> ChunkPlan:
    """Select ``chunk_budget`` disjoint chunks of fresh tail indices whose
    entry averages land within tol of a relative-interior target."""
    lam = complex(lam)
    poly = essential_range(model)
    if not polygon_membership(poly, lam, "relint", tol):
        raise OutsideRange(
            f"{lam} is not in the relative interior of the essential range "
            f"with margin {tol}")
    weights = _convex_weights(poly, lam)
    points = [p for p, _ in weights]
    m, _ = _integer_combination(points, [w for _, w in weights], lam, tol / 2.0)
    delta = tol / 2.0

    chunks: list[tuple[int, ...]] = []
    achieved: list[complex] = []
    cursor = 0
    for _ in range(chunk_budget):
        need = {i: m[i] for i in range(len(points)) if m[i] > 0}
        picked: list[int] = []
        while need:
            if cursor >= model.materialized:
                if model.materialized >= max_entries:
                    raise ExhaustedTail(f"no fresh entries left within {max_entries}")
                model.extend()
            j = cursor
            cursor += 1
            if model.is_claimed(j):
                continue
            d = model.tail_entry(j)
            for i in list(need):
                if abs(d - points[i]) <= delta:
                    picked.append(j)
                    need[i] -= 1
                    if need[i] == 0:
                        del need[i]
                    break
        model.claim(picked)
        avg = sum(model.tail_entry(j) for j in picked) / len(picked)
        chunks.append(tuple(picked))
        achieved.append(complex(avg))
    return ChunkPlan(chunks=tuple(chunks), target=lam, achieved=tuple(achieved),
                     tolerance=tol)


def _exact_recurring_match(model: OperatorModel, lam: complex) -> bool:
    return any(abs(v - lam) <= EXACT_TOL for s in model.tails
               for v in s.recurring_values())


def constant_diag_basis(model: OperatorModel, lam: complex, count: int,
                        tol: float = 1e-8) -> DiagonalReport:
    """``count`` orthonormal vectors on disjoint fresh tail chunks, every
    diagonal value within tol of the target.

    A target hit exactly by a recurring stream value is served by raw
    tail coordinates; anything else must sit in the relative interior of
    the essential range and goes through chunk averaging followed by the
    finite constant-diagonal rotation on each chunk.
    """
    lam = complex(lam)
    if count < 1:
        raise ValueError("need a positive vector count")
    h = model.head_dim
    if _exact_recurring_match(model, lam):
        picked: list[int] = []
        j = 0
        while len(picked) < count:
            if j >= model.materialized:
                model.extend()
            if not model.is_claimed(j) and abs(model.tail_entry(j) - lam) <= EXACT_TOL:
                picked.append(j)
            j += 1
        model.claim(picked)
        rows = np.zeros((count, model.dim), dtype=complex)
        for i, jj in enumerate(picked):
            rows[i, h + jj] = 1.0
        values = model.rayleigh_many(rows)
        return DiagonalReport.build(Frame(rows, model.dim), values, target=lam)

    weights = _convex_weights(essential_range(model), lam)
    _, M = _integer_combination([p for p, _ in weights],
                                [w for _, w in weights], lam, tol / 2.0)
    budget = -(-count // M)  # ceil
    plan = chunk_selector(model, lam, tol, budget)
    rows_list: list[np.ndarray] = []
    checkpoints: list[int] = []
    for chunk in plan.chunks:
        entries = np.array([model.tail_entry(j) for j in chunk])
        local = parker_basis(np.diag(entries), tol=max(tol * 1e-3, 1e-12))
        for r in local.frame.vectors:
            row = np.zeros(model.dim, dtype=complex)
            for c, j in zip(r, chunk):
                row[h + j] = c
            rows_list.append(row)
        checkpoints.append(len(rows_list))
        if len(rows_list) >= count:
            break
    ambient = model.dim
    rows = np.array([np.pad(r, (0, ambient - len(r))) for r in rows_list[:count]])
    values = model.rayleigh_many(rows)
    report = DiagonalReport.build(
        Frame(rows, ambient), values, target=lam,
        checkpoints=tuple(c for c in checkpoints if c <= count) or None)
    if report.max_deviation > tol:
        raise NumericalBreakdown(
            f"chunk construction missed tolerance: {report.max_deviation:.3e}")
    return report




# ---------------------------------------------------------------------------
# sparse frames for the tower constructions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SparseFrame:
    """Orthonormal vectors stored as (coordinate indices, coefficients).

    The tower constructions only ever produce coordinate vectors and
    two-coordinate mixtures on disjoint blocks, so orthonormality can be
    verified structurally without densifying.
    """

    rows: tuple[tuple[tuple[int, ...], tuple[complex, ...]], ...]
    ambient_dim: int

    def __len__(self) -> int:
        return len(self.rows)

    def support(self) -> set[int]:
        return {c for coords, _ in self.rows for c in coords}

    def orthonormality_residual(self) -> float:
        worst = 0.0
        by_coord: dict[int, list[int]] = {}
        for i, (coords, coeffs) in enumerate(self.rows):
            worst = max(worst, abs(sum(abs(z) ** 2 for z in coeffs) - 1.0))
            for c in coords:
                by_coord.setdefault(c, []).append(i)
        seen: set[tuple[int, int]] = set()
        for rows_here in by_coord.values():
            for a in rows_here:
                for b in rows_here:
                    if a < b and (a, b) not in seen:
                        seen.add((a, b))
                        ca = dict(zip(*self.rows[a]))
                        cb = dict(zip(*self.rows[b]))
                        ip = sum(cb[c].conjugate() * ca[c]
                                 for c in set(ca) & set(cb))
                        worst = max(worst, abs(ip))
        return worst

    def validate(self, tol: float = 1e-10) -> "SparseFrame":
        r = self.orthonormality_residual()
        if r > tol:
            raise ValueError(f"sparse frame is not orthonormal: residual {r:.3e}")
        return self

    def prefix(self, k: int) -> "SparseFrame":
        return SparseFrame(self.rows[:k], self.ambient_dim)

    def to_dense(self, max_entries: int = 4_000_000) -> Frame:
        if len(self.rows) * self.ambient_dim > max_entries:
            raise ValueError(
                f"{len(self.rows)} x {self.ambient_dim} frame is too large to densify")
        V = np.zeros((len(self.rows), self.ambient_dim), dtype=complex)
        for i, (coords, coeffs) in enumerate(self.rows):
            V[i, list(coords)] = coeffs
        return Frame(V, self.ambient_dim)


# ---------------------------------------------------------------------------
# constant-diagonal stream with on-demand coordinate coverage
# ---------------------------------------------------------------------------


def _compositions(total: int, bins: int):
    """All tuples of ``bins`` nonnegative integers summing to ``total``."""
    if bins == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, bins - 1):
            yield (first,) + rest


class ConstantDiagonalStream:
    """Lazily scheduled orthonormal sequence whose every member has
    diagonal value within ``slack`` of a fixed alpha, arranged so that any
    model coordinate can be brought inside the span of a finite prefix.

    Head coordinates must carry diagonal entries near alpha and are
    emitted as themselves.  A tail coordinate with a different value is
    absorbed into a finite averaging chunk together with exactly recurring
    tail entries; rotating the chunk to constant diagonal makes all its
    members take the value alpha while spanning exactly the chunk's
    coordinates.  Only the chunk bookkeeping (coordinates, entries, trace)
    is kept; actual vectors are materialized on demand.

    Fresh coordinates consumed by the stream are claimed on the model, and
    coordinates claimed by other constructions are welcome as chunk
    partners: they are precisely the ones that will need coverage later.
    """

    def __init__(self, model: OperatorModel, alpha: float, slack: float):
        self.model = model
        self.alpha = complex(alpha)
        self.slack = float(slack)
        self._groups: list[tuple[tuple[int, ...], tuple[complex, ...]]] = []
        self._count = 0
        self._cover_index: dict[int, int] = {}
        self.trace_sum = 0j
        self._pool = tuple(dict.fromkeys(
            complex(v) for s in model.tails for v in s.recurring_values()))
        self._value_cursor: dict[tuple[float, float], int] = {}
        self._shape_cache: dict[tuple[float, float], tuple[int, ...]] = {}
        self._frame_rows_cache: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return self._count

    @property
    def covered(self):
        return self._cover_index.keys()

    def is_covered(self, coord: int) -> bool:
        return coord in self._cover_index

    # -- exact-value coordinate supply ---------------------------------------

    @staticmethod
    def _vkey(v: complex) -> tuple[float, float]:
        return (round(v.real, 12), round(v.imag, 12))

    def take_fresh_coord(self, value: complex) -> int:
        """Claim and return a fresh tail index whose entry equals ``value``
        exactly; the coordinate is neither claimed nor covered yet."""
        model = self.model
        key = self._vkey(value)
        j = self._value_cursor.get(key, 0)
        budget = model.materialized + (1 << 22)
        while j < budget:
            if j >= model.materialized:
                model.extend()
            if (not model.is_claimed(j)
                    and (model.head_dim + j) not in self._cover_index
                    and abs(model.tail_entry(j) - value) <= EXACT_TOL):
                self._value_cursor[key] = j + 1
                model.claim([j])
                return j
            j += 1
        raise ExhaustedTail(f"no fresh coordinate with exact value {value}")

    # -- chunk scheduling ------------------------------------------------------

    def _emit_group(self, coords: tuple[int, ...], entries: tuple[complex, ...]) -> None:
        avg = sum(entries) / len(entries)
        if abs(avg - self.alpha) > max(self.slack - 1e-11, 0.0):
            raise ExhaustedTail(
                f"chunk average {avg} misses alpha {self.alpha} beyond the slack")
        self._groups.append((coords, entries))
        self._count += len(coords)
        last = self._count - 1
        for c in coords:
            self._cover_index[c] = last
        self.trace_sum += sum(entries)

    def _shape_for(self, value: complex) -> tuple[tuple[int, ...], list[complex]]:
        """Smallest multiset averaging exactly to alpha that contains at
        least one entry of ``value``; returned as multiplicities aligned
        with the value list [value, other pool values...]."""
        key = self._vkey(value)
        vals = [complex(value)] + [p for p in self._pool if self._vkey(p) != key]
        if key in self._shape_cache:
            return self._shape_cache[key], vals
        for total in range(1, 129):
            for comp in _compositions(total - 1, len(vals)):
                counts = (comp[0] + 1,) + comp[1:]
                acc = sum(c * v for c, v in zip(counts, vals))
                if abs(acc - self.alpha * total) <= EXACT_TOL * (total + 1):
                    self._shape_cache[key] = counts
                    return counts, vals
        raise ExhaustedTail(
            f"no exact averaging of value {value} to {self.alpha} "
            f"over the recurring pool {self._pool}")

    def ensure_covers(self, coords) -> list[int]:
        """Bring the given coordinates inside the span of the stream,
        returning every newly covered coordinate in emission order."""
        model = self.model
        h = model.head_dim
        newly: list[int] = []
        debts: dict[tuple[float, float], list[int]] = {}
        debt_order: list[tuple[float, float]] = []
        for c in sorted({int(c) for c in coords}):
            if c in self._cover_index:
                continue
            if c < h:
                val = complex(model.head[c, c])
                self._emit_group((c,), (val,))
                newly.append(c)
                continue
            j = c - h
            d = model.tail_entry(j)
            if not model.is_claimed(j):
                model.claim([j])
            if abs(d - self.alpha) <= EXACT_TOL:
                self._emit_group((c,), (d,))
                newly.append(c)
                continue
            key = self._vkey(d)
            if key not in debts:
                debts[key] = []
                debt_order.append(key)
            debts[key].append(c)

        for key in debt_order:
            pending = debts[key]
            value = complex(*key)
            shape, vals = self._shape_for(value)
            while pending:
                chunk: list[int] = []
                entries: list[complex] = []
                for v, mult in zip(vals, shape):
                    for _ in range(mult):
                        same_key = self._vkey(v)
                        src = debts.get(same_key)
                        if src:
                            g = src.pop(0)
                        else:
                            g = h + self.take_fresh_coord(v)
                        chunk.append(g)
                        entries.append(complex(model.tail_entry(g - h)))
                self._emit_group(tuple(chunk), tuple(entries))
                newly.extend(chunk)
        return newly

    def prefix_covering(self, coords) -> int:
        """Smallest prefix length whose span contains the coordinates."""
        coords = [int(c) for c in coords]
        if not coords:
            return 0
        self.ensure_covers(coords)
        return 1 + max(self._cover_index[c] for c in coords)

    # -- materialization (small prefixes only) ---------------------------------

    def _group_rows(self, gi: int) -> np.ndarray:
        if gi in self._frame_rows_cache:
            return self._frame_rows_cache[gi]
        coords, entries = self._groups[gi]
        if len(coords) == 1:
            rows = np.ones((1, 1), dtype=complex)
        else:
            rows = parker_basis(np.diag(np.asarray(entries)), tol=1e-11).frame.vectors
        self._frame_rows_cache[gi] = rows
        return rows

    def prefix_frame(self, k: int, ambient: int, max_entries: int = 4_000_000) -> Frame:
        """Dense frame of the first k stream vectors."""
        if k * ambient > max_entries:
            raise ValueError(f"stream prefix {k} x {ambient} is too large to densify")
        out = np.zeros((k, ambient), dtype=complex)
        done = 0
        for gi, (coords, _) in enumerate(self._groups):
            if done >= k:
                break
            rows = self._group_rows(gi)
            take = min(len(coords), k - done)
            for r in range(take):
                out[done + r, list(coords)] = rows[r]
            done += take
        if done < k:
            raise ValueError(f"stream holds only {done} vectors, asked for {k}")
        return Frame(out, ambient)

    def prefix_values(self, k: int) -> np.ndarray:
        """Diagonal values of the first k stream vectors."""
        vals = np.zeros(k, dtype=complex)
        done = 0
        for gi, (coords, entries) in enumerate(self._groups):
            if done >= k:
                break
            take = min(len(coords), k - done)
            if len(coords) == 1:
                vals[done] = entries[0]
            else:
                rows = self._group_rows(gi)
                d = np.asarray(entries)
                vv = np.einsum("ij,j,ij->i", rows.conj(), d, rows)
                vals[done:done + take] = vv[:take]
            done += take
        return vals


# ---------------------------------------------------------------------------
# subspace extension
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtensionResult:
    """Outcome of one trace-flattening extension step."""

    frame: object             # Frame or SparseFrame, M' with M as a literal prefix
    prefix_len: int           # stream vectors whose span absorbs M
    correctors: int           # number of beta-valued vectors appended
    gamma: complex            # fractional corrector target, in [0, beta)
    trace_before: complex     # trace of the compression onto K
    trace_after: complex      # trace of the compression onto M'
    epsilon: float
    delta: float
    corrector_support: tuple[int, ...]


def _support_coords(frame: Frame, tol: float = 1e-11) -> set[int]:
    if len(frame) == 0:
        return set()
    mask = np.max(np.abs(frame.vectors), axis=0) > tol
    return set(int(i) for i in np.nonzero(mask)[0])


def _model_trace(model: OperatorModel, frame: Frame) -> complex:
    if len(frame) == 0:
        return 0j
    return complex(np.sum(model.rayleigh_many(frame.padded(model.dim).vectors)))


def _corrector_targets(s: complex, alpha: float, beta: float,
                       eps: float) -> tuple[int, complex, list[float]]:
    """Decompose the cancellation -Re(s) into n steps of beta plus a
    fractional remainder (mirrored through alpha when s is negative)."""
    if abs(s.imag) > eps / 4.0:
        raise NumericalBreakdown(
            f"compression trace has a large imaginary part: {s.imag:.3e}")
    c = -s.real
    if abs(c) <= eps / 2.0:
        return 0, 0j, []
    if c > 0:
        n = int(math.floor(c / beta + 1e-12))
        gamma = c - n * beta
        return n, complex(gamma), [beta] * n + [gamma]
    n = int(math.floor(-c / (-alpha) + 1e-12))
    gamma = c + n * (-alpha)
    return n, complex(gamma), [alpha] * n + [gamma]


def extend_subspace(model: OperatorModel, stream: ConstantDiagonalStream,
                    M: Frame, alpha: float, beta: float,
                    eps: float) -> ExtensionResult:
    """Extend a finite subspace M to M' ⊇ M whose compression trace is at
    most eps in modulus.

    The subspace is brought inside the span of a stream prefix (with the
    usual delta-halving safeguard on the Gram matrix of the projections),
    joined with the prefix complement into K, and the accumulated trace of
    K is cancelled by fresh tail vectors valued near beta plus a single
    fractional corrector.
    """
    if not (alpha < 0.0 < beta):
        raise BadSignConfiguration(f"need alpha < 0 < beta, got {alpha}, {beta}")
    if not essential_range(model).contains(complex(beta), "closure", 1e-9):
        raise OutsideRange(f"beta {beta} is not in the essential range")
    m = len(M)
    nb = max(1.0, model.norm_bound())

    if m == 0:
        k = 0
        K = Frame.empty(model.dim)
        s = 0j
        delta = eps / (16.0 * nb)
    else:
        delta = eps / (16.0 * m * nb)
        k = stream.prefix_covering(_support_coords(M))
        for _ in range(60):
            L = stream.prefix_frame(k, model.dim)
            Mv = M.padded(model.dim).vectors
            proj = (Mv @ L.vectors.conj().T) @ L.vectors
            dist = float(np.max(np.linalg.norm(proj - Mv, axis=1)))
            if dist < delta:
                G = proj @ proj.conj().T
                gmin = float(np.linalg.eigvalsh((G + G.conj().T) / 2).min())
                if gmin >= 0.5:
                    break
            delta *= 0.5
        else:
            raise ExhaustedTail("could not bring the subspace inside a stream prefix")
        Mtilde = gram_schmidt(proj)
        C = orthonormal_complement_within(L, Mtilde)
        stackv = (np.vstack([Mv, C.vectors]) if len(C) else Mv)
        K = gram_schmidt(stackv)
        s = _model_trace(model, K)

    n, gamma, targets = _corrector_targets(s, alpha, beta, eps)
    rows: list[np.ndarray] = []
    support: list[int] = []
    if targets:
        budget = eps / (2.0 * len(targets)) * 0.9
        for tgt in targets:
            tv = we_vector_growing(model, tgt, tol=budget)
            model.claim(tv.support)
            support.extend(tv.support)
            rows.append(tv.vector)

    ambient = model.dim
    Kp = K.padded(ambient)
    if rows:
        xr = np.array([np.pad(r, (0, ambient - len(r))) for r in rows])
        frame = Frame(np.vstack([Kp.vectors, xr]), ambient)
    else:
        frame = Kp
    trace_after = _model_trace(model, frame)
    if abs(trace_after) > eps:
        raise NumericalBreakdown(
            f"extension trace {abs(trace_after):.3e} exceeds eps {eps:.3e}")
    return ExtensionResult(
        frame=frame, prefix_len=k, correctors=n, gamma=complex(gamma),
        trace_before=complex(s), trace_after=complex(trace_after),
        epsilon=eps, delta=delta, corrector_support=tuple(support))


# ---------------------------------------------------------------------------
# the nested tower
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FanReport:
    """Nested tower M_1 ⊂ M_2 ⊂ ... with |trace(M_k)| < 1/k, recorded as
    one orthonormal sequence with checkpoint partial sums."""

    report: DiagonalReport
    extensions: tuple[ExtensionResult, ...]
    alpha: float
    beta: float


class _Tower:
    """Sparse state of the nested construction.

    Invariant: the accumulated rows are orthonormal, their span equals
    (covered coordinates of the stream) ⊕ (open corrector blocks), and the
    row prefix up to each checkpoint is exactly the subspace at that level.
    """

    def __init__(self, model: OperatorModel, stream: ConstantDiagonalStream,
                 alpha: float, beta: float):
        self.model = model
        self.stream = stream
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.rows: list[tuple[tuple[int, ...], tuple[complex, ...]]] = []
        self.values: list[complex] = []
        self.present: set[int] = set()
        self.open_blocks: dict[int, tuple[tuple[int, int], tuple[complex, complex]]] = {}
        self.correctors_trace = 0j

    def _entry(self, coord: int) -> complex:
        h = self.model.head_dim
        if coord < h:
            return complex(self.model.head[coord, coord])
        return self.model.tail_entry(coord - h)

    def _add_row(self, coords, coeffs, value: complex) -> None:
        self.rows.append((tuple(coords), tuple(coeffs)))
        self.values.append(complex(value))

    def _add_singleton(self, coord: int) -> None:
        self._add_row((coord,), (1.0 + 0j,), self._entry(coord))
        self.present.add(coord)

    def _close_block(self, key: int) -> None:
        (a, b), (ca, cb) = self.open_blocks.pop(key)
        wa, wb = cb.conjugate(), -ca.conjugate()
        value = abs(wa) ** 2 * self._entry(a) + abs(wb) ** 2 * self._entry(b)
        self._add_row((a, b), (wa, wb), value)
        self.present.add(a)
        self.present.add(b)

    def _open_block(self, target: float) -> tuple[int, ...]:
        """Two-coordinate mixture hitting the target exactly, built from
        the extreme recurring values; registered for later completion."""
        pool = [v.real for v in self.stream._pool if abs(v.imag) <= 1e-12]
        lo, hi = min(pool), max(pool)
        if not (lo - 1e-12 <= target <= hi + 1e-12):
            raise OutsideRange(f"corrector target {target} outside [{lo}, {hi}]")
        t = (hi - target) / (hi - lo)
        t = min(1.0, max(0.0, t))
        ja = self.stream.take_fresh_coord(lo)
        jb = self.stream.take_fresh_coord(hi)
        h = self.model.head_dim
        a, b = h + ja, h + jb
        ca, cb = complex(math.sqrt(t)), complex(math.sqrt(1.0 - t))
        value = t * self._entry(a).real + (1.0 - t) * self._entry(b).real
        self._add_row((a, b), (ca, cb), value)
        self.open_blocks[len(self.rows) - 1] = ((a, b), (ca, cb))
        self.correctors_trace += value
        return ja, jb

    def _corrector(self, target: float) -> tuple[int, ...]:
        """One fresh vector with the exact target value: a raw coordinate
        when the target recurs exactly, a two-coordinate mixture otherwise."""
        for v in self.stream._pool:
            if abs(v - target) <= EXACT_TOL:
                j = self.stream.take_fresh_coord(v)
                coord = self.model.head_dim + j
                self._add_singleton(coord)
                self.correctors_trace += self._entry(coord)
                return (j,)
        return self._open_block(target)

    def join_coordinate(self, coord: int) -> None:
        """Bring a reference coordinate into the subspace."""
        if coord in self.present:
            return
        for key, ((a, b), _) in list(self.open_blocks.items()):
            if coord in (a, b):
                self._close_block(key)
                return
        self._add_singleton(coord)

    def extend(self, eps: float) -> ExtensionResult:
        m = len(self.rows)
        nb = max(1.0, self.model.norm_bound())
        delta = eps / (16.0 * max(1, m) * nb)
        pending = set()
        for coords, _ in self.rows:
            for c in coords:
                if not self.stream.is_covered(c):
                    pending.add(c)
        newly = self.stream.ensure_covers(pending)
        k = len(self.stream)
        # complement of the subspace inside the covered coordinate span:
        # partners of the now-covered blocks, then fresh coordinate rows
        for key in sorted(self.open_blocks):
            self._close_block(key)
        for c in newly:
            if c not in self.present:
                self._add_singleton(c)
        for c in self.stream.covered:
            if c not in self.present:  # coords covered before they had rows
                self._add_singleton(c)
        s = complex(self.stream.trace_sum)
        n, gamma, targets = _corrector_targets(s, self.alpha, self.beta, eps)
        self.correctors_trace = 0j
        support: list[int] = []
        for tgt in targets:
            support.extend(self._corrector(tgt))
        trace_after = s + self.correctors_trace
        if abs(trace_after) > eps:
            raise NumericalBreakdown(
                f"tower trace {abs(trace_after):.3e} exceeds eps {eps:.3e}")
        frame = SparseFrame(tuple(self.rows), self.model.dim)
        return ExtensionResult(
            frame=frame, prefix_len=k, correctors=n, gamma=gamma,
            trace_before=s, trace_after=complex(trace_after),
            epsilon=eps, delta=delta, corrector_support=tuple(support))


def fan_construct(model: OperatorModel, alpha: float, beta: float,
                  levels: int, stream: ConstantDiagonalStream | None = None,
                  safety: float = 0.45) -> FanReport:
    """Nested subspaces M_1 ⊂ ... ⊂ M_levels, where M_k contains the first
    k reference coordinates and the compression trace obeys |S| < 1/k.

    The reference basis enumerates head coordinates first, then tail
    coordinates in interleaving order.  Rows accumulate so that the first
    dim(M_k) rows are exactly a basis of M_k; the checkpoint partial sums
    of the diagonal values therefore equal the compression traces.
    """
    if not (alpha < 0.0 < beta):
        raise BadSignConfiguration(f"need alpha < 0 < beta, got {alpha}, {beta}")
    if levels < 1:
        raise ValueError("need at least one level")
    if stream is None:
        stream = ConstantDiagonalStream(model, alpha, slack=safety / levels / 10.0)
    tower = _Tower(model, stream, alpha, beta)
    checkpoints: list[int] = []
    extensions: list[ExtensionResult] = []
    for k in range(1, levels + 1):
        coord = k - 1
        if coord >= model.head_dim:
            model.ensure(coord - model.head_dim + 1)
        tower.join_coordinate(coord)
        res = tower.extend(eps=safety / k)
        extensions.append(res)
        checkpoints.append(len(res.frame))
    frame = SparseFrame(tuple(tower.rows), model.dim)
    report = DiagonalReport.build(frame, np.asarray(tower.values), target=None,
                                  checkpoints=tuple(checkpoints))
    return FanReport(report=report, extensions=tuple(extensions),
                     alpha=alpha, beta=beta)


def fan_check(report: DiagonalReport, window: int) -> tuple[float, tuple[tuple[int, float], ...]]:
    """Magnitudes of the first ``window`` checkpoint partial sums and
    their minimum."""
    cps = [c for c in report.checkpoints if c <= len(report.values)][:window]
    if not cps:
        raise ValueError("report holds fewer values than the requested window")
    mags = tuple((c, float(abs(report.partial_sums[c - 1]))) for c in cps)
    return min(v for _, v in mags), mags


def affine_normalize(alpha: complex, beta: complex, t: float) -> tuple[complex, complex]:
    """Coefficients (a, b) with a*alpha + b = -(1-t) and a*beta + b = t, so
    the combination t*alpha + (1-t)*beta is mapped to zero."""
    alpha, beta = complex(alpha), complex(beta)
    if alpha == beta:
        raise DegeneratePair("endpoints coincide")
    if not (0.0 < t < 1.0):
        raise ValueError(f"t must lie strictly between 0 and 1, got {t}")
    a = 1.0 / (beta - alpha)
    b = t - a * beta
    return a, b


@dataclass(frozen=True)
class ConvexCombReport:
    """Witness tower for a convex combination of a constant-diagonal value
    and an essential-range value."""

    fan: FanReport
    transformed: OperatorModel
    a: complex
    b: complex
    t: float
    alpha: complex
    beta: complex


def convex_comb_diag(model: OperatorModel, alpha: complex, beta: complex,
                     t: float, levels: int) -> ConvexCombReport:
    """Flatten a*T + b*I, where (a, b) renormalize (alpha, beta) to
    (-(1-t), t); the tower's shrinking partial sums witness the value
    t*alpha + (1-t)*beta as an approximate constant diagonal of T."""
    a, b = affine_normalize(alpha, beta, t)
    transformed = model.affine(a, b)
    fan = fan_construct(transformed, alpha=-(1.0 - t), beta=t, levels=levels)
    return ConvexCombReport(fan=fan, transformed=transformed, a=a, b=b,
                            t=float(t), alpha=complex(alpha), beta=complex(beta))


def dconst_in_relint_check(op, report: DiagonalReport, tol: float = 1e-8) -> bool:
    """Is the report's constant value inside the relative interior of the
    numerical range of the operator?"""
    value = report.target if report.target is not None else complex(np.mean(report.values))
    if isinstance(op, OperatorModel):
        pts = list(op.limit_points)
        n = min(op.materialized, 64) or 16
        pts.extend(boundary_polygon(op.section(n), 180).vertices)
        poly = Polygon.from_points(pts)
    else:
        poly = boundary_polygon(as_matrix(op), 360)
    return polygon_membership(poly, value, "relint", tol)
