"""Joint and two-sided (Asplund-Ptak style) numerical ranges of operator
tuples: evaluation maps and certified-by-search distance probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EndpointNotAttained
from .linalg import as_matrix

DEFAULT_RESTARTS = 200
DEFAULT_MAX_ITERS = 500


@dataclass(frozen=True)
class OperatorTuple:
    """An n-tuple of equally sized complex matrices.

    Commutativity is not required; commutator norms are available for
    reporting.
    """

    members: tuple[np.ndarray, ...]

    def __post_init__(self):
        ms = tuple(as_matrix(m) for m in self.members)
        if not ms:
            raise ValueError("empty operator tuple")
        dim = ms[0].shape[0]
        for m in ms:
            if m.shape[0] != dim:
                raise DimensionMismatch("tuple members must share one dimension")
        object.__setattr__(self, "members", ms)

    @property
    def arity(self) -> int:
        return len(self.members)

    @property
    def dim(self) -> int:
        return self.members[0].shape[0]

    def stacked(self) -> np.ndarray:
        return np.stack(self.members)

    def commutator_norms(self) -> np.ndarray:
        """Frobenius norms of T_j T_k - T_k T_j."""
        n = self.arity
        out = np.zeros((n, n))
        for j in range(n):
            for k in range(n):
                C = self.members[j] @ self.members[k] - self.members[k] @ self.members[j]
                out[j, k] = np.linalg.norm(C)
        return out


def joint_point(ts: OperatorTuple, x: np.ndarray) -> np.ndarray:
    """(<T_1 x, x>, ..., <T_n x, x>) for a unit vector x."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.shape[0] != ts.dim:
        raise DimensionMismatch(f"vector length {x.shape[0]} != dim {ts.dim}")
    return np.array([np.vdot(x, m @ x) for m in ts.members])


def ap_point(ts: OperatorTuple, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """(<T_1 x, y>, ..., <T_n x, y>) for vectors in the unit ball."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    y = np.asarray(y, dtype=complex).reshape(-1)
    if x.shape[0] != ts.dim or y.shape[0] != ts.dim:
        raise DimensionMismatch("vector lengths must match the tuple dimension")
    if np.linalg.norm(x) > 1 + 1e-10 or np.linalg.norm(y) > 1 + 1e-10:
        raise ValueError("both vectors must lie in the closed unit ball")
    return np.array([np.vdot(y, m @ x) for m in ts.members])


@dataclass(frozen=True)
class ProbeConfig:
    restarts: int = DEFAULT_RESTARTS
    seed: int = 0
    max_iters: int = DEFAULT_MAX_ITERS
    armijo: float = 1e-4
    grad_stop: float = 1e-13
    value_stop: float = 1e-26
    polish_iters: int = 30

    def restart_seed(self, i: int) -> int:
        return self.seed + i


@dataclass(frozen=True)
class ProbeReport:
    """Outcome of a distance search.  The best distance is an upper bound
    on the true distance; witnesses re-evaluate to it."""

    target: np.ndarray
    mode: str
    best_distance: float
    best_vectors: tuple[np.ndarray, ...]
    best_point: np.ndarray
    best_restart: int
    restarts: int
    seeds: tuple[int, ...]
    per_restart_distance: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        def cvec(v):
            return [[z.real, z.imag] for z in v]
        return {
            "target": cvec(self.target),
            "mode": self.mode,
            "best_distance": self.best_distance,
            "best_vectors": [cvec(v) for v in self.best_vectors],
            "best_point": cvec(self.best_point),
            "best_restart": self.best_restart,
            "restarts": self.restarts,
            "seeds": list(self.seeds),
        }


def _c2r(x: np.ndarray) -> np.ndarray:
    return np.concatenate([x.real, x.imag])


def _r2c(v: np.ndarray) -> np.ndarray:
    n = v.shape[0] // 2
    return v[:n] + 1j * v[n:]


def _joint_residual(stack: np.ndarray, target: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("i,kij,j->k", x.conj(), stack, x) - target


def _joint_grad(stack: np.ndarray, r: np.ndarray, x: np.ndarray) -> np.ndarray:
    # gradient of sum |r_k|^2 in the real geometry of C^N
    Tx = np.einsum("kij,j->ki", stack, x)
    Thx = np.einsum("kji,j->ki", stack.conj(), x)
    return 2.0 * (np.einsum("k,ki->i", r.conj(), Tx) + np.einsum("k,ki->i", r, Thx))


def _sphere_descent(stack, target, x0, cfg: ProbeConfig):
    x = x0 / np.linalg.norm(x0)
    r = _joint_residual(stack, target, x)
    f = float(np.vdot(r, r).real)
    step = 1.0
    for _ in range(cfg.max_iters):
        if f <= cfg.value_stop:
            break
        g = _joint_grad(stack, r, x)
        g = g - np.vdot(x, g).real * x  # tangent projection
        gn2 = float(np.vdot(g, g).real)
        if gn2 <= cfg.grad_stop**2:
            break
        step = min(step * 2.0, 1.0)
        improved = False
        for _ in range(40):
            cand = x - step * g
            cand = cand / np.linalg.norm(cand)
            rc = _joint_residual(stack, target, cand)
            fc = float(np.vdot(rc, rc).real)
            if fc <= f - cfg.armijo * step * gn2:
                x, r, f = cand, rc, fc
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return x, f


def _joint_jacobian(stack: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Real Jacobian of the evaluation map at x, shape (2n, 2N)."""
    Tx = np.einsum("kij,j->ki", stack, x)          # d mu / d conj(x)
    Ttx = np.einsum("kji,j->ki", stack, x.conj())  # d mu / d x  (as T^T conj x)
    du = Ttx + Tx
    dw = 1j * (Ttx - Tx)
    J = np.block([[du.real, dw.real], [du.imag, dw.imag]])
    return J


def _sphere_polish(stack, target, x, cfg: ProbeConfig):
    """Gauss-Newton refinement on the sphere; quadratic convergence when
    the target is attainable."""
    v = _c2r(x)
    v = v / np.linalg.norm(v)
    r = _joint_residual(stack, target, _r2c(v))
    f = float(np.vdot(r, r).real)
    for _ in range(cfg.polish_iters):
        if f <= 1e-30:
            break
        xc = _r2c(v)
        J = _joint_jacobian(stack, xc)
        P = np.eye(len(v)) - np.outer(v, v)
        rho = np.concatenate([r.real, r.imag])
        delta, *_ = np.linalg.lstsq(J @ P, -rho, rcond=None)
        delta = P @ delta
        scale = 1.0
        accepted = False
        for _ in range(12):
            vc = v + scale * delta
            vc = vc / np.linalg.norm(vc)
            rc = _joint_residual(stack, target, _r2c(vc))
            fc = float(np.vdot(rc, rc).real)
            if fc < f:
                v, r, f = vc, rc, fc
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break
    return _r2c(v), f


def _ap_residual(stack, target, x, y):
    return np.einsum("i,kij,j->k", y.conj(), stack, x) - target


def _ap_grads(stack, r, x, y):
    gx = 2.0 * np.einsum("k,kji,j->i", r, stack.conj(), y)
    gy = 2.0 * np.einsum("k,kij,j->i", r.conj(), stack, x)
    return gx, gy


def _ball(z: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(z)
    return z if n <= 1.0 else z / n


def _ap_descent(stack, target, x0, y0, cfg: ProbeConfig):
    x, y = _ball(x0), _ball(y0)
    r = _ap_residual(stack, target, x, y)
    f = float(np.vdot(r, r).real)
    step = 1.0
    for _ in range(cfg.max_iters):
        if f <= cfg.value_stop:
            break
        gx, gy = _ap_grads(stack, r, x, y)
        gn2 = float(np.vdot(gx, gx).real + np.vdot(gy, gy).real)
        if gn2 <= cfg.grad_stop**2:
            break
        step = min(step * 2.0, 1.0)
        improved = False
        for _ in range(40):
            xc, yc = _ball(x - step * gx), _ball(y - step * gy)
            rc = _ap_residual(stack, target, xc, yc)
            fc = float(np.vdot(rc, rc).real)
            if fc <= f - cfg.armijo * step * gn2 * 0.1:
                x, y, r, f = xc, yc, rc, fc
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return x, y, f


def _ap_polish(stack, target, x, y, cfg: ProbeConfig):
    """Gauss-Newton on the pair, projecting back into the balls."""
    n_ops, N, _ = stack.shape
    r = _ap_residual(stack, target, x, y)
    f = float(np.vdot(r, r).real)
    for _ in range(cfg.polish_iters):
        if f <= 1e-30:
            break
        Tx = np.einsum("kij,j->ki", stack, x)
        Thy = np.einsum("kji,j->ki", stack.conj(), y)
        # r_k is holomorphic in x and antiholomorphic in y
        du_x, dw_x = Thy.conj(), 1j * Thy.conj()
        du_y, dw_y = Tx, -1j * Tx
        J = np.block([
            [du_x.real, dw_x.real, du_y.real, dw_y.real],
            [du_x.imag, dw_x.imag, du_y.imag, dw_y.imag],
        ])
        rho = np.concatenate([r.real, r.imag])
        delta, *_ = np.linalg.lstsq(J, -rho, rcond=None)
        scale, accepted = 1.0, False
        for _ in range(12):
            step = scale * delta
            xc = _ball(x + _r2c(step[: 2 * N]))
            yc = _ball(y + _r2c(step[2 * N:]))
            rc = _ap_residual(stack, target, xc, yc)
            fc = float(np.vdot(rc, rc).real)
            if fc < f:
                x, y, r, f = xc, yc, rc, fc
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break
    return x, y, f


def min_distance(ts: OperatorTuple, target, mode: str = "joint",
                 cfg: ProbeConfig | None = None) -> ProbeReport:
    """Smallest distance found between the target and the (joint or
    two-sided) range, over seeded restarts of projected descent.

    The result is deterministic for a fixed config: restart i draws its
    start from seed ``cfg.seed + i``, and the merge is a plain min.
    """
    cfg = cfg or ProbeConfig()
    if cfg.restarts < 1:
        raise ValueError("need at least one restart")
    if mode not in ("joint", "ap"):
        raise ValueError(f"unknown probe mode {mode!r}")
    target = np.asarray(target, dtype=complex).reshape(-1)
    if target.shape[0] != ts.arity:
        raise DimensionMismatch(
            f"target has {target.shape[0]} coordinates, tuple arity is {ts.arity}")
    stack = ts.stacked()
    N = ts.dim

    best_f = math.inf
    best_vecs: tuple[np.ndarray, ...] = ()
    best_i = -1
    dists = np.empty(cfg.restarts)
    seeds = tuple(cfg.restart_seed(i) for i in range(cfg.restarts))
    for i, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        if mode == "joint":
            x0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
            x, f = _sphere_descent(stack, target, x0, cfg)
            x, f = _sphere_polish(stack, target, x, cfg)
            vecs = (x,)
        else:
            x0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
            y0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
            x0 /= max(1.0, np.linalg.norm(x0))
            y0 /= max(1.0, np.linalg.norm(y0))
            x, y, f = _ap_descent(stack, target, x0, y0, cfg)
            x, y, f = _ap_polish(stack, target, x, y, cfg)
            vecs = (x, y)
        dists[i] = math.sqrt(max(f, 0.0))
        if f < best_f:
            best_f, best_vecs, best_i = f, vecs, i

    if mode == "joint":
        point = joint_point(ts, best_vecs[0])
    else:
        point = ap_point(ts, best_vecs[0], best_vecs[1])
    return ProbeReport(
        target=target,
        mode=mode,
        best_distance=math.sqrt(max(best_f, 0.0)),
        best_vectors=best_vecs,
        best_point=point,
        best_restart=best_i,
        restarts=cfg.restarts,
        seeds=seeds,
        per_restart_distance=dists,
    )


@dataclass(frozen=True)
class SegmentProbe:
    """Distances from interior points of a segment to the range."""

    p: np.ndarray
    q: np.ndarray
    ts_values: tuple[float, ...]
    distances: tuple[float, ...]
    threshold: float
    endpoint_distances: tuple[float, float]

    @property
    def nonconvexity_flags(self) -> tuple[bool, ...]:
        return tuple(d > self.threshold for d in self.distances)

    @property
    def flagged(self) -> bool:
        return any(self.nonconvexity_flags)

    def to_json(self) -> dict:
        return {
            "p": [[z.real, z.imag] for z in self.p],
            "q": [[z.real, z.imag] for z in self.q],
            "t": list(self.ts_values),
            "distances": list(self.distances),
            "threshold": self.threshold,
            "endpoint_distances": list(self.endpoint_distances),
            "flags": list(self.nonconvexity_flags),
        }


def convexity_probe(ts: OperatorTuple, p, q, samples: int = 9,
                    cfg: ProbeConfig | None = None, mode: str = "joint",
                    threshold: float = 1e-6,
                    attain_tol: float = 1e-8) -> SegmentProbe:
    """Scan interior points of the segment [p, q] for non-membership.

    Both endpoints must be attained within ``attain_tol``; any interior
    point whose searched distance exceeds ``threshold`` is flagged as
    evidence (not proof) of non-convexity.
    """
    cfg = cfg or ProbeConfig()
    p = np.asarray(p, dtype=complex).reshape(-1)
    q = np.asarray(q, dtype=complex).reshape(-1)
    dp = min_distance(ts, p, mode, cfg).best_distance
    dq = min_distance(ts, q, mode, cfg).best_distance
    if dp > attain_tol or dq > attain_tol:
        raise EndpointNotAttained(
            f"endpoint distances {dp:.2e}, {dq:.2e} exceed {attain_tol:.2e}")
    ts_values, dists = [], []
    for k in range(1, samples + 1):
        t = k / (samples + 1)
        mid = t * p + (1.0 - t) * q
        ts_values.append(t)
        dists.append(min_distance(ts, mid, mode, cfg).best_distance)
    return SegmentProbe(
        p=p, q=q,
        ts_values=tuple(ts_values),
        distances=tuple(dists),
        threshold=threshold,
        endpoint_distances=(dp, dq),
    )
