"""Classical numerical range of a single operator.

Boundary approximation by support sweeps, membership, the inverse problem
(produce a unit vector attaining a prescribed interior value), and the
essential range of operator models.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ExhaustedTail, NumericalBreakdown, OutsideRange
from .linalg import Frame, as_matrix, as_unit_vector, herm_eig, rayleigh
from .models import OperatorModel
from .polygon import POINT, SEGMENT, Polygon, convex_hull_indices

DEGENERACY_TOL = 1e-10


def hermitian_parts(T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """T = H + iK with H, K Hermitian."""
    H = (T + T.conj().T) / 2.0
    K = (T - T.conj().T) / 2.0j
    return H, K


def support_point(T, theta: float) -> tuple[float, np.ndarray]:
    """Largest eigenvalue s of Re(e^{-i theta} T) and an attaining unit vector.

    <T x, x> for the returned x lies on the supporting line
    Re(e^{-i theta} z) = s of the numerical range.
    """
    s, face = support_face(T, theta)
    return s, face[0]


def support_face(T, theta: float) -> tuple[float, list[np.ndarray]]:
    """Like :func:`support_point` but resolves flat boundary portions.

    When the top eigenvalue is (numerically) multiple, the attained set
    along the supporting line is a segment; the two returned vectors
    attain its endpoints.  Otherwise a single vector is returned.
    """
    T = as_matrix(T)
    w = cmath.exp(-1j * theta)
    Hth = (w * T + w.conjugate() * T.conj().T) / 2.0
    vals, frame = herm_eig(Hth)
    s = float(vals[-1])
    scale = 1.0 + abs(vals[-1]) + abs(vals[0])
    top = [i for i in range(len(vals)) if vals[i] >= s - DEGENERACY_TOL * scale]
    if len(top) == 1:
        return s, [frame[top[0]]]
    # compress the rotated skew part onto the top eigenspace; its extreme
    # eigenvectors attain the endpoints of the flat edge
    Kth = (w * T - w.conjugate() * T.conj().T) / 2.0j
    E = frame.vectors[top]
    B = E.conj() @ Kth @ E.T
    bvals, bframe = herm_eig(B)
    lo = bframe[0] @ E
    hi = bframe[-1] @ E
    return s, [hi / np.linalg.norm(hi), lo / np.linalg.norm(lo)]


def _linear_pencil(T: np.ndarray) -> tuple[str, dict]:
    """Detect whether T = a*A + b*I with A Hermitian.

    Returns ("point", ...), ("segment", ...) or ("generic", {}).  The
    segment data carries the Hermitian direction and the affine map from
    its spectrum to the boundary values.
    """
    T = as_matrix(T)
    N = T.shape[0]
    scale = 1.0 + float(np.abs(T).max())
    mu = complex(np.trace(T)) / N
    if float(np.abs(T - mu * np.eye(N)).max()) <= DEGENERACY_TOL * scale:
        return POINT, {"value": mu}
    H, K = hermitian_parts(T)
    H0 = H - (np.trace(H).real / N) * np.eye(N)
    K0 = K - (np.trace(K).real / N) * np.eye(N)
    nH = float(np.linalg.norm(H0))
    nK = float(np.linalg.norm(K0))
    if nH >= nK:
        c = float(np.trace(K0 @ H0).real) / nH**2
        if float(np.abs(K0 - c * H0).max()) <= DEGENERACY_TOL * scale:
            d = (np.trace(K).real - c * np.trace(H).real) / N
            return SEGMENT, {"direction": H, "map": lambda lam: lam + 1j * (c * lam + d)}
    else:
        c = float(np.trace(H0 @ K0).real) / nK**2
        if float(np.abs(H0 - c * K0).max()) <= DEGENERACY_TOL * scale:
            d = (np.trace(H).real - c * np.trace(K).real) / N
            return SEGMENT, {"direction": K, "map": lambda lam: (c * lam + d) + 1j * lam}
    return "generic", {}


def boundary_polygon(T, m: int = 360) -> Polygon:
    """Inner polygonal approximation of the numerical range from m support
    directions.  Degenerate ranges collapse to a point or a segment,
    detected exactly from the matrix structure."""
    T = as_matrix(T)
    if m < 3:
        raise ValueError("need at least 3 support directions")
    kind, data = _linear_pencil(T)
    if kind == POINT:
        return Polygon((data["value"],), POINT)
    if kind == SEGMENT:
        vals, _ = herm_eig(data["direction"])
        return Polygon.from_points([data["map"](vals[0]), data["map"](vals[-1])])
    pts: list[complex] = []
    for k in range(m):
        _, face = support_face(T, 2 * math.pi * k / m)
        pts.extend(complex(rayleigh(T, x)) for x in face)
    return Polygon.from_points(pts)


def polygon_membership(poly: Polygon, z: complex, mode: str = "closure",
                       tol: float = 1e-8) -> bool:
    """Membership of z in the polygon's closure or relative interior."""
    return poly.contains(z, mode=mode, tol=tol)


# ---------------------------------------------------------------------------
# inverse problem
# ---------------------------------------------------------------------------


def _chord_attain(T: np.ndarray, x: np.ndarray, y: np.ndarray,
                  target: complex) -> np.ndarray:
    """Unit vector in span{x, y} attaining ``target`` when target lies on
    the chord between <Tx,x> and <Ty,y>.

    The one-parameter family (1-t) x + t e^{i psi} y, with the phase psi
    chosen so the attained values move along the chord, sweeps the whole
    chord; the right t is a root of a real quadratic.
    """
    w1 = rayleigh(T, x)
    w2 = rayleigh(T, y)
    span = w2 - w1
    if abs(span) < 1e-15 * (1.0 + abs(w1)):
        return x

    def s_form(u, v):  # <Su, v> for S = (T - w1 I)/(w2 - w1)
        return (np.vdot(v, T @ u) - w1 * np.vdot(v, u)) / span

    a = s_form(y, x)
    b = s_form(x, y)
    # phase making the cross coefficient e^{i psi} a + e^{-i psi} b real
    A = a.real - b.real
    B = a.imag + b.imag
    psi = math.atan2(-B, A) if (A, B) != (0.0, 0.0) else 0.0
    yr = cmath.exp(1j * psi) * y
    if (np.vdot(x, yr)).real < 0:  # keep the pair well separated
        psi += math.pi
        yr = -yr
    c = (cmath.exp(1j * psi) * a + cmath.exp(-1j * psi) * b).real
    rho = float(np.vdot(x, yr).real)

    tau = ((complex(target) - w1) / span).real
    tau = min(1.0, max(0.0, tau))
    # solve n(t) = tau * d(t) with n(t) = (1-c) t^2 + c t and
    # d(t) = (2-2 rho) t^2 + (2 rho - 2) t + 1
    qa = (1.0 - c) - tau * (2.0 - 2.0 * rho)
    qb = c - tau * (2.0 * rho - 2.0)
    qc = -tau

    def newton(t: float) -> float:
        # two corrector steps keep the root accurate when qa is tiny
        for _ in range(2):
            h = (qa * t + qb) * t + qc
            dh = 2.0 * qa * t + qb
            if abs(dh) < 1e-30:
                break
            t -= h / dh
        return t

    roots: list[float] = []
    if abs(qa) < 1e-14:
        if abs(qb) > 1e-14:
            roots = [-qc / qb]
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0:
            # cancellation-free pairing of the two roots
            qq = -0.5 * (qb + math.copysign(math.sqrt(disc), qb))
            roots = [qq / qa]
            if abs(qq) > 1e-300:
                roots.append(qc / qq)
    roots = [newton(t) for t in roots if -1e-9 <= t <= 1.0 + 1e-9]
    if not roots:
        roots = [newton(tau)]  # h(0) <= 0 <= h(1): a root exists; recover it
    best, best_err = None, math.inf
    for t in roots:
        t = min(1.0, max(0.0, t))
        u = (1.0 - t) * x + t * yr
        u = u / np.linalg.norm(u)
        err = abs(rayleigh(T, u) - complex(target))
        if err < best_err:
            best, best_err = u, err
    return best


def _hull_with_witnesses(T: np.ndarray, lam: complex, tol: float,
                         max_rounds: int = 400):
    """Grow an inner approximation of the numerical range until lam is
    strictly inside, keeping an attaining vector per hull vertex.

    Yields (hull vertex values, vectors).  Raises OutsideRange when a
    support direction certifies lam is more than tol outside.
    """
    lam = complex(lam)
    scale = 1.0 + float(np.abs(T).max())
    eta = max(1e-12 * scale, min(tol, 1.0) * 1e-4)
    pts: list[complex] = []
    vecs: list[np.ndarray] = []

    def add(theta: float) -> float:
        s, face = support_face(T, theta)
        for x in face:
            pts.append(complex(rayleigh(T, x)))
            vecs.append(x)
        return s

    for k in range(8):
        add(2 * math.pi * k / 8)
    tried: list[float] = []
    for _ in range(max_rounds):
        hull_idx = convex_hull_indices(pts)
        hull = Polygon.from_points([pts[i] for i in hull_idx])
        if hull.kind == "polygon" and hull.inward_margin(lam) >= eta:
            return [pts[i] for i in hull_idx], [vecs[i] for i in hull_idx]
        # direction of greatest deficiency
        if hull.kind == "polygon":
            n = len(hull.vertices)
            worst, theta = math.inf, 0.0
            for i in range(n):
                a, b = hull.vertices[i], hull.vertices[(i + 1) % n]
                edge = b - a
                margin = ((a - lam).real * edge.imag - (a - lam).imag * edge.real)
                margin /= abs(edge)
                if margin < worst:
                    worst = margin
                    theta = cmath.phase(-1j * edge)  # outward normal of a ccw edge
        else:
            # everything found so far is collinear; probe both normals
            if len(pts) >= 2:
                d = pts[-1] - pts[0]
                base = cmath.phase(d) if abs(d) > 0 else 0.0
            else:
                base = 0.0
            theta = base + math.pi / 2
            if any(abs(theta - t) < 1e-13 for t in tried):
                theta = base - math.pi / 2
        if any(abs(theta - t) < 1e-13 for t in tried):
            theta += 1e-4 * (1 + len(tried))  # nudge off a stalled direction
        tried.append(theta)
        s = add(theta)
        if (lam * cmath.exp(-1j * theta)).real > s + tol:
            raise OutsideRange(
                f"target {lam} lies outside the numerical range "
                f"(support certificate at angle {theta:.4f})")
    raise NumericalBreakdown("inner hull failed to surround the target")


def inverse_numrange(T, lam: complex, tol: float = 1e-8) -> np.ndarray:
    """Unit vector u with |<T u, u> - lam| <= tol, for lam in the range.

    Strategy: collect boundary-attaining vectors from support directions
    until their value hull surrounds lam, then realize lam by two exact
    chord constructions inside a triangle of attained values.  Degenerate
    (point or segment) ranges are handled through the Hermitian spectrum
    directly.
    """
    T = as_matrix(T)
    lam = complex(lam)
    N = T.shape[0]
    if N == 1:
        if abs(T[0, 0] - lam) <= tol:
            return np.ones(1, dtype=complex)
        raise OutsideRange(f"value {lam} differs from the only attainable {T[0, 0]}")

    kind, data = _linear_pencil(T)
    if kind == POINT:
        if abs(data["value"] - lam) <= tol:
            e1 = np.zeros(N, complex)
            e1[0] = 1.0
            return e1
        raise OutsideRange(f"range is the single point {data['value']}")
    if kind == SEGMENT:
        vals, frame = herm_eig(data["direction"])
        zmap = data["map"]
        z0, z1 = zmap(vals[0]), zmap(vals[-1])
        d = z1 - z0
        t = ((lam - z0).real * d.real + (lam - z0).imag * d.imag) / abs(d) ** 2
        off = abs(lam - (z0 + t * d))
        if off > tol or t < -tol / abs(d) or t > 1 + tol / abs(d):
            raise OutsideRange(f"{lam} is off the segment [{z0}, {z1}]")
        t = min(1.0, max(0.0, t))
        h = (1 - t) * vals[0] + t * vals[-1]
        # mix the extreme eigenvectors; cross terms vanish in both parts
        mu = (vals[-1] - h) / (vals[-1] - vals[0]) if vals[-1] > vals[0] else 1.0
        u = math.sqrt(mu) * frame[0] + math.sqrt(1 - mu) * frame[-1]
        return u / np.linalg.norm(u)

    verts, wits = _hull_with_witnesses(T, lam, tol)
    # pick the vertex farthest from lam as apex; shoot a ray through lam
    apex = max(range(len(verts)), key=lambda i: abs(verts[i] - lam))
    if abs(verts[apex] - lam) <= tol:
        return wits[apex]
    za = verts[apex]
    ray = lam - za
    n = len(verts)
    for i in range(n):
        j = (i + 1) % n
        if i == apex or j == apex:
            continue
        a, b = verts[i], verts[j]
        # solve za + s*ray = a + sigma*(b - a)
        M = np.array([[ray.real, -(b - a).real], [ray.imag, -(b - a).imag]])
        rhs = np.array([(a - za).real, (a - za).imag])
        det = float(np.linalg.det(M))
        if abs(det) < 1e-16 * (abs(ray) * abs(b - a) + 1e-300):
            continue
        s, sigma = np.linalg.solve(M, rhs)
        if sigma < -1e-12 or sigma > 1 + 1e-12 or s <= 1e-12:
            continue
        w = a + sigma * (b - a)
        y = _chord_attain(T, wits[i], wits[j], w)
        u = _chord_attain(T, wits[apex], y, lam)
        if abs(rayleigh(T, u) - lam) <= tol:
            return u
    raise NumericalBreakdown(f"chord construction failed for target {lam}")


# ---------------------------------------------------------------------------
# essential range of models
# ---------------------------------------------------------------------------


def essential_range(model: OperatorModel) -> Polygon:
    """Convex hull of the model's declared tail limit points.  Independent
    of the head by construction."""
    return Polygon.from_points(model.limit_points)


@dataclass(frozen=True)
class TailVector:
    """Unit vector supported on tail coordinates, with its support."""

    vector: np.ndarray
    support: tuple[int, ...]  # tail indices (head excluded)
    value: complex


def _convex_weights(poly: Polygon, target: complex) -> list[tuple[complex, float]]:
    """Write target as a convex combination of the polygon's vertices."""
    target = complex(target)
    if poly.kind == POINT:
        return [(poly.vertices[0], 1.0)]
    if poly.kind == SEGMENT:
        a, b = poly.vertices
        d = b - a
        t = ((target - a).real * d.real + (target - a).imag * d.imag) / abs(d) ** 2
        t = min(1.0, max(0.0, t))
        return [(a, 1.0 - t), (b, t)]
    verts = poly.vertices
    n = len(verts)
    for i in range(1, n - 1):
        tri = (verts[0], verts[i], verts[i + 1])
        M = np.array([[v.real for v in tri], [v.imag for v in tri], [1.0, 1.0, 1.0]])
        try:
            w = np.linalg.solve(M, np.array([target.real, target.imag, 1.0]))
        except np.linalg.LinAlgError:
            continue
        if np.all(w >= -1e-12):
            w = np.clip(w, 0.0, None)
            w = w / w.sum()
            return [(tri[k], float(w[k])) for k in range(3) if w[k] > 1e-14]
    raise OutsideRange(f"{target} admits no convex decomposition over {verts}")


def we_vector(model: OperatorModel, target: complex, tol: float = 1e-8,
              forbidden=frozenset(), search_limit: int | None = None) -> TailVector:
    """Unit vector on fresh tail coordinates whose value is within tol of
    a target in the essential range.

    Coordinates listed in ``forbidden`` (tail indices) are never used.
    Raises ExhaustedTail when the materialized tail has no suitable fresh
    coordinates; the caller may extend the model and retry.
    """
    target = complex(target)
    poly = essential_range(model)
    if not poly.contains(target, "closure", tol):
        raise OutsideRange(f"{target} is not within {tol} of the essential range")
    weights = _convex_weights(poly, target)
    forbidden = set(forbidden)
    limit = search_limit if search_limit is not None else max(model.materialized, 256)
    entries = model.tail_entries(limit)
    delta = tol / 2.0
    chosen: list[int] = []
    for p, _w in weights:
        found = None
        for j in range(limit):
            if j in forbidden or j in chosen or model.is_claimed(j):
                continue
            if abs(entries[j] - p) <= delta:
                found = j
                break
        if found is None:
            raise ExhaustedTail(
                f"no fresh tail entry within {delta:.2e} of {p} in the first {limit}")
        chosen.append(found)

    coeffs = np.sqrt(np.array([w for _, w in weights], dtype=float))
    if len(weights) == 2:
        # sharpen: solve the 1-D mixture against the actual entries
        d0, d1 = entries[chosen[0]], entries[chosen[1]]
        den = abs(d0 - d1) ** 2
        if den > 1e-30:
            t = ((target - d1).conjugate() * (d0 - d1)).real / den
            if -1e-9 <= t <= 1 + 1e-9:
                t = min(1.0, max(0.0, t))
                cand = np.sqrt(np.array([t, 1.0 - t]))
                old = sum(w * entries[c] for (_, w), c in zip(weights, chosen))
                new = t * d0 + (1 - t) * d1
                if abs(new - target) < abs(old - target):
                    coeffs = cand

    x = np.zeros(model.dim, dtype=complex)
    h = model.head_dim
    for c, j in zip(coeffs, chosen):
        x[h + j] = c
    x = x / np.linalg.norm(x)
    value = model.rayleigh(x)
    if abs(value - target) > tol:
        raise ExhaustedTail(
            f"tail entries near the decomposition only achieve {value}, "
            f"target {target}, tol {tol}")
    return TailVector(vector=x, support=tuple(chosen), value=complex(value))


def we_vector_growing(model: OperatorModel, target: complex, tol: float = 1e-8,
                      forbidden=frozenset(), max_blocks: int = 64) -> TailVector:
    """Retry :func:`we_vector`, extending the tail block by block."""
    for _ in range(max_blocks):
        try:
            return we_vector(model, target, tol, forbidden)
        except ExhaustedTail:
            model.extend()
    raise ExhaustedTail(
        f"no suitable coordinates for {target} within {max_blocks} blocks")
