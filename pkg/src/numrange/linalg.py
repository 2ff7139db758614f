"""Dense complex linear algebra substrate: Hermitian eigensystems,
orthonormal frames, Gram-Schmidt, and compressions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotHermitian, RankDeficient

HERMITIAN_TOL = 1e-12
FRAME_TOL = 1e-10
UNIT_TOL = 1e-12


def as_matrix(data) -> np.ndarray:
    """Coerce to a square complex matrix with finite entries."""
    T = np.asarray(data, dtype=complex)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] < 1:
        raise DimensionMismatch(f"expected a nonempty square matrix, got shape {T.shape}")
    if not np.all(np.isfinite(T.view(float))):
        raise ValueError("matrix entries must be finite")
    return T


def as_unit_vector(v, tol: float = UNIT_TOL) -> np.ndarray:
    x = np.asarray(v, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(x.view(float))):
        raise ValueError("vector entries must be finite")
    n = np.linalg.norm(x)
    if abs(n - 1.0) > tol:
        raise ValueError(f"vector norm {n} is not 1 within {tol}")
    return x


def rayleigh(T: np.ndarray, x: np.ndarray) -> complex:
    """<T x, x> for a unit vector x."""
    return complex(np.vdot(x, T @ x))


def canonical_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate a vector's global phase so its first nonzero component has
    nonnegative real part (and zero imaginary part).  Deterministic
    tie-breaking for eigenvectors."""
    for c in v:
        if abs(c) > tol:
            return v * (abs(c) / c)
    return v


@dataclass(frozen=True)
class Frame:
    """Ordered orthonormal vectors spanning a subspace.

    Rows of ``vectors`` are the frame members; ``ambient_dim`` is the
    dimension of the space they live in.  Pairwise inner products must
    match the identity within ``FRAME_TOL``.
    """

    vectors: np.ndarray = field(repr=False)
    ambient_dim: int

    def __post_init__(self):
        V = np.asarray(self.vectors, dtype=complex)
        if V.ndim != 2:
            V = V.reshape(0, self.ambient_dim) if V.size == 0 else V.reshape(1, -1)
        object.__setattr__(self, "vectors", V)
        if V.shape[1] != self.ambient_dim:
            raise DimensionMismatch(
                f"frame rows have length {V.shape[1]}, ambient dim is {self.ambient_dim}")
        if len(V) > self.ambient_dim:
            raise DimensionMismatch("more frame vectors than ambient dimensions")

    @classmethod
    def empty(cls, ambient_dim: int) -> "Frame":
        return cls(np.zeros((0, ambient_dim), dtype=complex), ambient_dim)

    @classmethod
    def standard(cls, ambient_dim: int, count: int | None = None) -> "Frame":
        k = ambient_dim if count is None else count
        return cls(np.eye(ambient_dim, dtype=complex)[:k], ambient_dim)

    @classmethod
    def from_rows(cls, rows, ambient_dim: int | None = None, check: bool = True) -> "Frame":
        V = np.asarray(list(rows), dtype=complex)
        if V.ndim == 1:
            V = V.reshape(1, -1)
        if V.size == 0:
            if ambient_dim is None:
                raise DimensionMismatch("empty frame needs an explicit ambient_dim")
            return cls.empty(ambient_dim)
        f = cls(V, ambient_dim if ambient_dim is not None else V.shape[1])
        if check:
            f.validate()
        return f

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __iter__(self):
        return iter(self.vectors)

    def __getitem__(self, i) -> np.ndarray:
        return self.vectors[i]

    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.conj().T

    def orthonormality_residual(self) -> float:
        if len(self) == 0:
            return 0.0
        G = self.gram()
        return float(np.max(np.abs(G - np.eye(len(self)))))

    def validate(self, tol: float = FRAME_TOL) -> "Frame":
        r = self.orthonormality_residual()
        if r > tol:
            raise ValueError(f"frame is not orthonormal: residual {r:.3e} > {tol}")
        return self

    def concat(self, other: "Frame") -> "Frame":
        if other.ambient_dim != self.ambient_dim:
            raise DimensionMismatch("cannot concatenate frames of different ambient dims")
        return Frame(np.vstack([self.vectors, other.vectors]), self.ambient_dim)

    def padded(self, ambient_dim: int) -> "Frame":
        """Embed into a larger space by appending zero coordinates."""
        if ambient_dim < self.ambient_dim:
            raise DimensionMismatch("cannot shrink a frame's ambient space")
        if ambient_dim == self.ambient_dim:
            return self
        V = np.zeros((len(self), ambient_dim), dtype=complex)
        V[:, : self.ambient_dim] = self.vectors
        return Frame(V, ambient_dim)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal projection of x onto the span of the frame."""
        if len(self) == 0:
            return np.zeros_like(np.asarray(x, dtype=complex))
        coeffs = self.vectors.conj() @ x
        return coeffs @ self.vectors

    def span_residual(self, x: np.ndarray) -> float:
        """Distance from x to the span of the frame."""
        return float(np.linalg.norm(x - self.project(x)))


def herm_eig(H, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, Frame]:
    """Eigendecomposition of a Hermitian matrix.

    Returns eigenvalues in ascending order and a complete orthonormal
    eigenframe.  Equal eigenvalues are resolved deterministically by
    canonical phase normalization of the eigenvectors.
    """
    H = as_matrix(H)
    scale = 1.0 + float(np.abs(H).max(initial=0.0))
    asym = float(np.max(np.abs(H - H.conj().T), initial=0.0))
    if asym > tol * scale:
        raise NotHermitian(f"asymmetry {asym:.3e} exceeds tolerance {tol * scale:.3e}")
    Hs = (H + H.conj().T) / 2.0
    w, V = np.linalg.eigh(Hs)
    rows = np.array([canonical_phase(V[:, i]) for i in range(V.shape[1])])
    return w, Frame(rows, H.shape[0])


def gram_schmidt(vectors, tol: float = 1e-12) -> Frame:
    """Orthonormalize vectors, preserving the nested spans of the input.

    The orthogonalization pass runs twice so nearly orthonormal inputs
    come out clean.  Raises RankDeficient when the Gram matrix of the
    input is close to singular.
    """
    V = np.asarray(list(vectors), dtype=complex)
    if V.ndim == 1:
        V = V.reshape(1, -1)
    if V.size == 0:
        raise RankDeficient("no vectors given")
    G = V @ V.conj().T
    gmin = float(np.linalg.eigvalsh((G + G.conj().T) / 2.0).min())
    if gmin <= tol:
        raise RankDeficient(f"smallest Gram eigenvalue {gmin:.3e} <= {tol:.3e}")
    out = []
    for v in V:
        u = v.astype(complex)
        for _ in range(2):  # re-orthogonalization pass
            for q in out:
                u = u - np.vdot(q, u) * q
        nrm = np.linalg.norm(u)
        if nrm <= np.sqrt(tol):
            raise RankDeficient("vector collapsed during orthogonalization")
        out.append(u / nrm)
    return Frame(np.array(out), V.shape[1])


def orthonormal_complement_within(ambient: Frame, sub: Frame, tol: float = 0.5) -> Frame:
    """Orthonormal basis of span(ambient) ∩ span(sub)^⊥.

    ``ambient`` and ``sub`` are frames in the same space with
    span(sub) ⊆ span(ambient) (up to numerical dust).  Singular values
    of the projected ambient basis cluster at 0 and 1, so a threshold
    of 0.5 separates them cleanly.
    """
    if len(ambient) == 0:
        return Frame.empty(ambient.ambient_dim)
    R = ambient.vectors.copy()
    if len(sub):
        coeffs = R @ sub.vectors.conj().T
        R = R - coeffs @ sub.vectors
    _, s, Vh = np.linalg.svd(R, full_matrices=False)
    rank = int(np.sum(s > tol))
    if rank == 0:
        return Frame.empty(ambient.ambient_dim)
    return Frame(Vh[:rank], ambient.ambient_dim)


def compress(T, frame: Frame) -> np.ndarray:
    """Compression of T onto a frame: B[i, j] = <T f_j, f_i>."""
    T = as_matrix(T)
    if frame.ambient_dim != T.shape[0]:
        raise DimensionMismatch(
            f"frame ambient dim {frame.ambient_dim} != matrix dim {T.shape[0]}")
    F = frame.vectors
    return F.conj() @ T @ F.T


def unitary_with_first_column(u: np.ndarray) -> np.ndarray:
    """A unitary matrix whose first column is the given unit vector.

    Built from a single Householder reflection with a phase fix, so the
    remaining columns form an orthonormal complement of u.
    """
    u = as_unit_vector(u)
    n = u.shape[0]
    e1 = np.zeros(n, dtype=complex)
    e1[0] = 1.0
    z = u[0] / abs(u[0]) if abs(u[0]) > 1e-14 else 1.0 + 0.0j
    v = u + z * e1
    vn2 = np.vdot(v, v).real  # = 2 + 2|u_0|, never close to zero
    Hv = np.eye(n, dtype=complex) - 2.0 * np.outer(v, v.conj()) / vn2
    # Hv maps u to -z*e1; rescale the first column's phase so column 0 is u.
    Q = Hv.copy()
    Q[:, 0] = Hv[:, 0] * (-z)
    return Q
