"""Classical numerical-range computations and reductions.

Covers the objects with closed-form or spectral descriptions: the planar
numerical range W(A) of a single complex matrix via supporting lines, the
rank-k range of a single Hermitian matrix (an eigenvalue interval), scalar
joint-range sampling, support values, and the two reductions that transport
everything else to Hermitian tuples: the Cartesian embedding A = H + iG and
invertible real recombinations of a tuple.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionError, HermitianTuple, Isometry, as_tuple, frob, herm_eig, hermitize
from .feasibility import Certificate, MatPoint, PointCloud


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    empty: bool = False

    def contains(self, x: float, tol: float = 0.0) -> bool:
        if self.empty:
            return False
        return self.lo - tol <= x <= self.hi + tol

    def width(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo


@dataclass(frozen=True)
class Boundary2D:
    """Discretized boundary of a planar numerical range.

    vertices[i] is a boundary point supported by the line of outward normal
    angle angles[i]; support[i] is the corresponding half-plane offset, so
    the range is contained in Re(exp(-i angle) z) <= support for every i
    (outer approximation) while the vertex polygon is an inner one.
    """

    angles: np.ndarray
    vertices: np.ndarray
    support: np.ndarray
    degenerate: str = "full"  # "full" | "segment" | "point"

    def gap(self) -> float:
        """Largest support slack of the inner polygon, a convergence measure."""
        if len(self.angles) == 0 or self.degenerate == "point":
            return 0.0
        inner = np.array([
            np.max(np.real(np.exp(-1j * a) * self.vertices)) for a in self.angles
        ])
        return float(np.max(self.support - inner))


def hermitian_embed(T) -> HermitianTuple:
    """Split complex matrices A_j = H_j + i G_j into the Hermitian 2m-tuple
    (H_1, G_1, ..., H_m, G_m)."""
    arr = np.asarray(T, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise DimensionError(f"expected (m, n, n) complex array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.view(float))):
        raise DimensionError("matrix entries must be finite")
    m, n, _ = arr.shape
    out = np.empty((2 * m, n, n), dtype=complex)
    for j in range(m):
        out[2 * j] = 0.5 * (arr[j] + np.conj(arr[j].T))
        out[2 * j + 1] = (arr[j] - np.conj(arr[j].T)) / 2j
    return HermitianTuple(out)


def tuple_linear_transform(A, T) -> HermitianTuple:
    """Recombine a tuple by a nonsingular real matrix: B_j = sum_i T[i, j] A_i.

    Membership transports covariantly: X certifies (B_j) for the image tuple
    exactly when it certifies the correspondingly recombined blocks for A.
    """
    A = as_tuple(A)
    T = np.asarray(T, dtype=float)
    if T.shape != (A.m, A.m):
        raise DimensionError(f"expected a real {A.m}x{A.m} matrix, got shape {T.shape}")
    colnorms = np.linalg.norm(T, axis=0)
    unit = float(np.prod(np.where(colnorms > 0, colnorms, 1.0)))
    if np.any(colnorms == 0) or abs(np.linalg.det(T)) <= 1e-12 * unit:
        raise DimensionError("transform matrix is numerically singular")
    out = np.einsum("ij,ikl->jkl", T, A.mats)
    return HermitianTuple(out)


def transform_point(B: MatPoint, T) -> MatPoint:
    """The recombination of a point matching tuple_linear_transform."""
    T = np.asarray(T, dtype=float)
    return MatPoint(np.einsum("ij,ikl->jkl", T, B.blocks))


def support_value(A, u) -> float:
    """max over the joint range of <u, b>: the top eigenvalue of sum u_j A_j."""
    A = as_tuple(A)
    u = np.asarray(u, dtype=float)
    if u.shape != (A.m,):
        raise DimensionError(f"direction needs {A.m} components, got shape {u.shape}")
    M = np.einsum("j,jkl->kl", u, A.mats)
    w, _ = herm_eig(hermitize(M))
    return float(w[0])


def rank_k_interval(A, k: int) -> Interval:
    """The rank-k range of one Hermitian matrix: [a_(n-k+1), a_k] in the
    descending eigenvalue order, empty when that interval is inverted."""
    A = np.asarray(A, dtype=complex)
    if A.ndim == 3:
        if A.shape[0] != 1:
            raise DimensionError("rank_k_interval takes a single Hermitian matrix")
        A = A[0]
    n = A.shape[0]
    if not 1 <= k <= n:
        raise DimensionError(f"need 1 <= k <= {n}, got k = {k}")
    w, _ = herm_eig(A)
    lo, hi = float(w[n - k]), float(w[k - 1])
    if lo > hi:
        return Interval(lo=lo, hi=hi, empty=True)
    return Interval(lo=lo, hi=hi)


def numrange_boundary(A, n_angles: int = 256) -> Boundary2D:
    """Boundary of W(A) for a complex square matrix by supporting lines.

    For each angle the top eigenvector x of Re(exp(-i angle) A) contributes
    the vertex x* A x and the support value (the top eigenvalue).  Degenerate
    ranges are tagged: "point" for scalar-like matrices, "segment" when the
    vertex polygon has vanishing area (normal matrices with collinear
    eigenvalues, e.g. Hermitian A).
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A.view(float))):
        raise DimensionError("matrix entries must be finite")
    if n_angles < 3:
        raise DimensionError("need at least 3 angles")
    angles = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    verts = np.empty(n_angles, dtype=complex)
    supp = np.empty(n_angles)
    for i, th in enumerate(angles):
        H = hermitize(np.exp(-1j * th) * A)
        w, V = herm_eig(H)
        x = V[:, 0]
        verts[i] = np.conj(x) @ (A @ x)
        supp[i] = w[0]
    scale = max(1.0, frob(A))
    diam = 0.0
    if n_angles <= 1500:
        diff = np.abs(verts[:, None] - verts[None, :])
        diam = float(np.max(diff))
    else:
        diam = float(np.max(np.abs(verts - verts[0]))) * 2.0
    if diam <= 1e-14 * scale:
        tag = "point"
    else:
        x, y = verts.real, verts.imag
        area = 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))
        tag = "segment" if area < 1e-12 * diam * diam else "full"
    return Boundary2D(angles=angles, vertices=verts, support=supp, degenerate=tag)


def joint_numrange_sample(A, count: int, seed: int = 0,
                          with_certificates: bool = False) -> PointCloud:
    """Sample W(A_1, ..., A_m) at Haar-random unit vectors.

    Every emitted point is an exact element of the joint range (it is a
    quadratic form value), so certificates are a formality here; they are
    attached on request for pipelines that insist on them.
    """
    A = as_tuple(A)
    if A.n < 1:
        raise DimensionError("cannot sample a 0-dimensional tuple")
    rng = np.random.default_rng(seed)
    G = (rng.standard_normal((count, A.n)) + 1j * rng.standard_normal((count, A.n)))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    # values[i, j] = x_i* A_j x_i
    AX = np.einsum("jkl,il->jik", A.mats, G)
    vals = np.real(np.einsum("ik,jik->ij", np.conj(G), AX))
    certs = None
    if with_certificates:
        lst = []
        for i in range(count):
            x = G[i].reshape(-1, 1)
            pt = MatPoint(vals[i].reshape(A.m, 1, 1).astype(complex))
            W = Isometry(x)
            from .feasibility import residual as _res
            lst.append(Certificate(point=pt, p=1, witness=W,
                                   residual=_res(A, W, 1, pt)))
        certs = tuple(lst)
    meta = {"generator": "joint_numrange_sample", "seed": seed, "count": count}
    return PointCloud(coords=vals, m=A.m, p=1, q=1, kind="matpoint",
                      certificates=certs, meta=meta)


def affine_image(cloud: PointCloud, matrix, offset) -> PointCloud:
    """Apply an affine map L(x) = matrix @ x + offset to a cloud's rows.

    Star-shapedness and convexity survive affine images, so verification
    suites can run on pushed-forward clouds.  The output rows are plain
    coordinates (kind "affine"); the map is recorded in the meta.
    """
    M = np.asarray(matrix, dtype=float)
    b = np.asarray(offset, dtype=float)
    if M.ndim != 2 or M.shape[1] != cloud.coords.shape[1]:
        raise DimensionError(
            f"map expects {cloud.coords.shape[1]} input coordinates, got shape {M.shape}"
        )
    if b.shape != (M.shape[0],):
        raise DimensionError(f"offset needs {M.shape[0]} components, got shape {b.shape}")
    out = cloud.coords @ M.T + b
    meta = dict(cloud.meta)
    meta["affine"] = {"matrix": M.tolist(), "offset": b.tolist(),
                      "source_kind": cloud.kind}
    return PointCloud(coords=out, m=cloud.m, p=cloud.p, q=cloud.q,
                      kind="affine", certificates=None, meta=meta)
