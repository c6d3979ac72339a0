"""Dense Hermitian linear algebra kernel.

Everything downstream works with m-tuples of n-by-n Hermitian matrices and
with isometries (tall matrices X with X*X = I).  This module owns the two
container types, an eigensolver, orthonormalization, Haar sampling, and the
structural operations (compression, block inflation, direct sums) that the
range computations are built from.

All operations are pure: inputs are never mutated and randomness enters only
through explicit integer seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERM_TOL = 1e-12
ISO_TOL = 1e-10


class DimensionError(ValueError):
    """Shapes are structurally incompatible (not a numerical failure)."""


class RankDeficiencyError(ValueError):
    """A column set that should be independent numerically is not."""


class EigConvergenceError(RuntimeError):
    """The Jacobi sweep cap was reached before the off-diagonal target."""


def frob(M: np.ndarray) -> float:
    return float(np.linalg.norm(M))


def hermitize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + np.conj(M.T))


def herm_defect(M: np.ndarray) -> float:
    """Relative deviation of a square matrix from being Hermitian."""
    return frob(M - np.conj(M.T)) / max(1.0, frob(M))


@dataclass(frozen=True)
class HermitianTuple:
    """An m-tuple of n-by-n Hermitian matrices, stored as an (m, n, n) array.

    Each member must be Hermitian to relative tolerance 1e-12; violations are
    rejected at construction rather than silently symmetrized.
    """

    mats: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.mats, dtype=complex)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise DimensionError(f"expected (m, n, n) array, got shape {A.shape}")
        if A.shape[0] < 1:
            raise DimensionError("a tuple needs at least one member")
        if not np.all(np.isfinite(A.view(float))):
            raise DimensionError("tuple entries must be finite")
        for j in range(A.shape[0]):
            d = herm_defect(A[j])
            if d > HERM_TOL:
                raise DimensionError(f"member {j} is not Hermitian (relative defect {d:.3e})")
        object.__setattr__(self, "mats", A)

    @property
    def m(self) -> int:
        return self.mats.shape[0]

    @property
    def n(self) -> int:
        return self.mats.shape[1]

    def __getitem__(self, j: int) -> np.ndarray:
        return self.mats[j]

    def __iter__(self):
        return iter(self.mats)

    def scale(self) -> float:
        """max(1, largest member Frobenius norm); the relative-tolerance unit."""
        if self.n == 0:
            return 1.0
        return max(1.0, max(frob(self.mats[j]) for j in range(self.m)))


def as_tuple(A) -> HermitianTuple:
    """Coerce a HermitianTuple, list of matrices, or (m, n, n) array."""
    if isinstance(A, HermitianTuple):
        return A
    arr = np.asarray(A, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    return HermitianTuple(arr)


@dataclass(frozen=True)
class Isometry:
    """An n-by-k matrix X with X*X = I_k, k <= n.

    The defect tolerance is 1e-10 by default.  Assembled witnesses (sums of
    orthogonal pieces scaled by convex weights) may carry a documented looser
    bound; they pass it explicitly via `tol`.
    """

    mat: np.ndarray
    tol: float = field(default=ISO_TOL, compare=False)

    def __post_init__(self):
        X = np.asarray(self.mat, dtype=complex)
        if X.ndim != 2:
            raise DimensionError(f"expected 2-d array, got shape {X.shape}")
        n, k = X.shape
        if k > n:
            raise DimensionError(f"isometry needs k <= n, got {n}x{k}")
        d = frob(np.conj(X.T) @ X - np.eye(k))
        if d > self.tol:
            raise DimensionError(f"isometry defect {d:.3e} exceeds tolerance {self.tol:.1e}")
        object.__setattr__(self, "mat", X)

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    @property
    def k(self) -> int:
        return self.mat.shape[1]

    def defect(self) -> float:
        return frob(np.conj(self.mat.T) @ self.mat - np.eye(self.k))


def herm_eig(A: np.ndarray, max_sweeps: int = 30) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns (w, V) with eigenvalues w sorted descending and unitary V such
    that A V = V diag(w).  Sweeps stop when the off-diagonal Frobenius norm
    falls below 1e-12 * ||A||_F; exceeding the sweep cap raises
    EigConvergenceError with the reached off-diagonal norm.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected square matrix, got shape {A.shape}")
    d = herm_defect(A)
    if d > HERM_TOL:
        raise DimensionError(f"matrix is not Hermitian (relative defect {d:.3e})")
    n = A.shape[0]
    M = hermitize(A)
    V = np.eye(n, dtype=complex)
    scale = frob(M)
    if n <= 1 or scale == 0.0:
        w = np.real(np.diag(M))
        order = np.argsort(-w, kind="stable")
        return w[order], V[:, order]
    target = 1e-12 * scale
    # entries this small cannot move the off-diagonal norm past the target
    skip = target / (2.0 * n * n)

    def offnorm(M):
        # direct sum over off-diagonal entries; the norm-difference formula
        # cancels catastrophically near convergence
        return frob(M - np.diag(np.diag(M)))

    off = offnorm(M)
    for _ in range(max_sweeps):
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                beta = M[p, q]
                ab = abs(beta)
                if ab <= skip:
                    continue
                alpha = M[p, p].real
                gamma = M[q, q].real
                u = beta / ab
                tau = (gamma - alpha) / (2.0 * ab)
                sgn = 1.0 if tau >= 0 else -1.0
                t = sgn / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # unitary J = diag(1, conj(u)) @ [[c, s], [-s, c]] zeroes M[p, q]
                J = np.array([[c, s], [-s * np.conj(u), c * np.conj(u)]])
                M[:, [p, q]] = M[:, [p, q]] @ J
                M[[p, q], :] = np.conj(J.T) @ M[[p, q], :]
                V[:, [p, q]] = V[:, [p, q]] @ J
        off = offnorm(M)
    else:
        raise EigConvergenceError(
            f"off-diagonal norm {off:.3e} above target {target:.3e} after {max_sweeps} sweeps"
        )
    w = np.real(np.diag(M))
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def orthonormalize(M: np.ndarray) -> Isometry:
    """Orthonormalize columns by modified Gram-Schmidt with re-orthogonalization.

    Raises RankDeficiencyError naming the first column whose projection onto
    the complement of the previous ones is numerically zero.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise DimensionError(f"expected 2-d array, got shape {M.shape}")
    n, k = M.shape
    if k > n:
        raise DimensionError(f"cannot orthonormalize {k} columns in dimension {n}")
    Q = np.zeros((n, k), dtype=complex)
    for j in range(k):
        v = M[:, j].copy()
        ref = max(1.0, float(np.linalg.norm(v)))
        for _ in range(2):  # twice is enough
            if j > 0:
                v = v - Q[:, :j] @ (np.conj(Q[:, :j].T) @ v)
        nrm = float(np.linalg.norm(v))
        if nrm <= 1e-12 * ref:
            raise RankDeficiencyError(
                f"column {j} is dependent on the previous ones (residual norm {nrm:.3e})"
            )
        Q[:, j] = v / nrm
    return Isometry(Q)


def _qr_fix(M: np.ndarray) -> np.ndarray:
    """Q factor of a reduced QR with the R diagonal rotated to be positive."""
    Q, R = np.linalg.qr(M)
    d = np.diag(R)
    ph = np.where(np.abs(d) > 0, d / np.abs(np.where(np.abs(d) > 0, d, 1)), 1.0)
    return Q * np.conj(ph)


def random_isometry(n: int, k: int, seed: int) -> Isometry:
    """Haar-distributed n-by-k isometry: QR of a complex Gaussian matrix.

    The R diagonal is phase-fixed to be positive, which makes the Q factor
    the Haar sample and the output a deterministic function of the seed.
    """
    if k > n or k < 0 or n < 0:
        raise DimensionError(f"need 0 <= k <= n, got n={n}, k={k}")
    rng = np.random.default_rng(seed)
    G = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / np.sqrt(2.0)
    return Isometry(_qr_fix(G))


def coordinate_isometry(n: int, cols) -> Isometry:
    """Embedding of the listed coordinates of C^n, as columns of the identity."""
    cols = list(cols)
    X = np.zeros((n, len(cols)), dtype=complex)
    for j, c in enumerate(cols):
        X[c, j] = 1.0
    return Isometry(X)


def compress(A, X: Isometry) -> HermitianTuple:
    """Corner compression (X* A_1 X, ..., X* A_m X).

    The products are re-Hermitized entrywise; the symmetrization error is at
    rounding level because X is an isometry and each A_j is Hermitian.
    """
    A = as_tuple(A)
    if X.n != A.n:
        raise DimensionError(f"isometry rows {X.n} do not match tuple dimension {A.n}")
    Xc = np.conj(X.mat.T)
    out = np.empty((A.m, X.k, X.k), dtype=complex)
    for j in range(A.m):
        out[j] = hermitize(Xc @ (A.mats[j] @ X.mat))
    return HermitianTuple(out)


def kron_block(p: int, B) -> HermitianTuple:
    """Inflate a q-tuple to the pq-tuple (I_p (x) B_1, ..., I_p (x) B_m)."""
    B = as_tuple(B)
    if p < 1:
        raise DimensionError(f"need p >= 1, got {p}")
    q = B.n
    out = np.zeros((B.m, p * q, p * q), dtype=complex)
    for j in range(B.m):
        for i in range(p):
            out[j, i * q:(i + 1) * q, i * q:(i + 1) * q] = B.mats[j]
    return HermitianTuple(out)


def direct_sum(A, B) -> HermitianTuple:
    """Memberwise direct sum of two tuples with equal length m."""
    A = as_tuple(A)
    B = as_tuple(B)
    if A.m != B.m:
        raise DimensionError(f"tuple lengths differ: {A.m} vs {B.m}")
    na, nb = A.n, B.n
    out = np.zeros((A.m, na + nb, na + nb), dtype=complex)
    out[:, :na, :na] = A.mats
    out[:, na:, na:] = B.mats
    return HermitianTuple(out)


def empty_tuple(m: int) -> HermitianTuple:
    """The 0-by-0 tuple of length m, the neutral element for direct_sum."""
    return HermitianTuple(np.zeros((m, 0, 0), dtype=complex))
