"""Constructive geometry of matricial ranges.

The results implemented here all have the same shape: a membership or a
star-shapedness statement whose proof is an explicit witness assembly.  The
module makes each assembly executable.

* star centers: a simultaneous scalar compression at a deep enough level
  (p q (m+2) for Hermitian tuples, doubled for complex ones via the
  Cartesian embedding) is a star center of the (p, q) range whenever the
  ambient dimension clears the sufficiency bound (p q (m+2) - 1)(m+1)^2.
* corner compressions: the (p, q) range of any codimension-r corner with
  q r < p sits inside the (p - q r, q) range bump, giving cheap inclusion
  tests; conversely deflation solves inside a corner chosen orthogonal to
  earlier witnesses and their images, so cross terms vanish exactly.
* segment witnesses: two certificates whose witnesses are orthogonal in the
  A-weighted sense combine, with convex square-root weights, into a single
  witness for any point of the connecting segment.
* Tverberg lifts: d = (p-1)(q^2 m + 1) + 1 mutually A-orthogonal level-1
  blocks, read as points of R^(q^2 m), always admit a partition into p parts
  with intersecting hulls; the matching convex weights assemble a level-p
  witness for the common point.
* essential estimate: the closures of the (r, q) ranges shrink, as r grows,
  onto a compact convex limit independent of p; truncating the intersection
  at r_max and reading it through a fixed direction set gives a convergent
  outer summary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .feasibility import (
    Certificate,
    MatPoint,
    PointCloud,
    Rejection,
    SolverOptions,
    StructuralInfeasibility,
    certify,
    compose_certificate,
    membership,
    residual,
    sample_range,
    solve_free,
    find_scalar_point,
)
from .linalg import (
    DimensionError,
    HermitianTuple,
    Isometry,
    ISO_TOL,
    as_tuple,
    compress,
    frob,
    random_isometry,
)
from .ranges import hermitian_embed
from .tverberg import PartitionResult, tverberg_partition


class DeflationError(RuntimeError):
    """A stage of an orthogonal family construction failed its solve."""

    def __init__(self, stage: int, rejection: Rejection):
        self.stage = stage
        self.rejection = rejection
        super().__init__(
            f"stage {stage} failed: best residual {rejection.best_residual:.3e} "
            f"after {rejection.restarts} restarts"
        )


class CrossOrthogonalityError(ValueError):
    """Witnesses are too far from A-orthogonal to combine directly."""


@dataclass(frozen=True)
class CornerSpec:
    """A codimension-r corner, carried as the complement isometry Y."""

    r: int
    complement: Isometry

    def __post_init__(self):
        if self.complement.k != self.complement.n - self.r:
            raise DimensionError(
                f"complement of a codimension-{self.r} corner in dimension "
                f"{self.complement.n} needs {self.complement.n - self.r} columns"
            )


def random_corner(n: int, r: int, seed: int) -> CornerSpec:
    """Haar-random corner of codimension r in dimension n."""
    if not 0 <= r < n:
        raise DimensionError(f"need 0 <= r < n, got r={r}, n={n}")
    U = random_isometry(n, n, seed)
    return CornerSpec(r=r, complement=Isometry(U.mat[:, r:]))


def corner_compress(A, corner: CornerSpec) -> HermitianTuple:
    """The compression of the tuple to the corner's complement subspace."""
    return compress(A, corner.complement)


def coordinate_corner(n: int, removed) -> CornerSpec:
    """The corner deleting the listed coordinates."""
    removed = sorted(set(removed))
    keep = [i for i in range(n) if i not in removed]
    Y = np.zeros((n, len(keep)), dtype=complex)
    for j, i in enumerate(keep):
        Y[i, j] = 1.0
    return CornerSpec(r=len(removed), complement=Isometry(Y))


def annihilating_corner(F) -> CornerSpec:
    """A corner on which every member of a finite-rank tuple vanishes.

    The complement is an orthonormal basis of the orthogonal complement of
    the combined column span of the F_j, so Y* F_j Y = 0 identically and the
    corner compressions of A and of A + F coincide.
    """
    F = as_tuple(F)
    cols = np.hstack([F.mats[j] for j in range(F.m)])
    U, s, _ = np.linalg.svd(cols, full_matrices=True)
    rank = int(np.sum(s > 1e-10 * max(s[0], 1.0)))
    Y = U[:, rank:]
    return CornerSpec(r=rank, complement=Isometry(Y))


@dataclass(frozen=True)
class StarCenter:
    """A certified center candidate together with its two certificates.

    `certificate` is the full-strength one (level p q (m+2) scalar
    compression, or level p-tilde for matrix centers); `restricted` is its
    truncation to the first p q witness columns, certifying the center as an
    ordinary point of the (p, q) range.
    """

    center: MatPoint
    p: int
    q: int
    certificate: Certificate
    restricted: Certificate


def _restrict_scalar_certificate(A, cert: Certificate, p: int, q: int,
                                 center: MatPoint) -> Certificate:
    X = cert.witness.mat[:, : p * q]
    W = Isometry(X, tol=cert.witness.tol)
    return Certificate(point=center, p=p, witness=W,
                       residual=residual(A, W, p, center))


def star_center_scalar(A, p: int, q: int, opts: SolverOptions = SolverOptions()):
    """Scalar star-center candidate of the (p, q) range of a Hermitian tuple.

    Solves for (c_1, ..., c_m) with a simultaneous scalar compression at
    level k = p q (m + 2) and lifts it to the point (c_1 I_q, ..., c_m I_q).
    Any such point is a star center once the ambient dimension reaches
    (k - 1)(m + 1)^2; below that the construction still runs but a warning
    flags that star-shapedness is no longer guaranteed.
    """
    A = as_tuple(A)
    k = p * q * (A.m + 2)
    if k > A.n:
        raise StructuralInfeasibility(
            f"scalar compression level k = {k} exceeds the tuple dimension {A.n}"
        )
    bound = (k - 1) * (A.m + 1) ** 2
    if A.n < bound:
        warnings.warn(
            f"dimension {A.n} is below the star-center guarantee {bound}; "
            "the returned point may fail to be a center",
            stacklevel=2,
        )
    out = find_scalar_point(A, k, opts)
    if isinstance(out, Rejection):
        return out
    values, cert = out
    center = MatPoint.scalar(values, q)
    return StarCenter(center=center, p=p, q=q, certificate=cert,
                      restricted=_restrict_scalar_certificate(A, cert, p, q, center))


def star_center_matrix(A, p: int, q: int, opts: SolverOptions = SolverOptions()):
    """Matrix star-center candidate: any point of the (p~, q) range with
    p~ = p (q^2 (m + 1) + 1) is a (generally non-scalar) star center of the
    (p, q) range in large enough dimension."""
    A = as_tuple(A)
    p_deep = p * (q * q * (A.m + 1) + 1)
    if p_deep * q > A.n:
        raise StructuralInfeasibility(
            f"deep level p~ q = {p_deep * q} exceeds the tuple dimension {A.n}"
        )
    bound = (p_deep * q - 1) * (A.m + 1) ** 2
    if A.n < bound:
        warnings.warn(
            f"dimension {A.n} is below the matrix-center guarantee {bound}",
            stacklevel=2,
        )
    out = solve_free(A, p_deep, q, opts)
    if isinstance(out, Rejection):
        return out
    center = out.point
    X = out.witness.mat[:, : p * q]
    W = Isometry(X, tol=out.witness.tol)
    restricted = Certificate(point=center, p=p, witness=W,
                             residual=residual(A, W, p, center))
    return StarCenter(center=center, p=p, q=q, certificate=out,
                      restricted=restricted)


def star_center_complex(T, p: int, q: int, opts: SolverOptions = SolverOptions()):
    """Scalar star center for a tuple of general complex matrices.

    Embeds A_j = H_j + i G_j into the Hermitian 2m-tuple and runs the scalar
    construction there; the level works out to 2 p q (m + 1).  Returns the
    StarCenter over the embedded tuple plus the complex reading of its
    center, (c_1, ..., c_m) with c_j = center[2j] + i center[2j+1].
    """
    E = hermitian_embed(T)
    out = star_center_scalar(E, p, q, opts)
    if isinstance(out, Rejection):
        return out
    vals = out.certificate.point.scalar_values()
    complex_center = vals[0::2] + 1j * vals[1::2]
    return out, complex_center


def segment_witness(A, cert_b: Certificate, cert_c: Certificate, t: float,
                    cross_tol: float = 1e-8) -> Certificate:
    """Combine two A-orthogonal witnesses into one for t B + (1 - t) C.

    Requires X_b* X_c and every X_b* A_j X_c to vanish within cross_tol;
    then X_t = sqrt(t) X_b + sqrt(1 - t) X_c certifies the convex
    combination with residual at most t res_b + (1 - t) res_c plus a
    cross-term contribution of order cross_tol.
    """
    A = as_tuple(A)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"need 0 <= t <= 1, got {t}")
    if cert_b.p != cert_c.p or cert_b.q != cert_c.q:
        raise DimensionError("certificates live at different (p, q) levels")
    Xb, Xc = cert_b.witness.mat, cert_c.witness.mat
    if Xb.shape != Xc.shape:
        raise DimensionError("witnesses have different shapes")
    cross = frob(np.conj(Xb.T) @ Xc)
    across = max(frob(np.conj(Xb.T) @ (A.mats[j] @ Xc)) for j in range(A.m))
    if max(cross, across) > cross_tol:
        raise CrossOrthogonalityError(
            f"witness cross terms {max(cross, across):.3e} exceed {cross_tol:.1e}; "
            "re-solve the second point with deflated_solve against the first witness"
        )
    Xt = np.sqrt(t) * Xb + np.sqrt(1.0 - t) * Xc
    point = MatPoint(t * cert_b.point.blocks + (1.0 - t) * cert_c.point.blocks)
    defect_bound = max(ISO_TOL, 2.0 * np.sqrt(max(t * (1 - t), 0.0)) * cross
                       + cert_b.witness.tol + cert_c.witness.tol)
    W = Isometry(Xt, tol=defect_bound)
    return Certificate(point=point, p=cert_b.p, witness=W,
                       residual=residual(A, W, cert_b.p, point))


def _gather_witnesses(prior) -> list[Isometry]:
    if prior is None:
        return []
    if isinstance(prior, Isometry):
        return [prior]
    if isinstance(prior, Certificate):
        return [prior.witness]
    if isinstance(prior, BlockFamily):
        return [c.witness for c in prior.members]
    out = []
    for item in prior:
        out.extend(_gather_witnesses(item))
    return out


def deflation_corner(A, prior) -> CornerSpec:
    """The corner orthogonal to earlier witnesses and their A-images.

    The protected subspace is spanned by the columns of every prior witness
    X_r together with A_j X_r for all j; anything solved in the complement
    then has exactly vanishing cross terms X_r* X_new and X_r* A_j X_new.
    """
    A = as_tuple(A)
    wits = _gather_witnesses(prior)
    if not wits:
        return CornerSpec(r=0, complement=Isometry(np.eye(A.n, dtype=complex)))
    cols = []
    for W in wits:
        if W.n != A.n:
            raise DimensionError("prior witness dimension does not match the tuple")
        cols.append(W.mat)
        for j in range(A.m):
            cols.append(A.mats[j] @ W.mat)
    C = np.hstack(cols)
    U, s, _ = np.linalg.svd(C, full_matrices=True)
    rank = int(np.sum(s > 1e-10 * (s[0] if len(s) else 1.0)))
    return CornerSpec(r=rank, complement=Isometry(U[:, rank:]))


def deflated_solve(A, prior, p: int, q: int,
                   opts: SolverOptions = SolverOptions(), target: MatPoint | None = None):
    """Solve for a range point inside the corner deflated past `prior`.

    prior may be a Certificate, Isometry, BlockFamily, or a list of them.
    The returned certificate is composed back up to A, so its witness is
    exactly orthogonal (and A-orthogonal) to every prior witness.
    """
    A = as_tuple(A)
    corner = deflation_corner(A, prior)
    nc = corner.complement.k
    if nc < p * q:
        protected = A.n - nc
        need = protected + p * q
        raise StructuralInfeasibility(
            f"deflation leaves {nc} dimensions but the solve needs {p * q}; "
            f"the tuple dimension must be at least {need}"
        )
    inner = compress(A, corner.complement)
    if target is None:
        out = solve_free(inner, p, q, opts)
    else:
        out = membership(inner, target, p, opts)
    if isinstance(out, Rejection):
        return out
    return compose_certificate(A, corner.complement, out)


@dataclass(frozen=True)
class BlockFamily:
    """Mutually A-orthogonal level-1 blocks with their measured cross terms.

    members[r] certifies B^(r) with witness X_r; cross_tol bounds every
    ||X_r* X_s|| and ||X_r* A_j X_s|| for r != s.  Any prefix of the family
    is a family with the same bound.
    """

    q: int
    members: tuple
    cross_tol: float

    def __len__(self) -> int:
        return len(self.members)

    def points(self) -> list[MatPoint]:
        return [c.point for c in self.members]


def measure_cross(A, witnesses) -> float:
    A = as_tuple(A)
    worst = 0.0
    for r in range(len(witnesses)):
        for s in range(r + 1, len(witnesses)):
            Xr, Xs = witnesses[r].mat, witnesses[s].mat
            worst = max(worst, frob(np.conj(Xr.T) @ Xs))
            for j in range(A.m):
                worst = max(worst, frob(np.conj(Xr.T) @ (A.mats[j] @ Xs)))
    return worst


def orthogonal_block_family(A, q: int, d: int,
                            opts: SolverOptions = SolverOptions(),
                            target: MatPoint | None = None) -> BlockFamily:
    """Build d mutually A-orthogonal blocks by successive deflated solves.

    With a target, every member certifies the same point (the deflation
    argument shows this is always possible in large enough dimension); free
    mode lets each stage land wherever the corner solve does.  A stage
    failure raises DeflationError with the stage index.
    """
    A = as_tuple(A)
    members = []
    for stage in range(d):
        out = deflated_solve(A, members, 1, q, opts.replace(seed=opts.seed + 7919 * stage),
                             target=target)
        if isinstance(out, Rejection):
            raise DeflationError(stage, out)
        members.append(out)
    cross = measure_cross(A, [c.witness for c in members])
    return BlockFamily(q=q, members=tuple(members), cross_tol=cross)


@dataclass(frozen=True)
class TverbergLift:
    """A level-p certificate assembled from a Tverberg partition of level-1
    blocks, with the ingredients kept for inspection."""

    certificate: Certificate
    family: BlockFamily
    partition: PartitionResult

    @property
    def partitions_scanned(self) -> int:
        return self.partition.partitions_scanned


def tverberg_lift(A, q: int, p: int, opts: SolverOptions = SolverOptions()) -> TverbergLift:
    """Certify a point of the (p, q) range out of level-1 data only.

    Builds d = (p - 1)(q^2 m + 1) + 1 A-orthogonal blocks, flattens them to
    points of R^(q^2 m), takes a Tverberg partition into p parts with a
    common hull point C, and assembles the witness whose ell-th column block
    is sum over the ell-th part of sqrt(weight) X_r.  Orthogonality of the
    family makes the assembled compression exactly block diagonal with every
    diagonal block equal to C.
    """
    A = as_tuple(A)
    D = q * q * A.m
    d = (p - 1) * (D + 1) + 1
    need = d * q * (A.m + 1) + q
    if A.n < need:
        raise StructuralInfeasibility(
            f"lift needs d = {d} deflated blocks, so dimension at least {need}, got {A.n}"
        )
    family = orthogonal_block_family(A, q, d, opts)
    pts = np.array([c.point.flatten() for c in family.members])
    part = tverberg_partition(pts, p)
    C = MatPoint.unflatten(part.common_point, A.m, q)
    n = A.n
    X = np.zeros((n, p * q), dtype=complex)
    for ell in range(p):
        block = np.zeros((n, q), dtype=complex)
        for w, r in zip(part.weights[ell], part.parts[ell]):
            if w > 0:
                block += np.sqrt(w) * family.members[r].witness.mat
        X[:, ell * q:(ell + 1) * q] = block
    tol = max(ISO_TOL, d * family.cross_tol + 1e-12)
    W = Isometry(X, tol=tol)
    cert = Certificate(point=C, p=p, witness=W, residual=residual(A, W, p, C))
    return TverbergLift(certificate=cert, family=family, partition=part)


# ---------------------------------------------------------------------------
# essential range estimation


_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
             6.680131188771972e+01, -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
             3.754408661907416e+00)


def _norm_ppf(p: float) -> float:
    """Inverse standard normal CDF (Acklam's rational approximation)."""
    if not 0.0 < p < 1.0:
        raise ValueError("quantile argument must lie strictly in (0, 1)")
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    plow, phigh = 0.02425, 1 - 0.02425
    if p < plow:
        u = np.sqrt(-2.0 * np.log(p))
        return (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) / \
               ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0)
    if p > phigh:
        u = np.sqrt(-2.0 * np.log(1.0 - p))
        return -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) / \
               ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0)
    u = p - 0.5
    r = u * u
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u / \
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)


def _primes(k: int) -> list[int]:
    out = []
    cand = 2
    while len(out) < k:
        if all(cand % p for p in out):
            out.append(cand)
        cand += 1
    return out


def _van_der_corput(i: int, base: int) -> float:
    x, denom = 0.0, 1.0
    while i > 0:
        denom *= base
        i, rem = divmod(i, base)
        x += rem / denom
    return x


def direction_set(dim: int, count: int = 64) -> np.ndarray:
    """A fixed, deterministic, well-spread set of unit directions in R^dim.

    Dimension one gets exactly the two directions that exist.  Otherwise a
    Halton sequence (first `dim` prime bases, zero point skipped) is pushed
    through the normal quantile map and normalized, a standard
    low-discrepancy recipe for the sphere.
    """
    if dim < 1:
        raise DimensionError("direction set needs dim >= 1")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    bases = _primes(dim)
    out = np.empty((count, dim))
    for i in range(count):
        row = np.array([_norm_ppf(_van_der_corput(i + 1, b)) for b in bases])
        nrm = np.linalg.norm(row)
        if nrm < 1e-12:
            row = np.zeros(dim)
            row[i % dim] = 1.0
            nrm = 1.0
        out[i] = row / nrm
    return out


@dataclass(frozen=True)
class EssentialEstimate:
    """Truncated-intersection estimate of the essential (p, q) range.

    supports[r-1, k] is the largest <direction_k, x> over the level-r cloud;
    intersection[r-1, k] is the running minimum over levels up to r, the
    support reading of the intersection of the sampled ranges.  The cloud at
    level r is kept for inspection.  failed_r marks the first level whose
    cloud came back empty (the summary then stops just below it).
    """

    q: int
    directions: np.ndarray
    supports: np.ndarray
    intersection: np.ndarray
    clouds: tuple
    failed_r: int | None = None

    @property
    def r_max(self) -> int:
        return self.supports.shape[0]

    def interval(self) -> tuple[float, float]:
        """The [lo, hi] reading when the flattened dimension is one."""
        if self.directions.shape[1] != 1:
            raise DimensionError("interval reading needs flattened dimension 1")
        hi = lo = None
        for k, u in enumerate(self.directions[:, 0]):
            if u > 0:
                hi = self.intersection[-1, k]
            else:
                lo = -self.intersection[-1, k]
        return float(lo), float(hi)


def essential_estimate(A, q: int, r_max: int,
                       opts: SolverOptions = SolverOptions(),
                       n_dirs: int = 64, n_free: int = 4) -> EssentialEstimate:
    """Estimate the essential (p, q) range by truncated intersection.

    For r = 1..r_max, sample the (r, q) range with one support-directed
    solve per fixed direction plus n_free free solves, then summarize each
    level by its directional maxima and intersect by running minima.  The
    reported per-level summary is nonincreasing in r by construction, which
    matches the shrinking-closure picture it estimates.
    """
    A = as_tuple(A)
    if r_max * q > A.n // 2:
        raise StructuralInfeasibility(
            f"truncation depth r_max*q = {r_max * q} exceeds n/2 = {A.n // 2}; "
            "deeper levels of a fixed finite tuple stop being informative"
        )
    dims = A.m * q * q
    dirs = direction_set(dims, n_dirs)
    supports = []
    clouds = []
    failed_r = None
    for r in range(1, r_max + 1):
        sub = opts.replace(seed=opts.seed + 7919 * r)
        cloud = sample_range(A, r, q, n_free, sub, directions=dirs)
        if len(cloud) == 0:
            failed_r = r
            break
        clouds.append(cloud)
        supports.append(np.max(cloud.coords @ dirs.T, axis=0))
    if not supports:
        raise RuntimeError(f"no level produced any accepted point (first failure r={failed_r})")
    S = np.array(supports)
    inter = np.minimum.accumulate(S, axis=0)
    return EssentialEstimate(q=q, directions=dirs, supports=S,
                             intersection=inter, clouds=tuple(clouds),
                             failed_r=failed_r)
