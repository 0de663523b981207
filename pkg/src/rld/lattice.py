"""Lattice bases, Gram-Schmidt/QR machinery, LLL reduction and real embedding.

Conventions: a basis is an m x n real matrix whose *columns* are the basis
vectors (m >= n, full column rank).  The QR factor R carries the
Gram-Schmidt norms on its diagonal.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBasisError, ParameterError

RANK_TOL = 1e-12


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LatticeBasis:
    """Full-column-rank generator matrix; columns are the basis vectors b_1..b_n."""

    matrix: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.matrix, dtype=float)
        if b.ndim != 2:
            raise ParameterError("basis must be a 2-d matrix")
        m, n = b.shape
        if n < 1 or m < n:
            raise ParameterError(f"need m >= n >= 1, got {m} x {n}")
        if not np.all(np.isfinite(b)):
            raise ParameterError("basis entries must be finite")
        # cheap rank check through LAPACK QR
        diag = np.abs(np.diag(np.linalg.qr(b, mode="r")))
        scale = np.max(np.linalg.norm(b, axis=0))
        if scale == 0.0 or np.min(diag) <= RANK_TOL * scale:
            raise DegenerateBasisError("basis columns are linearly dependent within tolerance")
        object.__setattr__(self, "matrix", _frozen(b))

    @property
    def m(self):
        return self.matrix.shape[0]

    @property
    def n(self):
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class OrthogonalizationData:
    """QR factorisation B = Q R with orthonormal Q columns and positive R diagonal."""

    q: np.ndarray
    r: np.ndarray
    gs_norms: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen(self.q))
        object.__setattr__(self, "r", _frozen(self.r))
        object.__setattr__(self, "gs_norms", _frozen(self.gs_norms))

    @property
    def min_gs_norm(self):
        return float(np.min(self.gs_norms))


@dataclass(frozen=True, eq=False)
class ReductionResult:
    """LLL-reduced basis together with the exact unimodular change of basis.

    reduced.matrix == original.matrix @ unimodular (up to float roundoff);
    unimodular and its inverse are integer matrices with determinant +-1,
    tracked exactly alongside the floating-point reduction.
    """

    reduced: LatticeBasis
    unimodular: np.ndarray
    u_inverse: np.ndarray
    delta: float
    det_u: int
    flops: int

    def __post_init__(self):
        object.__setattr__(self, "unimodular", _frozen(self.unimodular))
        object.__setattr__(self, "u_inverse", _frozen(self.u_inverse))


@dataclass(frozen=True, eq=False)
class ComplexModel:
    """Complex linear model y = H x + n (H may be a composite code/channel matrix)."""

    channel: np.ndarray
    received: np.ndarray | None = None

    def __post_init__(self):
        h = np.asarray(self.channel, dtype=complex)
        if h.ndim != 2:
            raise ParameterError("channel must be a 2-d matrix")
        if not np.all(np.isfinite(h)):
            raise ParameterError("channel entries must be finite")
        object.__setattr__(self, "channel", _frozen(h))
        if self.received is not None:
            y = np.asarray(self.received, dtype=complex).ravel()
            if y.shape[0] != h.shape[0]:
                raise ParameterError("received vector length must match channel rows")
            if not np.all(np.isfinite(y)):
                raise ParameterError("received entries must be finite")
            object.__setattr__(self, "received", _frozen(y))


def orthogonalize(basis: LatticeBasis) -> OrthogonalizationData:
    """Gram-Schmidt QR with a re-orthogonalization pass for numerical stability.

    Returns Q (m x n, orthonormal columns), R (n x n upper triangular,
    positive diagonal) and the Gram-Schmidt norms gs_norms[i] = r[i, i].
    Raises DegenerateBasisError when a diagonal entry falls below
    RANK_TOL times the largest column norm.
    """
    b = basis.matrix
    m, n = b.shape
    scale = np.max(np.linalg.norm(b, axis=0))
    q = np.zeros((m, n))
    r = np.zeros((n, n))
    for j in range(n):
        v = b[:, j].copy()
        for _ in range(2):  # second pass scrubs lost orthogonality
            for i in range(j):
                c = q[:, i] @ v
                r[i, j] += c
                v -= c * q[:, i]
        d = float(np.linalg.norm(v))
        if d <= RANK_TOL * scale:
            raise DegenerateBasisError(f"column {j} is dependent on earlier columns")
        r[j, j] = d
        q[:, j] = v / d
    return OrthogonalizationData(q=q, r=r, gs_norms=np.diag(r).copy())


def _as_int64(mat_obj):
    out = np.empty(mat_obj.shape, dtype=np.int64)
    for idx, v in np.ndenumerate(mat_obj):
        if abs(v) >= 2**62:
            raise ParameterError("unimodular transform entries overflow int64")
        out[idx] = int(v)
    return out


def lll_reduce(basis: LatticeBasis, delta: float = 0.99) -> ReductionResult:
    """LLL reduction (no deep insertions) with exact integer transform tracking.

    delta in (1/4, 1].  The returned basis is size-reduced (|mu_kj| <= 1/2)
    and satisfies the Lovasz condition at delta.  The unimodular transform
    and its inverse are maintained in exact integer arithmetic, so
    |det U| == 1 holds exactly.
    """
    if not (0.25 < delta <= 1.0):
        raise ParameterError(f"delta must be in (1/4, 1], got {delta}")
    b = basis.matrix.copy()
    m, n = b.shape
    scale = np.max(np.linalg.norm(b, axis=0))
    u = np.eye(n, dtype=object)
    u_inv = np.eye(n, dtype=object)
    det_sign = 1
    flops = 0

    bstar = np.zeros_like(b)
    mu = np.zeros((n, n))
    norm_sq = np.zeros(n)
    gs_valid = 0  # Gram-Schmidt data is current for columns < gs_valid

    def gs_col(k):
        nonlocal flops
        v = b[:, k].copy()
        for j in range(k):
            mu[k, j] = (b[:, k] @ bstar[:, j]) / norm_sq[j]
            v -= mu[k, j] * bstar[:, j]
        flops += k * 2 * m
        d = float(v @ v)
        if d <= (RANK_TOL * scale) ** 2:
            raise DegenerateBasisError(f"column {k} degenerate during reduction")
        bstar[:, k] = v
        norm_sq[k] = d

    def ensure_gs(upto):
        nonlocal gs_valid
        while gs_valid <= upto:
            gs_col(gs_valid)
            gs_valid += 1

    ensure_gs(0)
    k = 1
    while k < n:
        ensure_gs(k)
        for j in range(k - 1, -1, -1):
            q_int = int(np.rint(mu[k, j]))
            if q_int != 0:
                b[:, k] -= q_int * b[:, j]
                u[:, k] = u[:, k] - q_int * u[:, j]
                u_inv[j, :] = u_inv[j, :] + q_int * u_inv[k, :]
                mu[k, :j] -= q_int * mu[j, :j]
                mu[k, j] -= q_int
                flops += m + j + 2 * n
        if norm_sq[k] >= (delta - mu[k, k - 1] ** 2) * norm_sq[k - 1]:
            k += 1
        else:
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            u[:, [k - 1, k]] = u[:, [k, k - 1]]
            u_inv[[k - 1, k], :] = u_inv[[k, k - 1], :]
            det_sign = -det_sign
            gs_valid = k - 1  # swap invalidates Gram-Schmidt data from k-1 up
            flops += 2 * m
            k = max(k - 1, 1)

    reduced = LatticeBasis(b)
    return ReductionResult(
        reduced=reduced,
        unimodular=_as_int64(u),
        u_inverse=_as_int64(u_inv),
        delta=float(delta),
        det_u=det_sign,
        flops=flops,
    )


def lll_reduce_complex(matrix, delta: float = 0.99):
    """Complex LLL on a complex basis (columns), rounding mu to Gaussian integers.

    Returns (reduced, u, u_inv, flops).  u has Gaussian-integer entries held
    in complex128; components stay exact while below 2**53.
    """
    if not (0.25 < delta <= 1.0):
        raise ParameterError(f"delta must be in (1/4, 1], got {delta}")
    b = np.array(matrix, dtype=complex)
    if b.ndim != 2 or b.shape[0] < b.shape[1] or b.shape[1] < 1:
        raise ParameterError("complex basis must be m x n with m >= n >= 1")
    m, n = b.shape
    scale = np.max(np.linalg.norm(b, axis=0))
    u = np.eye(n, dtype=complex)
    u_inv = np.eye(n, dtype=complex)
    flops = 0

    bstar = np.zeros_like(b)
    mu = np.zeros((n, n), dtype=complex)
    norm_sq = np.zeros(n)
    gs_valid = 0

    def gs_col(k):
        nonlocal flops
        v = b[:, k].copy()
        for j in range(k):
            mu[k, j] = (np.conj(bstar[:, j]) @ b[:, k]) / norm_sq[j]
            v -= mu[k, j] * bstar[:, j]
        flops += k * 8 * m
        d = float(np.real(np.conj(v) @ v))
        if d <= (RANK_TOL * scale) ** 2:
            raise DegenerateBasisError(f"column {k} degenerate during complex reduction")
        bstar[:, k] = v
        norm_sq[k] = d

    def ensure_gs(upto):
        nonlocal gs_valid
        while gs_valid <= upto:
            gs_col(gs_valid)
            gs_valid += 1

    ensure_gs(0)
    k = 1
    while k < n:
        ensure_gs(k)
        for j in range(k - 1, -1, -1):
            q_g = complex(np.rint(mu[k, j].real), np.rint(mu[k, j].imag))
            if q_g != 0:
                b[:, k] -= q_g * b[:, j]
                u[:, k] = u[:, k] - q_g * u[:, j]
                u_inv[j, :] = u_inv[j, :] + q_g * u_inv[k, :]
                mu[k, :j] -= q_g * mu[j, :j]
                mu[k, j] -= q_g
                flops += 4 * (m + j + 2 * n)
        if norm_sq[k] >= (delta - abs(mu[k, k - 1]) ** 2) * norm_sq[k - 1]:
            k += 1
        else:
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            u[:, [k - 1, k]] = u[:, [k, k - 1]]
            u_inv[[k - 1, k], :] = u_inv[[k, k - 1], :]
            gs_valid = k - 1
            flops += 8 * m
            k = max(k - 1, 1)

    return b, u, u_inv, flops


def orthogonalize_complex(matrix):
    """Complex Gram-Schmidt QR with re-orthogonalization; real positive diagonal."""
    b = np.asarray(matrix, dtype=complex)
    m, n = b.shape
    scale = np.max(np.linalg.norm(b, axis=0))
    q = np.zeros((m, n), dtype=complex)
    r = np.zeros((n, n), dtype=complex)
    for j in range(n):
        v = b[:, j].copy()
        for _ in range(2):
            for i in range(j):
                c = np.conj(q[:, i]) @ v
                r[i, j] += c
                v -= c * q[:, i]
        d = float(np.linalg.norm(v))
        if d <= RANK_TOL * scale:
            raise DegenerateBasisError(f"column {j} is dependent on earlier columns")
        r[j, j] = d
        q[:, j] = v / d
    return q, r, np.real(np.diag(r)).copy()


def real_embed(model: ComplexModel):
    """Map a complex linear model onto the equivalent doubled real model.

    H (p x q complex) becomes [[Re H, -Im H], [Im H, Re H]] (2p x 2q) and the
    received vector becomes [Re y; Im y].  Returns (LatticeBasis, vector or
    None).
    """
    h = model.channel
    top = np.hstack([h.real, -h.imag])
    bot = np.hstack([h.imag, h.real])
    basis = LatticeBasis(np.vstack([top, bot]))
    y = None
    if model.received is not None:
        y = np.concatenate([model.received.real, model.received.imag])
    return basis, y


def proximity_bounds(n: int, delta: float):
    """Worst-case proximity-factor bounds for nearest-plane decoding.

    Returns (lll_bound, dkz_bound) = (beta**n with beta = 1/(delta - 1/4), n**2).
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not (0.25 < delta <= 1.0):
        raise ParameterError(f"delta must be in (1/4, 1], got {delta}")
    beta = 1.0 / (delta - 0.25)
    return beta**n, float(n * n)


def det_exact(mat) -> int:
    """Exact integer determinant (Bareiss fraction-free elimination)."""
    a = [[int(v) for v in row] for row in np.asarray(mat)]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def save_basis_text(path, matrix):
    """Write a matrix as rows of whitespace-separated decimals."""
    np.savetxt(path, np.asarray(matrix, dtype=float), fmt="%.17g")


def load_basis_text(path) -> LatticeBasis:
    """Read a basis matrix saved by save_basis_text."""
    mat = np.atleast_2d(np.loadtxt(path, dtype=float))
    return LatticeBasis(mat)
