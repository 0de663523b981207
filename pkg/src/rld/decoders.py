"""Decoding algorithms on a preprocessed lattice.

Provided decoders:
  - nearest-plane / SIC (Babai) on the QR-triangularized system,
  - Klein-style randomized SIC: per level the standard rounding is replaced
    by truncated discrete-Gaussian rounding at confidence c_i = A r_ii^2,
  - the K-sample list decoder: Babai point first, then K random samples,
    candidates mapped back through the unimodular transform, filtered by
    the constellation box, closest survivor returned, with early stop once
    a candidate is within half the shortest Gram-Schmidt norm,
  - exact oracles: exhaustive search over a finite box and depth-first
    sphere enumeration over the infinite lattice,
  - the MMSE extension (stacking sigma*I under the channel matrix).

Flop accounting counts multiply-add pairs along the decode path with small
fixed charges for the per-level rounding tables; preprocessing cost is
tracked separately on PreprocessedLattice.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SizeGuardError
from .lattice import (LatticeBasis, OrthogonalizationData, ReductionResult,
                      lll_reduce, lll_reduce_complex, orthogonalize,
                      orthogonalize_complex)
from .sampler import SamplerParams, rand_round_batch


@dataclass(frozen=True, eq=False)
class ConstellationBox:
    """Per-coordinate integer bounds (inclusive) of the data alphabet."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.low, dtype=np.int64)
        hi = np.asarray(self.high, dtype=np.int64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ParameterError("box bounds must be 1-d arrays of equal length")
        if np.any(lo >= hi):
            raise ParameterError("box must satisfy low < high in every coordinate")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "low", lo)
        object.__setattr__(self, "high", hi)

    @classmethod
    def qam(cls, n, modulation):
        """Symmetric box {-sqrt(M)/2 .. sqrt(M)/2 - 1} in each of n coordinates."""
        side = math.isqrt(modulation)
        if side * side != modulation or side < 2 or side & (side - 1):
            raise ParameterError(f"modulation must be a square power of four, got {modulation}")
        lo = np.full(n, -side // 2, dtype=np.int64)
        hi = np.full(n, side // 2 - 1, dtype=np.int64)
        return cls(low=lo, high=hi)

    @property
    def n(self):
        return self.low.shape[0]

    def contains(self, x):
        x = np.asarray(x)
        return np.logical_and(x >= self.low, x <= self.high).all(axis=-1)

    def clip(self, x):
        return np.clip(np.asarray(x), self.low, self.high)

    def point_count(self):
        return int(np.prod((self.high - self.low + 1).astype(float)))


@dataclass(frozen=True, eq=False)
class PreprocessedLattice:
    """Reduction + QR of a basis, built once and reused across decodes."""

    basis: LatticeBasis
    reduction: ReductionResult
    orth: OrthogonalizationData
    params: SamplerParams
    c_levels: np.ndarray
    pre_flops: int

    def __post_init__(self):
        c = np.asarray(self.c_levels, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "c_levels", c)

    @property
    def n(self):
        return self.basis.n

    @property
    def m(self):
        return self.basis.m

    @property
    def min_gs_norm(self):
        return self.orth.min_gs_norm


@dataclass
class DecodeResult:
    """Outcome of one decode: estimate in original coordinates plus diagnostics."""

    xhat: np.ndarray
    distance: float
    samples_used: int
    inside_constellation: bool
    flops: int
    candidates: list | None = None


def preprocess(basis: LatticeBasis, k: int = 1, delta: float = 0.99,
               trunc_n: int = 2, rho: float | None = None) -> PreprocessedLattice:
    """LLL-reduce, orthogonalize and solve sampler parameters for a basis."""
    red = lll_reduce(basis, delta)
    orth = orthogonalize(red.reduced)
    min_gs_sq = float(np.min(orth.gs_norms)) ** 2
    params = SamplerParams.for_lattice(k, min_gs_sq, basis.n, trunc_n=trunc_n, rho=rho)
    qr_flops = 2 * basis.m * basis.n * basis.n + 2 * basis.m * basis.n
    c_levels = params.a_confidence * orth.gs_norms**2
    return PreprocessedLattice(basis=basis, reduction=red, orth=orth, params=params,
                               c_levels=c_levels, pre_flops=red.flops + qr_flops)


# ---------------------------------------------------------------------------
# core recursions (vectorized over leading axes)

def nearest_plane_batch(r_mat, yprime):
    """Babai nearest-plane rounding on upper-triangular r_mat; yprime (..., n)."""
    yprime = np.asarray(yprime, dtype=float)
    n = r_mat.shape[0]
    x = np.zeros(yprime.shape, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        interference = x[..., i + 1:] @ r_mat[i, i + 1:]
        x[..., i] = np.rint((yprime[..., i] - interference) / r_mat[i, i]).astype(np.int64)
    return x


def randomized_nearest_plane_batch(r_mat, yprime, c_levels, trunc_n, uniforms):
    """Klein recursion: randomized rounding per level, top level first.

    yprime broadcasts to uniforms[..., 0]'s shape; uniforms has a trailing
    axis of length n holding one uniform per processed level (level n-1
    consumes uniforms[..., 0], level n-2 uniforms[..., 1], and so on).
    """
    n = r_mat.shape[0]
    lead = uniforms.shape[:-1]
    yprime = np.broadcast_to(np.asarray(yprime, dtype=float), lead + (n,))
    x = np.zeros(lead + (n,), dtype=np.int64)
    for t, i in enumerate(range(n - 1, -1, -1)):
        interference = x[..., i + 1:] @ r_mat[i, i + 1:]
        centers = (yprime[..., i] - interference) / r_mat[i, i]
        x[..., i] = rand_round_batch(centers, c_levels[i], trunc_n,
                                     uniforms=uniforms[..., t])
    return x


def sic_decode(pre: PreprocessedLattice, yprime):
    """Babai nearest-plane estimate in reduced coordinates.

    Exact closest-point answer whenever the target is within half the
    shortest Gram-Schmidt norm of the lattice.
    """
    return nearest_plane_batch(pre.orth.r, np.asarray(yprime, dtype=float))


def klein_sample(pre: PreprocessedLattice, yprime, rng):
    """One randomized nearest-plane sample in reduced coordinates.

    Consumes exactly one uniform per level, top level first.
    """
    uniforms = rng.random((1, pre.n))
    x = randomized_nearest_plane_batch(pre.orth.r, np.asarray(yprime, dtype=float),
                                       pre.c_levels, pre.params.trunc_n, uniforms)
    return x[0]


def klein_sample_batch(pre: PreprocessedLattice, yprime, k, rng):
    """k independent randomized samples; row j equals the j-th sequential draw."""
    uniforms = rng.random((k, pre.n))
    return randomized_nearest_plane_batch(pre.orth.r, np.asarray(yprime, dtype=float),
                                          pre.c_levels, pre.params.trunc_n, uniforms)


# ---------------------------------------------------------------------------
# flop model (multiply-add pairs; rounding tables charged per entry)

def _flops_projection(m, n):
    # target projection plus the out-of-span residual
    return 2 * m * n + m


def _flops_nearest_plane(n):
    return n * (n - 1) // 2 + n


def _flops_sample(n, trunc_n):
    # nearest-plane recursion plus two multiply-adds per rounding-table entry
    return n * (n - 1) // 2 + n + 4 * trunc_n * n


def _flops_candidate(m, n):
    # reduced-coordinate distance + remap through the unimodular transform
    return n * (n + 1) // 2 + 2 * n + n * n


def _lex_smallest(rows):
    order = np.lexsort(rows.T[::-1])
    return rows[order[0]]


def randomized_decode_batch(pre: PreprocessedLattice, ys, box, rngs, k=None,
                            early_stop=True, collect_candidates=False):
    """Decode a batch of targets sharing one preprocessed lattice.

    ys is (B, m); rngs is a sequence of B independent random streams, one
    per target.  Returns a list of B DecodeResult.  Mirrors sequential
    semantics: the Babai point is candidate 0, Klein samples follow in draw
    order, and scanning stops at the first in-box candidate within half the
    shortest Gram-Schmidt norm.
    """
    if k is None:
        k = pre.params.k
    if k < 1:
        raise ParameterError(f"sample budget k must be >= 1, got {k}")
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    batch = ys.shape[0]
    if len(rngs) != batch:
        raise ParameterError("need one random stream per target")
    q, r_mat = pre.orth.q, pre.orth.r
    n, m = pre.n, pre.m

    yp = ys @ q
    # component of y outside the column span, formed explicitly (the
    # norm-difference formula cancels catastrophically near lattice points)
    perp = ys - yp @ q.T
    perp_sq = np.einsum("ij,ij->i", perp, perp)

    babai = nearest_plane_batch(r_mat, yp)[:, None, :]
    uniforms = np.stack([rng.random((k, n)) for rng in rngs])
    samples = randomized_nearest_plane_batch(r_mat, yp[:, None, :], pre.c_levels,
                                             pre.params.trunc_n, uniforms)
    cands = np.concatenate([babai, samples], axis=1)  # (B, k+1, n)

    resid = yp[:, None, :] - cands @ r_mat.T
    dist_sq = np.einsum("bkj,bkj->bk", resid, resid) + perp_sq[:, None]
    x_orig = cands @ pre.reduction.unimodular.T  # original coordinates

    inside = box.contains(x_orig) if box is not None else np.ones(dist_sq.shape, dtype=bool)
    thr_sq = (0.5 * pre.min_gs_norm) ** 2

    results = []
    for b in range(batch):
        stop_at = k  # index of last candidate examined (inclusive)
        if early_stop:
            hits = np.nonzero(inside[b] & (dist_sq[b] <= thr_sq))[0]
            if hits.size:
                stop_at = int(hits[0])
        examined = stop_at + 1
        d = np.where(inside[b, :examined], dist_sq[b, :examined], np.inf)
        flops = (_flops_projection(m, n) + _flops_nearest_plane(n)
                 + stop_at * _flops_sample(n, pre.params.trunc_n)
                 + examined * _flops_candidate(m, n))
        cand_report = None
        if collect_candidates:
            uniq = np.unique(x_orig[b, :examined], axis=0)
            ur = yp[b] - (uniq @ pre.reduction.u_inverse.T) @ r_mat.T
            ud = np.sqrt(np.einsum("kj,kj->k", ur, ur) + perp_sq[b])
            cand_report = [(uniq[i].copy(), float(ud[i])) for i in range(uniq.shape[0])]
        if not np.isfinite(d).any():
            xhat = box.clip(x_orig[b, 0])
            dist = float(np.linalg.norm(ys[b] - pre.basis.matrix @ xhat))
            results.append(DecodeResult(xhat=xhat.astype(np.int64), distance=dist,
                                        samples_used=examined, inside_constellation=False,
                                        flops=flops, candidates=cand_report))
            continue
        dmin = float(np.min(d))
        where_min = np.nonzero(d == dmin)[0]
        if where_min.size == 1:
            xhat = x_orig[b, where_min[0]]
        else:
            xhat = _lex_smallest(x_orig[b, where_min])
        results.append(DecodeResult(xhat=xhat.astype(np.int64),
                                    distance=float(math.sqrt(dmin)),
                                    samples_used=examined, inside_constellation=True,
                                    flops=flops, candidates=cand_report))
    return results


def randomized_decode(pre: PreprocessedLattice, y, box, rng, k=None,
                      early_stop=True, collect_candidates=False) -> DecodeResult:
    """K-sample randomized decoding of a single target (see batch variant)."""
    return randomized_decode_batch(pre, np.asarray(y, dtype=float)[None, :], box, [rng],
                                   k=k, early_stop=early_stop,
                                   collect_candidates=collect_candidates)[0]


# ---------------------------------------------------------------------------
# complex-valued path

@dataclass(frozen=True, eq=False)
class PreprocessedComplexLattice:
    """Complex-LLL + complex-QR preprocessing for the complex decoders."""

    basis: np.ndarray
    reduced: np.ndarray
    unimodular: np.ndarray
    u_inverse: np.ndarray
    q: np.ndarray
    r: np.ndarray
    gs_norms: np.ndarray
    params: SamplerParams
    c_levels: np.ndarray
    pre_flops: int

    @property
    def n(self):
        return self.basis.shape[1]

    @property
    def m(self):
        return self.basis.shape[0]

    @property
    def min_gs_norm(self):
        return float(np.min(self.gs_norms))


def preprocess_complex(matrix, k: int = 1, delta: float = 0.99, trunc_n: int = 2,
                       rho: float | None = None) -> PreprocessedComplexLattice:
    """Complex analogue of preprocess(); rho solved with the doubled exponent."""
    basis = np.asarray(matrix, dtype=complex)
    reduced, u, u_inv, red_flops = lll_reduce_complex(basis, delta)
    q, r_mat, gs = orthogonalize_complex(reduced)
    # Gaussian-integer transform sanity: |det| must be 1 for a basis change
    det = np.linalg.det(u)
    if abs(abs(det) - 1.0) > 1e-6:
        raise ParameterError("complex reduction produced a non-unimodular transform")
    min_gs_sq = float(np.min(gs)) ** 2
    n = basis.shape[1]
    params = SamplerParams.for_lattice(k, min_gs_sq, n, trunc_n=trunc_n, rho=rho,
                                       is_complex=True)
    qr_flops = 8 * basis.shape[0] * n * n
    return PreprocessedComplexLattice(basis=basis, reduced=reduced, unimodular=u,
                                      u_inverse=u_inv, q=q, r=r_mat, gs_norms=gs,
                                      params=params,
                                      c_levels=params.a_confidence * gs**2,
                                      pre_flops=red_flops + qr_flops)


def nearest_plane_complex_batch(r_mat, yprime):
    """Complex SIC: independent rounding of real and imaginary residuals."""
    yprime = np.asarray(yprime, dtype=complex)
    n = r_mat.shape[0]
    x = np.zeros(yprime.shape, dtype=complex)
    for i in range(n - 1, -1, -1):
        interference = x[..., i + 1:] @ r_mat[i, i + 1:]
        w = (yprime[..., i] - interference) / np.real(r_mat[i, i])
        x[..., i] = np.rint(w.real) + 1j * np.rint(w.imag)
    return x


def randomized_nearest_plane_complex_batch(r_mat, yprime, c_levels, trunc_n, uniforms):
    """Complex Klein recursion; uniforms (..., n, 2): real then imaginary draw."""
    n = r_mat.shape[0]
    lead = uniforms.shape[:-2]
    yprime = np.broadcast_to(np.asarray(yprime, dtype=complex), lead + (n,))
    x = np.zeros(lead + (n,), dtype=complex)
    for t, i in enumerate(range(n - 1, -1, -1)):
        interference = x[..., i + 1:] @ r_mat[i, i + 1:]
        w = (yprime[..., i] - interference) / np.real(r_mat[i, i])
        re = rand_round_batch(w.real, c_levels[i], trunc_n, uniforms=uniforms[..., t, 0])
        im = rand_round_batch(w.imag, c_levels[i], trunc_n, uniforms=uniforms[..., t, 1])
        x[..., i] = re + 1j * im
    return x


def sic_decode_complex(pre: PreprocessedComplexLattice, yprime):
    """Complex Babai estimate (Gaussian-integer vector) in reduced coordinates."""
    return nearest_plane_complex_batch(pre.r, np.asarray(yprime, dtype=complex))


def klein_sample_complex(pre: PreprocessedComplexLattice, yprime, rng):
    """One complex randomized sample; real and imaginary parts rounded per level.

    Consumes two uniforms per level (real draw then imaginary draw).
    """
    uniforms = rng.random((1, pre.n, 2))
    x = randomized_nearest_plane_complex_batch(pre.r, np.asarray(yprime, dtype=complex),
                                               pre.c_levels, pre.params.trunc_n, uniforms)
    return x[0]


def _stack_complex_int(xc):
    return np.concatenate([np.rint(xc.real), np.rint(xc.imag)],
                          axis=-1).astype(np.int64)


def randomized_decode_complex_batch(pre: PreprocessedComplexLattice, ys, box, rngs,
                                    k=None, early_stop=True):
    """Complex-path K-sample decoding; estimates returned as stacked [Re; Im] ints."""
    if k is None:
        k = pre.params.k
    if k < 1:
        raise ParameterError(f"sample budget k must be >= 1, got {k}")
    ys = np.atleast_2d(np.asarray(ys, dtype=complex))
    batch = ys.shape[0]
    n, m = pre.n, pre.m
    yp = ys @ np.conj(pre.q)
    perp = ys - yp @ pre.q.T
    perp_sq = np.einsum("ij,ij->i", perp, np.conj(perp)).real
    babai = nearest_plane_complex_batch(pre.r, yp)[:, None, :]
    uniforms = np.stack([rng.random((k, n, 2)) for rng in rngs])
    samples = randomized_nearest_plane_complex_batch(pre.r, yp[:, None, :], pre.c_levels,
                                                     pre.params.trunc_n, uniforms)
    cands = np.concatenate([babai, samples], axis=1)
    resid = yp[:, None, :] - cands @ pre.r.T
    dist_sq = np.einsum("bkj,bkj->bk", resid, np.conj(resid)).real + perp_sq[:, None]
    x_orig_c = cands @ pre.unimodular.T
    x_orig = _stack_complex_int(x_orig_c)
    inside = box.contains(x_orig) if box is not None else np.ones(dist_sq.shape, dtype=bool)
    thr_sq = (0.5 * pre.min_gs_norm) ** 2

    results = []
    for b in range(batch):
        stop_at = k
        if early_stop:
            hits = np.nonzero(inside[b] & (dist_sq[b] <= thr_sq))[0]
            if hits.size:
                stop_at = int(hits[0])
        examined = stop_at + 1
        d = np.where(inside[b, :examined], dist_sq[b, :examined], np.inf)
        flops = 4 * (_flops_projection(m, n) + _flops_nearest_plane(n)
                     + stop_at * _flops_sample(n, pre.params.trunc_n)
                     + examined * _flops_candidate(m, n))
        if not np.isfinite(d).any():
            xhat = box.clip(x_orig[b, 0])
            zc = xhat[:n] + 1j * xhat[n:]
            dist = float(np.linalg.norm(ys[b] - pre.basis @ zc))
            results.append(DecodeResult(xhat=xhat.astype(np.int64), distance=dist,
                                        samples_used=examined, inside_constellation=False,
                                        flops=flops))
            continue
        dmin = float(np.min(d))
        where_min = np.nonzero(d == dmin)[0]
        if where_min.size == 1:
            xhat = x_orig[b, where_min[0]]
        else:
            xhat = _lex_smallest(x_orig[b, where_min])
        results.append(DecodeResult(xhat=xhat.astype(np.int64),
                                    distance=float(math.sqrt(dmin)),
                                    samples_used=examined, inside_constellation=True,
                                    flops=flops))
    return results


# ---------------------------------------------------------------------------
# exact decoders / oracles

BOX_GUARD = 10_000_000
ENUM_DIM_GUARD = 16


def mmse_extend(basis: LatticeBasis, y, sigma: float):
    """Stack sigma * I under the basis and zero-pad the receive vector.

    Zero-forcing on the extended system equals the MMSE estimate of the
    original one.
    """
    if sigma < 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    n = basis.n
    ext = np.vstack([basis.matrix, sigma * np.eye(n)])
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != basis.m:
        raise ParameterError("receive vector length must match basis rows")
    return LatticeBasis(ext), np.concatenate([y, np.zeros(n)])


def exhaustive_ml(basis: LatticeBasis, y, box: ConstellationBox,
                  chunk: int = 65536) -> DecodeResult:
    """Brute-force closest point over the finite box; lexicographic tie-break."""
    if box.n != basis.n:
        raise ParameterError("box dimension must match basis columns")
    total = box.point_count()
    if total > BOX_GUARD:
        raise SizeGuardError(f"box holds {total} points, guard is {BOX_GUARD}")
    y = np.asarray(y, dtype=float).ravel()
    counts = (box.high - box.low + 1).astype(np.int64)
    bt = basis.matrix.T
    best_sq = np.inf
    best_x = None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = np.stack(np.unravel_index(idx, counts), axis=1)
        xs = digits + box.low
        diff = xs @ bt - y
        d = np.einsum("ij,ij->i", diff, diff)
        j = int(np.argmin(d))
        if d[j] < best_sq:  # strict keeps the earliest (lexicographically smallest)
            best_sq = float(d[j])
            best_x = xs[j].copy()
    flops = total * (basis.m * basis.n + basis.m)
    return DecodeResult(xhat=best_x.astype(np.int64), distance=math.sqrt(best_sq),
                        samples_used=total, inside_constellation=True, flops=flops)


def cvp_enumerate(basis: LatticeBasis, y, radius: float | None = None):
    """Exact closest lattice point over all integer coefficients.

    Depth-first enumeration with zigzag ordering; the search radius shrinks
    on each improvement and is seeded from the Babai point (or the given
    radius if smaller).  Desk-scale guard: n <= 16.
    """
    n = basis.n
    if n > ENUM_DIM_GUARD:
        raise SizeGuardError(f"enumeration guard: n = {n} > {ENUM_DIM_GUARD}")
    if radius is not None and not (radius > 0):
        raise ParameterError(f"radius must be positive, got {radius}")
    o = orthogonalize(basis)
    r_mat = o.r
    y = np.asarray(y, dtype=float).ravel()
    yp = o.q.T @ y

    babai = nearest_plane_batch(r_mat, yp)
    res = yp - r_mat @ babai
    best_x = babai.copy()
    best_sq = float(res @ res) * (1.0 + 1e-12) + 1e-300
    if radius is not None:
        best_sq = min(best_sq, float(radius) ** 2)

    def sgn(v):
        return 1 if v >= 0 else -1

    x = np.zeros(n, dtype=np.int64)
    step = np.zeros(n, dtype=np.int64)
    dist = np.zeros(n + 1)
    e = np.zeros((n, n))
    k = n - 1
    e[k] = yp
    center = e[k][k] / r_mat[k, k]
    x[k] = int(np.rint(center))
    step[k] = sgn(center - x[k])
    while True:
        d = (e[k][k] - x[k] * r_mat[k, k]) ** 2 + dist[k + 1]
        if d < best_sq:
            if k > 0:
                e[k - 1][:k] = e[k][:k] - x[k] * r_mat[:k, k]
                dist[k] = d
                k -= 1
                center = e[k][k] / r_mat[k, k]
                x[k] = int(np.rint(center))
                step[k] = sgn(center - x[k])
            else:
                best_sq = d
                best_x = x.copy()
                k += 1
                x[k] += step[k]
                step[k] = -step[k] - sgn(step[k])
        else:
            if k == n - 1:
                break
            k += 1
            x[k] += step[k]
            step[k] = -step[k] - sgn(step[k])
    return best_x.astype(np.int64)
