"""Truncated discrete-Gaussian randomized rounding and its parameter solver.

Randomized rounding sends a real r to integer q with probability
proportional to exp(-c (r - q)^2); confidence c controls the spread.
For efficiency the distribution is truncated to the 2N integers nearest r
(floor(r)-N+1 .. floor(r)+N) and renormalized; the statistical distance to
the untruncated law decays like rho^(-N^2) when c >= ln(rho).

The parameter solver relates the list size K to the optimum confidence
scale: rho0 is the unique root > 1 of (e rho)^(2n/rho) = K, and
A = ln(rho0) / min_i ||b*_i||^2.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import GainLimitError, ParameterError, UniformSamplingRegimeError

_TERM_CUTOFF = 1e-18


@dataclass(frozen=True, eq=False)
class SamplerParams:
    """Sampling configuration: list size k, confidence rho / a, truncation n.

    Invariant: a_confidence == ln(rho) / min_gs_norm_sq.
    """

    k: int
    rho: float
    a_confidence: float
    trunc_n: int
    min_gs_norm_sq: float

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if self.trunc_n < 1:
            raise ParameterError(f"truncation half-width must be >= 1, got {self.trunc_n}")
        if not (self.rho > 1.0):
            raise ParameterError(f"rho must be > 1, got {self.rho}")
        if not (self.min_gs_norm_sq > 0.0):
            raise ParameterError("min Gram-Schmidt norm must be positive")
        want = math.log(self.rho) / self.min_gs_norm_sq
        if not math.isclose(self.a_confidence, want, rel_tol=1e-9):
            raise ParameterError("a_confidence must equal ln(rho) / min_gs_norm_sq")

    @classmethod
    def for_lattice(cls, k, min_gs_norm_sq, n, trunc_n=2, rho=None, is_complex=False):
        """Build parameters for an n-dim lattice, solving for rho when not given.

        The optimum-rho equation needs k >= 2; for k = 1 (plain nearest
        plane, sampler unused) the k = 2 optimum is substituted.
        """
        if rho is None:
            rho = solve_rho(max(k, 2), n, is_complex=is_complex)
        a = math.log(rho) / min_gs_norm_sq
        return cls(k=int(k), rho=float(rho), a_confidence=a, trunc_n=int(trunc_n),
                   min_gs_norm_sq=float(min_gs_norm_sq))


@dataclass(frozen=True, eq=False)
class RoundingDistribution:
    """2N-point randomized-rounding law for a real r at confidence c."""

    r: float
    c: float
    support: np.ndarray
    pmf: np.ndarray

    def as_text(self):
        """Two-column (integer, probability) rendering."""
        lines = [f"{int(q)} {p:.12g}" for q, p in zip(self.support, self.pmf)]
        return "\n".join(lines)


def _check_rc(r, c):
    if not np.all(np.isfinite(r)):
        raise ParameterError("r must be finite")
    if not np.all(np.isfinite(c)) or np.any(np.asarray(c) <= 0.0):
        raise ParameterError("confidence c must be positive and finite")


def window_weights(r, c, trunc_n):
    """Vectorized support and pmf over the 2N integers nearest r.

    r and c broadcast; returns (support, pmf) with a trailing axis of
    length 2N.  Weights are exp-shifted before normalization so extreme
    confidences do not underflow to an all-zero row.
    """
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=float)
    fl = np.floor(r)
    offsets = np.arange(-trunc_n + 1, trunc_n + 1, dtype=float)
    support = fl[..., None] + offsets
    expo = -c[..., None] * (r[..., None] - support) ** 2
    expo -= expo.max(axis=-1, keepdims=True)
    w = np.exp(expo)
    pmf = w / w.sum(axis=-1, keepdims=True)
    return support, pmf


def truncated_pmf(r, c, trunc_n) -> RoundingDistribution:
    """Normalized 2N-point rounding distribution at (r, c)."""
    if trunc_n < 1:
        raise ParameterError(f"truncation half-width must be >= 1, got {trunc_n}")
    _check_rc(r, c)
    support, pmf = window_weights(float(r), float(c), int(trunc_n))
    return RoundingDistribution(r=float(r), c=float(c),
                                support=support.astype(np.int64), pmf=pmf)


def rand_round(r, c, trunc_n, rng) -> int:
    """One randomized-rounding draw by inverse-CDF lookup.

    Consumes exactly one uniform variate from rng.
    """
    dist = truncated_pmf(r, c, trunc_n)
    u = rng.random()
    cdf = np.cumsum(dist.pmf)
    idx = int(np.searchsorted(cdf, u, side="right"))
    idx = min(idx, dist.support.shape[0] - 1)
    return int(dist.support[idx])


def rand_round_batch(r, c, trunc_n, rng=None, size=None, uniforms=None):
    """Vectorized randomized rounding.

    r and c broadcast against each other (and against `size` when given);
    each draw consumes one uniform, taken from `uniforms` when supplied,
    in C order.  The draw sequence matches repeated rand_round calls on
    the same stream.
    """
    if trunc_n < 1:
        raise ParameterError(f"truncation half-width must be >= 1, got {trunc_n}")
    _check_rc(r, c)
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=float)
    if size is not None:
        r = np.broadcast_to(r, size)
        c = np.broadcast_to(c, size)
    support, pmf = window_weights(r, c, trunc_n)
    if uniforms is None:
        uniforms = rng.random(r.shape)
    cdf = np.cumsum(pmf, axis=-1)
    idx = np.sum(cdf <= uniforms[..., None], axis=-1)
    idx = np.minimum(idx, support.shape[-1] - 1)
    picked = np.take_along_axis(support, idx[..., None], axis=-1)[..., 0]
    return picked.astype(np.int64)


def _split_fraction(r):
    fl = math.floor(r)
    a = r - fl
    return fl, a, 1.0 - a


def _shifted_sums(r, c, trunc_n):
    """Window sum, tail sum and total, all scaled by exp(c * shift).

    The shift keeps the dominant term at 1.0 so huge confidences do not
    underflow; ratios of the returned sums equal ratios of the true sums.
    """
    _, a, b = _split_fraction(r)
    shift = min(a, b) ** 2
    window = 0.0
    for i in range(trunc_n):
        window += math.exp(-c * ((a + i) ** 2 - shift))
        window += math.exp(-c * ((b + i) ** 2 - shift))
    tail = 0.0
    for start in (a, b):
        i = trunc_n
        while True:
            term = math.exp(-c * ((start + i) ** 2 - shift))
            tail += term
            if term < _TERM_CUTOFF * (window + tail):
                break
            i += 1
    return window, tail


def statistical_distance(r, c, trunc_n) -> float:
    """Exact total-variation distance between rounding laws with and without truncation.

    Sums the untruncated tails until terms fall below 1e-18 of the running
    total, then adds the renormalization term |1 - s/s'| / 2 times the
    central mass.
    """
    if trunc_n < 1:
        raise ParameterError(f"truncation half-width must be >= 1, got {trunc_n}")
    _check_rc(r, c)
    window, tail = _shifted_sums(float(r), float(c), int(trunc_n))
    s = window + tail
    tail_mass = tail / s
    central_mass = window / s
    renorm = abs(1.0 - s / window)
    return 0.5 * tail_mass + 0.5 * renorm * central_mass


def s_of_confidence(c) -> float:
    """Normalizer upper bound sum_{i>=0} e^(-c i^2) + e^(-c (1+i)^2)."""
    if not (c > 0.0) or not math.isfinite(c):
        raise ParameterError(f"confidence must be positive and finite, got {c}")
    total = 0.0
    i = 0
    while True:
        term = math.exp(-c * i * i) + math.exp(-c * (1 + i) ** 2)
        total += term
        if term < _TERM_CUTOFF * total:
            break
        i += 1
    return total


def s_upper_bound(rho) -> float:
    """Normalizer upper bound as a function of rho: sum rho^(-i^2) + rho^(-(1+i)^2)."""
    if not (rho > 1.0):
        raise ParameterError(f"rho must be > 1, got {rho}")
    return s_of_confidence(math.log(rho))


def list_size_exponent(rho, n, is_complex=False) -> float:
    """log of f(rho) = (e rho)^(2n/rho) (4n/rho on the complex path)."""
    dim = (4 if is_complex else 2) * n
    return (dim / rho) * (1.0 + math.log(rho))


def solve_rho(k, n, is_complex=False) -> float:
    """Unique rho0 > 1 with (e rho0)^(2n/rho0) = k, by bisection.

    f is strictly decreasing on (1, inf) from e^(2n) down to 1, so a root
    exists iff 2 <= k < e^(2n); beyond that the optimum confidence is zero
    (uniform sampling) and UniformSamplingRegimeError is raised.  The
    complex path replaces the exponent 2n by 4n.  Relative tolerance 1e-10.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if k < 2:
        raise ParameterError(f"k must be >= 2, got {k}")
    dim = (4 if is_complex else 2) * n
    ln_k = math.log(k)
    if ln_k >= dim:
        raise UniformSamplingRegimeError(
            f"k = {k} >= e^{dim}: no rho > 1 exists; the optimum confidence is zero "
            "and sampling degenerates to uniform")
    lo = 1.0 + 1e-9
    hi = 1e6
    while list_size_exponent(hi, n, is_complex) > ln_k:
        hi *= 4.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if list_size_exponent(mid, n, is_complex) > ln_k:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * lo:
            break
    return 0.5 * (lo + hi)


def required_k(gain, n) -> float:
    """List size needed for squared-distance gain G over plain nearest-plane.

    Returns (8 e n / G)^(G/4); only gains G < 8n are reachable.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not (gain > 0.0):
        raise ParameterError(f"gain must be positive, got {gain}")
    if gain >= 8 * n:
        raise GainLimitError(f"gain {gain} >= 8n = {8 * n}: unreachable by list decoding")
    return (8.0 * math.e * n / gain) ** (gain / 4.0)


def pseudo_min_distance(rho0, n, min_gs_norm, is_complex=False) -> float:
    """Effective bounded-decoding radius sqrt(2n/rho0) * min ||b*_i||.

    The complex path uses sqrt(4n/rho0).
    """
    if not (rho0 > 1.0):
        raise ParameterError(f"rho0 must be > 1, got {rho0}")
    dim = (4 if is_complex else 2) * n
    return math.sqrt(dim / rho0) * min_gs_norm
