import math

import numpy as np
import pytest

import rld
from rld.sampler import list_size_exponent
from _oracles import chisquare_pvalue, pmf_bruteforce, statistical_distance_bruteforce


# ---------------------------------------------------------------------------
# truncated_pmf

def test_pmf_concentrated_example():
    d = rld.truncated_pmf(-5.87, 3.16, 2)
    p = dict(zip(d.support.tolist(), d.pmf.tolist()))
    assert 0.88 <= p[-6] <= 0.92
    assert 0.06 <= p[-5] <= 0.10
    assert 0.01 <= p[-7] <= 0.03


def test_pmf_half_fraction_splits_evenly():
    d = rld.truncated_pmf(0.5, 2.7, 1)
    assert d.support.tolist() == [0, 1]
    assert np.allclose(d.pmf, [0.5, 0.5])


def test_pmf_confident_limit_is_standard_rounding():
    # mass off the nearest integer must be below 1e-40 (P(3) > 1 - 1e-40)
    d = rld.truncated_pmf(3.0, 100.0, 2)
    p = dict(zip(d.support.tolist(), d.pmf.tolist()))
    assert 1.0 - p[3] < 1e-40
    assert sum(v for q, v in p.items() if q != 3) < 1e-40


def test_pmf_matches_direct_formula():
    for r, c, n in [(-5.87, 3.16, 2), (0.3, 1.0, 3),
                    (7.25, 0.2, 4), (-0.001, 12.0, 1)]:
        d = rld.truncated_pmf(r, c, n)
        support, pmf = pmf_bruteforce(r, c, n)
        assert d.support.tolist() == support
        assert np.allclose(d.pmf, pmf, atol=1e-14)


@pytest.mark.parametrize("c", [1e-6, 1e-3, 1.0, 50.0, 1e6])
@pytest.mark.parametrize("r", [-17.3, -0.5, 0.0, 0.49999, 2.0, 123.456])
def test_pmf_sums_to_one(c, r):
    for n in (1, 2, 4):
        d = rld.truncated_pmf(r, c, n)
        assert abs(float(np.sum(d.pmf)) - 1.0) <= 1e-12
        assert d.support.shape == (2 * n,)
        assert np.all(np.diff(d.support) == 1)


@pytest.mark.parametrize("r", [-2.3, -0.7, 0.2, 0.5, 3.49, 3.51])
def test_pmf_mode_is_nearest_integer(r):
    d = rld.truncated_pmf(r, 2.2, 3)
    frac = r - math.floor(r)
    if frac == 0.5:
        top = np.argsort(d.pmf)[-2:]
        assert sorted(d.support[top].tolist()) == [math.floor(r), math.floor(r) + 1]
        assert np.isclose(d.pmf[top[0]], d.pmf[top[1]])
    else:
        mode = int(d.support[np.argmax(d.pmf)])
        assert mode == int(round(r - frac + (1 if frac > 0.5 else 0)))


def test_pmf_parameter_errors():
    with pytest.raises(rld.ParameterError):
        rld.truncated_pmf(np.nan, 1.0, 2)
    with pytest.raises(rld.ParameterError):
        rld.truncated_pmf(0.3, 0.0, 2)
    with pytest.raises(rld.ParameterError):
        rld.truncated_pmf(0.3, -1.0, 2)
    with pytest.raises(rld.ParameterError):
        rld.truncated_pmf(0.3, 1.0, 0)


def test_pmf_text_rendering():
    text = rld.truncated_pmf(0.5, 1.0, 1).as_text()
    lines = text.splitlines()
    assert lines[0].split()[0] == "0" and lines[1].split()[0] == "1"
    assert float(lines[0].split()[1]) == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# rand_round

def test_rand_round_confident_always_nearest():
    rng = np.random.default_rng(0)
    assert all(rld.rand_round(2.3, 1e6, 2, rng) == 2 for _ in range(500))


def test_rand_round_deterministic():
    rng1, rng2 = np.random.default_rng(7), np.random.default_rng(7)
    s1 = [rld.rand_round(0.37, 1.5, 2, rng1) for _ in range(50)]
    s2 = [rld.rand_round(0.37, 1.5, 2, rng2) for _ in range(50)]
    assert s1 == s2


def test_rand_round_batch_matches_sequential():
    rng_seq = np.random.default_rng(99)
    seq = [rld.rand_round(1.41, 0.8, 2, rng_seq) for _ in range(200)]
    batch = rld.rand_round_batch(1.41, 0.8, 2, rng=np.random.default_rng(99), size=(200,))
    assert seq == batch.tolist()


def test_rand_round_empirical_frequencies():
    n_draws = 200_000
    draws = rld.rand_round_batch(-5.87, 3.16, 2, rng=np.random.default_rng(2024),
                                 size=(n_draws,))
    d = rld.truncated_pmf(-5.87, 3.16, 2)
    for q, p in zip(d.support.tolist(), d.pmf.tolist()):
        if p < 1e-6:
            continue
        freq = np.mean(draws == q)
        sigma = math.sqrt(p * (1 - p) / n_draws)
        assert abs(freq - p) <= 3.5 * sigma


@pytest.mark.parametrize("r,c,n", [(0.0, 0.5, 2), (0.3, 1.0, 2), (0.5, 3.16, 1),
                                   (-5.87, 3.16, 2), (2.25, 0.7, 3)])
def test_rand_round_chisquare(r, c, n):
    draws = rld.rand_round_batch(r, c, n, rng=np.random.default_rng(hash((r, c, n)) % 2**32),
                                 size=(1_000_000,))
    d = rld.truncated_pmf(r, c, n)
    counts = [int(np.sum(draws == q)) for q in d.support.tolist()]
    p_value = chisquare_pvalue(counts, d.pmf)
    assert p_value > 0.001


# ---------------------------------------------------------------------------
# statistical distance

def test_statistical_distance_matches_bruteforce():
    for r, c, n in [(0.0, math.log(2), 1), (0.3, math.log(2), 2), (0.5, 1.0, 3),
                    (-1.7, 0.4, 2), (4.2, 2.0, 1)]:
        got = rld.statistical_distance(r, c, n)
        want = statistical_distance_bruteforce(r, c, n)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-18)


def test_statistical_distance_tail_bound_grid():
    # Delta <= 4 rho^(-N^2) whenever c = ln rho
    for rho in (2.0, 5.0, 10.0, 50.0, 100.0):
        for n in (1, 2, 3):
            for r in (0.0, 0.3, 0.5):
                delta = rld.statistical_distance(r, math.log(rho), n)
                assert delta <= 4.0 * rho ** (-n * n)


def test_statistical_distance_highly_confident_case():
    c = 4.27  # ln rho for a large optimum rho
    delta = rld.statistical_distance(0.3, c, 2)
    assert delta <= math.exp(c) ** (-4)


def test_statistical_distance_vanishes_for_wide_window():
    assert rld.statistical_distance(0.3, 1.0, 8) < 1e-15


def test_statistical_distance_monotone_in_window():
    vals = [rld.statistical_distance(0.37, 0.9, n) for n in range(1, 7)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_statistical_distance_extreme_confidence():
    assert rld.statistical_distance(0.3, 1e8, 2) == 0.0


# ---------------------------------------------------------------------------
# normalizer bound and parameter solver

def test_s_upper_bound_series():
    rho = math.e
    direct = sum(math.exp(-i * i) + math.exp(-((1 + i) ** 2)) for i in range(0, 40))
    assert rld.s_upper_bound(rho) == pytest.approx(direct, rel=1e-15)


def test_s_upper_bound_large_rho():
    assert abs(rld.s_upper_bound(1e9) - (1.0 + 2e-9)) < 1e-15


def test_s_upper_bound_at_least_one():
    for rho in (1.0001, 1.5, 3.0, 1e4):
        assert rld.s_upper_bound(rho) >= 1.0


def test_s_upper_bound_validation():
    with pytest.raises(rld.ParameterError):
        rld.s_upper_bound(1.0)
    with pytest.raises(rld.ParameterError):
        rld.s_upper_bound(0.2)


def test_solve_rho_residual_and_monotonicity():
    for k in (4, 16, 100, 1000, 10_000):
        for n in (2, 8, 20, 64):
            if math.log(k) >= 2 * n:
                continue
            rho0 = rld.solve_rho(k, n)
            assert math.exp(list_size_exponent(rho0, n)) == pytest.approx(k, rel=1e-8)
    # strict decrease of f on a dense grid
    n = 12
    grid = np.exp(np.linspace(math.log(1.0 + 1e-6), math.log(1e5), 400))
    vals = [list_size_exponent(r, n) for r in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_solve_rho_known_root():
    # independent bisection oracle for k = 20, n = 20
    lo, hi = 1.0 + 1e-9, 1e6
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if (40.0 / mid) * (1 + math.log(mid)) > math.log(20):
            lo = mid
        else:
            hi = mid
    want = 0.5 * (lo + hi)
    got = rld.solve_rho(20, 20)
    assert got == pytest.approx(want, rel=1e-9)
    assert math.log(got) == pytest.approx(4.2499, abs=5e-4)


def test_solve_rho_fixed_points_match_gain_table():
    # K = (8 e n / G)^(G/4) pairs with rho0 = 8 n / G exactly
    for g in (2.0, 4.0, 8.0, 16.0):
        for n in (10, 20):
            k = rld.required_k(g, n)
            rho0 = rld.solve_rho(k, n) if k >= 2 else None
            assert rho0 == pytest.approx(8.0 * n / g, rel=1e-8)
    k = math.ceil((math.e * 10) ** 2)
    assert rld.solve_rho(k, 10) == pytest.approx(10.0, rel=1e-2)


def test_solve_rho_uniform_regime():
    with pytest.raises(rld.UniformSamplingRegimeError):
        rld.solve_rho(60, 2)  # e^4 = 54.6 < 60
    with pytest.raises(rld.ParameterError):
        rld.solve_rho(1, 10)


def test_solve_rho_complex_exponent():
    # complex path with n pairs doubles the real exponent
    assert rld.solve_rho(20, 10, is_complex=True) == pytest.approx(rld.solve_rho(20, 20),
                                                                   rel=1e-10)


def test_required_k_values():
    assert rld.required_k(4.0, 10) == pytest.approx(2 * math.e * 10, rel=1e-12)
    assert rld.required_k(2.0, 10) == pytest.approx(math.sqrt(4 * math.e * 10), rel=1e-12)
    # approaching the limit G -> 8n the requirement blows up to e^(2n)
    n = 6
    near = rld.required_k(8.0 * n - 1e-9, n)
    assert near == pytest.approx(math.exp(2 * n), rel=1e-6)


def test_required_k_limit():
    with pytest.raises(rld.GainLimitError):
        rld.required_k(80.0, 10)
    with pytest.raises(rld.ParameterError):
        rld.required_k(-1.0, 10)


def test_pseudo_min_distance():
    assert rld.pseudo_min_distance(2 * 12.0, 12, 0.7) == pytest.approx(0.7)
    tiny = rld.pseudo_min_distance(1.0 + 1e-12, 9, 1.0)
    assert tiny == pytest.approx(math.sqrt(18.0), rel=1e-6)
    # squared-distance gain against plain nearest-plane (radius min_gs / 2)
    rho0, n, gs = 7.3, 11, 0.9
    d = rld.pseudo_min_distance(rho0, n, gs)
    assert (d / (0.5 * gs)) ** 2 == pytest.approx(8 * n / rho0, rel=1e-12)
    dc = rld.pseudo_min_distance(rho0, n, gs, is_complex=True)
    assert dc == pytest.approx(math.sqrt(2) * d, rel=1e-12)


def test_sampler_params_invariant():
    p = rld.SamplerParams.for_lattice(10, 0.64, 8)
    assert p.a_confidence == pytest.approx(math.log(p.rho) / 0.64, rel=1e-12)
    with pytest.raises(rld.ParameterError):
        rld.SamplerParams(k=10, rho=5.0, a_confidence=1.0, trunc_n=2, min_gs_norm_sq=0.64)
    with pytest.raises(rld.ParameterError):
        rld.SamplerParams(k=0, rho=5.0, a_confidence=math.log(5.0) / 0.64,
                          trunc_n=2, min_gs_norm_sq=0.64)
