import itertools
import math

import numpy as np
import pytest

import rld
from rld.mimo import (bits_to_levels, levels_to_bits, snr_per_bit_to_sigma2,
                      CSV_HEADER)


def small_config(**overrides):
    base = dict(
        nt=2, nr=2, modulation=16,
        snr_per_bit_db=[10.0],
        decoders=[rld.DecoderSpec(name="babai", kind="babai"),
                  rld.DecoderSpec(name="klein4", kind="klein", k=4)],
        min_bit_errors=50, max_trials=40_000, master_seed=99,
        channel_hold_blocks=10,
    )
    base.update(overrides)
    return rld.ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# channel

def test_gen_channel_unit_entry_power():
    rng = np.random.default_rng(0)
    h = gen = rld.gen_channel(50, 40, rng).channel
    power = float(np.mean(np.abs(gen) ** 2))
    assert abs(power - 1.0) <= 0.02


def test_gen_channel_deterministic():
    h1 = rld.gen_channel(4, 4, np.random.default_rng(5)).channel
    h2 = rld.gen_channel(4, 4, np.random.default_rng(5)).channel
    assert np.array_equal(h1, h2)


def test_gen_channel_full_rank():
    rng = np.random.default_rng(1)
    for _ in range(200):
        h = rld.gen_channel(4, 4, rng).channel
        s = np.linalg.svd(h, compute_uv=False)
        assert s[-1] > 1e-8


def test_gen_channel_validation():
    with pytest.raises(rld.ParameterError):
        rld.gen_channel(2, 3, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# QAM mapping

def test_qam_alphabet_16():
    bits = np.array(list(itertools.product([0, 1], repeat=4)), dtype=np.int8)
    levels = bits_to_levels(bits, 16)
    assert set(levels.ravel().tolist()) == {-2, -1, 0, 1}


def test_qam_bijection_64():
    bits = np.array(list(itertools.product([0, 1], repeat=6)), dtype=np.int8)
    levels = bits_to_levels(bits, 64)
    back = levels_to_bits(levels, 64)
    assert np.array_equal(back, bits)
    # all 64 symbols distinct
    assert len({tuple(rowlevels) for rowlevels in levels.tolist()}) == 64


def test_qam_scale_unit_energy():
    assert rld.qam_scale(16) == pytest.approx(1.0 / math.sqrt(2.5), rel=1e-12)
    bits = np.array(list(itertools.product([0, 1], repeat=4)), dtype=np.int8)
    symbols = rld.qam_map(bits, 16)
    assert float(np.mean(np.abs(symbols) ** 2)) == pytest.approx(1.0, rel=1e-12)


def test_qam_gray_neighbors_differ_in_one_bit():
    # walking one level in one real dimension flips exactly one bit
    levels = np.arange(-4, 4)
    for a, b in zip(levels, levels[1:]):
        ba = levels_to_bits(np.array([a, 0]), 64)
        bb = levels_to_bits(np.array([b, 0]), 64)
        assert int(np.sum(ba != bb)) == 1


def test_qam_demap_matches_map():
    rng = np.random.default_rng(7)
    bits = rng.integers(0, 2, 16 * 6, dtype=np.int8)
    lv = bits_to_levels(bits, 64)
    assert np.array_equal(rld.qam_demap(lv, 64), bits)


def test_qam_malformed_length():
    with pytest.raises(rld.ParameterError):
        bits_to_levels(np.zeros(5, dtype=np.int8), 16)


def test_qam_demap_rejects_out_of_alphabet():
    with pytest.raises(rld.ParameterError):
        levels_to_bits(np.array([7, 0]), 16)


# ---------------------------------------------------------------------------
# generator matrices

def test_golden_generator_is_unitary_unit_determinant():
    g = rld.golden_generator()
    assert g.shape == (4, 4)
    assert np.max(np.abs(np.conj(g.T) @ g - np.eye(4))) < 1e-12
    assert abs(abs(np.linalg.det(g)) - 1.0) < 1e-9


def test_generator_file_roundtrip(tmp_path):
    from rld.mimo import save_generator
    g = rld.golden_generator()
    path = tmp_path / "gen.txt"
    save_generator(path, g)
    loaded = rld.load_generator(str(path), expected_dim=4)
    assert np.max(np.abs(loaded - g)) < 1e-15


def test_generator_malformed_file(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1+2j 3\nnot-a-number 4\n")
    with pytest.raises(rld.ConfigError):
        rld.load_generator(str(bad))
    missing = tmp_path / "nope.txt"
    with pytest.raises(rld.ConfigError):
        rld.load_generator(str(missing))
    wrong_dim = tmp_path / "wrong.txt"
    wrong_dim.write_text("1+0j 0+0j\n0+0j 1+0j\n")
    with pytest.raises(rld.ConfigError):
        rld.load_generator(str(wrong_dim), expected_dim=4)


def test_uncoded_generator_is_identity():
    g = rld.load_generator("uncoded", expected_dim=3)
    assert np.array_equal(g, np.eye(3, dtype=complex))


# ---------------------------------------------------------------------------
# experiment loop

def test_sigma2_conversion():
    # Eb/N0 of 0 dB at 16-QAM: sigma^2 = 1/4
    assert snr_per_bit_to_sigma2(0.0, 16) == pytest.approx(0.25)
    assert snr_per_bit_to_sigma2(10.0, 4) == pytest.approx(1.0 / 20.0)


def test_run_experiment_records_are_consistent():
    cfg = small_config()
    records = rld.run_experiment(cfg)
    assert len(records) == 2
    for r in records:
        assert r.ber == pytest.approx(r.bit_errors / r.bits)
        assert r.bits > 0 and r.bit_errors >= 0
        assert r.avg_flops_pre > 0 and r.avg_flops_decode > 0
    by = {r.decoder: r for r in records}
    assert by["babai"].bits == by["klein4"].bits  # paired simulation


def test_run_experiment_deterministic_across_threads():
    cfg = small_config()
    r1 = rld.run_experiment(cfg, threads=1)
    r4 = rld.run_experiment(cfg, threads=4)
    assert [(r.decoder, r.snr_per_bit_db, r.bits, r.bit_errors, r.avg_flops_decode,
             r.avg_samples) for r in r1] == \
           [(r.decoder, r.snr_per_bit_db, r.bits, r.bit_errors, r.avg_flops_decode,
             r.avg_samples) for r in r4]


def test_run_experiment_ml_high_snr_error_free():
    cfg = small_config(
        modulation=4,
        snr_per_bit_db=[30.0],
        decoders=[rld.DecoderSpec(name="ml", kind="ml")],
        min_bit_errors=10, max_trials=100_000,
    )
    rec = rld.run_experiment(cfg)[0]
    assert rec.ber < 1e-5


def test_run_experiment_babai_equals_confident_klein():
    # one sample at enormous confidence is exactly reduced-basis SIC
    cfg = small_config(
        snr_per_bit_db=[12.0],
        decoders=[rld.DecoderSpec(name="babai", kind="babai"),
                  rld.DecoderSpec(name="klein_stiff", kind="klein", k=1,
                                  rho=math.exp(200.0))],
        min_bit_errors=60, max_trials=30_000,
    )
    records = rld.run_experiment(cfg)
    by = {r.decoder: r for r in records}
    assert by["babai"].bit_errors == by["klein_stiff"].bit_errors
    assert by["babai"].bits == by["klein_stiff"].bits


def test_run_experiment_decoder_ordering():
    cfg = small_config(
        snr_per_bit_db=[14.0],
        decoders=[rld.DecoderSpec(name="babai", kind="babai"),
                  rld.DecoderSpec(name="klein8", kind="klein", k=8),
                  rld.DecoderSpec(name="ml", kind="ml")],
        min_bit_errors=150, max_trials=120_000,
    )
    by = {r.decoder: r for r in rld.run_experiment(cfg)}
    assert by["ml"].ber <= by["klein8"].ber
    assert by["klein8"].ber <= by["babai"].ber


def test_run_experiment_mmse_and_complex_paths_run():
    cfg = small_config(
        snr_per_bit_db=[10.0],
        decoders=[rld.DecoderSpec(name="klein_mmse", kind="klein", k=4, mmse=True),
                  rld.DecoderSpec(name="klein_cx", kind="klein", k=4, path="complex"),
                  rld.DecoderSpec(name="klein_cx_mmse", kind="klein", k=4,
                                  path="complex", mmse=True)],
        min_bit_errors=40, max_trials=20_000,
    )
    records = rld.run_experiment(cfg)
    assert len(records) == 3
    for r in records:
        assert 0 <= r.ber < 0.5


def test_run_experiment_golden_code():
    cfg = small_config(
        t=2, code="golden",
        snr_per_bit_db=[10.0],
        decoders=[rld.DecoderSpec(name="klein6", kind="klein", k=6)],
        min_bit_errors=40, max_trials=20_000,
    )
    rec = rld.run_experiment(cfg)[0]
    assert rec.bits > 0
    assert 0 <= rec.ber < 0.5


def test_csv_contract(tmp_path):
    cfg = small_config()
    records = rld.run_experiment(cfg)
    path = tmp_path / "out.csv"
    text = rld.write_csv(records, path, config=cfg)
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + len(records)
    first = lines[1].split(",")
    assert first[0] == "babai"
    assert float(first[1]) == 10.0
    assert int(first[2]) == records[0].bits
    assert path.read_text() == text


def test_config_validation_errors():
    with pytest.raises(rld.ConfigError):
        small_config(modulation=8).validate()
    with pytest.raises(rld.ConfigError):
        small_config(nt=3).validate()  # nr < nt
    with pytest.raises(rld.ConfigError):
        small_config(snr_per_bit_db=[]).validate()
    with pytest.raises(rld.ConfigError):
        small_config(decoders=[]).validate()
    cfg = small_config()
    cfg.decoders[0].kind = "unknown"
    with pytest.raises(rld.ConfigError):
        cfg.validate()


def test_parse_config_roundtrip(tmp_path):
    text = """
# comment line
nt = 2
nr = 3
t = 1
modulation = 64
code = uncoded
snr_per_bit_db = 6, 9, 12
min_bit_errors = 77
max_trials = 5000
master_seed = 4242
channel_hold_blocks = 5
decoder = babai
decoder = fancy kind=klein k=12 trunc=3 rho=8.5 mmse=1 path=complex delta=0.9
"""
    path = tmp_path / "exp.cfg"
    path.write_text(text)
    cfg = rld.parse_config(str(path))
    assert cfg.nr == 3 and cfg.modulation == 64
    assert cfg.snr_per_bit_db == [6.0, 9.0, 12.0]
    assert cfg.min_bit_errors == 77 and cfg.master_seed == 4242
    fancy = cfg.decoders[1]
    assert (fancy.kind, fancy.k, fancy.trunc_n, fancy.rho, fancy.mmse, fancy.path,
            fancy.delta) == ("klein", 12, 3, 8.5, True, "complex", 0.9)


def test_parse_config_errors(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("nt = 2\n")
    with pytest.raises(rld.ConfigError):
        rld.parse_config(str(p))
    p.write_text("nt = 2\nnr = 2\nmodulation = 16\nsnr_per_bit_db = 8\nwhat = 1\ndecoder = babai\n")
    with pytest.raises(rld.ConfigError):
        rld.parse_config(str(p))
    p.write_text("nt = 2\nnr = 2\nmodulation = 16\nsnr_per_bit_db = 8\ndecoder = mystery\n")
    with pytest.raises(rld.ConfigError):
        rld.parse_config(str(p))
    with pytest.raises(rld.ConfigError):
        rld.parse_config(str(tmp_path / "missing.cfg"))
