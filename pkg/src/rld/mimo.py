"""Channel and constellation modeling plus the Monte-Carlo BER experiment loop.

The experiment loop draws a channel per block, builds the decoding lattice
(real-embedded or complex, optionally MMSE-extended), runs reduction and QR
once per block, then decodes a block of noisy receive vectors with every
configured decoder on the *same* data and noise (paired comparison).
Random streams are derived from (master_seed, snr_index, block_index) so
results are bit-identical regardless of worker count.

SNR bookkeeping: the snr grid is SNR per bit (Eb/N0 in dB).  With unit
total transmit power the SNR at each receive antenna is 1/sigma^2, and we
convert via the spectral efficiency in bits per complex symbol:
sigma^2 = 1 / (10^(ebn0_db/10) * log2(M)).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .decoders import (ConstellationBox, nearest_plane_batch,
                       nearest_plane_complex_batch, preprocess,
                       preprocess_complex, randomized_decode_batch,
                       randomized_decode_complex_batch, _flops_nearest_plane,
                       _flops_projection, _stack_complex_int)
from .errors import ConfigError, ParameterError
from .lattice import ComplexModel, LatticeBasis, real_embed

WAVE_BLOCKS = 8  # blocks dispatched per scheduling wave (fixed for determinism)

DECODER_KINDS = ("babai", "klein", "ml")


@dataclass
class DecoderSpec:
    """One decoder column of the experiment: kind plus its parameters."""

    name: str
    kind: str
    k: int = 1
    trunc_n: int = 2
    rho: float | None = None  # None = solve the optimum for (k, n)
    delta: float = 0.99
    mmse: bool = False
    path: str = "real"

    def validate(self):
        if self.kind not in DECODER_KINDS:
            raise ConfigError(f"unknown decoder kind {self.kind!r}")
        if self.path not in ("real", "complex"):
            raise ConfigError(f"decoder path must be real or complex, got {self.path!r}")
        if self.kind == "klein" and self.k < 1:
            raise ConfigError("klein decoder needs k >= 1")
        if self.kind == "ml" and (self.mmse or self.path == "complex"):
            raise ConfigError("ml decoder supports only the plain real path")


@dataclass
class ExperimentConfig:
    nt: int
    nr: int
    modulation: int
    snr_per_bit_db: list
    decoders: list
    t: int = 1
    code: str = "uncoded"
    min_bit_errors: int = 200
    max_trials: int = 10_000_000
    master_seed: int = 1
    channel_hold_blocks: int = 10

    def validate(self):
        if self.modulation not in (4, 16, 64, 256):
            raise ConfigError(f"modulation must be one of 4/16/64/256, got {self.modulation}")
        if self.nr < self.nt or self.nt < 1:
            raise ConfigError(f"need nr >= nt >= 1, got nt={self.nt} nr={self.nr}")
        if self.t < 1:
            raise ConfigError("block length t must be >= 1")
        if not self.snr_per_bit_db:
            raise ConfigError("snr grid must be non-empty")
        if not self.decoders:
            raise ConfigError("need at least one decoder")
        if self.min_bit_errors < 1 or self.max_trials < 1:
            raise ConfigError("stopping rule values must be positive")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be non-negative")
        if self.channel_hold_blocks < 1:
            raise ConfigError("channel_hold_blocks must be >= 1")
        names = [d.name for d in self.decoders]
        if len(set(names)) != len(names):
            raise ConfigError("decoder names must be unique")
        for d in self.decoders:
            d.validate()

    @property
    def n_real(self):
        return 2 * self.nt * self.t

    @property
    def bits_per_use(self):
        return self.nt * self.t * int(math.log2(self.modulation))


@dataclass
class BerRecord:
    decoder: str
    snr_per_bit_db: float
    bits: int
    bit_errors: int
    ber: float
    avg_flops_pre: float
    avg_flops_decode: float
    avg_samples: float


# ---------------------------------------------------------------------------
# channel / constellation

def gen_channel(nr, nt, rng) -> ComplexModel:
    """nr x nt channel with i.i.d. circular complex Gaussian CN(0,1) entries."""
    if not (nr >= nt >= 1):
        raise ParameterError(f"need nr >= nt >= 1, got nr={nr} nt={nt}")
    h = (rng.standard_normal((nr, nt)) + 1j * rng.standard_normal((nr, nt))) / math.sqrt(2)
    return ComplexModel(channel=h)


def _gray_encode(v):
    return v ^ (v >> 1)


def _gray_decode(g):
    b = np.array(g, copy=True)
    shift = 1
    while shift < 16:
        b ^= b >> shift
        shift <<= 1
    return b


def _bits_per_dim(modulation):
    side = math.isqrt(modulation)
    if side * side != modulation or side < 2 or side & (side - 1):
        raise ParameterError(f"modulation must be a square power of four, got {modulation}")
    return side, side.bit_length() - 1


def qam_scale(modulation):
    """Per-symbol scale a with unit mean constellation energy."""
    return math.sqrt(6.0 / (modulation - 1))


def bits_to_levels(bits, modulation):
    """Gray-map a bit matrix onto stacked integer levels [re...; im...].

    bits is (..., s * log2(M)) for s complex symbols; the first half of each
    symbol's bits selects the real level, the second half the imaginary one.
    Levels live in {-sqrt(M)/2, ..., sqrt(M)/2 - 1}.
    """
    side, nb = _bits_per_dim(modulation)
    bits = np.asarray(bits)
    if bits.shape[-1] % (2 * nb):
        raise ParameterError("bit count must be divisible by log2(M)")
    s = bits.shape[-1] // (2 * nb)
    grouped = bits.reshape(bits.shape[:-1] + (s, 2, nb))
    weights = 1 << np.arange(nb - 1, -1, -1)
    gray = (grouped * weights).sum(axis=-1)
    idx = _gray_decode(gray)
    levels = idx - side // 2
    re = levels[..., 0]
    im = levels[..., 1]
    return np.concatenate([re, im], axis=-1).astype(np.int64)


def levels_to_bits(levels, modulation):
    """Inverse of bits_to_levels on valid alphabet points."""
    side, nb = _bits_per_dim(modulation)
    levels = np.asarray(levels)
    s = levels.shape[-1] // 2
    re = levels[..., :s]
    im = levels[..., s:]
    idx = np.stack([re, im], axis=-1) + side // 2
    if np.any(idx < 0) or np.any(idx >= side):
        raise ParameterError("level outside the constellation alphabet")
    gray = _gray_encode(idx)
    shifts = np.arange(nb - 1, -1, -1)
    bits = (gray[..., None] >> shifts) & 1
    return bits.reshape(levels.shape[:-1] + (s * 2 * nb,)).astype(np.int8)


def qam_map(bits, modulation):
    """Gray-mapped square-QAM symbols with unit average energy."""
    levels = bits_to_levels(bits, modulation)
    s = levels.shape[-1] // 2
    a = qam_scale(modulation)
    return a * ((levels[..., :s] + 0.5) + 1j * (levels[..., s:] + 0.5))


def qam_demap(xhat, modulation):
    """Recover bits from an integer data estimate (stacked [re; im] levels)."""
    return levels_to_bits(xhat, modulation)


def golden_generator():
    """4x4 unitary generator of the 2x2 Golden code (vectorized column-major)."""
    s5 = math.sqrt(5.0)
    theta = (1.0 + s5) / 2.0
    tbar = (1.0 - s5) / 2.0
    alpha = 1.0 + 1j * (1.0 - theta)
    abar = 1.0 + 1j * (1.0 - tbar)
    g = np.array([
        [alpha, alpha * theta, 0, 0],
        [0, 0, 1j * abar, 1j * abar * tbar],
        [0, 0, alpha, alpha * theta],
        [abar, abar * tbar, 0, 0],
    ], dtype=complex)
    return g / s5


def save_generator(path, g):
    """Write a complex generator matrix as rows of re+imj tokens."""
    g = np.asarray(g, dtype=complex)
    with open(path, "w") as fh:
        for row in g:
            fh.write(" ".join(f"{v.real:.17g}{v.imag:+.17g}j" for v in row) + "\n")


def load_generator(source, expected_dim=None):
    """Load a code generator: 'uncoded', 'golden', or a matrix text file."""
    if source == "uncoded":
        g = None if expected_dim is None else np.eye(expected_dim, dtype=complex)
        return g
    if source == "golden":
        g = golden_generator()
    else:
        rows = []
        try:
            with open(source) as fh:
                for line in fh:
                    line = line.strip()
                    if not line or line.startswith("#"):
                        continue
                    rows.append([complex(tok) for tok in line.split()])
        except OSError as exc:
            raise ConfigError(f"cannot read generator file {source}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"cannot parse generator file {source}: {exc}") from exc
        if not rows or any(len(r) != len(rows) for r in rows):
            raise ConfigError(f"generator file {source} is not a square matrix")
        g = np.array(rows, dtype=complex)
    if expected_dim is not None and g.shape != (expected_dim, expected_dim):
        raise ConfigError(
            f"generator must be {expected_dim} x {expected_dim}, got {g.shape[0]} x {g.shape[1]}")
    return g


# ---------------------------------------------------------------------------
# experiment loop

def snr_per_bit_to_sigma2(ebn0_db, modulation):
    """Noise variance per complex dimension for a given Eb/N0 in dB."""
    return 1.0 / (10.0 ** (ebn0_db / 10.0) * math.log2(modulation))


def _sampling_rngs(cfg, snr_idx, block_idx, uses):
    return [np.random.default_rng(
        np.random.SeedSequence([cfg.master_seed, 1, snr_idx, block_idx, u]))
        for u in range(uses)]


def _decode_babai_real(pre, ytil, box):
    yp = ytil @ pre.orth.q
    xr = nearest_plane_batch(pre.orth.r, yp) @ pre.reduction.unimodular.T
    inside = box.contains(xr)
    xr = np.where(inside[:, None], xr, box.clip(xr))
    n = pre.n
    flops = _flops_projection(pre.m, n) + _flops_nearest_plane(n) + n * n + n
    return xr, np.full(len(xr), flops, dtype=np.int64), np.ones(len(xr), dtype=np.int64)


def _decode_babai_complex(pre, ytil_c, box):
    yp = ytil_c @ np.conj(pre.q)
    xc = nearest_plane_complex_batch(pre.r, yp) @ pre.unimodular.T
    xr = _stack_complex_int(xc)
    inside = box.contains(xr)
    xr = np.where(inside[:, None], xr, box.clip(xr))
    n = pre.n
    flops = 4 * (_flops_projection(pre.m, n) + _flops_nearest_plane(n) + n * n + n)
    return xr, np.full(len(xr), flops, dtype=np.int64), np.ones(len(xr), dtype=np.int64)


class _MlBlock:
    """Exhaustive search over the box, grid projected once per block."""

    def __init__(self, b_real, box):
        counts = (box.high - box.low + 1).astype(np.int64)
        total = int(np.prod(counts))
        idx = np.arange(total)
        digits = np.stack(np.unravel_index(idx, counts), axis=1)
        self.grid = digits + box.low
        self.proj = self.grid @ b_real.T
        m, n = b_real.shape
        self.pre_flops = total * m * n
        self.per_use_flops = total * (m + 1)

    def decode(self, ytil):
        diff = self.proj[None, :, :] - ytil[:, None, :]
        d = np.einsum("ukj,ukj->uk", diff, diff)
        best = np.argmin(d, axis=1)  # first minimum = lexicographically smallest
        return self.grid[best]


def _simulate_block(cfg, snr_idx, block_idx, sigma2, g_code):
    """One channel block: draw channel and data, decode with every decoder."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.master_seed, 0, snr_idx, block_idx]))
    uses = cfg.channel_hold_blocks
    m_qam = cfg.modulation
    n_real = cfg.n_real
    n_cx = cfg.nt * cfg.t

    h = gen_channel(cfg.nr, cfg.nt, rng).channel
    hc = np.kron(np.eye(cfg.t), h)
    if g_code is not None:
        hc = hc @ g_code
    a_eff = qam_scale(m_qam) / math.sqrt(cfg.nt)
    b_cx = a_eff * hc
    br_basis, _ = real_embed(ComplexModel(channel=b_cx))
    br = br_basis.matrix
    m_real = br.shape[0]

    bits = rng.integers(0, 2, size=(uses, cfg.bits_per_use), dtype=np.int8)
    levels = bits_to_levels(bits, m_qam)
    noise = rng.standard_normal((uses, m_real)) * math.sqrt(sigma2 / 2.0)
    y_real = (levels + 0.5) @ br.T + noise

    box = ConstellationBox.qam(n_real, m_qam)
    sigma_ext = math.sqrt(6.0 * sigma2 / (m_qam - 1))
    half = 0.5 * np.ones(n_real)

    pre_cache = {}

    def get_pre(spec):
        key = (spec.path, spec.mmse, spec.delta, spec.k, spec.rho, spec.trunc_n)
        if key in pre_cache:
            return pre_cache[key]
        if spec.path == "real":
            mat = np.vstack([br, sigma_ext * np.eye(n_real)]) if spec.mmse else br
            pre = preprocess(LatticeBasis(mat), k=spec.k, delta=spec.delta,
                             trunc_n=spec.trunc_n, rho=spec.rho)
        else:
            mat = np.vstack([b_cx, sigma_ext * np.eye(n_cx)]) if spec.mmse else b_cx
            pre = preprocess_complex(mat, k=spec.k, delta=spec.delta,
                                     trunc_n=spec.trunc_n, rho=spec.rho)
        pre_cache[key] = pre
        return pre

    def targets(spec):
        if spec.path == "real":
            ytil = y_real - br @ half
            if spec.mmse:
                pad = np.broadcast_to(-sigma_ext * 0.5, (uses, n_real))
                ytil = np.hstack([ytil, pad])
            return ytil
        y_cx = y_real[:, :m_real // 2] + 1j * y_real[:, m_real // 2:]
        ytil = y_cx - b_cx @ (0.5 * (1 + 1j) * np.ones(n_cx))
        if spec.mmse:
            pad = np.broadcast_to(-sigma_ext * 0.5 * (1 + 1j), (uses, n_cx))
            ytil = np.hstack([ytil, pad])
        return ytil

    out = {}
    ml_block = None
    for spec in cfg.decoders:
        if spec.kind == "ml":
            if ml_block is None:
                ml_block = _MlBlock(br, box)
            xhat = ml_block.decode(y_real - br @ half)
            dec_flops = np.full(uses, ml_block.per_use_flops, dtype=np.int64)
            samples = np.zeros(uses, dtype=np.int64)
            pre_flops = ml_block.pre_flops
        elif spec.kind == "babai":
            pre = get_pre(spec)
            if spec.path == "real":
                xhat, dec_flops, samples = _decode_babai_real(pre, targets(spec), box)
            else:
                xhat, dec_flops, samples = _decode_babai_complex(pre, targets(spec), box)
            pre_flops = pre.pre_flops
        else:
            pre = get_pre(spec)
            rngs = _sampling_rngs(cfg, snr_idx, block_idx, uses)
            if spec.path == "real":
                res = randomized_decode_batch(pre, targets(spec), box, rngs, k=spec.k)
            else:
                res = randomized_decode_complex_batch(pre, targets(spec), box, rngs, k=spec.k)
            xhat = np.stack([r.xhat for r in res])
            dec_flops = np.array([r.flops for r in res], dtype=np.int64)
            samples = np.array([r.samples_used for r in res], dtype=np.int64)
            pre_flops = pre.pre_flops
        bhat = levels_to_bits(xhat, m_qam)
        errors = int(np.sum(bhat != bits))
        out[spec.name] = (uses * cfg.bits_per_use, errors, int(pre_flops),
                          int(dec_flops.sum()), int(samples.sum()), uses)
    return out


def run_experiment(config: ExperimentConfig, threads: int = 1):
    """Monte-Carlo BER sweep; returns one BerRecord per (decoder, snr) pair.

    Blocks are dispatched in fixed-size waves and folded in block order, so
    the output is identical for any worker count.  A snr point stops once
    every decoder has min_bit_errors errors or max_trials bits were
    simulated.
    """
    config.validate()
    g_code = load_generator(config.code, expected_dim=config.nt * config.t)
    if config.code == "uncoded":
        g_code = None
    threads = max(1, int(threads))
    per_point = {}

    for snr_idx, ebn0 in enumerate(config.snr_per_bit_db):
        sigma2 = snr_per_bit_to_sigma2(ebn0, config.modulation)
        tally = {d.name: [0, 0, 0, 0, 0, 0] for d in config.decoders}
        block_idx = 0
        done = False
        with ThreadPoolExecutor(max_workers=threads) as pool:
            while not done:
                wave = list(range(block_idx, block_idx + WAVE_BLOCKS))
                block_idx += WAVE_BLOCKS
                futures = [pool.submit(_simulate_block, config, snr_idx, b, sigma2, g_code)
                           for b in wave]
                for fut in futures:  # fold strictly in block order
                    res = fut.result()
                    if done:
                        continue
                    for name, vals in res.items():
                        acc = tally[name]
                        for i, v in enumerate(vals):
                            acc[i] += v
                    bits_done = tally[config.decoders[0].name][0]
                    min_err = min(t[1] for t in tally.values())
                    if min_err >= config.min_bit_errors or bits_done >= config.max_trials:
                        done = True
        for d in config.decoders:
            bits, errors, pre_f, dec_f, samples, decodes = tally[d.name]
            per_point[(d.name, snr_idx)] = BerRecord(
                decoder=d.name,
                snr_per_bit_db=float(ebn0),
                bits=bits,
                bit_errors=errors,
                ber=errors / bits,
                avg_flops_pre=pre_f / decodes,
                avg_flops_decode=dec_f / decodes,
                avg_samples=samples / decodes,
            )

    records = []
    for d in config.decoders:
        for snr_idx in range(len(config.snr_per_bit_db)):
            records.append(per_point[(d.name, snr_idx)])
    return records


CSV_HEADER = "decoder,snr_db,bits,bit_errors,ber,avg_flops_pre,avg_flops_decode,avg_samples"


def write_csv(records, path, config=None):
    """Write records under the fixed CSV contract (leading # lines are comments)."""
    lines = []
    if config is not None:
        lines.append(f"# nt={config.nt} nr={config.nr} t={config.t} modulation={config.modulation} "
                     f"code={config.code} master_seed={config.master_seed}")
        lines.append("# snr_db is SNR per bit (Eb/N0); sigma^2 = 1/(10^(snr_db/10) * log2(M)) "
                     "per complex dimension")
    lines.append(CSV_HEADER)
    for r in records:
        lines.append(f"{r.decoder},{r.snr_per_bit_db!r},{r.bits},{r.bit_errors},"
                     f"{r.ber!r},{r.avg_flops_pre!r},{r.avg_flops_decode!r},{r.avg_samples!r}")
    text = "\n".join(lines) + "\n"
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return text


# ---------------------------------------------------------------------------
# config file parsing (key = value lines; decoder lines repeatable)

def _parse_bool(tok):
    if tok in ("1", "true", "yes", "on"):
        return True
    if tok in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {tok!r}")


def _parse_decoder(value, lineno):
    toks = value.split()
    if not toks:
        raise ConfigError(f"line {lineno}: empty decoder definition")
    name = toks[0]
    opts = {}
    for tok in toks[1:]:
        if "=" not in tok:
            raise ConfigError(f"line {lineno}: decoder option {tok!r} is not key=value")
        key, val = tok.split("=", 1)
        opts[key] = val
    kind = opts.pop("kind", name if name in DECODER_KINDS else None)
    if kind is None:
        raise ConfigError(f"line {lineno}: decoder {name!r} needs kind=babai|klein|ml")
    spec = DecoderSpec(name=name, kind=kind)
    try:
        if "k" in opts:
            spec.k = int(opts.pop("k"))
        if "trunc" in opts:
            spec.trunc_n = int(opts.pop("trunc"))
        if "rho" in opts:
            raw = opts.pop("rho")
            spec.rho = None if raw == "auto" else float(raw)
        if "delta" in opts:
            spec.delta = float(opts.pop("delta"))
        if "mmse" in opts:
            spec.mmse = _parse_bool(opts.pop("mmse"))
        if "path" in opts:
            spec.path = opts.pop("path")
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad decoder option value ({exc})") from exc
    if opts:
        raise ConfigError(f"line {lineno}: unknown decoder options {sorted(opts)}")
    return spec


def parse_config(path) -> ExperimentConfig:
    """Parse the key/value experiment description (see bundled configs)."""
    scalars = {}
    decoders = []
    try:
        with open(path) as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        key = key.strip().lower()
        value = value.strip()
        if key == "decoder":
            decoders.append(_parse_decoder(value, lineno))
        else:
            scalars[key] = value
    try:
        cfg = ExperimentConfig(
            nt=int(scalars.pop("nt")),
            nr=int(scalars.pop("nr")),
            modulation=int(scalars.pop("modulation")),
            snr_per_bit_db=[float(v) for v in scalars.pop("snr_per_bit_db").replace(",", " ").split()],
            decoders=decoders,
            t=int(scalars.pop("t", 1)),
            code=scalars.pop("code", "uncoded"),
            min_bit_errors=int(scalars.pop("min_bit_errors", 200)),
            max_trials=int(scalars.pop("max_trials", 10_000_000)),
            master_seed=int(scalars.pop("master_seed", 1)),
            channel_hold_blocks=int(scalars.pop("channel_hold_blocks", 10)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing required config key {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    if scalars:
        raise ConfigError(f"unknown config keys {sorted(scalars)}")
    cfg.validate()
    return cfg
