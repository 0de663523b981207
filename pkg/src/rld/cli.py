"""Command-line entry points.

Subcommands: simulate, solve-rho, required-k, sample-pmf, decode-one.
Exit codes: 0 success, 2 usage/config/parameter error, 3 runtime error.
Thread cap: --threads flag, else the RLD_THREADS environment variable.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import decoders, lattice, mimo, sampler
from .errors import ConfigError, ParameterError, RldError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def _threads_from(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("RLD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"RLD_THREADS must be an integer, got {env!r}")
    return 1


def _cmd_simulate(args):
    cfg = mimo.parse_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    threads = _threads_from(args)
    if args.verbose:
        print(f"config: nt={cfg.nt} nr={cfg.nr} t={cfg.t} modulation={cfg.modulation} "
              f"code={cfg.code} seed={cfg.master_seed} threads={threads}")
        print(f"decoders: {', '.join(d.name for d in cfg.decoders)}; "
              f"snr grid: {cfg.snr_per_bit_db}")
    records = mimo.run_experiment(cfg, threads=threads)
    mimo.write_csv(records, args.out, config=cfg)
    print(f"wrote {len(records)} rows to {args.out}")
    print(f"{'decoder':>12} {'snr_db':>7} {'bits':>10} {'errors':>8} {'ber':>12} "
          f"{'avg_samples':>12}")
    for r in records:
        print(f"{r.decoder:>12} {r.snr_per_bit_db:>7.2f} {r.bits:>10} {r.bit_errors:>8} "
              f"{r.ber:>12.3e} {r.avg_samples:>12.2f}")
    return EXIT_OK


def _cmd_solve_rho(args):
    rho0 = sampler.solve_rho(args.k, args.n, is_complex=args.complex)
    dim_note = "complex" if args.complex else "real"
    gain = (8 if not args.complex else 16) * args.n / rho0
    ratio = math.sqrt(((4 if args.complex else 2) * args.n) / rho0)
    print(f"rho0 = {rho0:.10g}")
    print(f"ln_rho0 = {math.log(rho0):.10g}")
    print(f"confidence_hint: A = {math.log(rho0):.10g} / min_gs_norm_sq  ({dim_note} path)")
    print(f"pseudo_distance_ratio = {ratio:.10g}  (d_random / min_gs_norm)")
    print(f"gain_bound = {gain:.10g}  (squared-distance gain limit 8n/rho0)")
    return EXIT_OK


def _cmd_required_k(args):
    k = sampler.required_k(args.gain, args.n)
    rho0 = 8.0 * args.n / args.gain
    print(f"required_k = {k:.10g}")
    print(f"rho0 = {rho0:.10g}")
    print(f"gain_db = {10.0 * math.log10(args.gain):.4f}")
    return EXIT_OK


def _cmd_sample_pmf(args):
    dist = sampler.truncated_pmf(args.r, args.c, args.trunc)
    print(dist.as_text())
    return EXIT_OK


def _cmd_decode_one(args):
    basis = lattice.load_basis_text(args.basis)
    y = np.array([float(tok) for tok in args.y.replace(",", " ").split()])
    if y.shape[0] != basis.m:
        raise ParameterError(f"y has {y.shape[0]} entries, basis has {basis.m} rows")
    pre = decoders.preprocess(basis, k=args.k, delta=args.delta,
                              trunc_n=args.trunc, rho=args.rho)
    box = None
    if args.box_low is not None or args.box_high is not None:
        if args.box_low is None or args.box_high is None:
            raise ParameterError("--box-low and --box-high must be given together")
        box = decoders.ConstellationBox(low=np.full(basis.n, args.box_low),
                                        high=np.full(basis.n, args.box_high))
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    res = decoders.randomized_decode(pre, y, box, rng, k=args.k)
    print("xhat =", " ".join(str(int(v)) for v in res.xhat))
    print(f"distance = {res.distance:.10g}")
    print(f"samples_used = {res.samples_used}")
    print(f"inside_constellation = {res.inside_constellation}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="rld", description="randomized lattice decoding tools")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", "-v", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=argparse.ArgumentParser)

    sim = sub.add_parser("simulate", help="run a Monte-Carlo BER experiment", parents=[common])
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int, default=None, help="override the config master seed")
    sim.add_argument("--threads", type=int, default=None)
    sim.set_defaults(func=_cmd_simulate)

    sr = sub.add_parser("solve-rho", help="optimum confidence parameter for a list size", parents=[common])
    sr.add_argument("--k", type=int, required=True)
    sr.add_argument("--n", type=int, required=True)
    sr.add_argument("--complex", action="store_true", help="complex-lattice exponent 4n")
    sr.set_defaults(func=_cmd_solve_rho)

    rk = sub.add_parser("required-k", help="list size needed for a squared-distance gain", parents=[common])
    rk.add_argument("--gain", "-g", type=float, required=True)
    rk.add_argument("--n", type=int, required=True)
    rk.set_defaults(func=_cmd_required_k)

    sp = sub.add_parser("sample-pmf", help="print a truncated rounding distribution", parents=[common])
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--trunc", "-N", type=int, default=2)
    sp.set_defaults(func=_cmd_sample_pmf)

    d1 = sub.add_parser("decode-one", help="decode a single target from a basis file", parents=[common])
    d1.add_argument("--basis", required=True, help="matrix text file (rows of decimals)")
    d1.add_argument("--y", required=True, help="comma- or space-separated target vector")
    d1.add_argument("--k", type=int, default=8)
    d1.add_argument("--trunc", type=int, default=2)
    d1.add_argument("--rho", type=float, default=None)
    d1.add_argument("--delta", type=float, default=0.99)
    d1.add_argument("--seed", type=int, default=None)
    d1.add_argument("--box-low", type=int, default=None)
    d1.add_argument("--box-high", type=int, default=None)
    d1.set_defaults(func=_cmd_decode_one)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
