"""Command line front end: ``cmvweyl <subcommand> [--flags]``.

Every output file starts with a header (config echo, seed, library version and,
unless ``--deterministic``, a timestamp).  Tables are CSV with 17 significant
digits; structured reports are JSON.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .caratheodory import borg_verify
from .disks import limit_point_sweep, weyl_disk
from .errors import CMVError, ConfigError
from .greens import dense_resolvent, full_lattice_green, half_lattice_resolvent
from .spectral import eigensystem, measure_from_operator, read_measure, reconstruct_verblunsky
from .verblunsky import (build_finite_cmv, build_half_lattice, format_coefficient_lines,
                         generate_sequence, parse_number, parse_real)
from .weyl import big_M, build_context, m_function, phi_transform

EXIT_OK, EXIT_FAIL = 0, 1


def fmt(x) -> str:
    return format(float(x), ".17g")


# --- output ------------------------------------------------------------------------

def atomic_write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def header(args) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "config", "out")}
    head = {"tool": "cmvweyl", "version": __version__, "command": args.command, "config": config,
            "seed": _seed_of(getattr(args, "alpha", ""))}
    if not args.deterministic:
        head["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return head


def _seed_of(spec: str):
    kind, _, rest = (spec or "").partition(":")
    return int(rest.split(":")[0]) if kind == "random" and rest else None


def emit_csv(args, columns, rows, extra=None) -> None:
    head = header(args)
    head.update(extra or {})
    lines = [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in head.items()]
    lines.append(",".join(columns))
    lines += [",".join(c if isinstance(c, str) else (str(c) if isinstance(c, (int, np.integer)) else fmt(c))
                       for c in row) for row in rows]
    atomic_write(args.out, "\n".join(lines) + "\n")


def emit_json(args, payload: dict) -> None:
    out = {"header": header(args)}
    out.update(payload)
    atomic_write(args.out, json.dumps(out, indent=2, sort_keys=False) + "\n")


# --- parsing helpers -----------------------------------------------------------------

def z_grid(spec: str) -> np.ndarray:
    """``radial:R0:R1:NRxNT`` or ``list:Z1,Z2,...``."""
    kind, _, rest = spec.partition(":")
    if kind == "radial":
        try:
            r0, r1, shape = rest.split(":")
            nr, nt = (int(x) for x in shape.lower().split("x"))
        except ValueError as exc:
            raise ConfigError(f"bad radial grid {spec!r}; expected radial:R0:R1:NRxNT") from exc
        radii = np.linspace(parse_real(r0), parse_real(r1), nr)
        angles = 2 * np.pi * np.arange(nt) / nt
        return (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
    if kind == "list":
        return np.array([parse_number(t) for t in rest.split(",") if t.strip()])
    raise ConfigError(f"unknown z grid {spec!r}")


def _window(args, k0, n):
    lo = args.lo if args.lo is not None else k0 - n
    hi = args.hi if args.hi is not None else k0 + n - 1
    return lo, hi


def _sequence(args, lo, hi):
    return generate_sequence(args.alpha, lo, hi)


# --- subcommands -------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    seq, U = _operator(args)
    lam, Z = eigensystem(U)
    theta = np.mod(np.angle(lam), 2 * np.pi)
    w = np.abs(Z[U.index(args.k0), :]) ** 2
    order = np.argsort(theta)
    emit_csv(args, ["theta", "weight"], [(theta[i], w[i]) for i in order],
             {"total_weight": float(w.sum())})
    return EXIT_OK


def _operator(args):
    n, k0 = args.n, args.k0
    if args.side == "full":
        lo, hi = k0 - n // 2, k0 + n - n // 2 - 1
        seq = _sequence(args, lo, hi + 1)
        return seq, build_finite_cmv(seq, lo, hi, args.s0, args.s1)
    seq = _sequence(args, k0 - n, k0 + n)
    return seq, build_half_lattice(seq, k0, n, args.side, args.s0, args.s1)


def cmd_measure(args) -> int:
    _, U = _operator(args)
    emit_json(args, measure_from_operator(U, args.k0).to_json())
    return EXIT_OK


def cmd_mfun(args) -> int:
    k0 = args.k0
    lo, hi = _window(args, k0, args.n)
    seq = _sequence(args, lo, hi + 1)
    ctx = build_context(seq, k0, lo, hi)
    zs = z_grid(args.z_grid)

    def value(z):
        if args.function == "m":
            return m_function(ctx, z, args.side)
        M = big_M(ctx, z, args.side)
        return phi_transform(M) if args.function == "Phi" else M

    vals = value(zs)
    mirror = big_M(ctx, 1 / np.conj(zs), args.side)
    residual = np.abs(big_M(ctx, zs, args.side) + np.conj(mirror))
    rows = [(z.real, z.imag, v.real, v.imag, res) for z, v, res in zip(zs, vals, residual)]
    emit_csv(args, ["re_z", "im_z", "re_value", "im_value", "residual"], rows,
             {"residual": "symmetry |M(z) + conj(M(1/conj z))|"})
    return EXIT_OK


def cmd_green(args) -> int:
    z = parse_number(args.z)
    k0, n = args.k0, args.n
    if args.kind == "full":
        lo, hi = k0 - n // 2, k0 + n - n // 2 - 1
        seq = _sequence(args, lo, hi + 1)
        U = build_finite_cmv(seq, lo, hi)
        sites = np.arange(lo + args.margin, hi - args.margin + 1)
        G = full_lattice_green(build_context(seq, k0, lo, hi), z, sites)
    else:
        seq = _sequence(args, k0 - n, k0 + n)
        U = build_half_lattice(seq, k0, n, args.side)
        sites = U.sites[:len(U.sites) - args.margin] if args.side == "plus" else U.sites[args.margin:]
        G = half_lattice_resolvent(U, seq, k0, z, args.side, sites)
    dev = float(np.max(np.abs(G - dense_resolvent(U, z, sites))))
    rows = [(int(k), int(kp), G[i, j].real, G[i, j].imag)
            for i, k in enumerate(sites) for j, kp in enumerate(sites)]
    emit_csv(args, ["k", "kp", "re", "im"], rows, {"max_dense_deviation": dev})
    return EXIT_OK


def cmd_disk(args) -> int:
    z = parse_number(args.z)
    if args.k1_sweep:
        a, b, step = (int(x) for x in args.k1_sweep.split(":"))
        k1s = range(a, b + 1, step)
        seq = _sequence(args, args.k0 - 1, max(k1s) + 1)
        disks = limit_point_sweep(seq, args.k0, z, k1s)
        emit_csv(args, ["k1", "R", "re_C", "im_C"],
                 [(d.k1, d.radius, d.center.real, d.center.imag) for d in disks])
        return EXIT_OK
    if args.k1 is None:
        raise ConfigError("disk needs --k1 or --k1-sweep")
    seq = _sequence(args, args.k0 - 1, args.k1 + 1)
    emit_json(args, weyl_disk(seq, args.k0, args.k1, z).to_json())
    return EXIT_OK


def cmd_borg(args) -> int:
    rep = borg_verify(parse_real(args.theta0), parse_real(args.theta1), args.n, r=args.r)
    emit_json(args, rep.to_json())
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    mu = read_measure(args.measure)
    coeffs = reconstruct_verblunsky(mu, args.n, args.side, args.k0)
    head = header(args)
    lines = [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in head.items()]
    lines += format_coefficient_lines((k, a) for k, a, _ in coeffs)
    atomic_write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(args.alpha, args.n)
    emit_json(args, {"checks": results, "all_passed": all(r["passed"] for r in results.values())})
    return EXIT_OK if all(r["passed"] for r in results.values()) else EXIT_FAIL


# --- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file supplying defaults for any flag")
    common.add_argument("--out", default="-", help="output path (default: stdout)")
    common.add_argument("--deterministic", action="store_true", help="omit the timestamp")

    parser = argparse.ArgumentParser(prog="cmvweyl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cmvweyl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = {}

    def add(name, func, help_, coefficients=True):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        if coefficients:
            p.add_argument("--alpha", default="constant:0",
                           help="constant:C, random:SEED[:CAP], geometric:T0:T1[:PHASE] or file:PATH")
        parser.subcommands[name] = p
        return p

    for name, func, help_ in (("spectrum", cmd_spectrum, "eigenangles and weights at delta_k0"),
                              ("measure", cmd_measure, "spectral measure as JSON")):
        p = add(name, func, help_)
        p.add_argument("--n", type=int, default=32)
        p.add_argument("--k0", type=int, default=0)
        p.add_argument("--side", choices=["plus", "minus", "full"], default="plus")
        p.add_argument("--s0", type=float, default=0.0, help="phase at the lower split")
        p.add_argument("--s1", type=float, default=0.0, help="phase at the upper split")

    p = add("mfun", cmd_mfun, "m-function, M-function or Phi on a grid of z")
    p.add_argument("--side", choices=["plus", "minus"], default="plus")
    p.add_argument("--function", choices=["m", "M", "Phi"], default="M")
    p.add_argument("--k0", type=int, default=0)
    p.add_argument("--n", type=int, default=64, help="sites on each side of k0")
    p.add_argument("--lo", type=int)
    p.add_argument("--hi", type=int)
    p.add_argument("--z-grid", default="radial:0.1:0.9:5x8")

    p = add("green", cmd_green, "resolvent entries from Weyl solutions")
    p.add_argument("--kind", choices=["half", "full"], default="full")
    p.add_argument("--side", choices=["plus", "minus"], default="plus")
    p.add_argument("--k0", type=int, default=0)
    p.add_argument("--n", type=int, default=48)
    p.add_argument("--z", default="0.5")
    p.add_argument("--margin", type=int, default=12)

    p = add("disk", cmd_disk, "Weyl circle center and radius")
    p.add_argument("--k0", type=int, default=0)
    p.add_argument("--k1", type=int)
    p.add_argument("--k1-sweep", help="START:STOP:STEP, emits CSV")
    p.add_argument("--z", default="0.5")

    p = add("borg", cmd_borg, "arc-spectrum check for geometric coefficients", coefficients=False)
    p.add_argument("--theta0", default="0")
    p.add_argument("--theta1", default="pi")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--r", type=float, default=1 - 1e-3)

    p = add("reconstruct", cmd_reconstruct, "Verblunsky coefficients from a measure file",
            coefficients=False)
    p.add_argument("--measure", required=True)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--k0", type=int, default=0)
    p.add_argument("--side", choices=["plus", "minus"], default="plus")

    p = add("verify", cmd_verify, "run the identity suite on one coefficient sequence")
    p.add_argument("--n", type=int, default=48)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        known = set(vars(args))
        unknown = {k.replace("-", "_") for k in cfg} - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        # flags given explicitly on the command line win over the config file
        parser.subcommands[args.command].set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return args.func(args)
    except CMVError as exc:
        print(f"cmvweyl: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
