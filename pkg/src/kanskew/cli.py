"""kanskew command line.

Exit codes: 0 success, 1 domain error (JSON on stderr), 2 usage or config error.
"""

from __future__ import annotations

import argparse
import configparser
import sys

import numpy as np

from . import jsonio
from .basins import KanEndomorphism, basin_raster, intermingling_report, raster_csv, write_pgm
from .errors import ConfigError, KanskewError
from .fiber import sternberg_linearize
from .numtheory import as_rational, diophantine_pairs, multiplicative_independence
from .presets import parse_system
from .skew import StatePoint, strong_stable_holonomy, strong_unstable_holonomy
from .torus import TorusPoint, fixed_points_exact
from .transitivity import (
    Box,
    build_certificate,
    certificate_from_dict,
    direct_search,
    random_box,
    verify_witness,
)

# allowed keys per config section; anything else is rejected
SECTIONS = {
    "run": {"system", "seed", "workers", "tol"},
    "U": {"center_x1", "center_x2", "side_s", "side_u", "t_lo", "t_hi"},
    "V": {"center_x1", "center_x2", "side_s", "side_u", "t_lo", "t_hi"},
    "search": {"m_max", "beam"},
    "pairs": {"alpha", "beta", "eta", "epsilon", "count", "k_max"},
    "basins": {"grid_w", "grid_h", "n", "tau0", "tau1", "slice", "slice_value", "depth"},
}


class UsageError(Exception):
    pass


def load_config(path):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise UsageError(f"unknown config section [{sec}]")
        for key in cp[sec]:
            if key not in SECTIONS[sec]:
                raise UsageError(f"unknown key {key!r} in [{sec}]")
        out[sec] = dict(cp[sec])
    return out


def _box(sec, name):
    try:
        box = Box(TorusPoint(float(sec["center_x1"]), float(sec["center_x2"])),
                  (float(sec["side_s"]), float(sec["side_u"])),
                  (float(sec["t_lo"]), float(sec["t_hi"])))
    except KeyError as exc:
        raise UsageError(f"[{name}] is missing {exc.args[0]}") from exc
    except ValueError as exc:
        raise UsageError(f"[{name}]: {exc}") from exc
    return box


def _emit(args, text, binary=False):
    if args.out:
        with open(args.out, "wb" if binary else "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _settings(args):
    cfg = load_config(args.config) if args.config else {}
    run = cfg.get("run", {})
    system = args.system or run.get("system")
    seed = args.seed if args.seed is not None else int(run.get("seed", 0))
    workers = args.workers if args.workers is not None else int(run.get("workers", 1))
    tol = args.tol if args.tol is not None else float(run.get("tol", 1e-9))
    if tol <= 0:
        raise UsageError("--tol must be positive")
    if workers < 1:
        raise UsageError("--workers must be >= 1")
    return cfg, system, seed, workers, tol


def _system(name, default="kan-diffeo"):
    return parse_system(name or default)


def _diffeo(name):
    s = _system(name)
    if isinstance(s, KanEndomorphism):
        raise UsageError("this command needs an invertible skew product, not the endomorphism")
    return s


# --- subcommands -------------------------------------------------------------------

def cmd_validate(args):
    _, name, seed, _, _ = _settings(args)
    S = _diffeo(name)
    A = S.base
    rep = S.validation.to_dict()
    rep.update({"system": S.name, "conorm": A.conorm, "norm": A.norm,
                "fixed_points": [[str(a), str(b)] for a, b in fixed_points_exact(A)],
                "p": [S.p.x1, S.p.x2], "q": [S.q.x1, S.q.x2], "valid": S.validation.valid})
    _emit(args, jsonio.dumps(rep))
    return 0


def cmd_independence(args):
    r, s = as_rational(args.r), as_rational(args.s)
    v = multiplicative_independence(r, s)
    text = v.label if v.witness is None else f"{v.label} {v.witness[0]} {v.witness[1]}"
    if args.out:
        _emit(args, jsonio.dumps({"r": str(r), "s": str(s), "verdict": v.label,
                                  "witness": None if v.witness is None else list(v.witness)}))
    else:
        print(text)
    return 0


def cmd_linearize(args):
    _, name, _, _, tol = _settings(args)
    S = _diffeo(name)
    if args.pole == "p":
        f = S.fiber_map(S.p)
    else:
        f = S.fiber_map(S.q).inverse()
    ch = sternberg_linearize(f, tol=tol)
    ts = np.linspace(0.0, ch.delta, 9)
    _emit(args, jsonio.dumps({"system": S.name, "pole": args.pole, "alpha": ch.alpha,
                              "delta": ch.delta, "residual": ch.residual,
                              "normalization_defect": ch.normalization_defect,
                              "samples": [[float(t), float(ch.h(t))] for t in ts]}))
    return 0


def cmd_pairs(args):
    cfg, _, _, _, _ = _settings(args)
    sec = cfg.get("pairs", {})
    alpha = as_rational(args.alpha or sec.get("alpha", "31/32"))
    beta = as_rational(args.beta or sec.get("beta", "32/33"))
    eta = as_rational(args.eta or sec.get("eta", "1"))
    eps = float(args.epsilon or sec.get("epsilon", 1e-3))
    count = int(args.count or sec.get("count", 10))
    k_max = int(args.k_max or sec.get("k_max", 100_000))
    res = diophantine_pairs(alpha, beta, eta, eps, count, k_max=k_max)
    lines = ["k,l,residual,eta_star"]
    lines += [f"{p.k},{p.l},{p.residual:.17g},{p.eta_star:.17g}" for p in res.pairs]
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_holonomy(args):
    _, name, _, _, tol = _settings(args)
    S = _diffeo(name)
    s = StatePoint(TorusPoint(args.x1, args.x2), args.t)
    target = TorusPoint(args.target_x1, args.target_x2)
    fn = strong_stable_holonomy if args.path == "stable" else strong_unstable_holonomy
    h = fn(S, s, target, tol=min(tol, 1e-13))
    _emit(args, jsonio.dumps({"system": S.name, "path": args.path, "source": [args.x1, args.x2, args.t],
                              "target": [target.x1, target.x2], "t_prime": h.t_prime,
                              "depth": h.depth, "error_bound": h.error_bound,
                              "residual": h.residual}))
    return 0


def _boxes(cfg, seed):
    if "U" in cfg and "V" in cfg:
        return _box(cfg["U"], "U"), _box(cfg["V"], "V")
    rng = np.random.default_rng(seed)
    return random_box(rng), random_box(rng)


def cmd_certify(args):
    cfg, name, seed, _, _ = _settings(args)
    S = _diffeo(name)
    U, V = _boxes(cfg, seed)
    cert = build_certificate(S, U, V)
    _emit(args, jsonio.dumps(cert.to_dict()))
    return 0


def cmd_search(args):
    cfg, name, seed, _, _ = _settings(args)
    if args.certificate:
        with open(args.certificate) as fh:
            cert = certificate_from_dict(jsonio.loads(fh.read()))
        S = _diffeo(name or cert.system)
        resid = verify_witness(S, cert.witness, cert.m, cert.U, cert.V)
        out = {"system": S.name, "m": cert.m, "image_residual": resid, "verified": resid == 0.0}
        _emit(args, jsonio.dumps(out))
        return 0 if resid == 0.0 else 1
    S = _diffeo(name)
    U, V = _boxes(cfg, seed)
    sec = cfg.get("search", {})
    m_max = int(args.m_max if args.m_max is not None else sec.get("m_max", 400))
    beam = int(sec.get("beam", 24))
    res = direct_search(S, U, V, m_max, beam=beam)
    out = {"system": S.name, "seed": seed, "U": U.to_dict(), "V": V.to_dict(), "m_max": m_max,
           "m": None if res is None else res.m,
           "witness": None if res is None else res.witness.as_json()}
    _emit(args, jsonio.dumps(out))
    return 0


def _raster(args, cfg, name, seed, workers):
    sec = cfg.get("basins", {})
    dyn = _system(name, "kan-endo")
    grid = args.grid or f"{sec.get('grid_w', 128)}x{sec.get('grid_h', 128)}"
    try:
        w, h = (int(v) for v in grid.lower().split("x"))
    except ValueError as exc:
        raise UsageError(f"bad --grid {grid!r}") from exc
    n = int(args.n if args.n is not None else sec.get("n", 10_000))
    tau0 = float(sec.get("tau0", 0.2))
    tau1 = float(sec.get("tau1", 0.8))
    if isinstance(dyn, KanEndomorphism):
        slc = ("cylinder",)
    else:
        slc = (sec.get("slice", "x2"), float(sec.get("slice_value", 0.0)))
    try:
        return basin_raster(dyn, (w, h), slc, n, tau0, tau1, seed=seed, workers=workers), sec
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_basins(args):
    cfg, name, seed, workers, _ = _settings(args)
    R, _ = _raster(args, cfg, name, seed, workers)
    if args.out:
        write_pgm(R, args.out)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(raster_csv(R))
    sys.stdout.write(jsonio.dumps({"seed": seed, "grid": [R.grid_w, R.grid_h], "n": R.n,
                                   "fractions": R.fractions()}))
    return 0


def cmd_intermingle(args):
    cfg, name, seed, workers, _ = _settings(args)
    R, sec = _raster(args, cfg, name, seed, workers)
    depth = int(args.depth if args.depth is not None else sec.get("depth", 3))
    rep = intermingling_report(R, depth)
    out = {"seed": seed, "grid": [R.grid_w, R.grid_h], "n": R.n, "fractions": R.fractions(),
           **rep.to_dict()}
    _emit(args, jsonio.dumps(out))
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="preset name (kan-diffeo, kan-endo) or inline spec")
    common.add_argument("--config", help="INI file with [run], [U], [V], [search], [pairs], [basins]")
    common.add_argument("--out", help="output file (stdout when omitted)")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--tol", type=float)

    ap = argparse.ArgumentParser(prog="kanskew", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="K1-K3 report for a system")
    p = sub.add_parser("independence", parents=[common], help="exact log-ratio independence")
    p.add_argument("--r", required=True)
    p.add_argument("--s", required=True)
    p = sub.add_parser("linearize", parents=[common], help="Sternberg chart at a pole")
    p.add_argument("--pole", choices=("p", "q"), default="p")
    p = sub.add_parser("pairs", parents=[common], help="Diophantine pairs as CSV")
    for flag in ("--alpha", "--beta", "--eta", "--epsilon", "--count", "--k-max"):
        p.add_argument(flag)
    p = sub.add_parser("holonomy", parents=[common], help="strong holonomy of one point")
    for flag in ("--x1", "--x2", "--t", "--target-x1", "--target-x2"):
        p.add_argument(flag, type=float, required=True)
    p.add_argument("--path", choices=("stable", "unstable"), default="stable")
    sub.add_parser("certify", parents=[common], help="transitivity certificate for boxes U, V")
    p = sub.add_parser("search", parents=[common], help="direct search, or re-verify a certificate")
    p.add_argument("--m-max", type=int)
    p.add_argument("--certificate")
    for cmd in ("basins", "intermingle"):
        p = sub.add_parser(cmd, parents=[common],
                           help="basin raster (PGM/CSV)" if cmd == "basins" else "intermingling report")
        p.add_argument("--grid", help="WxH, e.g. 512x512")
        p.add_argument("--n", type=int)
        if cmd == "basins":
            p.add_argument("--csv")
        else:
            p.add_argument("--depth", type=int)
    return ap


COMMANDS = {"validate": cmd_validate, "independence": cmd_independence,
            "linearize": cmd_linearize, "pairs": cmd_pairs, "holonomy": cmd_holonomy,
            "certify": cmd_certify, "search": cmd_search, "basins": cmd_basins,
            "intermingle": cmd_intermingle}


def run(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, ValueError) as exc:
        sys.stderr.write(f"kanskew {args.command}: {exc}\n")
        return 2
    except KanskewError as exc:
        sys.stderr.write(jsonio.dumps(exc.to_dict()))
        return 1


def main():
    sys.exit(run())
