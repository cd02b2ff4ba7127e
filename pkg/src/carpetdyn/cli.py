"""Command-line front end.

Every subcommand writes one CSV table or one JSON document, to stdout or to
``--out``.  Outputs open with the config hash, seed and library version.
Exit codes: 0 ok, 1 verification failure, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from carpetdyn.report import emit_csv, emit_json, meta_block

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class VerificationFailure(Exception):
    """Raised by a subcommand whose checks did not all pass; carries the output."""

    def __init__(self, message: str, result: "Result"):
        super().__init__(message)
        self.result = result


class UsageError(Exception):
    pass


@dataclass
class Result:
    kind: str  # "json" or "csv"
    payload: dict = field(default_factory=dict)
    header: list = field(default_factory=list)
    rows: list = field(default_factory=list)


@dataclass
class ExperimentConfig:
    """What a run was asked to do; hashed into the output header."""

    command: str
    params: dict
    seed: int | None = None
    output: str | None = None
    format: str | None = None

    def meta(self) -> dict:
        return meta_block({"command": self.command, "params": self.params}, self.seed)


# parsing helpers ------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _point(text: str) -> list:
    """Coordinates as exact rationals where possible, else quadratic irrationals or floats."""
    from carpetdyn.dioph import QuadraticIrrational

    out = []
    for t in text.split(","):
        t = t.strip()
        if t in ("golden", "phi"):
            out.append(QuadraticIrrational.golden_conjugate())
            continue
        try:
            out.append(Fraction(t))
            continue
        except ValueError:
            pass
        if t.startswith("quad:"):
            try:
                out.append(QuadraticIrrational.parse(t[5:].replace(":", ",")))
            except ValueError as exc:
                raise UsageError(f"quadratic irrationals are written quad:a:b:D:c, got {t!r}") from exc
            continue
        try:
            out.append(float(t))
        except ValueError as exc:
            raise UsageError(f"cannot read coordinate {t!r}") from exc
    return out


def _word(text: str) -> list[int]:
    text = text.strip()
    if "," in text:
        return _ints(text)
    if not text.isdigit():
        raise UsageError(f"cannot read word {text!r}")
    return [int(c) for c in text]


def _load_ifs(path: str):
    from carpetdyn.ifs import load_ifs

    if not Path(path).is_file():
        raise FileNotFoundError(f"IFS file not found: {path}")
    return load_ifs(path)


def _weights(text: str | None, d: int):
    from carpetdyn.latflow import WeightVector

    return WeightVector.equal(d) if text is None else WeightVector.parse(text)


def _params(args) -> dict:
    skip = {"func", "out", "format", "workers", "group", "cmd"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# subcommands -----------------------------------------------------------------

def cmd_ifs_validate(args) -> Result:
    from carpetdyn.ifs import validate

    ifs = _load_ifs(args.ifs)
    rep = validate(ifs)
    payload = {"separation": rep.separation, "spanning_irreducible": rep.spanning_irreducible,
               "digit_system": rep.digit_system, "digits": [list(v) for v in rep.digits] if rep.digits else None,
               "asserted": ifs.separation_assertion}
    res = Result("json", payload)
    asserted = ifs.separation_assertion
    if asserted and rep.digit_system and rep.separation != asserted and not (
            asserted == "open-set" and rep.separation == "strong"):
        raise VerificationFailure(f"asserted {asserted} separation, computed {rep.separation}", res)
    return res


def cmd_ifs_sample(args) -> Result:
    from carpetdyn.ifs import sample_theta

    ifs = _load_ifs(args.ifs)
    s = sample_theta(ifs, args.n, args.n_trunc, args.seed)
    header = [f"x{j + 1}" for j in range(ifs.d)] + ["truncation_error"]
    return Result("csv", header=header, rows=[list(map(float, p)) + [s.truncation_error] for p in s.points])


def cmd_flow_trace(args) -> Result:
    from carpetdyn.latflow import parse_norm, trajectory_rows

    x = _point(args.x)
    times = np.round(np.arange(0.0, args.t_max + args.dt / 2, args.dt), 12)
    eps = _floats(args.eps) if args.eps else []
    rows = trajectory_rows([float(c) for c in x], _weights(args.weights, len(x)), times, parse_norm(args.norm), eps)
    header = ["n_or_t", "lambda1_euclid", "lambda1_norm"] + [f"in_Keps_{e:g}" for e in eps]
    return Result("csv", header=header, rows=rows)


def _equi_setup(args, radius_flag: str):
    """Merge an experiment config file (if any) with the flags; flags win.

    Returns (ifs, times, radii, weights, n_samples, seed).
    """
    cfg = {}
    if args.config:
        import json

        from carpetdyn.schemas import validate_document

        cfg = json.loads(Path(args.config).read_text())
        validate_document(cfg, "experiment")
        args.config_doc = dict(cfg)
        if not Path(cfg["ifs_file"]).is_absolute():
            cfg["ifs_file"] = str(Path(args.config).parent / cfg["ifs_file"])
    ifs_path = args.ifs or cfg.get("ifs_file")
    times = [args.t] if args.t is not None else cfg.get("time_grid")
    flag = getattr(args, radius_flag)
    radii = (_floats(flag) if isinstance(flag, str) else [flag]) if flag is not None else cfg.get("radii")
    if not ifs_path or not times or not radii:
        raise UsageError(f"need --ifs, --t and --{radius_flag} (or a --config supplying them)")
    ifs = _load_ifs(ifs_path)
    if args.weights:
        w = _weights(args.weights, ifs.d)
    elif cfg.get("weights"):
        from carpetdyn.latflow import WeightVector

        w = WeightVector(tuple(cfg["weights"]))
    else:
        w = _weights(None, ifs.d)
    n = args.n if args.n is not None else cfg.get("n_samples", 10_000)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    args.seed = seed  # recorded in the output header
    return ifs, [float(t) for t in times], [float(r) for r in radii], w, int(n), int(seed)


def cmd_equi_siegel(args) -> Result:
    from carpetdyn.latflow import siegel_statistic

    ifs, times, radii, w, n, seed = _equi_setup(args, "R")
    reports = []
    for t in times:
        for R in radii:
            rep = siegel_statistic(ifs, t, R, n, seed, w, args.n_trunc, workers=args.workers)
            target = rep.extra["target"]
            payload = rep.to_dict()
            payload["extra"].update({"relative_error": abs(rep.estimate - target) / target,
                                     "bars_from_target": abs(rep.estimate - target) / rep.clt_bar
                                     if rep.clt_bar else None})
            reports.append(payload)
    return Result("json", reports[0] if len(reports) == 1 else {"reports": reports})


def cmd_equi_nondiv(args) -> Result:
    from carpetdyn.latflow import nondivergence_profile

    ifs, times, eps, w, n, seed = _equi_setup(args, "eps")
    rows = []
    for t in times:
        prof = nondivergence_profile(ifs, t, eps, n, seed, w, args.n_trunc, workers=args.workers)
        rows += [[t, e, f, b, prof.n_samples] for e, f, b in zip(prof.eps, prof.fractions, prof.bars)]
    return Result("csv", header=["t", "eps", "fraction_below", "clt_bar", "n_samples"], rows=rows)


def cmd_dioph_classify(args) -> Result:
    from carpetdyn.dioph import ba_test, critical_radius, dirichlet_test
    from carpetdyn.latflow import parse_norm

    x = _point(args.x)
    w = _weights(args.weights, len(x))
    norm = parse_norm(args.norm)
    ba = ba_test(x if len(x) > 1 else x[0], w, args.T)
    crit = critical_radius(norm, len(x), args.critical_radius)
    eps = args.eps if args.eps is not None else 0.9 * crit.epsilon_norm
    t_max = math.log(args.T)
    t0 = args.t0 if args.t0 is not None else t_max / 2
    di = dirichlet_test(x if len(x) > 1 else x[0], w, norm, eps, t0, t_max, args.dt)
    payload = {
        "x": [str(c) for c in x], "weights": list(w.r), "norm": norm.kind, "horizon_T": args.T,
        "ba": {"min_margin": ba.min_margin, "threshold": args.c, "badly_approximable_up_to_horizon":
               ba.min_margin >= args.c, "error": "exact" if all(isinstance(c, Fraction) for c in x) else "float64"},
        "dirichlet": {"eps": eps, "critical_radius": crit.epsilon_norm, "critical_radius_provenance": crit.provenance,
                      "t0": t0, "T": t_max, "dt": args.dt, "improvable_up_to_horizon": di.always_below,
                      "arithmetic_verdict": di.arithmetic_always_below, "paths_agree": di.agreement,
                      "min_systole": float(di.systole_trace[:, 1].min()),
                      "max_systole": float(di.systole_trace[:, 1].max())},
    }
    return Result("json", payload)


def cmd_dioph_fractal(args) -> Result:
    from carpetdyn.dioph import measure_zero_experiment
    from carpetdyn.latflow import parse_norm

    ifs = _load_ifs(args.ifs)
    tab = measure_zero_experiment(ifs, _weights(args.weights, ifs.d), parse_norm(args.norm), _floats(args.thresholds),
                                  _ints(args.ladder), args.n, args.seed, args.eps, args.t0, args.dt, args.n_trunc)
    return Result("csv", header=["statistic", "T", "threshold", "fraction", "clt_bar"], rows=tab.rows())


def cmd_sadic_places(args) -> Result:
    from carpetdyn.sadic import derive_places

    return Result("json", derive_places(_load_ifs(args.ifs)).to_dict())


def cmd_sadic_verify(args) -> Result:
    from carpetdyn.sadic.suite import run_identity_suite

    ifs = _load_ifs(args.ifs)
    checks = run_identity_suite(ifs, n_points=args.points, n_pairs=args.pairs, n_gamma=args.gamma, seed=args.seed,
                                corrupt_lambda=args.corrupt_lambda)
    rows = [[c.name, "pass" if c.ok else "FAIL", "" if c.place is None else str(c.place), c.detail] for c in checks]
    res = Result("csv", header=["check", "status", "place", "detail"], rows=rows)
    bad = [c for c in checks if not c.ok]
    if bad:
        where = "" if bad[0].place is None else f" at place {bad[0].place}"
        raise VerificationFailure(f"{len(bad)} check(s) failed; first: {bad[0].name}{where}", res)
    return res


def cmd_sadic_audit(args) -> Result:
    from carpetdyn.sadic import build_walk, growth_audit

    walk = build_walk(_load_ifs(args.ifs))
    audit = growth_audit(walk, range(1, args.max_n + 1), args.words, args.seed)
    rows = [[p, n, w, ln, lo, hi, "float64" if p == "inf" else "exact"] for p, n, w, ln, lo, hi in audit.csv_rows()]
    return Result("csv", header=["place", "n", "word", "log_norm", "bound_lo", "bound_hi", "error"], rows=rows)


def cmd_sadic_gamma(args) -> Result:
    from carpetdyn.sadic import build_walk, prefix_swap_gamma

    walk = build_walk(_load_ifs(args.ifs))
    a, b = _word(args.a), _word(args.b)
    n = args.n if args.n is not None else min(len(a), len(b))
    g = prefix_swap_gamma(walk, a, b, n)
    return Result("json", {"a": a[:n], "b": b[:n], "n": n, "y0": [str(c) for c in g.y0],
                           "norms": {str(p): str(v) for p, v in g.norms.items()},
                           "identity_places": [str(p) for p in g.element.identity_places()]})


def cmd_shift_ergodic(args) -> Result:
    from carpetdyn.shift import ShiftSpace, ergodic_convergence_test, make_prefix_sets, weighted_hits

    space = ShiftSpace.parse(args.k, args.p) if args.p else ShiftSpace.uniform(args.k)
    ns = _ints(args.ns) if args.ns else list(range(1, args.depth + 1))
    if args.prefix == "uniform":
        sets = [make_prefix_sets("uniform", args.k, n=n) for n in ns]
    else:
        sets = [make_prefix_sets("first-hit", args.k, s=args.letter, L=n) for n in ns]
    tab = ergodic_convergence_test(weighted_hits(args.depth, args.letter), sets, space, args.tails, args.seed,
                                   args.n_ref)
    return Result("csv", header=["n", "max_dev", "ref_value", "clt_bar"], rows=tab.rows)


# parser ----------------------------------------------------------------------

def _add(sub, name: str, func: Callable, help: str, ifs: bool = True, seed: int | None = None):
    p = sub.add_parser(name, help=help)
    if ifs:
        p.add_argument("--ifs", required=True, help="IFS specification JSON file")
    if seed is not None:
        p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], help="override the natural output format")
    p.set_defaults(func=func)
    return p


def build_parser() -> argparse.ArgumentParser:
    from carpetdyn.report import default_workers

    parser = argparse.ArgumentParser(prog="carpetdyn", description="Experiments on carpet IFS, lattice flows and "
                                     "S-arithmetic random walks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    groups = parser.add_subparsers(dest="group", required=True)

    g = groups.add_parser("ifs", help="IFS files").add_subparsers(dest="cmd", required=True)
    _add(g, "validate", cmd_ifs_validate, "separation and spanning checks")
    p = _add(g, "sample", cmd_ifs_sample, "draw points from the Bernoulli measure", seed=0)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--n-trunc", type=int, default=64)

    g = groups.add_parser("flow", help="diagonal flows on lattices").add_subparsers(dest="cmd", required=True)
    p = _add(g, "trace", cmd_flow_trace, "systole along a_t Lambda_x", ifs=False)
    p.add_argument("--x", required=True, help="comma-separated coordinates, rationals like 1/3 allowed")
    p.add_argument("--weights")
    p.add_argument("--norm", default="sup")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--eps", help="comma-separated radii for the in_Keps flags")

    g = groups.add_parser("equi", help="equidistribution statistics").add_subparsers(dest="cmd", required=True)
    for name, func, hlp in (("siegel", cmd_equi_siegel, "Siegel statistic at time t"),
                            ("nondiv", cmd_equi_nondiv, "fraction of short systoles at time t")):
        p = _add(g, name, func, hlp, ifs=False)
        p.add_argument("--ifs", help="IFS specification JSON file")
        p.add_argument("--config", help="experiment config JSON {ifs_file, weights, time_grid, radii, n_samples, "
                       "seed}; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--t", type=float)
        p.add_argument("--n", type=int, help="number of samples (default 10000)")
        p.add_argument("--weights")
        p.add_argument("--n-trunc", type=int, default=64)
        p.add_argument("--workers", type=int, default=default_workers())
        if name == "siegel":
            p.add_argument("--R", type=float)
        else:
            p.add_argument("--eps", help="comma-separated radii (default from --config)")

    g = groups.add_parser("dioph", help="Diophantine classification").add_subparsers(dest="cmd", required=True)
    p = _add(g, "classify", cmd_dioph_classify, "BA margin and Dirichlet verdict for one point", ifs=False)
    p.add_argument("--x", required=True, help="coordinates: rationals, floats, golden, or quad:a:b:D:c for (a+b*sqrt(D))/c")
    p.add_argument("--weights")
    p.add_argument("--norm", default="sup")
    p.add_argument("--eps", type=float)
    p.add_argument("--T", type=int, default=10_000, help="horizon in Q; the flow runs up to log T")
    p.add_argument("--t0", type=float)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--c", type=float, default=0.2, help="BA margin threshold")
    p.add_argument("--critical-radius", type=float, help="needed for norms without a built-in value")
    p = _add(g, "fractal-experiment", cmd_dioph_fractal, "decay of BA and Dirichlet fractions under theta", seed=0)
    p.add_argument("--ladder", default="100,1000,10000")
    p.add_argument("--thresholds", default="0.01")
    p.add_argument("--weights")
    p.add_argument("--norm", default="sup")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--eps", type=float)
    p.add_argument("--t0", type=float)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--n-trunc", type=int, default=64)

    g = groups.add_parser("sadic", help="S-arithmetic random walk").add_subparsers(dest="cmd", required=True)
    _add(g, "places", cmd_sadic_places, "place partition S_ue, S_dt, S_tr")
    p = _add(g, "verify", cmd_sadic_verify, "exact identity suite", seed=0)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--gamma", type=int, default=100)
    p.add_argument("--corrupt-lambda", action="store_true",
                   help="negative control: flip the translation sign in lambda_i")
    p = _add(g, "audit", cmd_sadic_audit, "norm growth of hbar words per place", seed=7)
    p.add_argument("--max-n", type=int, default=40)
    p.add_argument("--words", type=int, default=200)
    p = _add(g, "gamma", cmd_sadic_gamma, "prefix-swap element gamma(a, n, b)")
    p.add_argument("--a", required=True, help="word like 121 or 1,2,1")
    p.add_argument("--b", required=True)
    p.add_argument("--n", type=int)

    g = groups.add_parser("shift", help="Bernoulli shift").add_subparsers(dest="cmd", required=True)
    p = _add(g, "ergodic", cmd_shift_ergodic, "prefix ergodic averages of a Lipschitz functional", ifs=False, seed=0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--p", help="comma-separated probabilities, rationals keep averages exact")
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--tails", type=int, default=100)
    p.add_argument("--prefix", choices=["uniform", "first-hit"], default="uniform")
    p.add_argument("--letter", type=int, default=1)
    p.add_argument("--ns", help="comma-separated prefix sizes (default 1..depth)")
    p.add_argument("--n-ref", type=int, default=100_000)
    return parser


def _version() -> str:
    from carpetdyn import __version__

    return __version__


# output ----------------------------------------------------------------------

def render(res: Result, cfg: ExperimentConfig) -> str:
    fmt = cfg.format or res.kind
    meta = cfg.meta()
    if fmt == "json":
        if res.kind == "csv":
            return emit_json({"header": res.header, "rows": res.rows}, meta=meta)
        return emit_json(res.payload, meta=meta)
    if res.kind == "json":
        return emit_csv(["key", "value"], _flatten(res.payload), meta=meta)
    return emit_csv(res.header, res.rows, meta=meta)


def _flatten(d: dict, prefix: str = "") -> list[list]:
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out += _flatten(v, key + ".")
        elif isinstance(v, (list, tuple)):
            out.append([key, ";".join(map(str, v))])
        else:
            out.append([key, v])
    return out


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    code = EXIT_OK
    try:
        res = args.func(args)
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        res, code = exc.result, EXIT_VERIFY
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    # built after the command ran, so seeds and config-file contents it resolved are recorded
    cfg = ExperimentConfig(f"{args.group} {args.cmd}", _params(args), getattr(args, "seed", None), args.out,
                           args.format)
    text = render(res, cfg)
    if cfg.output:
        try:
            Path(cfg.output).write_text(text)
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); silence the exit-time flush
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return code


def main() -> None:
    sys.exit(run())


def _group_main(group: str) -> Callable[[], None]:
    def entry() -> None:
        sys.exit(run([group] + sys.argv[1:]))
    return entry


dioph_main = _group_main("dioph")
sadic_main = _group_main("sadic")
shift_main = _group_main("shift")
equi_main = _group_main("equi")


if __name__ == "__main__":
    main()
