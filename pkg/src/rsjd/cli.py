"""Command line: ``rsjd {simulate,analyze,sensitivity,rerun}``.

Exit codes: 0 ok, 2 invalid model/config/flags, 3 every path diverged.
Heavy modules are imported inside the commands so quick analyses stay fast.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

MANIFEST_SCHEMA = "rsjd-manifest/1"

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 2, 3

# Command defaults; per-example overrides below.
DEFAULTS = {
    "simulate": {"T": 10.0, "dt": 1e-3, "paths": 1, "x0": "1", "a0": 1},
    "analyze": {"T": 50.0, "dt": 1e-3, "paths": 10_000, "x0": "1", "a0": 1},
    "sensitivity": {"T": 1.0, "dt": 1e-3, "paths": 1000, "x0": "1", "a0": 1},
}
# ex62 grows away from the origin; its stability analyses start in the
# linear regime near the equilibrium.
EXAMPLE_DEFAULTS = {("analyze", "ex62"): {"x0": "1e-30"}}
DEFAULT_DELTAS = "1e-1,1e-2,1e-3"


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_table(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")


def _json_default(o):
    import numpy as np

    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


# -- argument handling ----------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--example", choices=["ex61", "ex62"], help="built-in model")
    src.add_argument("--model", help="model config (JSON)")
    p.add_argument("--T", type=float, help="horizon")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--paths", type=int, help="number of paths")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker cap (results do not depend on it)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--stride", type=int, default=None, help="record every k-th step")
    p.add_argument("--x0", help="initial state, comma separated")
    p.add_argument("--a0", type=int, help="initial regime (1-based)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rsjd", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="sample paths to CSV")
    _common(s)
    s.add_argument("--format", choices=["long", "per-path"], default="long",
                   help="ensemble layout: one long file with path_id, or one file per path")

    a = sub.add_parser("analyze", help="stability report")
    _common(a)
    a.add_argument("--stationary", action="store_true")
    a.add_argument("--criterion", action="store_true")
    a.add_argument("--moment-exponent", type=float, metavar="P")
    a.add_argument("--moment-method", choices=["resampled", "direct"], default="resampled")
    a.add_argument("--as-exponent", action="store_true")
    a.add_argument("--lyapunov-scan", metavar="SPEC_JSON")
    a.add_argument("--p1", action="store_true")
    a.add_argument("--radii", default="1,2,5,10")
    a.add_argument("--p2", action="store_true")
    a.add_argument("--y0", help="second start for --p2 (default x0 + 1)")
    a.add_argument("--j0", type=int, help="second regime for --p2 (default a0)")
    a.add_argument("--eps", default="0.01")
    a.add_argument("--dist-conv", action="store_true")
    a.add_argument("--starts", help="starts for --dist-conv, e.g. '1:1;-1:2'")
    a.add_argument("--checkpoints", help="comma separated times (default T/4,T/2,T)")

    z = sub.add_parser("sensitivity", help="difference quotient vs variational process")
    _common(z)
    z.add_argument("--delta", default=None, help=f"comma separated sweep (default {DEFAULT_DELTAS})")

    r = sub.add_parser("rerun", help="re-execute a manifest")
    r.add_argument("manifest")
    r.add_argument("--threads", type=int, default=None)
    r.add_argument("--out", default=None, help="output directory (default: the manifest's)")
    return ap


def _resolve(args):
    d = dict(DEFAULTS[args.command])
    d.update(EXAMPLE_DEFAULTS.get((args.command, args.example), {}))
    for k, v in d.items():
        if getattr(args, k) is None:
            setattr(args, k, v)
    if args.stride is None:
        n = int(round(args.T / args.dt))
        args.stride = 1 if args.command == "simulate" else max(1, n // 500)
    if args.command == "sensitivity" and args.delta is None:
        args.delta = DEFAULT_DELTAS
    return args


def _canonical_argv(args) -> list:
    """Fully resolved argument list; rerunning it reproduces the outputs."""
    argv = [args.command]
    argv += ["--example", args.example] if args.example else ["--model", str(Path(args.model).resolve())]
    for k in ("T", "dt", "paths", "seed", "stride", "x0", "a0"):
        argv += [f"--{k}", repr(getattr(args, k)) if isinstance(getattr(args, k), float) else str(getattr(args, k))]
    if args.command == "simulate":
        argv += ["--format", args.format]
    elif args.command == "sensitivity":
        argv += ["--delta", args.delta]
    elif args.command == "analyze":
        for flag in ("stationary", "criterion", "as_exponent", "p1", "p2", "dist_conv"):
            if getattr(args, flag):
                argv.append("--" + flag.replace("_", "-"))
        if args.moment_exponent is not None:
            argv += ["--moment-exponent", repr(args.moment_exponent), "--moment-method", args.moment_method]
        if args.lyapunov_scan:
            argv += ["--lyapunov-scan", str(Path(args.lyapunov_scan).resolve())]
        for k in ("radii", "eps", "y0", "j0", "starts", "checkpoints"):
            v = getattr(args, k)
            if v is not None:
                argv += ["--" + k, str(v)]
    return argv


def _floats(text, what):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: cannot parse {text!r}") from None


def _load(args):
    from .config import load_model
    from .model import builtin_example

    if args.example:
        return builtin_example(args.example), {"example": args.example}
    model = load_model(args.model)
    return model, {"config": str(Path(args.model).resolve()), "sha256": model.source.get("_sha256")}


def _state(model, text, what="x0"):
    import numpy as np

    x = np.array(_floats(text, what))
    if x.size != model.dim_x:
        raise UsageError(f"{what}: expected {model.dim_x} components, got {x.size}")
    return x


def _cfg(args):
    from .engine import SimConfig

    try:
        return SimConfig(args.dt, args.T, args.seed, args.paths, args.stride)
    except ValueError as exc:
        raise UsageError(f"config: {exc}") from None


def _check_regime(model, a, what="a0"):
    if not 1 <= a <= model.num_regimes:
        raise UsageError(f"{what}: regime must be in 1..{model.num_regimes}")


# -- commands -------------------------------------------------------------------

def cmd_simulate(args, out: Path) -> tuple:
    from .engine import simulate_ensemble, simulate_path, write_ensemble_csv, write_trajectory_csv

    model, src = _load(args)
    x0 = _state(model, args.x0)
    _check_regime(model, args.a0)
    cfg = _cfg(args)
    outputs = []
    if cfg.n_paths == 1:
        trajs = [simulate_path(model, x0, args.a0, cfg)]
        write_trajectory_csv(trajs[0], out / "trajectory.csv")
        outputs.append("trajectory.csv")
    else:
        trajs = simulate_ensemble(model, x0, args.a0, cfg, threads=args.threads)
        if args.format == "long":
            write_ensemble_csv(trajs, out / "ensemble.csv")
            outputs.append("ensemble.csv")
        else:
            width = max(5, len(str(cfg.n_paths - 1)))
            for tr in trajs:
                name = f"path_{tr.path_index:0{width}d}.csv"
                write_trajectory_csv(tr, out / name)
                outputs.append(name)
    n_div = sum(t.divergent for t in trajs)
    summary = {"paths": cfg.n_paths, "divergent_fraction": n_div / cfg.n_paths}
    code = EXIT_DIVERGED if n_div == cfg.n_paths else EXIT_OK
    return src, cfg, outputs, summary, code


def cmd_analyze(args, out: Path) -> tuple:
    import numpy as np

    from . import stability as st
    from .engine import AllPathsDivergedError
    from .model import linearize

    model, src = _load(args)
    x0 = _state(model, args.x0)
    _check_regime(model, args.a0)
    cfg = _cfg(args)
    report = st.StabilityReport(model={**model.describe(), **src})
    outputs = ["report.json"]
    diverged = []
    chosen = [f for f in ("stationary", "criterion", "moment_exponent", "as_exponent", "lyapunov_scan", "p1", "p2", "dist_conv")
              if getattr(args, f) not in (None, False)]
    if not chosen:
        raise UsageError("analyze: choose at least one analysis flag")

    lm_cache = {}

    def lin():
        if "lm" not in lm_cache:
            lm_cache["lm"] = linearize(model)
        return lm_cache["lm"]

    def run(name, fn):
        try:
            fn()
        except AllPathsDivergedError as exc:
            diverged.append(name)
            report.failures.append({"analysis": name, "error": str(exc)})
        except (ValueError, RuntimeError) as exc:
            report.failures.append({"analysis": name, "error": str(exc)})

    def stationary():
        q = lin().q_hat if model.has_equilibrium else model.rate_matrix_at(np.zeros(model.dim_x))
        sd = st.stationary_distribution(q)
        report.sections["stationary"] = {"mu": sd.mu.tolist(), "residual": sd.residual,
                                         "rate_matrix_at_0": np.asarray(q.entries).tolist()}

    def criterion():
        lm = lin()
        res = st.criterion_cor34(lm)
        sec = {"value": res.value, "verdict": res.verdict, "terms": res.terms, "mu": res.mu,
               "notes": list(res.notes), "linearization": {
                   "b": [np.asarray(b).tolist() for b in lm.b_mats],
                   "sigma": [[np.asarray(s).tolist() for s in ss] for ss in lm.sigma_mats],
                   "g_star": list(lm.g_star), "jump_rate": lm.jump_rate}}
        if model.name == "ex62":
            sec["notes"].append(st.EX62_NOTE)
        if lm.r == 1:
            sec["scalar_sharp_exponent"] = st.scalar_sharp_exponent(lm)
        report.sections["criterion"] = sec
        report.add_verdict("weighted eigenvalue criterion", res.verdict, "criterion.value",
                           "sufficient condition only")

    def moment():
        p = args.moment_exponent
        est = st.estimate_moment_exponent(model, x0, args.a0, p, cfg, method=args.moment_method, threads=args.threads)
        d = est.to_dict()
        extra = d.pop("extra")
        report.sections["moment_exponent"] = d
        if "log_moment" in extra:
            _write_table(out / "moment_log.csv", ["t", "log_moment"], zip(extra["times"], extra["log_moment"]))
            outputs.append("moment_log.csv")
        report.add_verdict(f"p={p:g} moment growth rate", est.verdict, "moment_exponent.ci")

    def as_exp():
        est = st.estimate_as_exponent(model, x0, args.a0, cfg, threads=args.threads)
        report.sections["as_exponent"] = est.to_dict()
        report.add_verdict("almost-sure exponent", est.verdict, "as_exponent.ci")

    def scan():
        from .generator import ScanRegion, lyapunov_scan

        spec = json.loads(Path(args.lyapunov_scan).read_text())
        V = _scan_function(spec.get("V", {"type": "power", "p": 2}), model.dim_x)
        region = ScanRegion(spec.get("inner", 0.1), spec.get("outer", 10.0), spec.get("n_radii", 64),
                            spec.get("n_directions", 16), tuple(spec["regimes"]) if spec.get("regimes") else None,
                            spec.get("seed", 0))
        b = spec.get("bounds", {})
        rep = lyapunov_scan(model, V, region, k=spec.get("k"), beta=spec.get("beta"),
                            p=b.get("p"), k1=b.get("k1"), k2=b.get("k2"), n_marks=spec.get("n_marks", 1000))
        report.sections["lyapunov_scan"] = rep.to_dict()
        report.add_verdict("Lyapunov scan", "stable-evidence" if rep.holds else "inconclusive",
                           "lyapunov_scan.violation_fraction", "grid evidence only")

    def p1():
        radii = _floats(args.radii, "radii")
        res = st.check_p1(model, x0, args.a0, cfg, radii, threads=args.threads)
        _write_table(out / "p1.csv", ["t"] + [f"R={_fmt(R)}" for R in radii],
                     ([t] + row for t, row in zip(res["times"], res["exceedance"])))
        outputs.append("p1.csv")
        report.sections["p1"] = {"radii": radii, "sup": res["sup"], "divergent_fraction": res["divergent_fraction"]}

    def p2():
        y0 = _state(model, args.y0, "y0") if args.y0 else x0 + 1.0
        j0 = args.j0 or args.a0
        _check_regime(model, j0, "j0")
        eps = _floats(args.eps, "eps")
        res = st.check_p2(model, x0, y0, args.a0, j0, cfg, eps=eps, threads=args.threads)
        cols = ["t", "msd", "augmented", "regimes_agree"] + [f"P(|d|<={k})" for k in res["prob_within"]]
        rows = zip(res["times"], res["msd"], res["augmented"], res["regimes_agree"], *res["prob_within"].values())
        _write_table(out / "p2.csv", cols, rows)
        outputs.append("p2.csv")
        report.sections["p2"] = {"y0": y0.tolist(), "j0": j0, "msd_rate": res["msd_rate"],
                                 "final_msd": res["msd"][-1], "divergent_fraction": res["divergent_fraction"]}
        if res["msd_rate"] is not None:
            report.add_verdict("coupled contraction", "stable-evidence" if res["msd_rate"] < 0 else "inconclusive",
                               "p2.msd_rate")

    def dist():
        starts = _starts(model, args.starts, x0, args.a0)
        cps = _floats(args.checkpoints, "checkpoints") if args.checkpoints else [cfg.T / 4, cfg.T / 2, cfg.T]
        res = st.distribution_convergence(model, starts, cfg, cps, threads=args.threads)
        _write_table(out / "dist_conv.csv", ["start_a", "t_a", "start_b", "t_b", "ks", "tv", "threshold"],
                     ([r["start_a"], float(r["t_a"]), r["start_b"], float(r["t_b"]), r["ks"], r["tv"], r["threshold"]]
                      for r in res["rows"]))
        outputs.append("dist_conv.csv")
        report.sections["dist_conv"] = res

    table = {"stationary": stationary, "criterion": criterion, "moment_exponent": moment,
             "as_exponent": as_exp, "lyapunov_scan": scan, "p1": p1, "p2": p2, "dist_conv": dist}
    for name in chosen:
        run(name, table[name])
    report.sections["config"] = {**cfg.as_dict(), "x0": x0.tolist(), "a0": args.a0}
    _dump(report.to_dict(), out / "report.json")
    ok = len(report.failures) < len(chosen)
    if ok:
        code = EXIT_OK
    elif diverged:
        code = EXIT_DIVERGED
    else:
        code = EXIT_INVALID
    return src, cfg, outputs, report.to_dict(), code


def _scan_function(spec, r):
    from .expr import compile_expression
    from .generator import TestFunction

    kind = spec.get("type", "power")
    if kind == "power":
        return TestFunction.power(float(spec.get("p", 2)), spec.get("weights"))
    if kind == "expression":
        f = compile_expression(spec["expr"], r)
        return TestFunction(lambda x, i: f(x, i), name=spec["expr"])
    raise UsageError(f"lyapunov-scan: unknown V type {kind!r}")


def _starts(model, text, x0, a0):
    if not text:
        return [(x0, a0), (-x0, model.num_regimes)]
    out = []
    for part in text.split(";"):
        try:
            xs, a = part.split(":")
            a = int(a)
        except ValueError:
            raise UsageError(f"starts: cannot parse {part!r} (expected x:regime)") from None
        _check_regime(model, a, "starts")
        out.append((_state(model, xs, "starts"), a))
    return out


def cmd_sensitivity(args, out: Path) -> tuple:
    import numpy as np

    from .engine import finite_difference_sensitivity

    model, src = _load(args)
    if model.dim_x != 1:
        raise UsageError("sensitivity: model must have a scalar state (dim_x = 1)")
    x0 = _state(model, args.x0)
    _check_regime(model, args.a0)
    cfg = _cfg(args)
    deltas = _floats(args.delta, "delta")
    if any(d == 0 for d in deltas):
        raise UsageError("delta: must be nonzero")
    rows = []
    for d in deltas:
        sp = finite_difference_sensitivity(model, x0[0], d, args.a0, cfg, threads=args.threads)
        err = (sp.z[:, -1] - sp.varsigma[:, -1]) ** 2
        ok = np.isfinite(err)
        if not ok.any():
            return src, cfg, [], {}, EXIT_DIVERGED
        n = int(ok.sum())
        se = float(err[ok].std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        rows.append([float(d), float(err[ok].mean()), se, n, float(np.mean(sp.varsigma[ok, -1]))])
    _write_table(out / "sensitivity.csv", ["delta", "mse", "stderr", "n_paths", "mean_varsigma_T"], rows)
    summary = {"deltas": deltas, "mse": [r[1] for r in rows]}
    return src, cfg, ["sensitivity.csv"], summary, EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "analyze": cmd_analyze, "sensitivity": cmd_sensitivity}


def _execute(argv, threads=None, out=None) -> int:
    from . import __version__

    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rerun":
        try:
            manifest = json.loads(Path(args.manifest).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: manifest: {exc}", file=sys.stderr)
            return EXIT_INVALID
        if manifest.get("schema") != MANIFEST_SCHEMA:
            print(f"error: manifest: unsupported schema {manifest.get('schema')!r}", file=sys.stderr)
            return EXIT_INVALID
        target = args.out or str(Path(args.manifest).resolve().parent)
        return _execute(manifest["argv"], threads=args.threads, out=target)

    if threads is not None:
        args.threads = threads
    if out is not None:
        args.out = out
    args = _resolve(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    from .model import ModelError

    t0 = time.perf_counter()
    try:
        src, cfg, outputs, summary, code = COMMANDS[args.command](args, outdir)
    except (ModelError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "command": args.command,
        "argv": _canonical_argv(args),
        "model": src,
        "config": cfg.as_dict(),
        "seed": cfg.seed,
        "version": __version__,
        "outputs": outputs,
        "threads": args.threads,
        "wall_clock_s": round(time.perf_counter() - t0, 3),
        "exit_code": code,
    }
    _dump(manifest, outdir / "manifest.json")
    print(json.dumps(summary, default=_json_default))
    if code == EXIT_DIVERGED:
        print("error: all paths diverged", file=sys.stderr)
    return code


def main(argv=None) -> int:
    return _execute(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
