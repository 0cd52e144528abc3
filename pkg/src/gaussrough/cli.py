"""Command line entry point: ``gaussrough <subcommand> [options]``.

Every subcommand accepts ``--config file.ini``; explicit flags override the
file.  Tabular results go to CSV, verdicts and fits to JSON.  Each CSV gets a
``.meta.json`` sidecar holding the resolved configuration and a timestamp,
the only field that differs between identical runs.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, from_sections, load_config, parse_model_arg
from .covariance import Interval, Rectangle, coeffs_from_section, model_from_section
from .criteria import UnknownKind, chlt_check, classify
from .fitting import DegenerateFit
from .fourier import convexity_check, tv_bound
from .gaussian import SingularConditioning, embedding_trials, sample_cholesky, sample_rfs
from .roughpath import dist_homog, identity_record, signature
from .she import (
    MCNoiseDominates,
    SHEConfig,
    galerkin_rate,
    hyperviscosity_rate,
    rfs_moment_scaling,
    rfs_truncation_rate,
    she_moment_scaling,
    time_regularity_probe,
)
from .variation import dyadic_squares, mixed_var

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class CheckFailed(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _dump_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


def _write_csv(rows, header, path, meta):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    if path is None:
        sys.stdout.write(buf.getvalue())
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    _dump_json(meta, path.with_suffix(path.suffix + ".meta.json"))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _meta(cfg: ExperimentConfig, command: str, **extra):
    return {"command": command, "version": __version__, "config": cfg.to_dict(), "timestamp": _timestamp(), **extra}


# ---------------------------------------------------------------------------
# config resolution
# ---------------------------------------------------------------------------


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    sections = cfg.to_dict()
    sections.pop("name")
    source = sections.pop("source")
    if getattr(args, "model", None):
        model, coeffs = parse_model_arg(args.model)
        sections["model"] = model
        if coeffs:
            sections["coeffs"] = {**sections["coeffs"], **coeffs}
    overrides = {
        "grid": {"n": "grid_n", "mode": "mode", "gamma": "gamma", "rho": "rho", "rect": "rect", "levels": "levels"},
        "mc": {"paths": "paths", "seed": "seed", "dim": "dim"},
        "experiment": {
            "alpha": "alpha",
            "bc": "bc",
            "modes": "modes",
            "beta": "beta",
            "q": "q",
            "level": "level",
            "theta": "theta",
            "values": "values",
            "min_slope": "min_slope",
            "name": "experiment",
        },
        "coeffs": {"exponent": "exponent", "k_max": "k_max", "rule": "rule"},
    }
    for sec, keys in overrides.items():
        for key, attr in keys.items():
            v = getattr(args, attr, None)
            if v is not None:
                sections.setdefault(sec, {})[key] = str(v)
    sections = {k: v for k, v in sections.items() if v}
    out = from_sections(sections, source)
    out.name = args.command
    return out


def _model(cfg: ExperimentConfig):
    if not cfg.model:
        raise ConfigError("no model given (use --model or a [model] section)")
    try:
        return model_from_section(cfg.model, cfg.coeffs)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad model string: {exc}") from exc


def _floats(text, n=None):
    vals = [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} numbers, got {text!r}")
    return vals


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_variation(args):
    cfg = _resolve(args)
    m = _model(cfg)
    g = cfg.grid
    gamma, rho = float(g.get("gamma", 1)), float(g.get("rho", 1))
    mode = g.get("mode", "exact")
    n = int(g.get("n", 12 if mode == "exact" else 32))
    rows = []
    if "rect" in g:
        s0, s1, u0, u1 = _floats(g["rect"], 4)
        rects = [Rectangle(Interval(s0, s1), Interval(u0, u1))]
    else:
        rects = [Rectangle(m.domain, m.domain)]
    if "levels" in g:
        rects += [Rectangle(iv, iv) for iv in dyadic_squares(m.domain, [int(x) for x in _floats(g["levels"])])]
    for r in rects:
        est = mixed_var(m, r, n, n, gamma, rho, mode)
        row = est.to_row(side=r.s.length)
        rows.append([row[k] for k in ("side", "value", "mode", "gamma", "rho")])
    _write_csv(rows, ["side", "value", "mode", "gamma", "rho"], args.out, _meta(cfg, "variation", model=m.tag))


STATIONARY_INCREMENTS = ("StationaryF", "OU", "FractionalOU", "Spectral")


def cmd_check(args):
    cfg = _resolve(args)
    m = _model(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularConditioning)
        rep = classify(m, grid_n=int(cfg.grid.get("n", 65)))
        # informative only, the exit code follows the routed report
        extra = chlt_check(m).to_dict() if m.kind in STATIONARY_INCREMENTS else None
    out = {**_meta(cfg, "check"), "report": rep.to_dict()}
    if extra is not None:
        out["stationary"] = extra
    _dump_json(out, args.out)
    if args.expect and args.expect != rep.route:
        raise CheckFailed(f"routed to {rep.route}, expected {args.expect}")
    if not rep.passed:
        raise CheckFailed("a sufficient condition failed")


def cmd_check_series(args):
    cfg = _resolve(args)
    sec = dict(cfg.coeffs)
    a = coeffs_from_section(sec)
    K = int(float(sec.get("k_max", 10**6)))
    verdict = convexity_check(a, K)
    tv = tv_bound(a, "quasi_convex", min(K, 2**20))
    out = {
        **_meta(cfg, "check-series"),
        "coefficients": a.name,
        "convexity": verdict.to_dict(),
        "tv_bound": {"case": tv.case, "bound": tv.bound, "limit": tv.limit_b, "k_max": tv.k_max},
    }
    _dump_json(out, args.out)
    if not verdict.passed:
        raise CheckFailed("convexity check failed")


def _sample(cfg: ExperimentConfig):
    m = _model(cfg)
    n = int(cfg.grid.get("n", 129))
    M = int(cfg.mc.get("paths", 10))
    d = int(cfg.mc.get("dim", 1))
    seed = cfg.seed
    grid = np.linspace(m.domain.lo, m.domain.hi, n)
    if m.kind == "RFS":
        return m, sample_rfs(m._series, m.n_cov, grid, d, M, seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularConditioning)
        return m, sample_cholesky(m, grid, d, M, seed)


def cmd_sample(args):
    cfg = _resolve(args)
    m, e = _sample(cfg)
    rows = [
        [p, c, e.grid[i], e.data[p, i, c]] for p in range(e.M) for c in range(e.d) for i in range(len(e.grid))
    ]
    _write_csv(rows, ["path", "component", "t", "value"], args.out, _meta(cfg, "sample", model=m.tag))


def read_sample_csv(path):
    """Inverse of the ``sample`` writer: ``(grid, data[path, t, component])``."""
    with open(path) as fh:
        r = csv.DictReader(fh)
        if r.fieldnames != ["path", "component", "t", "value"]:
            raise ConfigError(f"{path}: expected columns path,component,t,value")
        rows = [(int(x["path"]), int(x["component"]), float(x["t"]), float(x["value"])) for x in r]
    if not rows:
        raise ConfigError(f"{path}: no data")
    P = 1 + max(x[0] for x in rows)
    C = 1 + max(x[1] for x in rows)
    grid = np.array(sorted({x[2] for x in rows}))
    index = {t: i for i, t in enumerate(grid)}
    data = np.full((P, len(grid), C), np.nan)
    for p, c, t, v in rows:
        data[p, index[t], c] = v
    if np.isnan(data).any():
        raise ConfigError(f"{path}: incomplete sample grid")
    return grid, data


def _multi_index(i: int, d: int, level: int) -> str:
    digits = []
    for _ in range(level):
        i, r = divmod(i, d)
        digits.append(str(r + 1))
    return ".".join(reversed(digits))


def cmd_lift(args):
    cfg = _resolve(args)
    grid, data = read_sample_csv(args.input)
    level = int(cfg.experiment.get("level", 2))
    beta = float(cfg.experiment.get("beta", 0.3))
    rec = signature(data, level, grid, beta=beta)
    d = data.shape[2]
    rows = []
    for p in range(data.shape[0]):
        for j, t in enumerate(grid):
            for lev in range(1, level + 1):
                vals = rec.elements.levels[lev][p, j]
                rows.extend([p, t, lev, _multi_index(i, d, lev), v] for i, v in enumerate(vals))
    norms = dist_homog(rec, identity_record(grid, d, level, (data.shape[0],)), "holder", beta, pairs="dyadic")
    meta = _meta(cfg, "lift", input=str(args.input), holder_norms=np.atleast_1d(norms).tolist())
    _write_csv(rows, ["path", "t", "level", "multi_index", "value"], args.out, meta)


def _rate_outputs(cfg, command, fit, points, args, xname="N_or_eps"):
    rows = [[p.x, p.distance, p.se] for p in points]
    fit_d = None if fit is None else {k: v for k, v in fit.to_dict().items() if k != "points"}
    meta = _meta(cfg, command, fit=fit_d)
    _write_csv(rows, [xname, "distance", "se"], args.out, meta)
    if args.fit_out:
        _dump_json({**meta, "points": [[p.x, p.distance, p.se] for p in points]}, args.fit_out)
    elif args.out is not None:
        print(json.dumps(fit_d, sort_keys=True))
    return fit_d


def _check_slope(fit, cfg):
    if "min_slope" in cfg.experiment and fit is not None:
        target = float(cfg.experiment["min_slope"])
        if not fit.slope >= target:
            raise CheckFailed(f"slope {fit.slope:.3f} below {target}")


def cmd_she(args):
    cfg = _resolve(args)
    e = cfg.experiment
    sc = SHEConfig(
        alpha=float(e.get("alpha", 0.9)),
        bc=e.get("bc", "dirichlet"),
        n_modes=int(e.get("modes", 1024)),
        M=int(cfg.mc.get("paths", 200)),
        seed=cfg.seed,
        d=int(cfg.mc.get("dim", 2)),
    )
    beta = float(e.get("beta", 0.1))
    q = float(e.get("q", 2))
    level = int(e.get("level", 2))
    kind = e.get("name", "galerkin")
    vals = _floats(e["values"]) if "values" in e else None
    if kind == "galerkin":
        Ns = [int(v) for v in vals] if vals else [16, 32, 64, 128, 256]
        fit, pts = galerkin_rate(sc, Ns, beta, q, level=level)
        for p, N in zip(pts, Ns):
            p.x = N  # report N itself; the fit used 1/N
    elif kind == "hyperviscosity":
        eps = vals or [1e-1, 1e-2, 1e-3, 1e-4]
        fit, pts = hyperviscosity_rate(sc, float(e.get("theta", 2.0)), eps, beta, q, level=level)
        dist = [p.distance for p in sorted(pts, key=lambda p: -p.x)]
        if any(b >= a for a, b in zip(dist, dist[1:])):
            _rate_outputs(cfg, kind, fit, pts, args)
            raise CheckFailed("hyper-viscosity distances are not strictly decreasing")
    elif kind == "time":
        taus = vals or [2.0**-j for j in (4, 6, 8, 10, 12)]
        fit, pts = time_regularity_probe(sc, beta, taus, q, level=level)
    elif kind == "moment":
        fit, pts = she_moment_scaling(sc, level=level)
    else:
        raise ConfigError(f"unknown she experiment {kind!r}")
    _rate_outputs(cfg, kind, fit, pts, args)
    _check_slope(fit, cfg)


def cmd_rates(args):
    cfg = _resolve(args)
    e = cfg.experiment
    a = coeffs_from_section(cfg.coeffs or {"rule": "power_law"})
    kind = e.get("name", "truncation")
    M = int(cfg.mc.get("paths", 1000))
    level = int(e.get("level", 2))
    if kind == "truncation":
        vals = _floats(e["values"]) if "values" in e else [16, 32, 64, 128, 256]
        Ns = [int(v) for v in vals]
        fit, pts = rfs_truncation_rate(
            a, Ns, float(e.get("beta", 0.05)), float(e.get("q", 2)), M, cfg.seed, level=level
        )
        for p, N in zip(pts, Ns):
            p.x = N
    elif kind == "moment":
        fit, pts = rfs_moment_scaling(a, M, cfg.seed, level=level)
    else:
        raise ConfigError(f"unknown rates experiment {kind!r}")
    _rate_outputs(cfg, kind, fit, pts, args)
    _check_slope(fit, cfg)


def cmd_embedding(args):
    cfg = _resolve(args)
    m = _model(cfg)
    rho = float(cfg.grid.get("rho", m.nominal_rho))
    res = embedding_trials(m, rho, int(cfg.mc.get("paths", 500)), int(cfg.grid.get("n", 32)), cfg.seed)
    rows = [[i, *r] for i, r in enumerate(res)]
    min_slack = float(res[:, 2].min())
    _write_csv(rows, ["element", "lhs", "rhs", "slack"], args.out, _meta(cfg, "embedding", min_slack=min_slack))
    if min_slack < -1e-9:
        raise CheckFailed(f"embedding inequality violated, min slack {min_slack:.3g}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaussrough", description="Gaussian rough path numerics.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        sp.add_argument("--config", help="INI file with [model] [coeffs] [grid] [mc] [experiment]")
        sp.add_argument("--out", help="output file (default: stdout)")
        if model:
            sp.add_argument("--model", help='model string such as "FBM:H=0.3" or "RFS:exponent=1.8"')
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("variation", help="mixed (gamma,rho)-variation of a covariance")
    common(sp)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--mode", choices=["exact", "lower", "greedy"])
    sp.add_argument("--rect", help="s0,s1,u0,u1")
    sp.add_argument("--grid-n", type=int)
    sp.add_argument("--levels", help="comma separated dyadic levels of extra squares")
    sp.set_defaults(func=cmd_variation)

    sp = sub.add_parser("check", help="classify a covariance against the sufficient conditions")
    common(sp)
    sp.add_argument("--grid-n", type=int)
    sp.add_argument("--expect", choices=["A", "B"], help="fail unless routed to this part")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("check-series", help="convexity and TV analytics of a coefficient sequence")
    common(sp, model=False)
    sp.add_argument("--rule", choices=["power_law", "she_dirichlet"])
    sp.add_argument("--exponent", type=float)
    sp.add_argument("--k-max", type=int)
    sp.set_defaults(func=cmd_check_series)

    sp = sub.add_parser("sample", help="sample paths of a Gaussian process")
    common(sp)
    sp.add_argument("--grid-n", type=int)
    sp.add_argument("--paths", type=int)
    sp.add_argument("--dim", type=int)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("lift", help="signature of sampled paths")
    common(sp, model=False)
    sp.add_argument("--input", required=True, help="CSV written by 'sample'")
    sp.add_argument("--level", type=int)
    sp.add_argument("--beta", type=float)
    sp.set_defaults(func=cmd_lift)

    sp = sub.add_parser("she", help="stochastic heat equation rate experiments")
    common(sp, model=False)
    sp.add_argument("--experiment", choices=["galerkin", "hyperviscosity", "time", "moment"])
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--bc", choices=["dirichlet", "periodic", "neumann"])
    sp.add_argument("--modes", type=int)
    sp.add_argument("--paths", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--level", type=int)
    sp.add_argument("--theta", type=float)
    sp.add_argument("--values", help="comma separated N, eps or lag values")
    sp.add_argument("--min-slope", type=float)
    sp.add_argument("--fit-out", help="JSON file for the fitted rate")
    sp.set_defaults(func=cmd_she)

    sp = sub.add_parser("rates", help="random Fourier series rate experiments")
    common(sp, model=False)
    sp.add_argument("--experiment", choices=["truncation", "moment"])
    sp.add_argument("--exponent", type=float)
    sp.add_argument("--paths", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--level", type=int)
    sp.add_argument("--values")
    sp.add_argument("--min-slope", type=float)
    sp.add_argument("--fit-out")
    sp.set_defaults(func=cmd_rates)

    sp = sub.add_parser("embedding", help="Cameron-Martin embedding inequality on random elements")
    common(sp)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--grid-n", type=int)
    sp.add_argument("--paths", type=int, help="number of random elements")
    sp.set_defaults(func=cmd_embedding)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        args.func(args)
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (MCNoiseDominates, DegenerateFit) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ConfigError, UnknownKind, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
