"""Command-line entry point: ``psilab <group> <command> [options]``.

Exit status: 0 success, 2 invalid input (bad flag, range, missing file),
1 runtime failure.  Diagnostics are a single line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import shutil
import sys
import tempfile
import urllib.request
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from psilab import amplifier, bohr, explicit, majorant, psi, zeros

DEFAULT_SEED = amplifier.DEFAULT_SEED
CACHE_ENV = "PSILAB_CACHE_DIR"


class UsageError(Exception):
    """Invalid command line or input; exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class Output:
    text: str
    data: dict
    rows: list | None = None
    columns: list = field(default_factory=list)


# -- shared helpers ----------------------------------------------------------


def cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else Path.home() / ".cache" / "psilab"


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _points(args) -> np.ndarray:
    if getattr(args, "points_file", None):
        p = Path(args.points_file)
        if not p.exists():
            raise UsageError(f"points file not found: {p}")
        return np.loadtxt(p, dtype=float, ndmin=1, comments="#")
    if getattr(args, "points", None):
        return np.array(_floats(args.points))
    return np.zeros(0)


def _table(args) -> zeros.ZeroTable:
    path = Path(args.table) if args.table else zeros.bundled_table_path()
    if not path.exists():
        raise UsageError(f"zero table not found: {path}")
    return zeros.load_zero_table(path)


def _series(args, limit: float) -> psi.PsiSeries:
    limit = int(math.ceil(limit))
    if limit < 2:
        raise UsageError("limit must be at least 2")
    if getattr(args, "cache", None):
        series, _ = psi.load_or_build(args.cache, limit)
        return series
    if os.environ.get(CACHE_ENV):
        series, _ = psi.load_or_build(cache_dir() / f"psi_{limit}.csv", limit)
        return series
    return psi.build_psi_series(limit)


def _kv_text(d: dict, keys) -> str:
    return " ".join(f"{k}={d[k]}" for k in keys)


# -- zeros -------------------------------------------------------------------


def cmd_zeros_stats(args) -> Output:
    table = _table(args)
    t = table.t_max if args.t is None else args.t
    n = zeros.count_zeros(table, t)
    data = {
        "t": t,
        "count": n,
        "rvm": zeros.riemann_von_mangoldt(t) if t > 1 else None,
        "rvm_refined": zeros.riemann_von_mangoldt(t, refined=True) if t > 0 else None,
        "table_size": len(table),
        "t_max": table.t_max,
        "source": table.source_id,
    }
    return Output(f"N({t:g})={n}", data)


def cmd_zeros_paircorr(args) -> Output:
    table = _table(args)
    t = table.t_max if args.t is None else args.t
    windows = [(0.25, 0.75), (0.5, 1.0), (1.0, 2.0)] if args.a is None else [(args.a, args.b)]
    rows = []
    for a, b in windows:
        pc = zeros.pair_correlation(table, t, a, b).to_dict()
        pc.pop("note")
        rows.append(pc)
    text = "\n".join(
        f"a={r['a']:g} b={r['b']:g} observed={r['observed_symmetric']} predicted={r['predicted']:.1f} "
        f"ratio={r['ratio']:.4f} unfolded_ratio={r['unfolded_ratio']:.4f}"
        for r in rows
    )
    cols = list(rows[0].keys())
    return Output(text, {"t": t, "windows": rows, "note": zeros.SINC_NOTE}, rows, cols)


def cmd_zeros_partition(args) -> Output:
    table = _table(args)
    t = table.t_max if args.t is None else args.t
    part = zeros.partition_zeros(table, t, args.K, args.C).to_dict()
    return Output(_kv_text(part, ["t", "n_total", "n1_size", "n2_size", "n2_small"]), part)


# -- psi ---------------------------------------------------------------------


def cmd_psi_build(args) -> Output:
    series = psi.build_psi_series(args.limit)
    data = {"limit_x": series.limit_x, "checkpoints": series.checkpoints(), "psi_at_limit": float(series.psi(series.limit_x))}
    if args.out:
        data["cache"] = str(psi.save_psi_cache(series, args.out))
        args.out = None  # the cache is the file output for this command
    return Output(f"checkpoints={data['checkpoints']} psi({series.limit_x})={data['psi_at_limit']!r}", data)


def cmd_psi_scan(args) -> Output:
    series = _series(args, args.x_hi)
    scan = psi.large_value_scan(series, args.x_lo, args.x_hi, args.eps, args.sep_exponent)
    data = scan.to_dict(max_witnesses=args.max_witnesses)
    rows = data["witnesses"]
    text = _kv_text(data, ["measure_estimate", "component_count", "witness_count"]) + f" separated={len(scan.separated_subset)}"
    return Output(text, data, rows, ["x", "psi_x", "err", "normalized", "schoenfeld_ratio"])


def cmd_psi_moment(args) -> Output:
    series = _series(args, args.limit)
    d = psi.wintner_moment(series, args.limit, args.k).to_dict()
    return Output(_kv_text(d, ["k", "moment", "bound", "ratio"]), d)


def cmd_psi_logmeasure(args) -> Output:
    series = _series(args, args.limit)
    v = psi.log_measure_exceptional(series, args.limit, args.c)
    return Output(f"log_measure={v!r}", {"limit_x": args.limit, "c": args.c, "log_measure": v})


def cmd_psi_dist(args) -> Output:
    series = _series(args, math.exp(args.u_max) * (1 + 1e-12))
    h = psi.empirical_distribution(series, args.u_max, args.bins, args.grid)
    d = h.to_dict()
    rows = [{"lo": float(h.edges[i]), "hi": float(h.edges[i + 1]), "mass": float(h.mass[i])} for i in range(h.mass.size)]
    return Output(f"bins={h.mass.size} grid_points={h.grid_points} mass={float(h.mass.sum())!r}", d, rows, ["lo", "hi", "mass"])


# -- explicit ----------------------------------------------------------------


def cmd_explicit_sum(args) -> Output:
    table = _table(args)
    z = explicit.exp_sum(table, args.x, args.t)
    n = zeros.count_zeros(table, args.t)
    d = {"x": args.x, "t": args.t, "re": z.real, "im": z.imag, "abs": abs(z), "count": n}
    return Output(f"S={z.real!r}{z.imag:+.17g}i |S|={abs(z)!r} N={n}", d)


def cmd_explicit_compare(args) -> Output:
    table = _table(args)
    t_cut = table.t_max if args.t_cut is None else args.t_cut
    ev = explicit.truncated_psi_error(table, args.x, t_cut).to_dict()
    series = psi.build_psi_series(int(math.floor(args.x)) + 1)
    exact = float(series.psi(args.x)) - args.x
    ev["exact"] = exact
    ev["difference"] = ev["value"] - exact
    return Output(_kv_text(ev, ["x", "value", "exact", "difference", "truncation_bound"]), ev)


def cmd_explicit_tx(args) -> Output:
    table = _table(args)
    rep = explicit.detect_Tx(table, args.x, args.big_x, args.eps, args.alpha, args.beta, args.threshold_coeff)
    d = rep.to_dict()
    text = f"components={rep.t_set.component_count} log_integral={rep.log_integral!r} rhs={rep.rhs!r}"
    return Output(text, d)


def cmd_explicit_pigeonhole(args) -> Output:
    table = _table(args)
    res = explicit.pigeonhole_T(
        table, _floats(args.xs), args.big_x, args.eps, args.alpha, args.beta, args.grid, args.threshold_coeff
    )
    d = res.to_dict()
    return Output(f"t_star={res.t_star!r} x0={len(res.x0)} fraction={res.fraction!r}", d)


# -- bohr --------------------------------------------------------------------


def _spec(args) -> bohr.BohrSpec:
    freqs = _floats(args.freqs)
    phases = _floats(args.phases) if args.phases else [0.0] * len(freqs)
    if len(freqs) > bohr.MAX_RANK:
        raise UsageError(f"rank above {bohr.MAX_RANK} is not supported")
    return bohr.BohrSpec(freqs, phases, args.rho, args.T)


def cmd_bohr_measure(args) -> Output:
    m, dec = bohr.truncated_measure(_spec(args))
    d = {"measure": m, "components": dec.component_count, "intervals": dec.to_dict()["intervals"]}
    rows = [{"lo": lo, "hi": hi} for lo, hi in d["intervals"]]
    return Output(f"measure={float(f'{m:.12g}')!r} components={dec.component_count}", d, rows, ["lo", "hi"])


def cmd_bohr_count(args) -> Output:
    n = bohr.count_members(_spec(args), _points(args))
    return Output(f"count={n}", {"count": n})


def cmd_bohr_extend(args) -> Output:
    rep = bohr.interval_extension_check(_spec(args), _points(args), args.eta, args.A).to_dict()
    return Output(_kv_text(rep, ["lhs", "rhs", "ratio"]), rep)


def cmd_bohr_average(args) -> Output:
    rep = bohr.average_measure_experiment(
        _floats(args.pool), args.k, args.rho, args.eta, args.T, args.trials, args.beta_grid, args.seed
    )
    rows = [
        {"tuple": " ".join(repr(f) for f in p["tuple"]), "grid_max": p["grid_max"], "majorant_bound": p["majorant_bound"]}
        for p in rep["per_trial"]
    ]
    agg = rep["aggregate"]
    return Output(_kv_text(agg, ["avg_grid_max", "avg_majorant_bound", "fitted_C"]), rep, rows, ["tuple", "grid_max", "majorant_bound"])


# -- majorant ----------------------------------------------------------------


def _bump(args) -> majorant.VinogradovBump:
    return majorant.vinogradov_bump(majorant.VinogradovParams(args.a, args.b, args.delta, args.r))


def cmd_majorant_check(args) -> Output:
    bump = _bump(args)
    m = np.arange(1, args.M + 1)
    c = np.abs(bump.coefficient(m))
    ok = bool(np.all(c <= bump.coefficient_bounds(m) * (1 + 1e-12)))
    rng = np.random.default_rng(args.seed)
    x = rng.uniform(0, 1, 2000)
    order = bump.order_for_tail(1e-8)
    dev = float(np.max(np.abs(bump(x) - bump.series(x, order))))
    d = {
        "a0": float(bump.coefficient(0).real),
        "width": bump.params.width,
        "bounds_hold": ok,
        "max_m": args.M,
        "series_order": order,
        "tail_bound": bump.tail_bound(order),
        "max_series_deviation": dev,
        "series_within_tail": bool(dev <= bump.tail_bound(order)),
    }
    return Output(_kv_text(d, ["a0", "bounds_hold", "series_within_tail"]), d)


def cmd_majorant_dump(args) -> Output:
    rows = [{"m": m, "re": re, "im": im} for m, re, im in _bump(args).dump(args.M)]
    return Output(f"coefficients={len(rows)}", {"coefficients": rows}, rows, ["m", "re", "im"])


# -- experiment --------------------------------------------------------------


def cmd_experiment_run(args) -> Output:
    cfg = amplifier.PipelineConfig(
        big_x=args.X,
        eps=args.eps,
        delta=args.delta,
        table_path=args.table,
        c_const=args.C,
        a_const=args.A,
        k_max=args.k_max,
        threshold_coeff=args.threshold_coeff,
        benchmark=args.benchmark,
        witness_limit=args.witnesses,
        seed=args.seed,
        threads=args.threads,
    )
    cfg.validate()
    table = _table(args)
    series = _series(args, 2 * args.X)
    report = amplifier.run_pipeline(cfg, table=table, series=series)
    text = amplifier.report_json(report)
    return Output(text, report)


# -- fetch -------------------------------------------------------------------


def fetch_zeros(url: str, dest, expected_sha256: str | None, timeout: float = 60.0) -> Path:
    """Download, verify digest, validate as a zero table, then install at dest."""
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=dest.parent, suffix=".part")
    try:
        h = hashlib.sha256()
        with urllib.request.urlopen(url, timeout=timeout) as resp, os.fdopen(fd, "wb") as fh:
            while chunk := resp.read(1 << 16):
                h.update(chunk)
                fh.write(chunk)
        if expected_sha256 is not None and h.hexdigest() != expected_sha256.lower():
            raise RuntimeError(f"sha256 mismatch: expected {expected_sha256}, got {h.hexdigest()}; file discarded")
        try:
            zeros.load_zero_table(tmp)
        except zeros.ZeroTableError as exc:
            raise RuntimeError(f"downloaded file is not a valid zero table: {exc}") from None
        shutil.move(tmp, dest)
        return dest
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def cmd_fetch_zeros(args) -> Output:
    if args.sha256 is None and not args.no_verify:
        raise UsageError("supply --sha256 or waive verification with --no-verify")
    dest = Path(args.dest) if args.dest else cache_dir() / "zeros.txt"
    path = fetch_zeros(args.url, dest, args.sha256)
    n = len(zeros.load_zero_table(path))
    return Output(f"installed {path} ordinates={n}", {"path": str(path), "ordinates": n})


# -- parser ------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.add_argument("--out", default=None, help="write output to this file instead of stdout")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--threads", type=int, default=1)


def _nonneg_int(v):
    i = int(v)
    if i < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return i


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psilab", description="Prime error term and zeta zero experiments")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def sub(group, name, func, help_):
        g = group.add_parser(name, help=help_)
        _add_common(g)
        g.set_defaults(func=func)
        return g

    zg = groups.add_parser("zeros").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub(zg, "stats", cmd_zeros_stats, "zero count at height t")
    p.add_argument("--table")
    p.add_argument("--t", type=float)
    p = sub(zg, "paircorr", cmd_zeros_paircorr, "pair correlation against the form-factor prediction")
    p.add_argument("--table")
    p.add_argument("--t", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p = sub(zg, "partition", cmd_zeros_partition, "split zeros into regular and crowded windows")
    p.add_argument("--table")
    p.add_argument("--t", type=float)
    p.add_argument("--K", type=float, default=200.0)
    p.add_argument("--C", type=float, default=1.0)

    pg = groups.add_parser("psi").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub(pg, "build", cmd_psi_build, "sieve psi and write the checkpoint cache")
    p.add_argument("--limit", type=_nonneg_int, required=True)
    p = sub(pg, "scan", cmd_psi_scan, "exact measure of large |psi(x) - x|")
    p.add_argument("--cache")
    p.add_argument("--x-lo", type=float, default=100.0)
    p.add_argument("--x-hi", type=float, default=1e6)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--sep-exponent", type=float, default=0.5)
    p.add_argument("--max-witnesses", type=int, default=1000)
    p = sub(pg, "moment", cmd_psi_moment, "k-th moment of psi(x) - x")
    p.add_argument("--cache")
    p.add_argument("--limit", type=float, required=True)
    p.add_argument("--k", type=int, default=2)
    p = sub(pg, "logmeasure", cmd_psi_logmeasure, "logarithmic measure of the exceptional set")
    p.add_argument("--cache")
    p.add_argument("--limit", type=float, required=True)
    p.add_argument("--c", type=float, default=1.0)
    p = sub(pg, "dist", cmd_psi_dist, "histogram of (psi(e^u) - e^u)/e^(u/2)")
    p.add_argument("--cache")
    p.add_argument("--u-max", type=float, required=True)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--grid", type=int, default=10_000)

    eg = groups.add_parser("explicit").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub(eg, "sum", cmd_explicit_sum, "sum of x^(i gamma) over ordinates up to t")
    p.add_argument("--table")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p = sub(eg, "compare", cmd_explicit_compare, "truncated explicit formula against exact psi(x) - x")
    p.add_argument("--table")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--t-cut", type=float)
    for name, func, help_ in (
        ("tx", cmd_explicit_tx, "heights where the zero sum is large"),
        ("pigeonhole", cmd_explicit_pigeonhole, "common height for a set of x"),
    ):
        p = sub(eg, name, func, help_)
        p.add_argument("--table")
        if name == "tx":
            p.add_argument("--x", type=float, required=True)
        else:
            p.add_argument("--xs", required=True, help="comma-separated x values")
            p.add_argument("--grid", type=int, default=1000)
        p.add_argument("--big-x", type=float, required=True)
        p.add_argument("--eps", type=float, required=True)
        p.add_argument("--alpha", type=float, default=0.9)
        p.add_argument("--beta", type=float, default=0.1)
        p.add_argument("--threshold-coeff", type=float, default=explicit.DEFAULT_THRESHOLD_COEFF)

    bg = groups.add_parser("bohr").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, func, help_ in (
        ("measure", cmd_bohr_measure, "exact truncated Bohr-set measure"),
        ("count", cmd_bohr_count, "count points inside a Bohr set"),
        ("extend", cmd_bohr_extend, "interval-extension count bound"),
    ):
        p = sub(bg, name, func, help_)
        p.add_argument("--freqs", required=True)
        p.add_argument("--phases")
        p.add_argument("--rho", type=float, required=True)
        p.add_argument("--T", type=float, required=name != "count")
        if name != "measure":
            p.add_argument("--points")
            p.add_argument("--points-file")
        if name == "extend":
            p.add_argument("--eta", type=float, required=True)
            p.add_argument("--A", type=float, default=1.0)
    p = sub(bg, "average", cmd_bohr_average, "average max-measure over frequency tuples")
    p.add_argument("--pool", required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--beta-grid", type=int, default=4)

    mg = groups.add_parser("majorant").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, func, help_ in (
        ("check", cmd_majorant_check, "verify coefficient bounds and series agreement"),
        ("dump", cmd_majorant_dump, "Fourier coefficients as m,re,im"),
    ):
        p = sub(mg, name, func, help_)
        p.add_argument("--a", type=float, default=-0.11)
        p.add_argument("--b", type=float, default=0.11)
        p.add_argument("--delta", type=float, default=0.02)
        p.add_argument("--r", type=int, default=2)
        p.add_argument("--M", type=int, default=1000 if name == "check" else 50)

    xg = groups.add_parser("experiment").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub(xg, "run", cmd_experiment_run, "end-to-end instrumented pipeline, JSON report")
    p.add_argument("--table")
    p.add_argument("--cache")
    p.add_argument("--X", type=float, default=1e6)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--C", type=float, default=100.0)
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--threshold-coeff", type=float, default=explicit.PROOF_THRESHOLD_COEFF)
    p.add_argument("--benchmark", choices=["eps_delta", "eps_delta_over_100"], default="eps_delta")
    p.add_argument("--witnesses", type=int, default=8)
    p.set_defaults(format="json")

    fg = groups.add_parser("fetch").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub(fg, "zeros", cmd_fetch_zeros, "download and install a zero table")
    p.add_argument("--url", required=True)
    p.add_argument("--dest")
    p.add_argument("--sha256")
    p.add_argument("--no-verify", action="store_true")
    return parser


# -- output ------------------------------------------------------------------


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(amplifier._sanitize(v), sort_keys=True)
    return v


def render(out: Output, fmt: str) -> str:
    if fmt == "json":
        return amplifier.report_json(out.data)
    if fmt == "csv":
        buf = io.StringIO()
        if out.rows is not None:
            cols = out.columns or (list(out.rows[0].keys()) if out.rows else [])
            w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
            w.writeheader()
            for r in out.rows:
                w.writerow({k: _csv_value(r.get(k)) for k in cols})
        else:
            flat = amplifier._sanitize(out.data)
            cols = list(flat.keys())
            w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            w.writerow({k: _csv_value(flat[k]) for k in cols})
        return buf.getvalue()
    return out.text if out.text.endswith("\n") else out.text + "\n"


def schema_for(group: str, cmd: str) -> dict:
    ref = resources.files("psilab") / "schemas" / f"{group}_{cmd}.json"
    return json.loads(ref.read_text())


def _fail(code: int, msg: str) -> int:
    print(f"psilab: error: {' '.join(str(msg).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        out = args.func(args)
        text = render(out, args.format)
        if args.out:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    except UsageError as exc:
        return _fail(2, exc)
    except FileNotFoundError as exc:
        return _fail(2, f"file not found: {exc.filename}")
    except ValueError as exc:  # domain and range errors raised by the library
        return _fail(2, exc)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        return _fail(1, f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
