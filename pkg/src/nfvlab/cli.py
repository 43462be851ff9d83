"""Command-line surface: validated JSON experiment configs, embedded presets,
CSV result tables, and a rerunnable manifest.

Subcommands:
  run        execute a config (or preset) -> results.csv + manifest.json
  code-info  structural report for a generator-matrix file
  presets    list the embedded presets

Identical config + seed produce byte-identical CSV output regardless of
--threads; a manifest can be fed back to --config to reproduce a run.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .bounds import SystemConfig, UnionBoundEvaluator, build_system, exact_fup, fer_bound, ldb_fup
from .gf2 import BitMatrix, MatrixFormatError, NfvCode, load_generator, make_code, reference_code
from .latency import ServiceModel, order_statistic_mean_and_second_moment
from .montecarlo import simulate_fup
from .presets import PRESETS, preset_config
from .queueing import QueueConfig, UnstableQueueError, pfd_mean_latency, simulate_queue
from .structure import (
    MAX_EXACT_VERTICES,
    chromatic_bounds,
    chromatic_number,
    dependency_graph,
)

SCENARIOS = ("fup_analyze", "fup_simulate", "queue_analyze", "queue_simulate", "code_info")
EXACT_SCHEMES = ("single", "repetition", "parallel")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config loading / validation


def _need(block, key, context):
    if key not in block:
        raise ConfigError(f"missing required key {context}.{key}" if context else
                          f"missing required key {key}")
    return block[key]


def _positive(value, key):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
        raise ConfigError(f"key {key} must be a positive number, got {value!r}")
    return float(value)


def _nonneg(value, key):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or value < 0:
        raise ConfigError(f"key {key} must be a nonnegative number, got {value!r}")
    return float(value)


def resolve_code(entry, index) -> NfvCode:
    ctx = f"codes[{index}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{ctx} must be an object")
    kind = _need(entry, "kind", ctx)
    label = entry.get("label", kind)
    try:
        if kind == "ref84":
            code = reference_code()
        elif kind == "explicit":
            if "path" in entry:
                matrix = load_generator(entry["path"])
            elif "rows" in entry:
                matrix = BitMatrix.from_rows([[int(c) for c in row] for row in entry["rows"]])
            else:
                raise ConfigError(f"{ctx}: explicit code needs 'path' or 'rows'")
            code = make_code("explicit", matrix=matrix, name=label)
        else:
            code = make_code(kind, entry.get("N"), entry.get("K"), name=label)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc
    return code


def _validate_system(config):
    system = _need(config, "system", "")
    L = _need(system, "L", "system")
    if not isinstance(L, int) or L < 1:
        raise ConfigError(f"key system.L must be a positive integer, got {L!r}")
    r = _need(system, "r", "system")
    if not 0 < r <= 1:
        raise ConfigError(f"key system.r must lie in (0, 1], got {r!r}")
    delta = _need(system, "delta", "system")
    if not 0 < delta < 0.5:
        raise ConfigError(f"key system.delta must lie in (0, 0.5), got {delta!r}")
    lat = _need(system, "latency", "system")
    _nonneg(_need(lat, "inv_mu1", "system.latency"), "system.latency.inv_mu1")
    _positive(_need(lat, "mu2", "system.latency"), "system.latency.mu2")
    _nonneg(_need(lat, "a", "system.latency"), "system.latency.a")


def _resolve_grid(config):
    tg = _need(config, "time_grid", "")
    if isinstance(tg, dict):
        start = _nonneg(_need(tg, "start", "time_grid"), "time_grid.start")
        stop = _positive(_need(tg, "stop", "time_grid"), "time_grid.stop")
        points = _need(tg, "points", "time_grid")
        if not isinstance(points, int) or points < 1:
            raise ConfigError(f"key time_grid.points must be a positive integer, got {points!r}")
        grid = np.linspace(start, stop, points)
    else:
        if not isinstance(tg, list) or not tg:
            raise ConfigError("key time_grid must be a nonempty list or a start/stop/points object")
        grid = np.asarray([float(t) for t in tg])
    if grid.size == 0 or (grid.size > 1 and np.any(np.diff(grid) <= 0)):
        raise ConfigError("key time_grid must be strictly increasing and nonempty")
    return grid


def validate_config(config):
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    scenario = _need(config, "scenario", "")
    if scenario not in SCENARIOS:
        raise ConfigError(f"key scenario must be one of {SCENARIOS}, got {scenario!r}")
    seed = config.setdefault("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"key seed must be a nonnegative integer, got {seed!r}")
    if scenario == "code_info":
        _need(config, "matrix_file", "")
        return config
    _validate_system(config)
    codes = _need(config, "codes", "")
    if not isinstance(codes, list) or not codes:
        raise ConfigError("key codes must be a nonempty list")
    labels = [c.get("label", c.get("kind", "?")) if isinstance(c, dict) else "?" for c in codes]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"key codes has duplicate labels: {labels}")
    dec = _need(config, "decoder", "")
    _need(dec, "kind", "decoder")
    if scenario in ("fup_analyze", "fup_simulate"):
        _resolve_grid(config)
        trials = config.setdefault("trials", 0)
        if not isinstance(trials, int) or trials < 0:
            raise ConfigError(f"key trials must be a nonnegative integer, got {trials!r}")
        if scenario == "fup_simulate" and trials < 1:
            raise ConfigError("key trials must be >= 1 for fup_simulate")
    else:
        queue = _need(config, "queue", "")
        service = _need(queue, "service", "queue")
        if "nu" in service:
            _positive(service["nu"], "queue.service.nu")
        elif "mu" in service:
            _positive(service["mu"], "queue.service.mu")
            mapping = service.setdefault("mapping", "printed")
            if mapping not in ("printed", "frame_rate"):
                raise ConfigError(
                    f"key queue.service.mapping must be 'printed' or 'frame_rate', got {mapping!r}")
        else:
            raise ConfigError("key queue.service needs 'nu' or 'mu'")
        frames = queue.setdefault("frames", 20000)
        if not isinstance(frames, int) or frames < 1:
            raise ConfigError(f"key queue.frames must be a positive integer, got {frames!r}")
        sweep = _need(queue, "sweep", "queue")
        kind = _need(sweep, "kind", "queue.sweep")
        values = _need(sweep, "values", "queue.sweep")
        if kind not in ("lambda", "rate"):
            raise ConfigError(f"key queue.sweep.kind must be 'lambda' or 'rate', got {kind!r}")
        if not isinstance(values, list) or not values:
            raise ConfigError("key queue.sweep.values must be a nonempty list")
        for v in values:
            _positive(v, "queue.sweep.values[*]")
            if kind == "rate" and v > 1:
                raise ConfigError(f"key queue.sweep.values[*] rates must lie in (0, 1], got {v}")
        if kind == "rate":
            _positive(_need(queue, "lambda", "queue"), "queue.lambda")
    return config


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if isinstance(data, dict) and "config" in data and "scenario" not in data:
        data = data["config"]  # manifest round trip
    return data


def apply_overrides(config, overrides):
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set key {key!r}: {part} is not an object")
        node[parts[-1]] = value
    return config


# ---------------------------------------------------------------------------
# scenario execution


def _derive_seed(seed, *ids):
    return int(np.random.SeedSequence([seed, *ids]).generate_state(1, np.uint64)[0])


def _build_syscfg(config, code, r=None) -> SystemConfig:
    system = config["system"]
    dec = config["decoder"]
    kwargs = {k: v for k, v in dec.items() if k != "kind"}
    lat = system["latency"]
    return build_system(
        code, L=system["L"], r=system["r"] if r is None else r, delta=system["delta"],
        inv_mu1=lat["inv_mu1"], mu2=lat["mu2"], a=lat["a"],
        decoder_kind=dec["kind"], **kwargs,
    )


def run_fup(config, threads):
    scenario = config["scenario"]
    grid = _resolve_grid(config)
    trials = config.get("trials", 0)
    seed = config["seed"]
    columns = ["t"]
    table = {}
    reasons = {}
    for idx, entry in enumerate(config["codes"]):
        code = resolve_code(entry, idx)
        label = entry.get("label", entry["kind"])
        try:
            cfg = _build_syscfg(config, code)
        except ValueError as exc:
            raise ConfigError(f"codes[{idx}] ({label}): {exc}") from exc
        if scenario == "fup_analyze":
            col = f"{label}_ldb"
            columns.append(col)
            vals = []
            for t in grid:
                bv = ldb_fup(cfg, float(t))
                vals.append(bv.value)
                if not bv.applicable and col not in reasons:
                    reasons[col] = bv.reason
            table[col] = vals
            col = f"{label}_ub"
            columns.append(col)
            try:
                ub = UnionBoundEvaluator(cfg)
                table[col] = [ub(float(t)) for t in grid]
            except ValueError as exc:
                table[col] = [None] * len(grid)
                reasons[col] = str(exc)
        use_exact = scenario == "fup_analyze" and entry["kind"] in EXACT_SCHEMES
        if use_exact:
            col = f"{label}_exact"
            columns.append(col)
            table[col] = [exact_fup(cfg, entry["kind"], float(t)) for t in grid]
        elif trials > 0:
            curve = simulate_fup(cfg, grid, trials, seed=_derive_seed(seed, idx), threads=threads)
            columns += [f"{label}_mc", f"{label}_mc_hw"]
            table[f"{label}_mc"] = list(curve.estimates)
            table[f"{label}_mc_hw"] = list(curve.half_widths)
        else:
            col = f"{label}_mc"
            columns.append(col)
            table[col] = [None] * len(grid)
            reasons[col] = "no closed form for this code and trials = 0"
    rows = [[float(t)] + [table[c][j] for c in columns[1:]] for j, t in enumerate(grid)]
    return columns, rows, reasons


def _resolve_nu(service, sv_n, d_min, n_servers):
    if "nu" in service:
        return float(service["nu"])
    mu = float(service["mu"])
    if service.get("mapping", "printed") == "printed":
        # per-server packet rate under which the analytic mean latency
        # reproduces the printed harmonic-sum form
        return (n_servers - d_min + 1) * mu / sv_n
    return mu  # 1/mu is the mean per-server frame service time


def run_queue(config, threads):
    scenario = config["scenario"]
    queue = config["queue"]
    sweep = queue["sweep"]
    seed = config["seed"]
    frames = queue.get("frames", 20000)
    sweep_key = "lambda" if sweep["kind"] == "lambda" else "r"
    columns = [sweep_key]
    codes = [(resolve_code(e, i), e.get("label", e["kind"])) for i, e in enumerate(config["codes"])]
    metric_cols = ["rho", "pfd_T"]
    if scenario == "queue_simulate":
        metric_cols += ["pfd_sim", "pfd_hw", "cd_sim", "cd_hw", "fer", "fer_hw", "fer_bound"]
    for _, label in codes:
        columns += [f"{label}_{m}" for m in metric_cols]
    rows = []
    reasons = {}
    for row_idx, value in enumerate(sweep["values"]):
        lam = float(value) if sweep["kind"] == "lambda" else float(queue["lambda"])
        r = None if sweep["kind"] == "lambda" else float(value)
        row = [float(value)]
        for code_idx, (code, label) in enumerate(codes):
            try:
                cfg = _build_syscfg(config, code, r=r)
            except ValueError as exc:
                raise ConfigError(f"codes[{code_idx}] ({label}): {exc}") from exc
            nu = _resolve_nu(queue["service"], cfg.latency.n, code.d_min, code.n_servers)
            sv = ServiceModel(nu=nu, n_servers=code.n_servers, d_min=code.d_min)
            es, _ = order_statistic_mean_and_second_moment(sv)
            cells = {"rho": lam * es}
            base = QueueConfig(arrival_rate=lam, service=sv, frames=frames,
                               seed=_derive_seed(seed, code_idx, row_idx))
            try:
                cells["pfd_T"] = pfd_mean_latency(base)
            except UnstableQueueError as exc:
                cells["pfd_T"] = None
                reasons.setdefault(f"{label}_pfd_T", str(exc))
            if scenario == "queue_simulate":
                system = cfg if cfg.decoder.supports_realizations else None
                if system is None:
                    reasons.setdefault(f"{label}_fer", "decoder is analytic-only")
                pfd = simulate_queue(base, system=system)
                cd = simulate_queue(
                    QueueConfig(arrival_rate=lam, service=sv, policy="continuous",
                                frames=frames, seed=base.seed), system=None)
                fb = fer_bound(cfg)
                if not fb.applicable:
                    reasons.setdefault(f"{label}_fer_bound", fb.reason)
                cells.update(pfd_sim=pfd.mean_latency, pfd_hw=pfd.latency_half_width,
                             cd_sim=cd.mean_latency, cd_hw=cd.latency_half_width,
                             fer=pfd.fer, fer_hw=pfd.fer_half_width, fer_bound=fb.value)
            row += [cells.get(m) for m in metric_cols]
        rows.append(row)
    return columns, rows, reasons


def code_info_report(matrix: BitMatrix) -> str:
    """Human-readable structural report for a generator matrix."""
    code = NfvCode(matrix, name="from-file")
    graph = dependency_graph(matrix)
    lines = [
        f"K (source packets):  {matrix.rows}",
        f"N (servers):         {matrix.cols}",
        f"column weights d_i:  {list(code.column_weights)}",
        f"d_min:               {code.d_min}",
        f"dependency edges:    {len(graph.edges)}",
    ]
    if matrix.cols <= MAX_EXACT_VERTICES:
        chi = chromatic_number(graph, "exact").chromatic_number
        lines.append(f"chromatic number:    {chi} (exact)")
    else:
        b = chromatic_bounds(matrix)
        lines.append(
            f"chromatic number:    <= {min(b.brooks, b.weight_bound)} "
            f"(degree bound {b.brooks}, weight bound {b.weight_bound})"
        )
    return "\n".join(lines)


def run_code_info(config):
    matrix = load_generator(config["matrix_file"])
    report = code_info_report(matrix)
    code = NfvCode(matrix)
    graph = dependency_graph(matrix)
    columns = ["K", "N", "d_min", "edges"]
    rows = [[matrix.rows, matrix.cols, code.d_min, len(graph.edges)]]
    if matrix.cols <= MAX_EXACT_VERTICES:
        columns.append("chi")
        rows[0].append(chromatic_number(graph, "exact").chromatic_number)
    return report, columns, rows


# ---------------------------------------------------------------------------
# output


def _fmt_cell(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        return ""
    return format(v, ".10g")


def write_csv(path, columns, rows):
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(c) for c in row) + "\n")


def config_hash(config) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_manifest(path, config, threads, reasons):
    manifest = {
        "tool": "nfvlab",
        "version": __version__,
        "config_hash": config_hash(config),
        "seed": config.get("seed"),
        "threads": threads,
        "column_reasons": reasons,
        "config": config,
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# entry points


def cmd_run(args):
    if bool(args.config) == bool(args.preset):
        raise ConfigError("exactly one of --config or --preset is required")
    if args.preset:
        try:
            config = preset_config(args.preset)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
    else:
        config = load_config(args.config)
    apply_overrides(config, args.set)
    if args.seed is not None:
        config["seed"] = args.seed
    validate_config(config)
    threads = args.threads or int(os.environ.get("NFVLAB_THREADS", "1"))
    scenario = config["scenario"]
    if scenario == "code_info":
        report, columns, rows = run_code_info(config)
        print(report)
        reasons = {}
    elif scenario in ("fup_analyze", "fup_simulate"):
        columns, rows, reasons = run_fup(config, threads)
    else:
        columns, rows, reasons = run_queue(config, threads)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "results.csv")
    write_csv(csv_path, columns, rows)
    write_manifest(os.path.join(args.out, "manifest.json"), config, threads, reasons)
    print(f"wrote {csv_path}")
    return 0


def cmd_code_info(args):
    print(code_info_report(load_generator(args.matrix_file)))
    return 0


def cmd_presets(_args):
    for name in sorted(PRESETS):
        print(f"{name:16s} {PRESETS[name]['description']}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="nfvlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    prun = sub.add_parser("run", help="execute an experiment config or preset")
    prun.add_argument("--config", help="path to a JSON config (or a manifest.json)")
    prun.add_argument("--preset", help="name of an embedded preset")
    prun.add_argument("--set", action="append", metavar="KEY=VALUE",
                      help="override a config key (dotted path, JSON value)")
    prun.add_argument("--out", default=".", help="output directory")
    prun.add_argument("--seed", type=int, help="override the config seed")
    prun.add_argument("--threads", type=int,
                      help="worker threads for Monte Carlo (default: NFVLAB_THREADS or 1)")
    prun.set_defaults(func=cmd_run)
    pinfo = sub.add_parser("code-info", help="structural report for a matrix file")
    pinfo.add_argument("matrix_file")
    pinfo.set_defaults(func=cmd_code_info)
    plist = sub.add_parser("presets", help="list embedded presets")
    plist.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MatrixFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
