"""Command-line front end.

Exit status: 0 on success, 1 on bad input, 2 when no hierarchy meets the
deadline. Failures print one line ``error: <CODE>: <message>`` to stderr.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

from . import oracle
from .errors import CacheSelError, InvalidConfig, SelectionError
from .private import emit_secondary_trace, simulate_private
from .selector import load_cache, reselect, save_cache, select_hierarchy
from .shared import simulate_shared
from .space import (DEFAULT_ASSOCS, DEFAULT_BLOCK, DEFAULT_SETS, CacheConfig, DesignSpace,
                    HierarchyConfig, enumerate_space, parse_assocs, parse_sets)
from .timing import Deadline, TimingParams, amt, parse_duration
from .trace import SyntheticTraceSpec, Trace, count_tap, generate_synthetic, read_trace, write_trace

CONFIG_ENV = "CACHESEL_CONFIG"


@dataclass
class RunConfig:
    trace_path: Optional[str] = None
    processors: Optional[int] = None
    private_space: DesignSpace = field(default_factory=lambda: DesignSpace(DEFAULT_SETS, DEFAULT_ASSOCS, DEFAULT_BLOCK))
    shared_space: DesignSpace = field(default_factory=lambda: DesignSpace(DEFAULT_SETS, DEFAULT_ASSOCS, DEFAULT_BLOCK))
    params: TimingParams = field(default_factory=TimingParams)
    wcdmot_ns: Optional[int] = None
    output: str = "table"
    seed: int = 0
    cache_path: Optional[str] = None
    back_invalidate: bool = False


def read_config_file(path):
    """``key = value`` lines with optional ``[private]`` / ``[shared]`` sections.

    Top-level ``sets``/``assocs``/``block`` apply to both levels.
    """
    values = {}
    section = ""
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section not in ("private", "shared"):
                    raise InvalidConfig(f"{path}:{lineno}: unknown section [{section}]")
                continue
            if "=" not in line:
                raise InvalidConfig(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[f"{section}.{key}" if section else key] = value
    return values


def build_run_config(args) -> RunConfig:
    cfg_path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    file_values = read_config_file(cfg_path) if cfg_path else {}

    def pick(name, level=None):
        flag = getattr(args, f"{level}_{name}" if level else name, None)
        if flag is not None:
            return flag
        if level and getattr(args, name, None) is not None:
            return getattr(args, name)
        if level and f"{level}.{name}" in file_values:
            return file_values[f"{level}.{name}"]
        return file_values.get(name)

    def space(level):
        sets = pick("sets", level)
        assocs = pick("assocs", level)
        block = pick("block", level)
        return DesignSpace(parse_sets(sets) if sets else DEFAULT_SETS,
                           parse_assocs(assocs) if assocs else DEFAULT_ASSOCS,
                           int(block) if block else DEFAULT_BLOCK)

    latencies = {k: int(pick(k)) for k in ("tp", "ts", "tm") if pick(k) is not None}
    wcdmot = pick("wcdmot")
    processors = pick("processors")
    return RunConfig(
        trace_path=getattr(args, "trace", None),
        processors=int(processors) if processors is not None else None,
        private_space=space("private"),
        shared_space=space("shared"),
        params=TimingParams(**latencies),
        wcdmot_ns=parse_duration(wcdmot) if wcdmot is not None else None,
        output=getattr(args, "format", None) or "table",
        seed=getattr(args, "seed", 0) or 0,
        cache_path=getattr(args, "cache", None),
        back_invalidate=getattr(args, "back_invalidate", False),
    )


def load_trace(rc: RunConfig) -> Trace:
    if not rc.trace_path:
        raise InvalidConfig("--trace is required")
    if not os.path.exists(rc.trace_path):
        raise FileNotFoundError(f"trace file not found: {rc.trace_path}")
    trace = read_trace(rc.trace_path)
    if rc.processors is not None and rc.processors != trace.processor_count:
        trace = Trace(trace.cycles, trace.procs, trace.writes, trace.addrs, rc.processors)
    return trace


def require_deadline(rc: RunConfig) -> Deadline:
    if rc.wcdmot_ns is None:
        raise InvalidConfig("--wcdmot is required")
    return Deadline(rc.wcdmot_ns)


# -- output ------------------------------------------------------------------

def _write_csv(out, header, rows):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def print_report(report, fmt, out, verbose=False):
    s = report.summary()
    if fmt == "json":
        json.dump(s, out, indent=2, sort_keys=True)
        out.write("\n")
        return
    if fmt == "csv":
        header = ["private", "shared", "hierarchy_bytes", "tap", "tas", "tam", "amt_ns",
                  "wcdmot_ns"]
        h = report.hierarchy
        _write_csv(out, header, [[h.private.label, h.shared.label, h.capacity,
                                  report.counts.tap, report.counts.tas, report.counts.tam,
                                  report.amt_ns, report.deadline.wcdmot]])
        return
    h = report.hierarchy
    lines = [
        f"trace        {s['trace_digest'][:16]}  ({h.processor_count} processors)",
        f"deadline     {report.deadline.wcdmot} ns",
        f"private      {h.private.label}  ({h.private.capacity} B each)",
        f"shared       {h.shared.label}  ({h.shared.capacity} B)",
        f"hierarchy    {h.capacity} B",
        f"counts       TAP={report.counts.tap} TAS={report.counts.tas} TAM={report.counts.tam}",
        f"AMT          {report.amt_ns} ns ({report.amt_ns / 1e9:.6g} s)",
        "configs      private {private_simulated} simulated / {private_excluded} excluded, "
        "shared {shared_simulated} simulated / {shared_excluded} excluded".format(**s["configs"]),
        f"SPCS: {'cached' if report.private_cached else 'simulated'}   "
        f"SSCS: {'cached' if report.shared_cached else 'simulated'}",
    ]
    if verbose:
        b = report.budget
        lines.insert(2, f"budget       TAP={b.tap_observed} TAS<={b.tas_limit} TAM<={b.tam_limit}"
                        f"  (TAM'={report.tam_prime})")
        lines.append(f"decided in   {report.duration_s:.3f} s")
    out.write("\n".join(lines) + "\n")


# -- subcommands -------------------------------------------------------------

def cmd_select(args, out):
    rc = build_run_config(args)
    trace = load_trace(rc)
    report = select_hierarchy(trace, rc.private_space, rc.shared_space, rc.params,
                              require_deadline(rc))
    if rc.cache_path:
        save_cache(report, rc.cache_path)
    print_report(report, rc.output, out, args.verbose)
    return 0


def cmd_reselect(args, out):
    rc = build_run_config(args)
    trace = load_trace(rc)
    cached = load_cache(rc.cache_path, trace)
    report = reselect(cached, require_deadline(rc), trace)
    print_report(report, rc.output, out, args.verbose)
    return 0


def cmd_oracle(args, out):
    rc = build_run_config(args)
    trace = load_trace(rc)
    deadline = require_deadline(rc)
    P = trace.processor_count
    if rc.back_invalidate:
        opts = oracle.OracleOptions(back_invalidate=True)
        rows = [oracle.MatrixRow(p, s, oracle.simulate_hierarchy(trace, HierarchyConfig(p, s, P), opts))
                for p in enumerate_space(rc.private_space)
                for s in enumerate_space(rc.shared_space)]
    else:
        rows = oracle.feasibility_matrix(trace, rc.private_space, rc.shared_space, args.jobs)
    table = []
    for r in rows:
        t = amt(r.counts, rc.params)
        table.append([r.private.sets, r.private.assoc, r.shared.sets, r.shared.assoc,
                      r.counts.tap, r.counts.tas, r.counts.tam, t, int(t <= deadline.wcdmot)])
    _write_csv(out, ["p_sets", "p_assoc", "s_sets", "s_assoc", "tap", "tas", "tam",
                     "amt_ns", "feasible"], table)
    return 0


def cmd_simulate_private(args, out):
    rc = build_run_config(args)
    trace = load_trace(rc)
    result = simulate_private(trace, rc.private_space, tas_limit=args.tas_limit)
    _write_csv(out, ["sets", "assoc", "proc", "misses", "excluded"], result.csv_rows())
    return 0


def cmd_simulate_shared(args, out):
    rc = build_run_config(args)
    trace = load_trace(rc)
    private = CacheConfig.parse(args.private, rc.private_space.block_bytes)
    secondary = emit_secondary_trace(trace, private)
    result = simulate_shared(secondary, rc.shared_space, args.tam_limit)
    _write_csv(out, ["sets", "assoc", "misses", "excluded"], result.csv_rows())
    return 0


def cmd_gen_trace(args, out):
    spec = SyntheticTraceSpec(args.processors, args.records, args.address_space,
                              args.shared_fraction, args.write_fraction, args.hot_fraction,
                              args.seed)
    trace = generate_synthetic(spec)
    if args.output in (None, "-"):
        write_trace(trace, out)
    else:
        with open(args.output, "w", encoding="utf-8", newline="\n") as f:
            write_trace(trace, f)
    return 0


def cmd_parse(args, out):
    rc = build_run_config(args)
    trace = load_trace(rc)
    json.dump({"records": len(trace), "processors": trace.processor_count,
               "tap": count_tap(trace), "writes": int(trace.writes.sum()),
               "digest": trace.digest()}, out, indent=2, sort_keys=True)
    out.write("\n")
    return 0


def _space_flags(p):
    p.add_argument("--config", help=f"config file (default: ${CONFIG_ENV})")
    p.add_argument("--sets", help="set counts for both levels, e.g. 1..16384 or 1,2,4")
    p.add_argument("--assocs", help="associativities for both levels, e.g. 1,2,4,8,16")
    p.add_argument("--block", help="block size in bytes (power of two)")
    for level in ("private", "shared"):
        p.add_argument(f"--{level}-sets", dest=f"{level}_sets")
        p.add_argument(f"--{level}-assocs", dest=f"{level}_assocs")
    p.add_argument("--tp", type=int, help="private access latency, ns (default 1)")
    p.add_argument("--ts", type=int, help="shared access latency, ns (default 4)")
    p.add_argument("--tm", type=int, help="memory access latency, ns (default 15)")
    p.add_argument("--processors", type=int, help="override the trace's processor count")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cachesel",
        description="Pick the smallest two-level inclusive data cache hierarchy meeting a deadline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="run the full selection flow")
    p.add_argument("--trace", required=True)
    p.add_argument("--wcdmot", help="deadline, e.g. 1.0s, 400ms, 120000ns")
    p.add_argument("--format", choices=("table", "csv", "json"))
    p.add_argument("--cache", help="write intermediate results here for later reselect")
    p.add_argument("--verbose", "-v", action="store_true")
    _space_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("reselect", help="re-decide for a tighter deadline from a cache file")
    p.add_argument("--trace", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--wcdmot", required=True)
    p.add_argument("--format", choices=("table", "csv", "json"))
    p.add_argument("--verbose", "-v", action="store_true")
    p.add_argument("--config")
    p.set_defaults(func=cmd_reselect)

    p = sub.add_parser("oracle", help="brute-force feasibility matrix as CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--wcdmot", required=True, help="deadline used for the feasible column")
    p.add_argument("--back-invalidate", action="store_true",
                   help="evict private copies when the shared cache evicts")
    p.add_argument("--jobs", type=int, default=1)
    _space_flags(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate-private", help="private-level miss counts as CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--tas-limit", type=int, help="exclude levels above this many misses")
    _space_flags(p)
    p.set_defaults(func=cmd_simulate_private)

    p = sub.add_parser("simulate-shared", help="shared-level miss counts as CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--private", required=True, help="private config feeding the shared cache, e.g. 8x2")
    p.add_argument("--tam-limit", type=int)
    _space_flags(p)
    p.set_defaults(func=cmd_simulate_shared)

    p = sub.add_parser("gen-trace", help="write a synthetic trace")
    p.add_argument("--processors", type=int, required=True)
    p.add_argument("--records", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--address-space", type=int, default=1 << 16, help="bytes")
    p.add_argument("--shared-fraction", type=float, default=0.2)
    p.add_argument("--write-fraction", type=float, default=0.3)
    p.add_argument("--hot-fraction", type=float, default=0.8)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("parse", help="validate a trace and print a summary")
    p.add_argument("--trace", required=True)
    p.add_argument("--processors", type=int)
    p.set_defaults(func=cmd_parse)
    return parser


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except SelectionError as e:
        err.write(f"error: {e.code}: {e}\n")
        return 2
    except CacheSelError as e:
        err.write(f"error: {e.code}: {e}\n")
        return 1
    except FileNotFoundError as e:
        err.write(f"error: FILE_NOT_FOUND: {e}\n")
        return 1
    except OSError as e:
        err.write(f"error: IO_ERROR: {e}\n")
        return 1
    except ValueError as e:
        err.write(f"error: INVALID_INPUT: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
