"""Command-line interface.

Exit status: 0 success, 1 input error (diagnostic on stderr), 2 the
computation ran but the result is infeasible or non-compliant.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .core import DomainError, wavelength
from .linkbudget import budget, max_range
from .mimo import ArrayGeometry, element_budget, los_channel, rayleigh_spacing
from .propagation import AttenuationSeries, residual_analysis
from .regulatory import cept_channel_plan, check_scenario, fcc_channel_plan
from .relay import chain_throughput
from .scenario import Scenario, SweepSpec
from .sweep import HEADERS, evm_points, run_sweep, write_csv

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2


class InputError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit(args, payload: dict | None = None, header=None, rows=None) -> None:
    with _output(args.out) as fh:
        if args.format == "csv" and header is not None:
            write_csv(fh, header, rows)
        else:
            fh.write(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _scenario(args) -> Scenario:
    if not args.scenario:
        raise InputError("--scenario is required for this command")
    return Scenario.load(args.scenario)


def cmd_budget(args) -> int:
    scn = _scenario(args)
    link = scn.link()
    rep = budget(link, scn.rain_model())
    d = rep.to_dict()
    d["feasible"] = rep.feasible
    _emit(args, d, tuple(d), [tuple(float(v) if isinstance(v, (int, float)) and not isinstance(v, bool)
                                    else v for v in d.values())])
    return EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_range(args) -> int:
    scn = _scenario(args)
    rng = max_range(scn.link(), scn.rain_model())
    payload = {"max_range_m": rng, "feasible": rng is not None}
    _emit(args, payload, ("max_range_m",), [(math.nan if rng is None else float(rng),)])
    return EXIT_OK if rng is not None else EXIT_INFEASIBLE


def cmd_sweep(args) -> int:
    scn = _scenario(args)
    header, rows = run_sweep(scn, threads=args.threads, seed=args.seed)
    _emit(args, {"columns": list(header), "rows": [list(r) for r in rows]}, header, rows)
    return EXIT_OK


def cmd_pn_evm(args) -> int:
    scn = _scenario(args)
    floors = args.floor if args.floor else [None]
    rows = evm_points(scn, floors, args.threads, scn.stream(args.seed))
    header = HEADERS["floor_dbc_hz"]
    payload = {"points": [dict(zip(header, r)) for r in rows]}
    _emit(args, payload, header, rows)
    return EXIT_OK


def cmd_mimo_capacity(args) -> int:
    scn = _scenario(args)
    spec = scn.sweep()
    if spec is None or spec.variable != "rho_db":
        spec = SweepSpec("rho_db", -40.0, 60.0, 101)
    header, rows = run_sweep(scn, spec, threads=args.threads, seed=args.seed)
    st = scn.mimo_settings()
    lam = wavelength(st["freq_hz"])
    n = st["n_antennas"]
    spacing = rayleigh_spacing(st["distance_m"], lam, n)
    geom = ArrayGeometry.linear(n, spacing)
    ch = los_channel(geom, geom, lam, st["distance_m"])
    payload = {"rayleigh_spacing_m": spacing, "condition_number": ch.condition_number(),
               "element_budget_6in": element_budget(0.1524, lam),
               "columns": list(header), "rows": [list(r) for r in rows]}
    _emit(args, payload, header, rows)
    return EXIT_OK


def cmd_relay(args) -> int:
    scn = _scenario(args)
    spec = scn.sweep()
    if args.format == "csv" and spec is not None and spec.variable == "si_db":
        header, rows = run_sweep(scn, spec, threads=args.threads)
        _emit(args, None, header, rows)
        return EXIT_OK
    res = chain_throughput(scn.relay_chain())
    d = res.to_dict()
    _emit(args, d, ("throughput_gbps", "bottleneck_hop"), [(d["throughput_gbps"], d["bottleneck_hop"])])
    return EXIT_OK if res.throughput_bps > 0 else EXIT_INFEASIBLE


def cmd_compliance(args) -> int:
    scn = _scenario(args)
    domain = args.domain or scn.raw.get("regulatory", {}).get("domain", "FCC")
    rep = check_scenario(scn.link(), domain)
    rows = [(r.name, r.limit, "" if r.value is None else r.value,
             "" if r.passed is None else str(r.passed).lower()) for r in rep.rules]
    _emit(args, rep.to_dict(), ("rule", "limit", "value", "pass"), rows)
    return EXIT_OK if rep.passed else EXIT_INFEASIBLE


def cmd_channel_plan(args) -> int:
    domain = (args.domain or "CEPT").upper()
    make = {"CEPT": cept_channel_plan, "FCC": fcc_channel_plan}.get(domain)
    if make is None:
        raise InputError(f"--domain must be FCC or CEPT, got {args.domain!r}")
    plan = make(args.band)
    rows = [(c.index, c.low_hz, c.high_hz, c.center_hz) for c in plan.channels]
    _emit(args, plan.to_dict(), ("index", "low_hz", "high_hz", "center_hz"), rows)
    return EXIT_OK


def cmd_ingest(args) -> int:
    scn = _scenario(args)
    if not args.csv:
        raise InputError("--csv is required for ingest")
    try:
        with open(args.csv, newline="") as fh:
            series = AttenuationSeries.read_csv(fh)
    except OSError as exc:
        raise InputError(f"cannot read {args.csv}: {exc}") from None
    link = scn.link()
    stats = residual_analysis(series, scn.rain_attenuation_fn(), link.freq_hz, link.distance_km)
    summary = stats.summary()
    if args.samples:
        with open(args.samples, "w", newline="") as fh:
            write_csv(fh, ("timestamp_iso8601", "rain_mm_per_h", "measured_atten_db",
                           "model_atten_db", "residual_db"),
                      [(t.isoformat(), float(r), float(m), float(a), float(e))
                       for t, r, m, a, e in zip(series.timestamps, series.rain_rate,
                                                series.measured_attenuation,
                                                stats.model_attenuation, stats.residuals)])
    if args.format == "csv":
        rows = [(t.isoformat(), float(e)) for t, e in zip(series.timestamps, stats.residuals)]
        _emit(args, None, ("timestamp_iso8601", "residual_db"), rows)
    else:
        _emit(args, summary)
    return EXIT_OK


COMMANDS = {
    "budget": (cmd_budget, "link budget, fade margin, availability and data rate"),
    "range": (cmd_range, "maximum range meeting the availability target"),
    "sweep": (cmd_sweep, "run the scenario's sweep section"),
    "pn-evm": (cmd_pn_evm, "phase-noise EVM Monte Carlo"),
    "mimo-capacity": (cmd_mimo_capacity, "DISH / CONV-MIMO / CAP-MIMO capacity versus SNR"),
    "relay": (cmd_relay, "multi-hop relay throughput"),
    "compliance": (cmd_compliance, "regulatory compliance of the scenario's transmitter"),
    "channel-plan": (cmd_channel_plan, "list the channel plan for a band"),
    "ingest": (cmd_ingest, "residuals of measured attenuation against the rain model"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eband", description="E-band link engineering toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--scenario", help="scenario JSON file")
        sp.add_argument("--seed", type=int, help="override the scenario master_seed")
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="json")
        sp.add_argument("--threads", type=int, default=1)
        if name in ("compliance", "channel-plan"):
            sp.add_argument("--domain", help="FCC or CEPT")
        if name == "channel-plan":
            sp.add_argument("--band", choices=("low", "high"), default="low")
        if name == "pn-evm":
            sp.add_argument("--floor", type=float, action="append",
                            help="phase-noise floor in dBc/Hz (repeatable)")
        if name == "ingest":
            sp.add_argument("--csv", help="measurement CSV")
            sp.add_argument("--samples", help="write per-sample residual CSV here")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must lie in [0, 2**64)", file=sys.stderr)
        return EXIT_INPUT
    fn = COMMANDS[args.command][0]
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = fn(args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return code
    except (DomainError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
