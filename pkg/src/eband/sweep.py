"""Parameter sweeps with deterministic, thread-count independent output."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Callable, Sequence

from .core import SeededStream
from .linkbudget import budget
from .mimo import spectral_efficiency
from .phasenoise import SynthesisConfig, evm_monte_carlo
from .relay import chain_throughput
from .scenario import Scenario, ScenarioError, SweepSpec

HEADERS = {
    "rho_db": ("rho_db", "dish_bps_hz", "conv_mimo_bps_hz", "cap_mimo_bps_hz"),
    "floor_dbc_hz": ("floor_dbc_hz", "symbol_rate_hz", "evm_pct", "ci_pct"),
    "si_db": ("si_db", "throughput_gbps"),
    "distance_m": ("distance_m", "fspl_db", "rain_db_at_target", "fade_margin_db",
                   "availability_pct", "data_rate_bps"),
}


def _parallel_map(fn: Callable, items: Sequence, threads: int) -> list:
    # Executor.map yields in submission order, so output never depends on scheduling.
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _rho_rows(scn: Scenario, values, threads: int, seed: SeededStream) -> list[tuple]:
    presets = scn.mimo_presets()

    def point(rho):
        return (rho,) + tuple(spectral_efficiency(presets[k], rho)
                              for k in ("dish", "conv_mimo", "cap_mimo"))

    return _parallel_map(point, values, threads)


def evm_points(scn: Scenario, floors, threads: int, seed: SeededStream,
               trials: int | None = None) -> list[tuple]:
    """EVM for every (floor, symbol rate) pair.

    Each symbol rate gets its own substream, and that substream is reused
    across floors so neighbouring floor points share random draws; this
    keeps the curves smooth without biasing any single point.
    """
    base = scn.pn_profile()
    st = scn.pn_settings()
    n_trials = trials or st["trials"]
    tasks = [(f, i, rate) for f in floors for i, rate in enumerate(st["symbol_rates"])]

    def point(task):
        floor, i, rate = task
        prof = base if floor is None else base.with_floor(float(floor))
        cfg = SynthesisConfig(rate, st["n_symbols"], seed.child(i), st["tracker"])
        res = evm_monte_carlo(prof, cfg, st["snr_db"], st["modulation"], n_trials)
        if floor is None:
            floor = 10.0 * math.log10(base.floor) if base.floor > 0 else -math.inf
        return (floor, rate, res.rms_evm_pct, res.ci_halfwidth_pct)

    return _parallel_map(point, tasks, threads)


def _si_rows(scn: Scenario, values, threads: int, seed: SeededStream) -> list[tuple]:
    chain = scn.relay_chain()
    if chain.duplex.value != "full":
        raise ScenarioError("relay.duplex: self-interference sweep needs a full-duplex chain")

    def point(si):
        return (si, chain_throughput(replace(chain, self_interference_db=si)).throughput_bps / 1e9)

    return _parallel_map(point, values, threads)


def _distance_rows(scn: Scenario, values, threads: int, seed: SeededStream) -> list[tuple]:
    link = scn.link()
    rain = scn.rain_model()

    def point(d):
        rep = budget(link.with_distance(d), rain)
        avail = rep.availability_achieved if rep.availability_achieved is not None else math.nan
        return (d, rep.fspl_db, rep.rain_db_at_target, rep.fade_margin_db, avail, rep.data_rate_bps)

    return _parallel_map(point, values, threads)


_RUNNERS = {"rho_db": _rho_rows, "si_db": _si_rows, "distance_m": _distance_rows}


def run_sweep(scn: Scenario, spec: SweepSpec | None = None, threads: int = 1,
              seed: int | None = None) -> tuple[tuple, list[tuple]]:
    """Return (header, rows) for the scenario's sweep section or ``spec``."""
    spec = spec or scn.sweep()
    if spec is None:
        raise ScenarioError("sweep: scenario has no sweep section")
    values = [float(v) for v in spec.values()]
    stream = scn.stream(seed)
    if spec.variable == "floor_dbc_hz":
        rows = evm_points(scn, values, threads, stream, spec.trials)
    else:
        rows = _RUNNERS[spec.variable](scn, values, threads, stream)
    return HEADERS[spec.variable], rows


def write_csv(fh, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    """CSV with floats written via repr, so values round-trip exactly."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def read_csv(fh) -> tuple[list[str], list[list[float]]]:
    r = csv.reader(fh)
    header = next(r)
    return header, [[float(v) for v in row] for row in r if row]
