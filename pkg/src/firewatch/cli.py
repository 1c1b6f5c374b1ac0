"""Command-line entry point.

    firewatch run <scenario.json> [--seed N] [--out DIR]
    firewatch range-test [--trials N] [--env urban|forest] [--seed N] [--out CSV]
    firewatch calibrate [--out CSV]
    firewatch serve [--scenario FILE] [--port P] [--speed X] [--headless]

Every report is printed to the console and written as CSV with a stable
header row.  FIREWATCH_LOG sets the log level (DEBUG/INFO/WARNING/...).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import firmware, sensors
from .engine import RealTimeRunner, Simulation
from .firmware import RiskThresholds, classify, combined_level
from .medium import Medium, environment
from .scenario import ScenarioError, load_scenario, parse_scenario
from .sensors import Dht22, FireEvent, FlameSensor, Mq135, field_at

log = logging.getLogger("firewatch")

TABLE8_DISTANCES_M = (100.0, 200.0, 350.0, 700.0)


def _setup_logging() -> None:
    level = os.environ.get("FIREWATCH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def default_scenario_path() -> Path:
    return Path(str(resources.files("firewatch.data").joinpath("scenario_ufam.json")))


# -- run ---------------------------------------------------------------------


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as e:
        print(f"scenario error: {e}", file=sys.stderr)
        return 2
    if args.seed is not None:
        scenario.seed = args.seed
    out_dir = Path(args.out)
    sim = Simulation(scenario, out_dir=out_dir)
    sim.run()
    stored = sim.server.counters["stored"]
    print(f"run complete: {sim.now:.1f} sim-seconds, {stored} records stored")
    print(f"artifacts in {out_dir}/ (store.jsonl, events.jsonl, summary.csv)")
    return 0


# -- range-test ----------------------------------------------------------------


def range_test_rows(distances, trials: int, env_kind: str, seed: int) -> list[dict]:
    env = environment(env_kind)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    med = Medium(env, rng)
    rows = []
    for i, d in enumerate(distances, start=1):
        delivered, rssi, lat = med.batch_trials(d, trials)
        n = int(delivered.sum())
        row = {
            "test": i,
            "distance_m": d,
            "delivery_pct": 100.0 * n / trials,
            "median_rssi_dbm": float(np.median(rssi[delivered])) if n else None,
            "median_uplink_ms": float(np.median(lat[delivered])) * 1000.0 if n else None,
        }
        rows.append(row)
    return rows


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("" if v is None else str(v) for v in row) + "\n")


def cmd_range_test(args) -> int:
    rows = range_test_rows(TABLE8_DISTANCES_M, args.trials, args.env, args.seed)
    header = ["test", "distance_m", "delivery_pct", "median_rssi_dbm", "median_uplink_ms"]
    print(f"range test: {args.trials} uplinks per distance, {args.env} environment")
    print(f"{'test':>4} {'distance (m)':>12} {'received (%)':>12} {'RSSI (dBm)':>11} {'uplink (ms)':>11}")
    for r in rows:
        rssi = f"{r['median_rssi_dbm']:.1f}" if r["median_rssi_dbm"] is not None else "-"
        lat = f"{r['median_uplink_ms']:.1f}" if r["median_uplink_ms"] is not None else "-"
        print(f"{r['test']:>4} {r['distance_m']:>12.0f} {r['delivery_pct']:>12.2f} {rssi:>11} {lat:>11}")
    _write_csv(Path(args.out), header, [[r[h] for h in header] for r in rows])
    print(f"csv written to {args.out}")
    return 0


# -- calibrate -------------------------------------------------------------------


def calibration_rows(step_m: float = 0.25, max_m: float = 15.0) -> list[dict]:
    """Sweep node-to-fire distance at full intensity with noise-free
    sensors and report fields, raw readings and risk levels."""
    th = RiskThresholds()
    fire = [FireEvent(x=0.0, y=0.0, start=0.0, intensity=1.0)]
    rng = np.random.default_rng(0)
    rows = []
    d = 0.0
    while d <= max_m + 1e-9:
        f = field_at(fire, (d, 0.0), t=1.0)
        mq = Mq135(rng, noise_free=True)
        flame = FlameSensor(rng, noise_free=True)
        dht = Dht22(rng, noise_free=True)
        gas_raw = mq.sample(f.gas_ppm)
        fire_raw, fire_digital = flame.sample(f.flame)
        temp_read = dht.sample(f.temp_c, t=1.0)
        levels = {
            "gas": classify(f.gas_ppm, th.gas),
            "flame": classify(f.flame, th.flame),
            "temp": classify(temp_read, th.temp),
        }
        rows.append(
            {
                "distance_m": round(d, 3),
                "gas_ppm": round(f.gas_ppm, 1),
                "flame_proxy": round(f.flame, 1),
                "temp_c": round(temp_read, 1),
                "gas_raw": gas_raw,
                "fire_raw": fire_raw,
                "fire_digital": fire_digital,
                "gas_level": levels["gas"].name,
                "flame_level": levels["flame"].name,
                "temp_level": levels["temp"].name,
                "combined": combined_level(levels.values()).name,
            }
        )
        d += step_m
    return rows


def gas_alert_reach_m(rows: list[dict]) -> float:
    reach = 0.0
    for r in rows:
        if r["gas_level"] in ("Alert", "Risk"):
            reach = max(reach, r["distance_m"])
    return reach


def cmd_calibrate(args) -> int:
    rows = calibration_rows()
    header = list(rows[0].keys())
    print(f"{'d (m)':>6} {'gas ppm':>8} {'flame':>7} {'temp C':>7}  gas/flame/temp -> combined")
    for r in rows:
        if (r["distance_m"] * 4) % 4 == 0:  # print whole meters, CSV has all
            print(
                f"{r['distance_m']:>6.1f} {r['gas_ppm']:>8.1f} {r['flame_proxy']:>7.1f} "
                f"{r['temp_c']:>7.1f}  {r['gas_level']}/{r['flame_level']}/{r['temp_level']}"
                f" -> {r['combined']}"
            )
    _write_csv(Path(args.out), header, [[r[h] for h in header] for r in rows])
    print(f"csv written to {args.out}")
    reach = gas_alert_reach_m(rows)
    ok = reach >= 7.0
    print(f"gas detection reach at Alert level: {reach:.2f} m ({'OK' if ok else 'FAIL'}: requires >= 7 m)")
    return 0 if ok else 1


# -- serve -------------------------------------------------------------------------


def find_assets(explicit: str | None) -> Path | None:
    candidates = []
    if explicit:
        candidates.append(Path(explicit))
    env = os.environ.get("FIREWATCH_DASHBOARD_ASSETS")
    if env:
        candidates.append(Path(env))
    candidates.append(Path.cwd() / "frontend" / "dist")
    candidates.append(Path(__file__).resolve().parents[2].parent / "frontend" / "dist")
    for c in candidates:
        if c.is_dir():
            return c
    return None


def cmd_serve(args) -> int:
    import uvicorn

    from .webapi import create_app

    path = Path(args.scenario) if args.scenario else default_scenario_path()
    try:
        scenario = load_scenario(path)
    except ScenarioError as e:
        print(f"scenario error: {e}", file=sys.stderr)
        return 2
    out_dir = Path(args.out) if args.out else None
    sim = Simulation(scenario, out_dir=out_dir)
    assets = None if args.headless else find_assets(args.assets)
    if not args.headless and assets is None:
        log.warning("dashboard assets not found; API only (build frontend/ first)")
    app = create_app(sim.server, assets_dir=assets)
    runner = RealTimeRunner(sim, speed=args.speed)
    runner.start()
    print(f"servidor ligado na porta: {args.port}", flush=True)
    if assets:
        print(f"dashboard: http://localhost:{args.port}/dashboard/", flush=True)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit:
        pass
    finally:
        runner.stop()
        sim.flush()
    return 0


# ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="firewatch", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a scenario to completion")
    pr.add_argument("scenario", help="scenario JSON file")
    pr.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    pr.add_argument("--out", default="out", help="artifact directory (default: out)")
    pr.set_defaults(fn=cmd_run)

    pt = sub.add_parser("range-test", help="reproduce the range measurement table")
    pt.add_argument("--trials", type=int, default=1000)
    pt.add_argument("--env", choices=["urban", "forest"], default="urban")
    pt.add_argument("--seed", type=int, default=1)
    pt.add_argument("--out", default="range_test.csv")
    pt.set_defaults(fn=cmd_range_test)

    pc = sub.add_parser("calibrate", help="sweep fire distance and report risk bands")
    pc.add_argument("--out", default="calibration.csv")
    pc.set_defaults(fn=cmd_calibrate)

    ps = sub.add_parser("serve", help="serve the API + dashboard with a live simulation")
    ps.add_argument("--scenario", default=None, help="scenario JSON (default: bundled)")
    ps.add_argument("--port", type=int, default=3000)
    ps.add_argument("--host", default="127.0.0.1")
    ps.add_argument("--speed", type=float, default=1.0, help="sim seconds per wall second")
    ps.add_argument("--headless", action="store_true", help="API only, no dashboard assets")
    ps.add_argument("--assets", default=None, help="dashboard asset directory")
    ps.add_argument("--out", default=None, help="artifact directory")
    ps.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
