"""Thin-client command line for the analysis service.

Every command talks HTTP to the service: by default an in-process ASGI
instance, or a remote one via ``--server``.  Commands write their
artifacts into ``--out`` atomically and print a short summary.

Exit codes: 0 ok, 2 config error, 3 data error, 4 runtime failure
(fall, no ultimate gain).
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from importlib import resources
from pathlib import Path

import click
import httpx

from .config import load_config
from .errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

_EXIT_BY_CATEGORY = {"config": EXIT_CONFIG, "data": EXIT_DATA,
                     "runtime": EXIT_RUNTIME}


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _client(server: str | None) -> httpx.Client:
    """HTTP client for the service: remote when --server is given, an
    in-process ASGI bridge otherwise."""
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=300.0)
    import warnings

    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*httpx2.*")
        from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app())


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    try:
        resp = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        _fail(EXIT_RUNTIME, f"service unreachable: {exc}")
    if resp.status_code >= 400:
        try:
            body = resp.json()
            name = body.get("error", "unknown")
            detail = body.get("detail", "")
            category = body.get("category", "runtime")
        except json.JSONDecodeError:
            name, detail, category = "HTTPError", resp.text[:200], "runtime"
        _fail(_EXIT_BY_CATEGORY.get(category, 1), f"{name}: {detail}")
    return resp.json()


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path: Path, obj):
    _write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _zones_payload(cfg: dict) -> dict:
    mapping = {
        "zones.foot_length_cm": "foot_length_cm",
        "zones.center_frac": "center_frac",
        "zones.d1_hp": "d1_hp", "zones.d2_hp": "d2_hp",
        "zones.d1_lp": "d1_lp", "zones.d2_lp": "d2_lp",
        "zones.d1_ud": "d1_ud", "zones.d2_ud": "d2_ud",
    }
    return {field: cfg[key] for key, field in mapping.items() if key in cfg}


@click.group()
@click.version_option()
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL (default: run the service in-process).")
@click.option("--config", "config_path", default=None, metavar="FILE",
              help="Key-value config file; flags override file values.")
@click.option("--out", "out_dir", default="out", metavar="DIR",
              show_default=True, help="Output directory for artifacts.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="csv", show_default=True,
              help="Extra trace format emitted by simulate.")
@click.option("--seed", type=int, default=None, help="Simulation seed.")
@click.option("--filter-cutoff", default=None, metavar="HZ",
              help="Low-pass cutoff in Hz, or 'none' to disable.")
@click.option("--threshold", type=float, default=None,
              help="Fuzzy activation threshold.")
@click.pass_context
def main(ctx, server, config_path, out_dir, fmt, seed, filter_cutoff,
         threshold):
    """COP sway analysis and intermittent balance-control simulation."""
    try:
        cfg = load_config(config_path)
        if seed is not None:
            cfg["sim.seed"] = seed
        if filter_cutoff is not None:
            cfg["filter.cutoff_hz"] = (None if filter_cutoff.lower() in
                                       ("none", "off")
                                       else float(filter_cutoff))
        if threshold is not None:
            cfg["fuzzy.threshold"] = threshold
    except (ConfigError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    ctx.obj = {"server": server, "cfg": cfg, "out": Path(out_dir),
               "format": fmt}


@main.command()
@click.argument("trials", metavar="TRIAL_FILE...", nargs=-1, required=True)
@click.option("--source", type=click.Choice(["auto", "recorded", "wrench"]),
              default=None, help="COP channel selection.")
@click.option("--metric", type=click.Choice(["curve", "points"]),
              default=None, help="Deviation metric for the d series.")
@click.option("--meta", "meta_path", default=None, metavar="FILE",
              help="Optional metadata sidecar to merge into the trial.")
@click.pass_obj
def analyze(obj, trials, source, metric, meta_path):
    """Identify the sway mapping of one or more trials and report zone
    occupancy.

    Writes trajectory.csv, poincare.json, conic.json, distances.csv,
    occupancy.json, occupancy.csv, and analysis.json; with several trials
    each gets a subdirectory named after its file stem.
    """
    cfg = obj["cfg"]
    paths = [Path(t) for t in trials]
    for path in paths:
        if not path.is_file():
            _fail(EXIT_CONFIG, f"trial file not found: {path}")
    sidecar_text = None
    if meta_path is not None:
        sidecar = Path(meta_path)
        if not sidecar.is_file():
            _fail(EXIT_CONFIG, f"sidecar file not found: {sidecar}")
        sidecar_text = sidecar.read_text()

    base: dict = {"include_series": True}
    if sidecar_text is not None:
        base["sidecar_text"] = sidecar_text
    if source or "analyze.source" in cfg:
        base["cop_source"] = source or cfg["analyze.source"]
    if "filter.cutoff_hz" in cfg:
        base["filter_cutoff_hz"] = cfg["filter.cutoff_hz"]
    if "filter.order" in cfg:
        base["filter_order"] = cfg["filter.order"]
    if "ingest.min_load_n" in cfg:
        base["min_load_n"] = cfg["ingest.min_load_n"]
    if metric or "distance.metric" in cfg:
        base["distance_metric"] = metric or cfg["distance.metric"]
    z = _zones_payload(cfg)
    if z:
        base["zones"] = z

    with _client(obj["server"]) as client:
        for path in paths:
            data = _post(client, "/analyze",
                         {**base, "record_text": path.read_text()})
            out = obj["out"] if len(paths) == 1 else obj["out"] / path.stem
            _write_atomic(out / "trajectory.csv", data["trajectory_csv"])
            _write_atomic(out / "distances.csv", data["distances_csv"])
            _write_atomic(out / "occupancy.csv", data["occupancy_csv"])
            _write_json(out / "poincare.json", data["poincare"])
            _write_json(out / "conic.json", data["conic"])
            _write_json(out / "occupancy.json", data["occupancy"])
            _write_json(out / "analysis.json", {
                k: data[k] for k in ("trial_id", "sample_rate_hz", "samples",
                                     "duration_s", "occupancy", "d_mean_cm",
                                     "d_max_cm")
            })
            click.echo(data["summary"])


def _trace_csv_to_json(trace_csv: str) -> dict:
    reader = csv.DictReader(io.StringIO(trace_csv))
    cols: dict[str, list] = {name: [] for name in reader.fieldnames}
    for row in reader:
        for name in reader.fieldnames:
            value = row[name]
            if name == "zone":
                cols[name].append(value)
            elif name == "active":
                cols[name].append(bool(int(value)))
            else:
                cols[name].append(float(value))
    return cols


@main.command()
@click.option("--duration", type=float, default=None, help="Run length in s.")
@click.option("--uncontrolled", is_flag=True,
              help="Disable the controller (for fall baselines).")
@click.option("--kp", type=float, default=None, help="Proportional gain.")
@click.option("--ki", type=float, default=None, help="Integral gain.")
@click.option("--kd", type=float, default=None, help="Derivative gain.")
@click.pass_obj
def simulate(obj, duration, uncontrolled, kp, ki, kd):
    """Run the closed-loop standing simulation.

    Writes trace.csv (plus trace.json with --format json) and
    simulation.json; a run that ends in a fall exits with code 4.
    """
    cfg = obj["cfg"]
    payload: dict = {"include_trace": True}
    if duration is not None:
        payload["duration_s"] = duration
    elif "sim.duration_s" in cfg:
        payload["duration_s"] = cfg["sim.duration_s"]
    if "sim.seed" in cfg:
        payload["seed"] = cfg["sim.seed"]
    if "sim.pulses" in cfg:
        payload["pulses"] = [
            {"t_start_s": t, "duration_s": dur, "torque_nm": tq}
            for t, dur, tq in cfg["sim.pulses"]
        ]
    if uncontrolled:
        payload["control_enabled"] = False
    elif "sim.control_enabled" in cfg:
        payload["control_enabled"] = cfg["sim.control_enabled"]
    if "sim.interior_is_safe" in cfg:
        payload["interior_is_safe"] = cfg["sim.interior_is_safe"]
    fuzzy = {}
    if "fuzzy.threshold" in cfg:
        fuzzy["threshold"] = cfg["fuzzy.threshold"]
    for name in ("small", "big", "inactive", "active"):
        if f"fuzzy.{name}" in cfg:
            fuzzy[name] = cfg[f"fuzzy.{name}"]
    if fuzzy:
        payload["fuzzy"] = fuzzy
    gains = {}
    for axis, flag in (("kp", kp), ("ki", ki), ("kd", kd)):
        if flag is not None:
            gains[axis] = flag
        elif f"pid.{axis}" in cfg:
            gains[axis] = cfg[f"pid.{axis}"]
    if gains:
        payload["gains"] = gains
    if "pid.u_max" in cfg:
        payload["u_max"] = cfg["pid.u_max"]
    if "pid.windup_limit" in cfg:
        payload["windup_limit"] = cfg["pid.windup_limit"]
    plant_map = {
        "plant.mass_kg": "mass_kg", "plant.com_height_m": "com_height_m",
        "plant.inertia": "inertia", "plant.damping": "damping",
        "plant.torque_per_intensity": "torque_per_intensity",
        "plant.gravity": "gravity", "plant.dt_s": "dt_s",
        "plant.cop_y_amplitude_cm": "cop_y_amplitude_cm",
        "plant.cop_y_freq_hz": "cop_y_freq_hz",
        "plant.noise_std_cm": "noise_std_cm",
    }
    plant_payload = {field: cfg[key] for key, field in plant_map.items()
                     if key in cfg}
    if plant_payload:
        payload["plant"] = plant_payload
    map_payload = {}
    if "sim.map_semi_x_cm" in cfg:
        map_payload["semi_x_cm"] = cfg["sim.map_semi_x_cm"]
    if "sim.map_semi_y_cm" in cfg:
        map_payload["semi_y_cm"] = cfg["sim.map_semi_y_cm"]
    if map_payload:
        payload["map"] = map_payload
    z = _zones_payload(cfg)
    if z:
        payload["zones"] = z

    with _client(obj["server"]) as client:
        data = _post(client, "/simulate", payload)

    out = obj["out"]
    _write_atomic(out / "trace.csv", data["trace_csv"])
    if obj["format"] == "json":
        _write_json(out / "trace.json", _trace_csv_to_json(data["trace_csv"]))
    summary = {k: v for k, v in data.items() if k != "trace_csv"}
    _write_json(out / "simulation.json", summary)

    click.echo(f"simulated {summary['duration_s']:.2f} s "
               f"({summary['samples']} samples)")
    click.echo(f"activation episodes: {summary['episode_count']}"
               + (f", first at {summary['first_activation_s']:.2f} s"
                  if summary["first_activation_s"] is not None else ""))
    click.echo(f"active fraction: {summary['active_fraction']:.3f}, "
               f"peak command: {summary['u_peak']:.3f}")
    if summary["recovery_times_s"]:
        click.echo(f"recovery times (s): {summary['recovery_times_s']}")
    if summary["fell"]:
        click.echo(f"FELL at t={summary['fall_time_s']:.2f} s")
        sys.exit(EXIT_RUNTIME)


@main.command()
@click.option("--plant", "plant_name",
              type=click.Choice(["third-order", "first-order"]), default=None,
              help="Benchmark loop to tune against.")
@click.option("--preset", type=click.Choice(["paper"]), default=None,
              help="Write a shipped gain preset instead of tuning.")
@click.pass_obj
def tune(obj, plant_name, preset):
    """Autotune PID gains by the ultimate-cycle method; writes gains.json."""
    cfg = obj["cfg"]
    payload: dict = {}
    if plant_name or "tune.plant" in cfg:
        payload["plant"] = plant_name or cfg["tune.plant"]
    if preset or "tune.preset" in cfg:
        payload["preset"] = preset or cfg["tune.preset"]
    for key, field in (("tune.kp_min", "kp_min"), ("tune.kp_max", "kp_max"),
                       ("tune.horizon_s", "horizon_s"), ("tune.dt_s", "dt_s")):
        if key in cfg:
            payload[field] = cfg[key]

    with _client(obj["server"]) as client:
        data = _post(client, "/tune", payload)

    _write_json(obj["out"] / "gains.json", data)
    click.echo(f"kp={data['kp']:.6g} ki={data['ki']:.6g} kd={data['kd']:.6g} "
               f"({data['source']})")
    if data["ultimate_gain"] is not None:
        click.echo(f"ultimate gain {data['ultimate_gain']:.6g}, "
                   f"period {data['ultimate_period_s']:.6g} s")


@main.command()
@click.pass_obj
def report(obj):
    """Consolidate artifacts in the output directory into report.txt."""
    out = obj["out"]
    payload = {}
    for name, key in (("analysis.json", "analysis"),
                      ("simulation.json", "simulation"),
                      ("gains.json", "tuning")):
        path = out / name
        if path.is_file():
            payload[key] = json.loads(path.read_text())
    if not payload:
        _fail(EXIT_CONFIG, f"no artifacts found in {out}")

    with _client(obj["server"]) as client:
        data = _post(client, "/report", payload)

    _write_atomic(out / "report.txt", data["text"])
    click.echo(data["text"], nl=False)


@main.command()
@click.pass_obj
def fixtures(obj):
    """Copy the bundled synthetic trial fixtures into the output directory."""
    out = obj["out"]
    names = ("ellipse_trial.txt", "quiet_stance_trial.txt")
    for name in names:
        text = resources.files("copbalance").joinpath(f"data/{name}").read_text()
        _write_atomic(out / name, text)
    click.echo(f"wrote {', '.join(names)} to {out}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("copbalance.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
