"""Scenario files: schema validation and loading.

A scenario pins everything a run needs — seed, duration, link environment
(optionally with a custom calibration table), gateway, application,
nodes and timed fire events — so that a (scenario, seed, command log)
triple fully determines every artifact byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .medium import CalibrationPoint, LinkEnvironment, MediumError, environment

_POSITION = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}

_BAND = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["seed", "duration_s", "environment", "gateway", "application", "nodes"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "duration_s": {"type": "number", "exclusiveMinimum": 0},
        "environment": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["urban", "forest"]},
                "calibration": {
                    "type": "array",
                    "minItems": 2,
                    "items": {
                        "type": "object",
                        "required": ["distance_m", "delivery"],
                        "additionalProperties": False,
                        "properties": {
                            "distance_m": {"type": "number", "minimum": 0},
                            "delivery": {"type": "number", "minimum": 0, "maximum": 1},
                            "rssi_dbm": {"type": ["number", "null"]},
                            "latency_s": {"type": ["number", "null"]},
                        },
                    },
                },
            },
        },
        "gateway": {
            "type": "object",
            "required": ["gw_id", "position"],
            "additionalProperties": False,
            "properties": {
                "gw_id": {"type": "string", "pattern": "^[0-9A-Fa-f]{16}$"},
                "position": _POSITION,
            },
        },
        "application": {
            "type": "object",
            "required": ["app_id", "app_eui", "access_key"],
            "additionalProperties": False,
            "properties": {
                "app_id": {"type": "string", "minLength": 1},
                "app_eui": {"type": "string", "pattern": "^[0-9A-Fa-f]{16}$"},
                "access_key": {"type": "string", "minLength": 1},
                "decoder": {"enum": ["u16be-triple", "raw-hex"]},
            },
        },
        "nodes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["dev_id", "position"],
                "additionalProperties": False,
                "properties": {
                    "dev_id": {"type": "string", "minLength": 1},
                    "activation": {"enum": ["abp", "otaa"]},
                    "dev_addr": {"type": "string", "pattern": "^[0-9A-Fa-f]{8}$"},
                    "nwkskey": {"type": "string", "pattern": "^[0-9A-Fa-f]{32}$"},
                    "appskey": {"type": "string", "pattern": "^[0-9A-Fa-f]{32}$"},
                    "dev_eui": {"type": "string", "pattern": "^[0-9A-Fa-f]{16}$"},
                    "appkey": {"type": "string", "pattern": "^[0-9A-Fa-f]{32}$"},
                    "position": _POSITION,
                    "sample_period_s": {"type": "number", "exclusiveMinimum": 0},
                    "heartbeat_period_s": {"type": "number", "exclusiveMinimum": 0},
                    "mq_gain": {"type": "number", "exclusiveMinimum": 0},
                    "noise_free": {"type": "boolean"},
                    "thresholds": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"gas": _BAND, "flame": _BAND, "temp": _BAND},
                    },
                },
            },
        },
        "fires": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["x", "y", "start", "intensity"],
                "additionalProperties": False,
                "properties": {
                    "x": {"type": "number"},
                    "y": {"type": "number"},
                    "start": {"type": "number", "minimum": 0},
                    "intensity": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
        "outputs": {
            "type": "array",
            "items": {"enum": ["store", "events", "summary"]},
        },
    },
}


class ScenarioError(ValueError):
    """Scenario file failed validation; message carries the field path."""


@dataclass
class NodeSpec:
    dev_id: str
    position: tuple[float, float]
    activation: str = "abp"  # "abp" | "otaa"
    dev_addr: str = ""
    nwkskey: str = ""
    appskey: str = ""
    dev_eui: str = ""
    appkey: str = ""
    sample_period_s: float = 5.0
    heartbeat_period_s: float = 60.0
    mq_gain: float = 1.0
    noise_free: bool = False
    thresholds: dict = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    seed: int
    duration_s: float
    env: LinkEnvironment
    gw_id: str
    gw_position: tuple[float, float]
    app_id: str
    app_eui: str
    access_key: str
    decoder: str
    nodes: list[NodeSpec]
    fires: list[dict]
    outputs: tuple[str, ...]


def _format_error(err: jsonschema.ValidationError) -> str:
    path = "$" + "".join(
        f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path
    )
    return f"{path}: {err.message}"


def parse_scenario(obj: dict, name: str = "<scenario>") -> Scenario:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(obj), key=lambda e: list(e.absolute_path))
    if errors:
        details = "; ".join(_format_error(e) for e in errors[:5])
        raise ScenarioError(f"{name}: {details}")

    env_obj = obj["environment"]
    if "calibration" in env_obj:
        pts = tuple(
            CalibrationPoint(
                p["distance_m"], p["delivery"], p.get("rssi_dbm"), p.get("latency_s")
            )
            for p in env_obj["calibration"]
        )
        try:
            env = LinkEnvironment(env_obj["kind"], pts)
        except MediumError as e:
            raise ScenarioError(f"{name}: $.environment.calibration: {e}") from None
    else:
        env = environment(env_obj["kind"])

    nodes = []
    seen_ids, seen_addrs, seen_euis = set(), set(), set()
    for i, n in enumerate(obj["nodes"]):
        if n["dev_id"] in seen_ids:
            raise ScenarioError(f"{name}: $.nodes[{i}].dev_id: duplicate {n['dev_id']!r}")
        seen_ids.add(n["dev_id"])
        activation = n.get("activation", "abp")
        if activation == "abp":
            missing = [k for k in ("dev_addr", "nwkskey", "appskey") if k not in n]
            if missing:
                raise ScenarioError(
                    f"{name}: $.nodes[{i}]: ABP node needs {', '.join(missing)}"
                )
            addr = n["dev_addr"].upper()
            if addr in seen_addrs:
                raise ScenarioError(f"{name}: $.nodes[{i}].dev_addr: duplicate {addr}")
            seen_addrs.add(addr)
        else:
            missing = [k for k in ("dev_eui", "appkey") if k not in n]
            if missing:
                raise ScenarioError(
                    f"{name}: $.nodes[{i}]: OTAA node needs {', '.join(missing)}"
                )
            eui = n["dev_eui"].upper()
            if eui in seen_euis:
                raise ScenarioError(f"{name}: $.nodes[{i}].dev_eui: duplicate {eui}")
            seen_euis.add(eui)
        th = n.get("thresholds", {})
        for sensor_name, band in th.items():
            if not band[0] < band[1]:
                raise ScenarioError(
                    f"{name}: $.nodes[{i}].thresholds.{sensor_name}: "
                    f"alert floor must be below risk floor"
                )
        nodes.append(
            NodeSpec(
                dev_id=n["dev_id"],
                position=tuple(n["position"]),
                activation=activation,
                dev_addr=n.get("dev_addr", "").upper(),
                nwkskey=n.get("nwkskey", "").upper(),
                appskey=n.get("appskey", "").upper(),
                dev_eui=n.get("dev_eui", "").upper(),
                appkey=n.get("appkey", "").upper(),
                sample_period_s=n.get("sample_period_s", 5.0),
                heartbeat_period_s=n.get("heartbeat_period_s", 60.0),
                mq_gain=n.get("mq_gain", 1.0),
                noise_free=n.get("noise_free", False),
                thresholds=th,
            )
        )

    app = obj["application"]
    return Scenario(
        name=obj.get("name", name),
        seed=obj["seed"],
        duration_s=obj["duration_s"],
        env=env,
        gw_id=obj["gateway"]["gw_id"].upper(),
        gw_position=tuple(obj["gateway"]["position"]),
        app_id=app["app_id"],
        app_eui=app["app_eui"].upper(),
        access_key=app["access_key"],
        decoder=app.get("decoder", "u16be-triple"),
        nodes=nodes,
        fires=[dict(f) for f in obj.get("fires", [])],
        outputs=tuple(obj.get("outputs", ("store", "events", "summary"))),
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioError(f"{path}: no such file") from None
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    return parse_scenario(obj, name=str(path))
