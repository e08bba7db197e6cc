"""Scenario files: a named, timestamped script of wearer and friend actions.

A scenario is a JSON object:

    {
      "name": "fast_video",
      "initial_mode": "manual",
      "params": {"trigger_timeout_ms": 10000},
      "network": {"latency_to_friend_ms": 150, "seed": 7},
      "events": [
        {"at_ms": 0, "actor": "wearer", "action": "start_session"},
        {"at_ms": 0, "actor": "wearer", "action": "gesture",
         "args": {"gesture": "press_hold"}},
        {"at_ms": 13000, "actor": "friend", "action": "command",
         "args": {"text": "T"}}
      ]
    }

`params` and `network` accept partial overrides of the defaults.  Events
must be sorted by `at_ms`; ties keep file order.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

from ..protocol import FriendscopeError, Gesture, ProtocolParams, SharingMode
from .network import NetworkModel


class ScenarioError(FriendscopeError):
    """Raised when a scenario file is malformed or inconsistent."""


@dataclass(frozen=True)
class Event:
    at_ms: int
    actor: str  # "wearer" | "friend"
    action: str
    args: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    initial_mode: SharingMode
    params: ProtocolParams
    network: NetworkModel
    events: tuple[Event, ...]


_WEARER_ACTIONS = {
    "start_session": {"friend_id", "mode"},
    "gesture": {"gesture"},
    "set_mode": {"mode"},
    "end_session": set(),
}
_FRIEND_ACTIONS = {
    "command": {"text"},
}
_REQUIRED_ARGS = {
    "gesture": {"gesture"},
    "set_mode": {"mode"},
    "command": {"text"},
}

_PARAM_FIELDS = {f.name for f in dataclasses.fields(ProtocolParams)}
_NETWORK_FIELDS = {f.name for f in dataclasses.fields(NetworkModel)}
_MODES = {m.value for m in SharingMode}
_GESTURES = {g.value for g in Gesture}


def _expect_int(value: Any, label: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ScenarioError(f"{label} must be an integer")
    return value


def _parse_mode(value: Any, label: str) -> SharingMode:
    if not isinstance(value, str) or value not in _MODES:
        raise ScenarioError(f"{label} must be one of {sorted(_MODES)}")
    return SharingMode(value)


def _parse_params(obj: Any) -> ProtocolParams:
    if not isinstance(obj, dict):
        raise ScenarioError("params must be an object")
    unknown = set(obj) - _PARAM_FIELDS
    if unknown:
        raise ScenarioError(f"unknown params field: {sorted(unknown)[0]}")
    for key, value in obj.items():
        _expect_int(value, f"params.{key}")
    try:
        return ProtocolParams().with_overrides(obj)
    except ValueError as exc:
        raise ScenarioError(f"invalid params: {exc}") from exc


def _parse_network(obj: Any) -> NetworkModel:
    if not isinstance(obj, dict):
        raise ScenarioError("network must be an object")
    unknown = set(obj) - _NETWORK_FIELDS
    if unknown:
        raise ScenarioError(f"unknown network field: {sorted(unknown)[0]}")
    model = NetworkModel(**obj)
    try:
        model.validate()
    except ValueError as exc:
        raise ScenarioError(f"invalid network: {exc}") from exc
    return model


def _parse_event(obj: Any, index: int) -> Event:
    label = f"events[{index}]"
    if not isinstance(obj, dict):
        raise ScenarioError(f"{label} must be an object")
    unknown = set(obj) - {"at_ms", "actor", "action", "args"}
    if unknown:
        raise ScenarioError(f"{label}: unknown field: {sorted(unknown)[0]}")
    if "at_ms" not in obj or "actor" not in obj or "action" not in obj:
        raise ScenarioError(f"{label}: at_ms, actor and action are required")
    at_ms = _expect_int(obj["at_ms"], f"{label}.at_ms")
    if at_ms < 0:
        raise ScenarioError(f"{label}.at_ms must not be negative")
    actor = obj["actor"]
    action = obj["action"]
    if actor == "wearer":
        known = _WEARER_ACTIONS
    elif actor == "friend":
        known = _FRIEND_ACTIONS
    else:
        raise ScenarioError(f"{label}.actor must be 'wearer' or 'friend'")
    if not isinstance(action, str) or action not in known:
        raise ScenarioError(f"{label}: unknown {actor} action: {action!r}")
    args = obj.get("args", {})
    if not isinstance(args, dict):
        raise ScenarioError(f"{label}.args must be an object")
    allowed = known[action]
    unknown = set(args) - allowed
    if unknown:
        raise ScenarioError(f"{label}.args: unknown field: {sorted(unknown)[0]}")
    missing = _REQUIRED_ARGS.get(action, set()) - set(args)
    if missing:
        raise ScenarioError(f"{label}.args: missing field: {sorted(missing)[0]}")
    if action == "gesture" and args["gesture"] not in _GESTURES:
        raise ScenarioError(
            f"{label}.args.gesture must be one of {sorted(_GESTURES)}"
        )
    if action in ("set_mode",) and args["mode"] not in _MODES:
        raise ScenarioError(f"{label}.args.mode must be one of {sorted(_MODES)}")
    if action == "start_session":
        if "mode" in args and args["mode"] not in _MODES:
            raise ScenarioError(f"{label}.args.mode must be one of {sorted(_MODES)}")
        if "friend_id" in args and not isinstance(args["friend_id"], str):
            raise ScenarioError(f"{label}.args.friend_id must be a string")
    if action == "command" and not isinstance(args["text"], str):
        raise ScenarioError(f"{label}.args.text must be a string")
    return Event(at_ms=at_ms, actor=actor, action=action, args=dict(args))


def parse_scenario(obj: Any) -> Scenario:
    """Validate a decoded JSON object and build a Scenario."""
    if not isinstance(obj, dict):
        raise ScenarioError("scenario must be a JSON object")
    unknown = set(obj) - {"name", "initial_mode", "params", "network", "events"}
    if unknown:
        raise ScenarioError(f"unknown scenario field: {sorted(unknown)[0]}")
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError("name is required and must be a non-empty string")
    events_obj = obj.get("events")
    if not isinstance(events_obj, list):
        raise ScenarioError("events is required and must be a list")
    initial_mode = SharingMode.MANUAL
    if "initial_mode" in obj:
        initial_mode = _parse_mode(obj["initial_mode"], "initial_mode")
    params = ProtocolParams()
    if "params" in obj:
        params = _parse_params(obj["params"])
    network = NetworkModel()
    if "network" in obj:
        network = _parse_network(obj["network"])
    events = tuple(_parse_event(ev, i) for i, ev in enumerate(events_obj))
    for prev, cur in zip(events, events[1:]):
        if cur.at_ms < prev.at_ms:
            raise ScenarioError("events not sorted")
    return Scenario(
        name=name,
        initial_mode=initial_mode,
        params=params,
        network=network,
        events=events,
    )


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario file.

    Raises ScenarioError for bad content and OSError for unreadable files.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_scenario(obj)


def scenario_to_dict(scenario: Scenario) -> dict:
    """Inverse of parse_scenario, mainly for generated scenarios."""
    return {
        "name": scenario.name,
        "initial_mode": scenario.initial_mode.value,
        "params": dataclasses.asdict(scenario.params),
        "network": dataclasses.asdict(scenario.network),
        "events": [
            {
                "at_ms": ev.at_ms,
                "actor": ev.actor,
                "action": ev.action,
                "args": dict(ev.args),
            }
            for ev in scenario.events
        ],
    }
