"""Seeded random scenarios for cross-checking the two simulators.

Generation is fully determined by the seed. Scenarios lean into the
awkward corners on purpose: zero transmission times, total packet loss,
commands before the session starts, gestures after it ends, mode flips
right at deadlines.
"""

from __future__ import annotations

import random

from .scenario import Scenario, parse_scenario

_HORIZONS = (5_000, 15_000, 40_000, 120_000)
_MODES = ("manual", "auto", "off")
_GESTURES = ("press", "press_hold", "swipe_back")
_TEXTS = ("T", "t", " T ", "U", "D", "u", "d", "hello!", "TT", "")


def _random_params(rng: random.Random) -> dict:
    params: dict = {}
    if rng.random() < 0.35:
        params["trigger_timeout_ms"] = rng.choice((3_000, 10_000, 20_000))
    if rng.random() < 0.3:
        params["video_len_ms"] = rng.choice((2_000, 10_000))
    if rng.random() < 0.3:
        params["photo_capture_ms"] = rng.choice((500, 1_000, 2_000))
    if rng.random() < 0.35:
        params["video_tx_ms"] = rng.choice((0, 1_000, 5_000, 9_000))
    if rng.random() < 0.35:
        params["photo_tx_ms"] = rng.choice((0, 500, 1_000, 3_500))
    if rng.random() < 0.25:
        params["hold_ms"] = rng.choice((3_000, 10_000))
    if rng.random() < 0.25:
        params["countdown_start"] = rng.choice((0, 2, 5))
    if rng.random() < 0.25:
        params["countdown_interval_ms"] = rng.choice((500, 1_000))
    return params


def _random_network(rng: random.Random) -> dict:
    network: dict = {"seed": rng.randrange(2**32)}
    style = rng.random()
    if style < 0.35:
        return network  # instant, lossless
    network["latency_to_wearer_ms"] = rng.choice((0, 5, 40, 80, 150))
    network["latency_to_friend_ms"] = rng.choice((0, 5, 40, 150, 400))
    if style < 0.7:
        network["jitter_ms"] = rng.choice((0, 10, 40))
    else:
        network["jitter_ms"] = rng.choice((0, 10, 40, 200))
        network["drop_prob"] = rng.choice((0.1, 0.3, 1.0))
    return network


def random_scenario(seed: int) -> Scenario:
    rng = random.Random(seed)
    horizon = rng.choice(_HORIZONS)
    obj: dict = {
        "name": f"fuzz-{seed}",
        "initial_mode": rng.choice(_MODES),
        "params": _random_params(rng),
        "network": _random_network(rng),
    }

    events: list[dict] = []
    if rng.random() < 0.9:
        start_at = 0 if rng.random() < 0.8 else rng.randrange(horizon // 4 + 1)
        events.append({"at_ms": start_at, "actor": "wearer", "action": "start_session"})

    count = rng.randint(0, 20)
    times = sorted(rng.randrange(horizon + 1) for _ in range(count))
    for at_ms in times:
        roll = rng.random()
        if roll < 0.45:
            events.append({
                "at_ms": at_ms,
                "actor": "friend",
                "action": "command",
                "args": {"text": rng.choice(_TEXTS)},
            })
        elif roll < 0.75:
            events.append({
                "at_ms": at_ms,
                "actor": "wearer",
                "action": "gesture",
                "args": {"gesture": rng.choice(_GESTURES)},
            })
        elif roll < 0.9:
            events.append({
                "at_ms": at_ms,
                "actor": "wearer",
                "action": "set_mode",
                "args": {"mode": rng.choice(_MODES)},
            })
        elif roll < 0.97:
            events.append({"at_ms": at_ms, "actor": "wearer", "action": "end_session"})
        else:
            events.append({"at_ms": at_ms, "actor": "wearer", "action": "start_session"})

    events.sort(key=lambda ev: ev["at_ms"])
    obj["events"] = events

    # params drawn independently can break the countdown fit rule; shrink
    # the countdown to the largest value the transmit times allow
    params = obj["params"]
    interval = params.get("countdown_interval_ms", 1_000)
    max_tx = max(params.get("video_tx_ms", 5_000), params.get("photo_tx_ms", 1_000))
    fit = (max_tx + interval) // interval
    if params.get("countdown_start", 5) > fit:
        params["countdown_start"] = fit

    return parse_scenario(obj)
