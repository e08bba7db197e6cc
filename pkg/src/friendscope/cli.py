"""Command line front end.

    friendscope sim run scenarios/auto_timeout.scn
    friendscope scenario validate scenarios/fast_video.scn
    friendscope relay serve --listen 127.0.0.1:7600 --log-dir /tmp/fslogs
    friendscope agent attach --role friend --addr 127.0.0.1:7600 \
        --session-id s1a2b3c4 --token <hex>

Exit codes: 0 success, 2 validation problem, 3 unreadable input,
4 could not bind, 5 could not connect.
"""

from __future__ import annotations

import argparse
import asyncio
import contextlib
import dataclasses
import json
import os
import signal
import sys
from typing import Optional

from .codec import CodecError, Frame, Role, decode_frame, encode_frame
from .protocol import FriendscopeError
from .relay import LOG_SUFFIX, RelayServer
from .sim import load_scenario, run_scenario
from .sim.report import render_table
from .sim.scenario import ScenarioError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_BIND = 4
EXIT_CONNECT = 5


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _parse_listen(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"expected host:port, got {value!r}")
    return host, int(port)


# ---------------------------------------------------------------------------
# sim run / scenario validate

def _load(path: str):
    try:
        return load_scenario(path)
    except ScenarioError:
        raise
    except OSError as exc:
        raise _IoProblem(str(exc)) from exc


class _IoProblem(Exception):
    pass


def cmd_sim_run(args: argparse.Namespace) -> int:
    try:
        scenario = _load(args.scenario)
    except ScenarioError as exc:
        return _fail(EXIT_VALIDATION, f"{args.scenario}: {exc}")
    except _IoProblem as exc:
        return _fail(EXIT_IO, str(exc))
    if args.seed is not None:
        scenario = dataclasses.replace(
            scenario, network=scenario.network.with_seed(args.seed)
        )
    report = run_scenario(scenario)
    if args.format == "machine":
        sys.stdout.buffer.write(report.to_json_bytes() + b"\n")
    else:
        sys.stdout.write(render_table(report))
    return EXIT_OK


def cmd_scenario_validate(args: argparse.Namespace) -> int:
    try:
        scenario = _load(args.scenario)
    except ScenarioError as exc:
        return _fail(EXIT_VALIDATION, f"{args.scenario}: {exc}")
    except _IoProblem as exc:
        return _fail(EXIT_IO, str(exc))
    print(f"ok: {scenario.name} ({len(scenario.events)} events)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# relay serve

def cmd_relay_serve(args: argparse.Namespace) -> int:
    log_dir = args.log_dir or os.environ.get("FRIENDSCOPE_LOG_DIR")
    if not log_dir:
        return _fail(EXIT_VALIDATION, "--log-dir or FRIENDSCOPE_LOG_DIR is required")
    try:
        host, port = _parse_listen(args.listen)
    except ValueError as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    if args.console_dir and not os.path.isdir(args.console_dir):
        return _fail(EXIT_VALIDATION, f"console dir not found: {args.console_dir}")

    async def serve() -> int:
        server = RelayServer(host, port, log_dir, console_dir=args.console_dir)
        try:
            await server.start()
        except OSError as exc:
            return _fail(EXIT_BIND, f"cannot listen on {args.listen}: {exc}")
        print(f"listening on {host}:{server.bound_port}", flush=True)
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            with contextlib.suppress(NotImplementedError):
                loop.add_signal_handler(sig, stop.set)
        await stop.wait()
        await server.close()
        print("relay stopped")
        return EXIT_OK

    return asyncio.run(serve())


# ---------------------------------------------------------------------------
# agent attach

def _summarize(frame: Frame) -> str:
    body = frame.body
    if frame.kind == "notice":
        return f"{frame.ts_ms:>8}  <- {body.get('text', '')}"
    if frame.kind == "media":
        return (
            f"{frame.ts_ms:>8}  <- [{body.get('media_kind')} "
            f"{body.get('size_bytes')}B {body.get('digest')}]"
        )
    if frame.kind == "led":
        return (
            f"{frame.ts_ms:>8}  led {body.get('color')}/{body.get('pattern')}"
            f" ({body.get('cause')}) until {body.get('end_ms')}"
        )
    if frame.kind == "led_clear":
        return f"{frame.ts_ms:>8}  led off"
    if frame.kind == "error":
        return f"{frame.ts_ms:>8}  !! {body.get('code')}: {body.get('message')}"
    return f"{frame.ts_ms:>8}  {frame.kind} {json.dumps(body, sort_keys=True)}"


def _load_script(path: Optional[str], role: str) -> list[dict]:
    if path is None:
        return []
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    events = obj["events"] if isinstance(obj, dict) else obj
    out = []
    for event in events:
        if event.get("actor", role) != role:
            continue
        out.append(event)
    out.sort(key=lambda e: e.get("at_ms", 0))
    return out


async def _await_frame(reader: asyncio.StreamReader, wanted: str) -> Frame:
    while True:
        line = await asyncio.wait_for(reader.readline(), timeout=10)
        if not line:
            raise ConnectionError("relay closed the connection")
        frame = decode_frame(line)
        if frame.kind == "error":
            raise FriendscopeError(
                f"{frame.body.get('code')}: {frame.body.get('message')}"
            )
        if frame.kind == wanted:
            return frame
        print(_summarize(frame), flush=True)


def _event_to_frame(event: dict, role: str, session_id: str, ts_ms: int) -> Optional[Frame]:
    action = event.get("action")
    args = event.get("args", {})
    if role == "friend":
        if action != "command":
            return None
        return Frame(session_id, 0, ts_ms, Role.FRIEND, "cmd", {"text": args["text"]})
    if action == "gesture":
        return Frame(session_id, 0, ts_ms, Role.WEARER, "gesture", {"gesture": args["gesture"]})
    if action == "set_mode":
        return Frame(session_id, 0, ts_ms, Role.WEARER, "set_mode", {"mode": args["mode"]})
    if action == "end_session":
        return Frame(session_id, 0, ts_ms, Role.WEARER, "end", {})
    return None


async def _agent_main(args: argparse.Namespace) -> int:
    try:
        host, port = _parse_listen(args.addr)
    except ValueError as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    try:
        script = _load_script(args.script, args.role)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        return _fail(EXIT_VALIDATION, f"bad script: {exc}")
    try:
        reader, writer = await asyncio.open_connection(host, port)
    except OSError as exc:
        return _fail(EXIT_CONNECT, f"cannot connect to {args.addr}: {exc}")

    session_id = args.session_id
    token = args.token
    try:
        if args.create:
            body = {"friend_id": args.friend_id, "mode": args.mode}
            if session_id:
                body["session_id"] = session_id
            if args.params:
                body["params"] = json.loads(args.params)
            writer.write(encode_frame(Frame("", 0, 0, Role.WEARER, "create_session", body)))
            await writer.drain()
            created = await _await_frame(reader, "session_created")
            session_id = created.body["session_id"]
            token = created.body["token"]
            print(f"session {session_id} token {token}", flush=True)
        if not session_id or not token:
            return _fail(EXIT_VALIDATION, "--session-id and --token are required (or --create)")

        writer.write(
            encode_frame(Frame(session_id, 0, 0, Role(args.role), "attach", {"token": token}))
        )
        await writer.drain()
        ack = await _await_frame(reader, "attached")
        base_ms = ack.body.get("now_ms", 0)
        print(f"attached as {args.role} at t={base_ms}ms", flush=True)

        loop = asyncio.get_running_loop()
        started = loop.time()

        async def pump_incoming() -> None:
            while True:
                line = await reader.readline()
                if not line:
                    return
                try:
                    frame = decode_frame(line)
                except CodecError:
                    continue
                print(_summarize(frame), flush=True)
                if frame.kind == "notice" and frame.body.get("notice") == "session_ended":
                    return

        async def run_script() -> None:
            for event in script:
                delay = event.get("at_ms", 0) / 1000.0 - (loop.time() - started)
                if delay > 0:
                    await asyncio.sleep(delay)
                now_ms = base_ms + int((loop.time() - started) * 1000)
                frame = _event_to_frame(event, args.role, session_id, now_ms)
                if frame is None:
                    continue
                writer.write(encode_frame(frame))
                await writer.drain()

        pump = asyncio.create_task(pump_incoming())
        await run_script()
        if script and args.linger_ms == 0:
            pump.cancel()
        else:
            try:
                await asyncio.wait_for(
                    pump, timeout=None if not script else args.linger_ms / 1000.0
                )
            except asyncio.TimeoutError:
                pump.cancel()
        with contextlib.suppress(asyncio.CancelledError):
            await pump
        return EXIT_OK
    except (FriendscopeError, asyncio.TimeoutError) as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    except ConnectionError as exc:
        return _fail(EXIT_CONNECT, str(exc))
    finally:
        writer.close()
        with contextlib.suppress(ConnectionError):
            await writer.wait_closed()


def cmd_agent_attach(args: argparse.Namespace) -> int:
    try:
        return asyncio.run(_agent_main(args))
    except KeyboardInterrupt:
        return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="friendscope",
        description="shared-camera sessions: simulator, relay, and endpoint agents",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="deterministic simulation")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)
    sim_run = sim_sub.add_parser("run", help="run a scenario file and print the report")
    sim_run.add_argument("scenario", help="path to a .scn scenario file")
    sim_run.add_argument("--seed", type=int, default=None, help="override the network seed")
    sim_run.add_argument(
        "--format", choices=("table", "machine"), default="table",
        help="table for people, machine for one-line JSON",
    )
    sim_run.set_defaults(func=cmd_sim_run)

    scenario = sub.add_parser("scenario", help="scenario file tools")
    scn_sub = scenario.add_subparsers(dest="scenario_command", required=True)
    validate = scn_sub.add_parser("validate", help="check a scenario file")
    validate.add_argument("scenario", help="path to a .scn scenario file")
    validate.set_defaults(func=cmd_scenario_validate)

    relay = sub.add_parser("relay", help="live relay service")
    relay_sub = relay.add_subparsers(dest="relay_command", required=True)
    serve = relay_sub.add_parser("serve", help="listen for endpoint connections")
    serve.add_argument("--listen", default="127.0.0.1:7600", help="host:port (port 0 picks one)")
    serve.add_argument(
        "--log-dir", default=None,
        help=f"directory for per-session *{LOG_SUFFIX} logs"
             " (default: $FRIENDSCOPE_LOG_DIR)",
    )
    serve.add_argument(
        "--console-dir", default=None,
        help="serve this directory over HTTP for the web console",
    )
    serve.set_defaults(func=cmd_relay_serve)

    agent = sub.add_parser("agent", help="live endpoint agents")
    agent_sub = agent.add_subparsers(dest="agent_command", required=True)
    attach = agent_sub.add_parser("attach", help="connect an endpoint to a relay session")
    attach.add_argument("--role", choices=("wearer", "friend"), required=True)
    attach.add_argument("--addr", required=True, help="relay host:port")
    attach.add_argument("--session-id", default=None)
    attach.add_argument("--token", default=None)
    attach.add_argument("--script", default=None, help="JSON event script to play")
    attach.add_argument(
        "--linger-ms", type=int, default=2000,
        help="after the script finishes, keep listening this long",
    )
    attach.add_argument("--create", action="store_true", help="create the session first")
    attach.add_argument("--mode", choices=("manual", "auto", "off"), default="manual")
    attach.add_argument("--friend-id", default="friend")
    attach.add_argument("--params", default=None, help="JSON params overrides for --create")
    attach.set_defaults(func=cmd_agent_attach)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
