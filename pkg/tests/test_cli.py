"""Command line entry points: parsing, exit codes, and the live agents."""

import json
import re
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

from friendscope.cli import main
from friendscope.codec import decode_frame
from friendscope.sim import load_scenario, run_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_sim_run_table(capsys):
    code = main(["sim", "run", str(SCENARIOS / "auto_timeout.scn")])
    out = capsys.readouterr().out
    assert code == 0
    assert "scenario: auto_timeout" in out
    assert "media delivered" in out


def test_sim_run_machine_matches_library(capsys):
    path = SCENARIOS / "fast_photo.scn"
    code = main(["sim", "run", "--format", "machine", str(path)])
    out = capsys.readouterr().out
    assert code == 0
    expected = run_scenario(load_scenario(path)).to_json_bytes().decode("utf-8")
    assert out == expected + "\n"
    parsed = json.loads(out)
    assert parsed["report_version"] == 1
    assert parsed["scenario_name"] == "fast_photo"


def test_sim_run_seed_override(capsys):
    path = str(SCENARIOS / "lossy_afternoon.scn")
    outputs = []
    for seed in (1, 1, 2):
        assert main(["sim", "run", "--format", "machine", "--seed", str(seed), path]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
    assert outputs[0] != outputs[2]


def test_sim_run_missing_file(capsys):
    code = main(["sim", "run", "no_such_scenario.scn"])
    err = capsys.readouterr().err
    assert code == 3
    assert "error:" in err


def test_sim_run_rejects_bad_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text('{"name": "x", "events": [], "bogus": 1}\n')
    code = main(["sim", "run", str(bad)])
    err = capsys.readouterr().err
    assert code == 2
    assert "bogus" in err


def test_scenario_validate(capsys):
    code = main(["scenario", "validate", str(SCENARIOS / "auto_timeout.scn")])
    out = capsys.readouterr().out
    assert code == 0
    assert out == "ok: auto_timeout (2 events)\n"


def test_scenario_validate_bad_json(tmp_path, capsys):
    bad = tmp_path / "broken.scn"
    bad.write_text("{not json\n")
    code = main(["scenario", "validate", str(bad)])
    err = capsys.readouterr().err
    assert code == 2
    assert "line 1" in err


def test_agent_attach_connection_refused(capsys):
    port = free_port()
    code = main([
        "agent", "attach", "--role", "friend",
        "--addr", f"127.0.0.1:{port}",
        "--session-id", "s1", "--token", "t1",
    ])
    err = capsys.readouterr().err
    assert code == 5
    assert "cannot connect" in err


def test_relay_serve_requires_log_dir(capsys, monkeypatch):
    monkeypatch.delenv("FRIENDSCOPE_LOG_DIR", raising=False)
    code = main(["relay", "serve", "--listen", "127.0.0.1:0"])
    err = capsys.readouterr().err
    assert code == 2
    assert "log" in err


def _spawn(argv, **kw):
    return subprocess.Popen(
        [sys.executable, "-m", "friendscope.cli", *argv],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
        text=True, bufsize=1, **kw,
    )


def _read_until(proc, pattern, timeout=15.0):
    """Collect stdout lines until one matches; returns (match, lines)."""
    deadline = time.monotonic() + timeout
    lines = []
    while time.monotonic() < deadline:
        line = proc.stdout.readline()
        if not line:
            if proc.poll() is not None:
                break
            continue
        lines.append(line)
        found = re.search(pattern, line)
        if found:
            return found, lines
    raise AssertionError(f"never saw {pattern!r} in: {''.join(lines)}")


def test_relay_serve_and_shutdown(tmp_path):
    proc = _spawn(["relay", "serve", "--listen", "127.0.0.1:0",
                   "--log-dir", str(tmp_path)])
    try:
        found, _ = _read_until(proc, r"listening on 127\.0\.0\.1:(\d+)")
        port = int(found.group(1))
        with socket.create_connection(("127.0.0.1", port), timeout=5) as sock:
            sock.sendall(
                b'{"v":1,"session_id":"","seq":0,"ts_ms":0,"from":"wearer",'
                b'"kind":"create_session","body":{"friend_id":"pat"}}\n'
            )
            reply = decode_frame(sock.makefile("rb").readline())
            assert reply.kind == "session_created"
        proc.send_signal(signal.SIGINT)
        out, _ = proc.communicate(timeout=10)
        assert proc.returncode == 0
        assert "relay stopped" in out
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.wait()


def test_relay_serve_bind_failure(tmp_path):
    blocker = socket.socket()
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    try:
        proc = _spawn(["relay", "serve", "--listen", f"127.0.0.1:{port}",
                       "--log-dir", str(tmp_path)])
        out, _ = proc.communicate(timeout=15)
        assert proc.returncode == 4
        assert "error:" in out
    finally:
        blocker.close()


AGENT_PARAMS = json.dumps({
    "trigger_timeout_ms": 3000,
    "photo_capture_ms": 100,
    "photo_tx_ms": 100,
    "countdown_start": 1,
    "countdown_interval_ms": 100,
    "hold_ms": 2000,
})


def test_cli_agents_full_session(tmp_path):
    """Relay plus two scripted agents exchange a photo over real sockets."""
    wearer_script = tmp_path / "wearer.json"
    wearer_script.write_text(json.dumps([
        {"at_ms": 2500, "action": "gesture", "args": {"gesture": "press"}},
        {"at_ms": 4000, "action": "end_session", "args": {}},
    ]))
    friend_script = tmp_path / "friend.json"
    friend_script.write_text(json.dumps([
        {"at_ms": 0, "action": "command", "args": {"text": "T"}},
    ]))

    relay = _spawn(["relay", "serve", "--listen", "127.0.0.1:0",
                    "--log-dir", str(tmp_path / "logs")])
    wearer = friend = None
    try:
        found, _ = _read_until(relay, r"listening on 127\.0\.0\.1:(\d+)")
        addr = f"127.0.0.1:{found.group(1)}"

        wearer = _spawn([
            "agent", "attach", "--role", "wearer", "--addr", addr,
            "--create", "--friend-id", "remote", "--mode", "manual",
            "--params", AGENT_PARAMS,
            "--script", str(wearer_script), "--linger-ms", "800",
        ])
        created, _ = _read_until(wearer, r"session (\S+) token (\S+)")
        _read_until(wearer, r"attached as wearer")
        session_id, token = created.group(1), created.group(2)

        friend = _spawn([
            "agent", "attach", "--role", "friend", "--addr", addr,
            "--session-id", session_id, "--token", token,
            "--script", str(friend_script), "--linger-ms", "20000",
        ])

        friend_out, _ = friend.communicate(timeout=30)
        wearer_out, _ = wearer.communicate(timeout=30)
        assert friend.returncode == 0, friend_out
        assert wearer.returncode == 0, wearer_out

        assert "attached as friend" in friend_out
        assert "Trigger received!" in friend_out
        assert re.search(r"\[photo 200000B [0-9a-f]{16}", friend_out), friend_out
        assert "Ending my camera glasses session now" in friend_out
        # the wearer side saw its ring light driven by the trigger
        assert "led green/flashing" in wearer_out, wearer_out

        log_path = tmp_path / "logs" / f"{session_id}.fslog"
        assert log_path.exists()
        assert token not in log_path.read_text()
    finally:
        for proc in (wearer, friend, relay):
            if proc is not None and proc.poll() is None:
                proc.kill()
                proc.wait()
