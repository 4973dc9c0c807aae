"""Config loading, wire protocol, game sessions, CLI, and the live server."""

import asyncio
import json
import math

import numpy as np
import pytest

from swarmarcher import a2c, protocol
from swarmarcher.cli import main as cli_main
from swarmarcher.config import config_from_dict, default_config, load_config
from swarmarcher.errors import ConfigError
from swarmarcher.session import GameSession

GRAVITY = 9.8
BOW_K = 0.5  # playable bow for gate-range shots
MASS = 0.027


def playable_config(**extra):
    raw = {"bow": {"spring_k": BOW_K}, "serve": {"port": 0}}
    raw.update(extra)
    return config_from_dict(raw)


def aim_messages_for(target, T=0.5, p_bow=(0.0, 0.0, 1.5)):
    """Hand poses whose released shot passes exactly through `target` at
    flight time T: solve the ballistic velocity, then back out the stretch
    that yields that speed and place the arrow hand along the aim line."""
    p_bow = np.asarray(p_bow, dtype=float)
    v = (np.asarray(target, dtype=float) - p_bow) / T
    v[2] += 0.5 * GRAVITY * T
    energy = 0.5 * MASS * float(v @ v)
    stretch = math.sqrt(energy / BOW_K)
    assert stretch <= 1.0, f"shot needs stretch {stretch:.3f} > max"
    p_arrow = p_bow - stretch * v / np.linalg.norm(v)
    return p_bow, p_arrow


def run_until_scored(session, max_ticks=100):
    for _ in range(max_ticks):
        msgs = session.tick()
        for m in msgs:
            parsed = json.loads(m)
            if parsed["kind"] == "scored":
                return parsed
    raise AssertionError("shot never resolved")


def shoot(session, target, T=0.5):
    p_bow, p_arrow = aim_messages_for(target, T)
    replies = session.handle_message(
        protocol.encode_message("aim", {"p_bow": p_bow, "p_arrow": p_arrow})
    )
    assert replies == []
    replies = session.handle_message('{"kind":"release"}')
    assert replies == []
    return run_until_scored(session)


class TestRunConfig:
    def test_defaults_valid(self):
        rc = default_config()
        assert rc.env.n_agents == 3
        assert [g.name for g in rc.gates] == ["grey", "blue", "red"]
        assert rc.serve.telemetry_hz == 20.0

    def test_yaml_round_trip(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text(
            "seed: 9\n"
            "bow:\n  spring_k: 0.5\n  physical_spring: true\n"
            "env:\n  r_collide: 0.05\n  arrow:\n    t_flight: [0.2, 0.3]\n"
            "    first_t_flight: [0.4, 0.5]\n"
            "train:\n  epochs: 3\n  optimizer: adam\n"
            "apf:\n  rho0: 0.8\n"
            "serve:\n  port: 9100\n"
            "gates:\n"
            "  - {name: solo, center: [0, 2.5, 1.5], width: 1.0, height: 1.0, weight: 5}\n"
        )
        rc = load_config(p)
        assert rc.seed == 9
        assert rc.bow.spring_k == 0.5 and rc.bow.physical_spring
        assert rc.env.r_collide == 0.05
        assert rc.env.arrow.t_flight == (0.2, 0.3)
        assert rc.train.epochs == 3 and rc.train.optimizer == "adam"
        assert rc.train.seed == 9  # inherits the top-level seed
        assert rc.apf.rho0 == 0.8
        assert rc.serve.port == 9100
        assert len(rc.gates) == 1 and rc.gates[0].weight == 5

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="env.gravity_boost"):
            config_from_dict({"env": {"gravity_boost": 2}})

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="physics"):
            config_from_dict({"physics": {}})

    def test_cross_field_radii(self):
        with pytest.raises(ConfigError):
            config_from_dict({"env": {"r_collide": 0.4, "r_emergency": 0.3}})

    def test_telemetry_slower_than_env_rejected(self):
        with pytest.raises(ConfigError, match="telemetry_hz"):
            config_from_dict({"serve": {"telemetry_hz": 5.0}})

    def test_overlapping_gates_rejected(self):
        gates = [
            {"name": "a", "center": [0, 2.5, 1.5], "width": 1, "height": 1, "weight": 1},
            {"name": "b", "center": [0.5, 2.5, 1.5], "width": 1, "height": 1, "weight": 3},
        ]
        with pytest.raises(ConfigError, match="overlap"):
            config_from_dict({"gates": gates})

    def test_bad_pair_shape(self):
        with pytest.raises(ConfigError, match="t_flight"):
            config_from_dict({"env": {"arrow": {"t_flight": [0.2, 0.3, 0.4]}}})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.yaml")

    def test_invalid_yaml(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("seed: [unclosed\n")
        with pytest.raises(ConfigError, match="not valid YAML"):
            load_config(p)


class TestProtocol:
    def test_floats_serialized_with_full_precision(self):
        text = protocol.encode_message("telemetry", {"x": 0.1})
        num = text.split('"x":')[1].rstrip("}")
        mantissa = num.split("e")[0].replace("-", "").replace(".", "")
        assert len(mantissa) == 18  # well past the 9-significant-digit floor
        assert json.loads(text)["x"] == 0.1  # bit-exact round trip

    def test_awkward_floats_round_trip(self):
        vals = [1 / 3, 1e-300, 1e300, -0.0, 5e-324, math.pi]
        text = protocol.encode_message("telemetry", {"vals": vals})
        back = json.loads(text)["vals"]
        for a, b in zip(vals, back):
            assert a == b and math.copysign(1, a) == math.copysign(1, b)

    def test_nested_structures_and_numpy(self):
        payload = {
            "arr": np.array([[1.0, 2.0], [3.0, 4.0]]),
            "scalar": np.float64(2.5),
            "count": np.int64(7),
            "flag": np.bool_(True),
            "mix": [1, "two", None, {"k": 3.0}],
        }
        back = json.loads(protocol.encode_message("telemetry", payload))
        assert back["arr"] == [[1.0, 2.0], [3.0, 4.0]]
        assert back["scalar"] == 2.5 and back["count"] == 7
        assert back["flag"] is True
        assert back["mix"] == [1, "two", None, {"k": 3.0}]

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            protocol.encode_message("telemetry", {"x": float("nan")})

    def test_decode_rejects_garbage(self):
        for bad in ["{oops", '"a string"', "[1,2]", '{"no_kind": 1}', b"\xff\xfe"]:
            with pytest.raises(protocol.ProtocolError):
                protocol.decode_message(bad)

    def test_parse_vec3(self):
        msg = {"p": [1.0, 2, 3.5]}
        v = protocol.parse_vec3(msg, "p")
        assert v.tolist() == [1.0, 2.0, 3.5]
        for bad in [None, [1, 2], [1, 2, "x"], [1, 2, float("inf")]]:
            with pytest.raises(protocol.ProtocolError):
                protocol.parse_vec3({"p": bad}, "p")


class TestGameSession:
    def test_scripted_red_gate_shot(self):
        s = GameSession(playable_config(), "t")
        scored = shoot(s, [1.2, 2.5, 1.5])
        assert scored["gate"] == "red" and scored["points"] == 5
        assert s.phase == "scored"

    def test_full_session_scores_27(self):
        s = GameSession(playable_config(), "t")
        total = 0
        for center in ([-1.2, 2.5, 1.5], [0.0, 2.5, 1.5], [1.2, 2.5, 1.5]):
            for _ in range(3):
                scored = shoot(s, center)
                total += scored["points"]
        assert total == 27 and s.score == 27 and s.shots_fired == 9

    def test_gate_quota_caps_points(self):
        s = GameSession(playable_config(), "t")
        for k in range(4):
            scored = shoot(s, [0.0, 2.5, 1.5])
            assert scored["gate"] == "blue"
            assert scored["points"] == (3 if k < 3 else 0)
        assert s.score == 9

    def test_missed_shot_scores_zero(self):
        s = GameSession(playable_config(), "t")
        scored = shoot(s, [0.0, 1.0, 2.0], T=0.6)  # lob landing short of the gates
        assert scored["gate"] is None and scored["points"] == 0

    def test_degenerate_aim_error_keeps_phase(self):
        s = GameSession(playable_config(), "t")
        msg = protocol.encode_message(
            "aim", {"p_bow": [0, 0, 1.5], "p_arrow": [0, 0, 1.5]}
        )
        replies = s.handle_message(msg)
        assert len(replies) == 1
        assert json.loads(replies[0])["message"] == "degenerate aim"
        assert s.phase == "aiming" and s.aim is None

    def test_release_without_aim_rejected(self):
        s = GameSession(playable_config(), "t")
        replies = s.handle_message('{"kind":"release"}')
        assert json.loads(replies[0])["kind"] == "error"
        assert s.phase == "aiming"

    def test_aim_during_flight_rejected(self):
        s = GameSession(playable_config(), "t")
        p_bow, p_arrow = aim_messages_for([0.0, 2.5, 1.5])
        s.handle_message(protocol.encode_message("aim", {"p_bow": p_bow, "p_arrow": p_arrow}))
        s.handle_message('{"kind":"release"}')
        assert s.phase == "in_flight"
        replies = s.handle_message(
            protocol.encode_message("aim", {"p_bow": p_bow, "p_arrow": p_arrow})
        )
        assert json.loads(replies[0])["kind"] == "error"
        assert s.phase == "in_flight"

    def test_double_release_rejected(self):
        s = GameSession(playable_config(), "t")
        p_bow, p_arrow = aim_messages_for([0.0, 2.5, 1.5])
        s.handle_message(protocol.encode_message("aim", {"p_bow": p_bow, "p_arrow": p_arrow}))
        assert s.handle_message('{"kind":"release"}') == []
        replies = s.handle_message('{"kind":"release"}')
        assert json.loads(replies[0])["kind"] == "error"

    def test_reset_clears_score_and_phase(self):
        s = GameSession(playable_config(), "t")
        shoot(s, [1.2, 2.5, 1.5])
        assert s.score == 5
        assert s.handle_message('{"kind":"reset"}') == []
        assert s.score == 0 and s.shots_fired == 0 and s.phase == "aiming"
        assert s.env.state.t_step == 0

    def test_policy_toggle(self):
        rng = np.random.default_rng(0)
        tc = a2c.TrainConfig()
        agents = [a2c.make_agent_nets(12, tc, rng) for _ in range(3)]
        s = GameSession(playable_config(), "t", agents=agents)
        assert s.policy_name == "drl"
        assert s.handle_message('{"kind":"set_policy","policy":"apf"}') == []
        assert s.policy_name == "apf"
        assert s.handle_message('{"kind":"set_policy","policy":"drl"}') == []
        assert s.policy_name == "drl"
        replies = s.handle_message('{"kind":"set_policy","policy":"zigzag"}')
        assert json.loads(replies[0])["kind"] == "error"

    def test_drl_unavailable_without_weights(self):
        s = GameSession(playable_config(), "t")
        replies = s.handle_message('{"kind":"set_policy","policy":"drl"}')
        assert "drl" in json.loads(replies[0])["message"]
        assert s.policy_name == "apf"

    def test_preview_matches_direct_ballistics(self):
        from swarmarcher.ballistics import params_from_launch, sample_trajectory

        s = GameSession(playable_config(), "t")
        p_bow, p_arrow = aim_messages_for([1.2, 2.5, 1.5])
        s.handle_message(protocol.encode_message("aim", {"p_bow": p_bow, "p_arrow": p_arrow}))
        tele = json.loads(s.telemetry_message())
        aim = tele["aim"]
        params = params_from_launch(p_bow, np.array(aim["velocity"]))
        direct = sample_trajectory(params, dt=0.1, z_floor=0.0)
        assert len(aim["trajectory"]) == len(direct.times)
        for (t, x, y, z), td, pd in zip(
            aim["trajectory"], direct.times, direct.points
        ):
            assert t == td and x == pd[0] and y == pd[1] and z == pd[2]

    def test_telemetry_interpolation_midpoint(self):
        s = GameSession(playable_config(), "t")
        s.tick()
        prev, cur = s.prev_pos, s.env.state.agent_pos
        tele = json.loads(s.telemetry_message(0.5))
        assert tele["interpolated"] is True
        mid = 0.5 * (prev + cur)
        assert np.array_equal(np.array(tele["agents"]), mid)
        exact = json.loads(s.telemetry_message(1.0))
        assert exact["interpolated"] is False
        assert np.array_equal(np.array(exact["agents"]), cur)

    def test_env_rollover_still_resolves_shot(self):
        rc = playable_config(serve={"port": 0, "session_max_steps": 3})
        s = GameSession(rc, "t")
        p_bow, p_arrow = aim_messages_for([0.0, 2.5, 1.5])
        s.handle_message(protocol.encode_message("aim", {"p_bow": p_bow, "p_arrow": p_arrow}))
        s.handle_message('{"kind":"release"}')
        scored = run_until_scored(s, max_ticks=10)
        assert scored["points"] == 3  # precomputed flight survives the env reset

    def test_survives_fuzzed_frames(self):
        rng = np.random.default_rng(7)
        s = GameSession(playable_config(), "t")
        fuzz = []
        for _ in range(100):
            n = int(rng.integers(1, 40))
            fuzz.append(bytes(rng.integers(0, 256, size=n, dtype=np.uint8)))
        fuzz += [
            "null",
            "[]",
            '{"kind": 5}',
            '{"kind": "aim"}',
            '{"kind": "aim", "p_bow": "x", "p_arrow": [1,2,3]}',
            '{"kind": "aim", "p_bow": [1e999,0,0], "p_arrow": [0,0,0]}',
            '{"kind": "set_policy"}',
            '{"kind": "warp_drive"}',
        ]
        for frame in fuzz:
            replies = s.handle_message(frame)
            for r in replies:
                assert json.loads(r)["kind"] == "error"
            s.tick()
        # still fully functional
        scored = shoot(s, [1.2, 2.5, 1.5])
        assert scored["gate"] == "red"


class TestCli:
    def test_train_smoke_and_determinism(self, tmp_path, capsys):
        args = [
            "train",
            "--epochs",
            "2",
            "--weights-out",
            str(tmp_path / "w1.npz"),
            "--metrics-out",
            str(tmp_path / "m1.csv"),
        ]
        assert cli_main(args) == 0
        args2 = [a.replace("w1", "w2").replace("m1", "m2") for a in args]
        assert cli_main(args2) == 0
        m1 = (tmp_path / "m1.csv").read_bytes()
        m2 = (tmp_path / "m2.csv").read_bytes()
        assert m1 == m2
        a1 = a2c.load_agents(tmp_path / "w1.npz")
        a2_ = a2c.load_agents(tmp_path / "w2.npz")
        for x, y in zip(a1, a2_):
            for tx, ty in zip(x.actor.tensors(), y.actor.tensors()):
                assert np.array_equal(tx, ty)

    def test_missing_config_exit_2(self, capsys):
        assert cli_main(["train", "--config", "/no/such/file.yaml"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_bad_config_exit_2(self, tmp_path, capsys):
        p = tmp_path / "bad.yaml"
        p.write_text("env:\n  r_collide: -1\n")
        assert cli_main(["eval", "--config", str(p), "--policy", "random"]) == 2

    def test_layout_mismatch_exit_3(self, tmp_path, capsys):
        weights = tmp_path / "w.npz"
        assert (
            cli_main(
                [
                    "train",
                    "--epochs",
                    "1",
                    "--weights-out",
                    str(weights),
                    "--metrics-out",
                    str(tmp_path / "m.csv"),
                ]
            )
            == 0
        )
        cfg = tmp_path / "two.yaml"
        cfg.write_text(
            "env:\n  n_agents: 2\n  formation_targets:\n"
            "    - [-0.5, 0.4, 1.5]\n    - [0.5, 0.4, 1.5]\n"
        )
        code = cli_main(
            [
                "eval",
                "--config",
                str(cfg),
                "--weights",
                str(weights),
                "--policy",
                "drl",
                "--episodes",
                "2",
            ]
        )
        assert code == 3
        assert "weights error" in capsys.readouterr().err

    def test_eval_report_deterministic(self, tmp_path, capsys):
        args = [
            "eval",
            "--policy",
            "random",
            "--episodes",
            "30",
            "--no-latency",
            "--out",
            str(tmp_path / "r1.json"),
        ]
        assert cli_main(args) == 0
        out = capsys.readouterr().out
        assert "success rate" in out
        args2 = args[:-1] + [str(tmp_path / "r2.json")]
        assert cli_main(args2) == 0
        assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()

    def test_patterns_emit_and_analyze(self, tmp_path, capsys):
        sched = tmp_path / "schedule.csv"
        assert cli_main(["patterns", "emit", "--seed", "4", "--out", str(sched)]) == 0
        lines = sched.read_text().strip().splitlines()
        assert len(lines) == 37  # header + 36 trials
        responses = tmp_path / "resp.csv"
        rows = ["trial,presented,answered,timestamp"]
        for k, line in enumerate(lines[1:]):
            label = line.split(",")[1]
            rows.append(f"{k},{label},{label},{10.0 * k}")
        responses.write_text("\n".join(rows) + "\n")
        assert cli_main(["patterns", "analyze", "--responses", str(responses)]) == 0
        out = capsys.readouterr().out
        assert "overall recognition 100.0%" in out

    def test_eval_unknown_policy_rejected(self, capsys):
        with pytest.raises(SystemExit):
            cli_main(["eval", "--policy", "psychic"])


class TestServer:
    def test_frame_blend_alternates_at_double_rate(self):
        from swarmarcher.server import _frame_blend

        dt, hz = 0.1, 20.0
        steps = 0
        got = []
        for frame in range(9):
            t_frame = frame / hz
            while steps * dt < t_frame - 1e-9:
                steps += 1
            got.append(_frame_blend(steps * dt, t_frame, dt))
        for frame, blend in enumerate(got):
            if frame % 2 == 0:
                assert blend == 1.0, frame  # on-boundary frames stay exact
            else:
                assert abs(blend - 0.5) < 1e-9, frame

    def test_frame_blend_stays_exact_over_an_hour(self):
        from swarmarcher.server import _frame_blend

        dt, hz = 0.1, 20.0
        steps = 0
        for frame in range(72000):
            t_frame = frame / hz
            while steps * dt < t_frame - 1e-9:
                steps += 1
            blend = _frame_blend(steps * dt, t_frame, dt)
            if frame % 2 == 0:
                assert blend == 1.0, frame
            else:
                assert abs(blend - 0.5) < 1e-9, frame

    def test_live_round_trip(self):
        async def scenario():
            from swarmarcher.server import start_server
            import websockets

            rc = playable_config()
            server = await start_server(rc)
            port = server.sockets[0].getsockname()[1]
            try:
                async with websockets.connect(f"ws://127.0.0.1:{port}") as ws:
                    first = json.loads(await ws.recv())
                    assert first["kind"] == "telemetry"
                    assert first["phase"] == "aiming"
                    p_bow, p_arrow = aim_messages_for([1.2, 2.5, 1.5])
                    await ws.send(
                        protocol.encode_message(
                            "aim", {"p_bow": p_bow, "p_arrow": p_arrow}
                        )
                    )
                    preview = None
                    while preview is None:
                        m = json.loads(await ws.recv())
                        if m["kind"] == "telemetry" and m["aim"]:
                            preview = m["aim"]["trajectory"]
                    assert len(preview) >= 2
                    await ws.send('{"kind":"release"}')
                    while True:
                        m = json.loads(await ws.recv())
                        if m["kind"] == "scored":
                            assert m["gate"] == "red" and m["points"] == 5
                            break
                    await ws.send("][ not json")
                    while True:
                        m = json.loads(await ws.recv())
                        if m["kind"] == "error":
                            break
                    m = json.loads(await ws.recv())
                    assert m["kind"] == "telemetry"  # session survived
            finally:
                server.close()
                await server.wait_closed()

        asyncio.run(scenario())
