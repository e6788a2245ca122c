"""End-to-end network tests on ephemeral ports: TCP command channel, UDP
odometry broadcast, websocket mirror, and transport/in-process equivalence."""

import base64
import json
import socket
import time

import pytest

from seekbench.client import OdometryReceiver, RemoteError, SimClient
from seekbench.netserver import SimServer
from seekbench.session import InProcessSim, SessionConfig
from seekbench.task import TaskConfig
from seekbench.worldgen import canonical_scene, export_mesh

HOST = "127.0.0.1"

ALL_MODALITIES = ["color", "depth", "seg", "inst", "pose", "lidar"]


@pytest.fixture(scope="module")
def server():
    srv = SimServer(host=HOST, port=0, odom_port=0, ws_port=0).start()
    yield srv
    srv.stop()


@pytest.fixture()
def client(server):
    with SimClient(HOST, server.port, timeout=10.0) as c:
        yield c


CFG = SessionConfig(scene_seed=4, episode_seed=3)


class TestTcpCommands:
    def test_ping(self, client):
        assert client.ping() == {"pong": True}

    def test_action_before_reset_rejected(self, client):
        with pytest.raises(RemoteError) as exc:
            client.act(0)
        assert exc.value.error == "StateError"

    def test_reset_info(self, server, client):
        info = client.reset(CFG)
        assert len(info["scene_digest"]) == 64
        assert info["scene_seed"] == 4
        assert info["episode_seed"] == 3
        assert len(info["spawn"]) == 3
        assert info["mode"] == "gt"
        assert info["backend"] in ("native", "pure")
        assert info["odom_port"] == server.odom_port
        assert client.session_id

    def test_receipts_match_in_process(self, client):
        client.reset(CFG)
        sim = InProcessSim()
        sim.reset(CFG)
        for action in (1, 0, 0, 2, 0, 3, 1):
            assert client.act(action) == sim.act(action)

    def test_observations_byte_identical_to_in_process(self, client):
        client.reset(CFG)
        sim = InProcessSim()
        sim.reset(CFG)
        for action in (0, 0, 1, 0):
            client.act(action)
            sim.act(action)
        h_net, b_net = client.get_obs_raw(ALL_MODALITIES)
        h_loc, b_loc = sim.get_obs_raw(ALL_MODALITIES)
        assert h_net == h_loc
        assert len(b_net) == len(b_loc) == len(ALL_MODALITIES)
        for name, left, right in zip(ALL_MODALITIES, b_net, b_loc):
            assert left == right, f"{name} buffers differ"

    def test_depth_buffer_size(self, client):
        client.reset(CFG)
        header, buffers = client.get_obs_raw(["depth"])
        assert header["dims"]["depth"] == [120, 160]
        assert header["dtypes"]["depth"] == "<f4"
        assert len(buffers[0]) == 120 * 160 * 4

    def test_unknown_modality_rejected(self, client):
        client.reset(CFG)
        with pytest.raises(RemoteError) as exc:
            client.get_obs_raw(["thermal"])
        assert exc.value.error == "ValueError"

    def test_episode_finished_reported(self, client):
        cfg = SessionConfig(scene_seed=4, episode_seed=1,
                            task=TaskConfig(episode_limit=2))
        client.reset(cfg)
        assert client.act(1)["done"] is False
        assert client.act(1)["done"] is True
        with pytest.raises(RemoteError) as exc:
            client.act(1)
        assert exc.value.error == "EpisodeFinishedError"

    def test_set_mode_switches_pose_estimate(self, client):
        client.reset(CFG)
        assert client.set_mode("perception") == {"mode": "perception"}
        header, _ = client.get_obs_raw(["pose"])
        assert header["pose_is_estimate"] is True
        client.set_mode("gt")
        header, _ = client.get_obs_raw(["pose"])
        assert header["pose_is_estimate"] is False

    def test_export_mesh_matches_direct_export(self, client):
        client.reset(CFG)
        over_wire = client.export_mesh("ply")
        direct = export_mesh(canonical_scene(4), "ply")
        assert over_wire == direct

    def test_info_reports_counters(self, client):
        client.reset(CFG)
        client.act(1)
        client.act(3)
        info = client.info(include_log=True)
        assert info["a"] == 2
        assert info["collect_attempts"] == 1
        assert len(info["event_log"]) == 2
        assert info["dt"] == pytest.approx(0.005)

    def test_sessions_are_isolated(self, server):
        with SimClient(HOST, server.port) as a, SimClient(HOST, server.port) as b:
            a.reset(CFG)
            with pytest.raises(RemoteError) as exc:
                b.act(0)
            assert exc.value.error == "StateError"

    def test_undecodable_frame_closes_connection(self, server):
        with socket.create_connection((HOST, server.port), timeout=5.0) as raw:
            raw.sendall(b"\x00\x00\x00\x00\x63")  # length 0, unregistered type
            assert raw.recv(1024) == b""  # server hangs up without a reply


class TestOdometryChannel:
    def _subscribed_receiver(self, server, client):
        rx = OdometryReceiver(HOST, server.odom_port, client.session_id)
        time.sleep(0.3)  # let the registration datagram land
        return rx

    def test_step_emits_one_packet_per_tick(self, server, client):
        client.reset(CFG)
        with self._subscribed_receiver(server, client) as rx:
            res = client.step(50)
            packets = rx.recv_n(50, timeout=10.0)
        assert len(packets) == 50
        ticks = [p["tick"] for p in packets]
        assert ticks == list(range(ticks[0], ticks[0] + 50))
        last = packets[-1]
        assert last["position"][0] == pytest.approx(res["pose"][0], abs=1e-9)
        assert last["position"][1] == pytest.approx(res["pose"][1], abs=1e-9)

    def test_discrete_action_broadcasts_trace(self, server, client):
        client.reset(CFG)
        with self._subscribed_receiver(server, client) as rx:
            receipt = client.act(1)  # turn in place: safe anywhere
            packets = rx.recv_n(400, timeout=5.0)
        assert packets, "no odometry broadcast for a movement action"
        ticks = [p["tick"] for p in packets]
        assert ticks == list(range(ticks[0], ticks[0] + len(packets)))
        assert packets[-1]["yaw"] == pytest.approx(receipt["pose"][2], abs=1e-9)

    def test_recv_timeout_returns_none(self, server, client):
        client.reset(CFG)
        with OdometryReceiver(HOST, server.odom_port, "nobody") as rx:
            assert rx.recv(timeout=0.2) is None


class TestDefaults:
    def test_cli_defaults_injected_and_overridable(self):
        srv = SimServer(host=HOST, port=0, odom_port=0,
                        default_mode="perception", default_scene_seed=5).start()
        try:
            with SimClient(HOST, srv.port) as c:
                info = c.reset({})
                assert info["mode"] == "perception"
                assert info["scene_seed"] == 5
                info = c.reset({"mode": "gt", "scene_seed": 2})
                assert info["mode"] == "gt"
                assert info["scene_seed"] == 2
        finally:
            srv.stop()


class TestWebsocketMirror:
    def _connect(self, server):
        from websockets.sync.client import connect
        return connect(f"ws://{HOST}:{server.ws_port}", close_timeout=2.0)

    def _rpc(self, ws, obj):
        ws.send(json.dumps(obj))
        return json.loads(ws.recv())

    def test_ping(self, server):
        with self._connect(server) as ws:
            assert self._rpc(ws, {"cmd": "ping"}) == {"type": "pong"}

    def test_malformed_json_is_protocol_error(self, server):
        with self._connect(server) as ws:
            ws.send("{nope")
            resp = json.loads(ws.recv())
            assert resp["type"] == "error"
            assert resp["error"] == "ProtocolError"

    def test_non_object_request_rejected(self, server):
        with self._connect(server) as ws:
            resp = self._rpc(ws, [1, 2, 3])
            assert resp["error"] == "ValueError"

    def test_unknown_command_rejected(self, server):
        with self._connect(server) as ws:
            resp = self._rpc(ws, {"cmd": "launch"})
            assert resp["error"] == "ValueError"
            assert "launch" in resp["message"]

    def test_obs_before_reset_rejected(self, server):
        with self._connect(server) as ws:
            resp = self._rpc(ws, {"cmd": "obs"})
            assert resp["error"] == "StateError"

    def test_full_loop_matches_in_process(self, server):
        from seekbench.session import session_config_to_json
        sim = InProcessSim()
        sim.reset(CFG)
        with self._connect(server) as ws:
            reset = self._rpc(ws, {"cmd": "reset",
                                   "config": session_config_to_json(CFG)})
            assert reset["type"] == "reset"
            assert reset["scene_seed"] == 4
            for action in (1, 0, 2):
                rec = self._rpc(ws, {"cmd": "action", "action": action})
                loc = sim.act(action)
                assert rec["pose"] == loc["pose"]
                assert rec["a"] == loc["a"]
            obs = self._rpc(ws, {"cmd": "obs", "modalities": ["depth", "seg"]})
            _, local_bufs = sim.get_obs_raw(["depth", "seg"])
            assert obs["type"] == "obs"
            for entry, expected in zip(obs["buffers"], local_bufs):
                assert base64.b64decode(entry["b64"]) == expected
