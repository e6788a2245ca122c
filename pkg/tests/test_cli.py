"""CLI surface tests, run in-process through main(argv)."""

import json
import subprocess
import sys

import pytest

from seekbench.cli import main
from seekbench.evaluate import CSV_HEADER
from seekbench.session import InProcessSim, SessionConfig
from seekbench.task import TaskConfig
from seekbench.worldgen import scene_from_json, scene_to_json, generate_scene


class TestEval:
    ARGS = ["eval", "--policy", "random", "--scenes", "4", "--episodes", "1",
            "--seed", "1", "--quiet"]

    def test_writes_csv_and_json(self, tmp_path):
        csv_path = tmp_path / "report.csv"
        json_path = tmp_path / "report.json"
        rc = main(self.ARGS + ["--out", str(csv_path), "--json", str(json_path)])
        assert rc == 0
        lines = csv_path.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 2
        report = json.loads(json_path.read_text())
        assert report["policy"] == "random"
        assert report["scenes"] == [4]
        assert len(report["rows"]) == 1

    def test_stdout_when_no_out(self, capsys):
        rc = main(self.ARGS)
        assert rc == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == CSV_HEADER

    def test_repeat_runs_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(self.ARGS + ["--out", str(a)])
        main(self.ARGS + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_policy_rejected(self):
        with pytest.raises(SystemExit):
            main(["eval", "--policy", "ppo", "--quiet"])

    def test_bad_scene_list_rejected(self):
        with pytest.raises(SystemExit):
            main(["eval", "--policy", "random", "--scenes", "4;5", "--quiet"])
        with pytest.raises(SystemExit):
            main(["eval", "--policy", "random", "--scenes", ",", "--quiet"])


class TestGenScenes:
    def test_writes_loadable_scene_files(self, tmp_path, capsys):
        rc = main(["gen-scenes", "--scenes", "1,2", "--out-dir", str(tmp_path)])
        assert rc == 0
        for seed in (1, 2):
            path = tmp_path / f"scene_{seed}.json"
            assert path.exists()
            world = scene_from_json(path.read_text())
            assert world.scene_seed == seed
            assert scene_to_json(world) == scene_to_json(generate_scene(seed))


class TestScore:
    def test_rescores_event_log(self, tmp_path, capsys):
        cfg = SessionConfig(scene_seed=4, episode_seed=2,
                            task=TaskConfig(episode_limit=8))
        sim = InProcessSim()
        sim.reset(cfg)
        for action in (1, 0, 0, 3, 2, 0, 1, 1):
            sim.act(action)
        info = sim.info(include_log=True)
        log_path = tmp_path / "episode.jsonl"
        log_path.write_text(
            "\n".join(json.dumps(e) for e in info["event_log"]) + "\n")

        rc = main(["score", str(log_path), "--targets", "30", "--limit", "8"])
        assert rc == 0
        out = dict(
            line.split("=", 1) for line in capsys.readouterr().out.splitlines()
        )
        res = info["result"]
        assert float(out["score"]) == res["score"]
        assert int(out["steps"]) == res["actions"]
        assert int(out["collisions"]) == res["collisions"]
        assert float(out["recall"]) == res["recall"]

    def test_accepts_whole_file_json_array(self, tmp_path, capsys):
        cfg = SessionConfig(scene_seed=4, episode_seed=2,
                            task=TaskConfig(episode_limit=3))
        sim = InProcessSim()
        sim.reset(cfg)
        for action in (1, 2, 1):
            sim.act(action)
        info = sim.info(include_log=True)
        log_path = tmp_path / "episode.json"
        log_path.write_text(json.dumps(info["event_log"]))
        rc = main(["score", str(log_path), "--limit", "3"])
        assert rc == 0
        out = dict(
            line.split("=", 1) for line in capsys.readouterr().out.splitlines()
        )
        assert int(out["steps"]) == 3


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "seekbench", "--help"],
            capture_output=True, text=True, timeout=60,
        )
        assert proc.returncode == 0
        for sub in ("serve", "eval", "gen-scenes", "score"):
            assert sub in proc.stdout
