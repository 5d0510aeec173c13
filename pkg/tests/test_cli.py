import json

import pytest
import yaml

from desknav import scenario_path
from desknav.cli import main
from desknav.config import load_scenario
from desknav.harness import build_map, run_scenario, trace_bytes
from desknav.kinematics import Pose2D
from desknav.mapping import load_map, save_map, to_costmap
from desknav.planning import PlanRequest, carrot_adjust_goal, inflate, load_path, plan
from desknav.world import load_world

INDOOR = str(scenario_path("indoor"))
TOUR = yaml.safe_load(scenario_path("indoor_tour").read_text())


def _kv(line):
    return dict(item.split("=", 1) for item in line.split())


@pytest.fixture
def saved_map(tmp_path):
    (tmp_path / "tour.yaml").write_text(yaml.safe_dump(TOUR))
    assert main(["map", "--scenario", INDOOR, "--tour", str(tmp_path / "tour.yaml"),
                 "--out", str(tmp_path / "maps")]) == 0
    return tmp_path / "maps" / "map"


def test_usage_errors_exit_2(capsys):
    assert main(["fly"]) == 2
    assert main(["run", "--scenario", INDOOR, "--bogus"]) == 2
    assert main([]) == 2
    assert main(["plan", "--map", "m", "--start", "1;2", "--goal", "1,2", "--out", "p"]) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_file_exit_1(tmp_path, capsys):
    missing = tmp_path / "nope.yaml"
    assert main(["run", "--scenario", str(missing), "--out", str(tmp_path / "o")]) == 1
    assert str(missing) in capsys.readouterr().err


def test_run_twice_identical(tmp_path, capsys):
    for sub in ("a", "b"):
        assert main(["run", "--scenario", INDOOR, "--seed", "7", "--out", str(tmp_path / sub)]) == 0
    a = (tmp_path / "a" / "trace.jsonl").read_bytes()
    assert a == (tmp_path / "b" / "trace.jsonl").read_bytes()
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 and lines[0] == lines[1]
    kv = _kv(lines[0])
    assert kv["command"] == "run" and kv["seed"] == "7" and kv["success"] == "True"
    assert json.loads((tmp_path / "a" / "metrics.json").read_text())["success"] is True


def test_run_matches_library(tmp_path):
    assert main(["run", "--scenario", INDOOR, "--seed", "5", "--out", str(tmp_path)]) == 0
    lib = run_scenario(load_scenario(INDOOR), seed=5)
    assert (tmp_path / "trace.jsonl").read_bytes() == trace_bytes(lib.trace)


def test_map_matches_library(saved_map, tmp_path):
    cfg = load_scenario(INDOOR)
    grid = build_map(load_world(cfg.document), [Pose2D(*p) for p in TOUR], cfg.scan)
    save_map(grid, tmp_path, "lib")
    assert (tmp_path / "lib.pgm").read_bytes() == saved_map.with_suffix(".pgm").read_bytes()


def test_plan_matches_library(saved_map, tmp_path):
    out = tmp_path / "p.jsonl"
    assert main(["plan", "--map", str(saved_map), "--start", "0.8,0.8", "--goal", "5.0,5.2",
                 "--algo", "astar", "--out", str(out)]) == 0
    grid, _ = load_map(saved_map.parent, "map")
    cm = inflate(to_costmap(grid), 0.2, 0.5, 5.0)
    lib = plan(cm, PlanRequest(Pose2D(0.8, 0.8), Pose2D(5.0, 5.2), "astar", 1.0))
    assert load_path(out) == [tuple(p) for p in lib.world_points]


def test_plan_goal_in_obstacle_is_adjusted(saved_map, tmp_path, capsys):
    out = tmp_path / "p.jsonl"
    # (1.4, 2.25) is inside a furniture block
    assert main(["plan", "--map", str(saved_map), "--start", "0.8,0.8", "--goal", "1.4,2.25",
                 "--out", str(out)]) == 0
    captured = capsys.readouterr()
    assert "carrot-adjusted" in captured.err
    assert _kv(captured.out)["goal_adjusted"] == "1"
    grid, _ = load_map(saved_map.parent, "map")
    cm = inflate(to_costmap(grid), 0.2, 0.5, 5.0)
    adj = carrot_adjust_goal(cm, Pose2D(0.8, 0.8), Pose2D(1.4, 2.25))
    last = load_path(out)[-1]
    assert cm.cell_of(*last) == cm.cell_of(adj.x, adj.y)


def test_plan_missing_map_exit_1(tmp_path):
    assert main(["plan", "--map", str(tmp_path / "none"), "--start", "0,0", "--goal", "1,1",
                 "--out", str(tmp_path / "p")]) == 1


def test_run_with_saved_path_and_render(saved_map, tmp_path, capsys):
    path = tmp_path / "p.jsonl"
    assert main(["plan", "--map", str(saved_map), "--start", "0.8,0.8", "--goal", "5.0,5.2",
                 "--out", str(path)]) == 0
    assert main(["run", "--scenario", INDOOR, "--path", str(path), "--out", str(tmp_path / "r")]) == 0
    assert main(["render", "--trace", str(tmp_path / "r" / "trace.jsonl"), "--scenario", INDOOR,
                 "--path", str(path), "--out", str(tmp_path / "fig.ppm")]) == 0
    assert (tmp_path / "fig.ppm").read_bytes().startswith(b"P6\n240 240\n255\n")
    kv = _kv(capsys.readouterr().out.strip().splitlines()[-1])
    assert kv["command"] == "render"


def test_batch_summary(tmp_path, capsys):
    assert main(["batch", "--scenario", INDOOR, "--seeds", "1..3", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "summary.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in rows[1:]] == ["1", "2", "3"]
    kv = _kv(capsys.readouterr().out)
    assert kv["runs"] == "3" and kv["success"] == "3"


def test_bad_seed_range_exit_2():
    assert main(["batch", "--scenario", INDOOR, "--seeds", "5..1", "--out", "x"]) == 2
