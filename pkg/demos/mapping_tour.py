"""
Mapping a known world from a scripted tour
==========================================

Scans taken at known poses are fused into a log-odds occupancy grid, saved in
the two-file PGM + YAML format, loaded back, and rendered next to ground truth.
"""
import sys
import tempfile
from pathlib import Path

import yaml

from desknav import scenario_path
from desknav.config import load_scenario
from desknav.harness import build_map, render
from desknav.kinematics import Pose2D
from desknav.mapping import UNKNOWN, load_map, save_map
from desknav.world import ScanParams, load_world

out = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="desknav-"))
out.mkdir(parents=True, exist_ok=True)

cfg = load_scenario(scenario_path("indoor"))
world = load_world(cfg.document)
tour = [Pose2D(*p) for p in yaml.safe_load(scenario_path("indoor_tour").read_text())]
print(f"{len(tour)} tour poses")

# noiseless 360-beam scans, one per pose
grid = build_map(world, tour, ScanParams())
classes = grid.classify()
truth = world.static_grid.classify()
seen = classes != UNKNOWN
print(f"observed {seen.mean():.1%} of cells, agreement {(classes[seen] == truth[seen]).mean():.4f}")

pgm, meta = save_map(grid, out, "indoor")
print(meta.read_text())
loaded, _ = load_map(out, "indoor")
assert (loaded.classify() == classes).all()

# the map as built, with the tour drawn through it
render(world, [], out / "map.ppm", map_grid=loaded, path=[(p.x, p.y) for p in tour], scale=3)
print("wrote", out / "map.ppm")
