"""
Costmaps, Dijkstra and A*
=========================

The ground-truth map becomes a costmap, inflation keeps a disc robot off the
walls, and both planners search it. A goal inside furniture is walked back
toward the robot first.
"""
import time

from desknav import scenario_path
from desknav.config import load_scenario
from desknav.kinematics import Pose2D
from desknav.mapping import LETHAL, to_costmap
from desknav.planning import carrot_adjust_goal, inflate, plan_astar, plan_dijkstra, simplify_path
from desknav.world import load_world

cfg = load_scenario(scenario_path("indoor"))
world = load_world(cfg.document)
start, goal = cfg.task.start, cfg.task.goal

raw = to_costmap(world.static_grid)
cm = inflate(raw, robot_radius=0.2, inflation_radius=0.5, cost_scaling=5.0)
print(f"lethal cells: {(raw.cost == LETHAL).sum()} raw, {(cm.cost == LETHAL).sum()} inflated")

for name, fn in [("dijkstra", lambda: plan_dijkstra(cm, start, goal)),
                 ("astar w=1", lambda: plan_astar(cm, start, goal, 1.0)),
                 ("astar w=3", lambda: plan_astar(cm, start, goal, 3.0))]:
    t = time.perf_counter()
    path = fn()
    print(f"{name:10s} cost {path.total_cost:9.3f}  cells {len(path):4d}  "
          f"length {path.length():.2f} m  {1e3 * (time.perf_counter() - t):.0f} ms")

# fewer waypoints for the follower
waypoints = simplify_path(plan_dijkstra(cm, start, goal), 0.05)
print(f"{len(waypoints)} waypoints after simplification")

# goal in the middle of the desk at (1.4, 2.25)
blocked = Pose2D(1.4, 2.25)
print("carrot goal:", carrot_adjust_goal(cm, start, blocked))
