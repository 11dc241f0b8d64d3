"""Deterministic 2D kinematic world for the navigation task.

Square arena with axis-aligned rectangular obstacles generated by
grid-partitioned Latin hypercube sampling.  The robot is an oriented
rectangle that senses with ray-cast proximity sensors, acts by rotating
in place then translating, and fails a scenario on any contact.  Every
rollout is a pure function of (genome, robot spec, scenario), so runs
reproduce bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _rollout
from .criteria import ConfigurationError, ScenarioResult, experience_dim
from .genome import Genome

MAX_STEPS = 1000       # hard cap per scenario; guards tiny-step spinning
SUBSTEPS = 10          # swept-collision resolution along a translation
N_ACTIONS = 2

OUTCOME_NAMES = {
    _rollout.SUCCESS: "success",
    _rollout.TIMEOUT: "timeout",
    _rollout.COLLISION: "collision",
    _rollout.STEP_CAP: "step_cap",
}


@dataclass(frozen=True, eq=False)
class RobotSpec:
    name: str
    n_sensors: int
    sensor_mounts: np.ndarray   # (S, 2) body-frame positions, +x forward
    sensor_dirs: np.ndarray     # (S, 2) body-frame unit directions
    body_half_extents: tuple[float, float]
    sensor_max_range: float
    translate_bounds: tuple[float, float]
    rated_velocity: float
    # Length scale of the goal signal 1/d: fixed per robot so the signal
    # input means the same thing in every scenario, seen or unseen.
    signal_scale: float = 1.0
    rotate_bounds: tuple[float, float] = (-math.pi, math.pi)

    @property
    def n_inputs(self) -> int:
        # sensor readings + signal + two signal gradients
        return self.n_sensors + 3

    @property
    def n_actions(self) -> int:
        return N_ACTIONS


def ugv_spec() -> RobotSpec:
    """Indoor UGV: 0.5 m square body, eight proximity sensors mounted in
    pairs 0.075 m apart on each edge, pointing along the edge normals."""
    half = 0.25
    off = 0.0375
    mounts = np.array([
        (half, -off), (half, off),      # front edge, +x normal
        (-off, half), (off, half),      # left edge, +y normal
        (-half, off), (-half, -off),    # rear edge, -x normal
        (off, -half), (-off, -half),    # right edge, -y normal
    ], dtype=np.float64)
    dirs = np.array([
        (1, 0), (1, 0),
        (0, 1), (0, 1),
        (-1, 0), (-1, 0),
        (0, -1), (0, -1),
    ], dtype=np.float64)
    return RobotSpec(name="ugv", n_sensors=8, sensor_mounts=mounts,
                     sensor_dirs=dirs, body_half_extents=(half, half),
                     sensor_max_range=3.0, translate_bounds=(0.1, 2.0),
                     rated_velocity=1.0, signal_scale=0.5)


def swarm_spec() -> RobotSpec:
    """8 cm x 6 cm swarm robot with three forward-facing sensors."""
    mounts = np.array([(0.04, -0.02), (0.04, 0.0), (0.04, 0.02)],
                      dtype=np.float64)
    dirs = np.array([(1, 0), (1, 0), (1, 0)], dtype=np.float64)
    return RobotSpec(name="swarm", n_sensors=3, sensor_mounts=mounts,
                     sensor_dirs=dirs, body_half_extents=(0.04, 0.03),
                     sensor_max_range=0.5, translate_bounds=(0.01, 0.08),
                     rated_velocity=0.1, signal_scale=0.1)


ROBOT_SPECS = {"ugv": ugv_spec, "swarm": swarm_spec}


def robot_spec(name: str) -> RobotSpec:
    try:
        return ROBOT_SPECS[name.lower()]()
    except KeyError:
        raise ConfigurationError(
            f"unknown robot {name!r}; expected one of {sorted(ROBOT_SPECS)}")


@dataclass(frozen=True, eq=False)
class Environment:
    side: float
    obstacles: np.ndarray  # (O, 4) rows of (cx, cy, hx, hy)

    def __post_init__(self):
        obs = np.asarray(self.obstacles, dtype=np.float64).reshape(-1, 4)
        object.__setattr__(self, "obstacles", obs)


@dataclass(frozen=True)
class Scenario:
    env: Environment
    start_pose: tuple[float, float, float]
    goal: tuple[float, float]
    time_budget: float
    goal_tolerance: float


@dataclass(frozen=True)
class RobotState:
    pose: tuple[float, float, float]
    elapsed: float = 0.0
    last_signal: float = 0.0   # signal one step back
    prev_signal: float = 0.0   # signal two steps back


def rects_overlap(a, b) -> bool:
    """Open-interval AABB overlap; touching edges do not count."""
    return (abs(a[0] - b[0]) < a[2] + b[2]
            and abs(a[1] - b[1]) < a[3] + b[3])


def generate_environment(side: float, n_per_grid: int, size_range,
                         rng: np.random.Generator) -> Environment:
    """Obstacles via Latin hypercube sampling in each quadrant of the
    arena.

    Each of the 2x2 grids gets its own 4-D LHS design over (center-x,
    center-y, width, height).  Rejected candidates (out of bounds or
    overlapping an accepted obstacle) are redrawn inside their assigned
    strata, which preserves the stratification; after 50 tries a
    candidate is skipped.
    """
    lo, hi = float(size_range[0]), float(size_range[1])
    if n_per_grid < 0 or lo <= 0 or hi < lo:
        raise ValueError("need n_per_grid >= 0 and 0 < size lo <= hi")
    half = side / 2.0
    accepted: list[tuple[float, float, float, float]] = []
    for gy0 in (0.0, half):
        for gx0 in (0.0, half):
            if n_per_grid == 0:
                continue
            perms = [rng.permutation(n_per_grid) for _ in range(4)]
            for j in range(n_per_grid):
                strata = [int(perms[d][j]) for d in range(4)]
                for _try in range(50):
                    u = rng.random(4)
                    cx = gx0 + (strata[0] + u[0]) * half / n_per_grid
                    cy = gy0 + (strata[1] + u[1]) * half / n_per_grid
                    w = lo + (strata[2] + u[2]) * (hi - lo) / n_per_grid
                    h = lo + (strata[3] + u[3]) * (hi - lo) / n_per_grid
                    cand = (cx, cy, w / 2.0, h / 2.0)
                    if (cx - cand[2] < 0.0 or cx + cand[2] > side
                            or cy - cand[3] < 0.0 or cy + cand[3] > side):
                        continue
                    if any(rects_overlap(cand, other) for other in accepted):
                        continue
                    accepted.append(cand)
                    break
    obstacles = (np.array(accepted, dtype=np.float64)
                 if accepted else np.zeros((0, 4), dtype=np.float64))
    return Environment(side=float(side), obstacles=obstacles)


# --- reference geometry (scalar mirrors of the compiled kernel) -------------

def point_in_obstacle(env: Environment, x: float, y: float) -> bool:
    for cx, cy, hx, hy in env.obstacles:
        if abs(x - cx) <= hx and abs(y - cy) <= hy:
            return True
    return False


def body_collides(spec: RobotSpec, env: Environment, x: float, y: float,
                  heading: float) -> bool:
    """True when the body rectangle overlaps an obstacle or pokes out of
    the arena."""
    c = math.cos(heading)
    s = math.sin(heading)
    return bool(_rollout._collides.py_func(
        x, y, c, s, spec.body_half_extents[0], spec.body_half_extents[1],
        env.obstacles, env.side))


def sense(spec: RobotSpec, env: Environment, pose) -> np.ndarray:
    """Distance reading per mounted sensor: nearest obstacle or wall
    along the sensor ray, clipped into [0, max_range]."""
    x, y, heading = pose
    c = math.cos(heading)
    s = math.sin(heading)
    out = np.empty(spec.n_sensors, dtype=np.float64)
    _rollout._sense_into.py_func(
        x, y, c, s, spec.sensor_mounts, spec.sensor_dirs,
        env.obstacles, env.side, spec.sensor_max_range, out)
    return out


def goal_signal(distance: float, scale: float) -> float:
    """Reciprocal-of-distance goal signal, scaled into (0, 1] by the
    robot's fixed length scale."""
    return scale / (distance if distance > scale else scale)


def network_inputs(spec: RobotSpec, state: RobotState, readings,
                   signal: float) -> np.ndarray:
    """Input vector: normalized readings, current signal, then the two
    most recent one-step signal differences (zero until enough history)."""
    readings = np.asarray(readings, dtype=np.float64)
    if readings.shape != (spec.n_sensors,):
        raise ValueError(f"expected {spec.n_sensors} readings, "
                         f"got shape {readings.shape}")
    vec = np.empty(spec.n_inputs, dtype=np.float64)
    vec[:spec.n_sensors] = readings / spec.sensor_max_range
    vec[spec.n_sensors] = signal
    vec[spec.n_sensors + 1] = signal - state.last_signal
    vec[spec.n_sensors + 2] = state.last_signal - state.prev_signal
    return vec


def apply_action(spec: RobotSpec, env: Environment, state: RobotState,
                 raw_outputs) -> tuple[RobotState, bool]:
    """Rotate in place, then translate with a swept collision check.

    raw_outputs come straight from the network in [-1, 1]: the first
    maps to a rotation in [-pi, pi], the second affinely into the
    spec's translation bounds.  Motion stops at the last collision-free
    sub-step; a blocked rotation leaves the pose untouched.  Rotation
    costs no time; translation advances the clock at rated velocity.
    Signal history is left for the caller to shift.
    """
    raw0, raw1 = float(raw_outputs[0]), float(raw_outputs[1])
    x, y, h = state.pose
    bhx, bhy = spec.body_half_extents
    lo_t, hi_t = spec.translate_bounds
    theta = raw0 * math.pi
    h_new = h + theta
    if h_new > math.pi:
        h_new -= 2.0 * math.pi
    elif h_new <= -math.pi:
        h_new += 2.0 * math.pi
    dist = lo_t + (raw1 + 1.0) * 0.5 * (hi_t - lo_t)
    c = math.cos(h_new)
    s = math.sin(h_new)
    collided = False
    if _rollout._collides.py_func(x, y, c, s, bhx, bhy,
                                  env.obstacles, env.side):
        collided = True
        d_actual = 0.0
        h_new = h
    else:
        free = 0
        for i in range(1, SUBSTEPS + 1):
            step_d = dist * i / SUBSTEPS
            xi = x + c * step_d
            yi = y + s * step_d
            if _rollout._collides.py_func(xi, yi, c, s, bhx, bhy,
                                          env.obstacles, env.side):
                collided = True
                break
            free = i
        d_actual = dist * free / SUBSTEPS
        x = x + c * d_actual
        y = y + s * d_actual
    new_state = replace(state, pose=(x, y, h_new),
                        elapsed=state.elapsed + d_actual / spec.rated_velocity)
    return new_state, collided


def simulate_scenario(genome: Genome, spec: RobotSpec, scenario: Scenario,
                      rng=None) -> ScenarioResult:
    """Roll one genome through one scenario (sense, decide, act) until
    goal, timeout, collision, or the step cap.

    The rollout is fully deterministic; ``rng`` is accepted for
    interface symmetry and never drawn from.
    """
    if genome.n_inputs != spec.n_inputs or genome.n_outputs != N_ACTIONS:
        raise ConfigurationError(
            f"genome I/O ({genome.n_inputs}/{genome.n_outputs}) does not "
            f"match robot {spec.name!r} ({spec.n_inputs}/{N_ACTIONS})")
    plan = genome.plan()
    sx, sy, sh = scenario.start_pose
    gx, gy = scenario.goal
    d0 = math.sqrt((gx - sx) ** 2 + (gy - sy) ** 2)
    if d0 <= 0.0:
        raise ConfigurationError("scenario start coincides with its goal")

    dim = experience_dim(spec.n_sensors)
    traj = np.zeros((MAX_STEPS + 1, 3), dtype=np.float64)
    actions = np.zeros((MAX_STEPS, 2), dtype=np.float64)
    collided = np.zeros(MAX_STEPS, dtype=np.uint8)
    experience = np.zeros((MAX_STEPS, dim), dtype=np.float64)

    n_steps, code, elapsed, final_dist, t_rem = _rollout.rollout(
        plan.order, plan.in_ptr, plan.in_src, plan.in_w,
        plan.n_nodes, spec.n_sensors,
        spec.sensor_mounts, spec.sensor_dirs, spec.sensor_max_range,
        spec.body_half_extents[0], spec.body_half_extents[1],
        spec.translate_bounds[0], spec.translate_bounds[1],
        spec.rated_velocity,
        scenario.env.obstacles, scenario.env.side,
        sx, sy, sh, gx, gy,
        scenario.goal_tolerance, spec.signal_scale, scenario.time_budget,
        MAX_STEPS, SUBSTEPS,
        traj, actions, collided, experience)

    fx, fy = traj[n_steps, 0], traj[n_steps, 1]
    return ScenarioResult(
        success=(code == _rollout.SUCCESS),
        t_total=d0 / spec.rated_velocity,
        t_remaining=float(t_rem),
        elapsed=float(elapsed),
        final_distance=float(final_dist),
        experience_points=experience[:n_steps].copy(),
        final_displacement=math.sqrt((fx - sx) ** 2 + (fy - sy) ** 2),
        trajectory=traj[:n_steps + 1].copy(),
        actions=actions[:n_steps].copy(),
        collided_steps=collided[:n_steps].copy(),
        outcome=OUTCOME_NAMES[code])


# --- scenario text format ----------------------------------------------------

def dumps_scenario(sc: Scenario) -> str:
    lines = [f"arena {sc.env.side:.17g}"]
    for cx, cy, hx, hy in sc.env.obstacles:
        lines.append(f"obstacle {cx:.17g} {cy:.17g} {hx:.17g} {hy:.17g}")
    sx, sy, sh = sc.start_pose
    lines.append(f"start {sx:.17g} {sy:.17g} {sh:.17g}")
    lines.append(f"goal {sc.goal[0]:.17g} {sc.goal[1]:.17g}")
    lines.append(f"budget {sc.time_budget:.17g}")
    lines.append(f"tolerance {sc.goal_tolerance:.17g}")
    return "\n".join(lines) + "\n"


def loads_scenario(text: str) -> Scenario:
    side = None
    obstacles = []
    start = goal = budget = tolerance = None
    for ln in text.splitlines():
        tok = ln.split()
        if not tok:
            continue
        key, vals = tok[0], [float(v) for v in tok[1:]]
        if key == "arena" and len(vals) == 1:
            side = vals[0]
        elif key == "obstacle" and len(vals) == 4:
            obstacles.append(tuple(vals))
        elif key == "start" and len(vals) == 3:
            start = tuple(vals)
        elif key == "goal" and len(vals) == 2:
            goal = tuple(vals)
        elif key == "budget" and len(vals) == 1:
            budget = vals[0]
        elif key == "tolerance" and len(vals) == 1:
            tolerance = vals[0]
        else:
            raise ValueError(f"malformed scenario line: {ln!r}")
    if None in (side, start, goal, budget, tolerance):
        raise ValueError("scenario file missing a required record")
    env = Environment(side=side,
                      obstacles=np.array(obstacles, dtype=np.float64)
                      if obstacles else np.zeros((0, 4)))
    return Scenario(env=env, start_pose=start, goal=goal,
                    time_budget=budget, goal_tolerance=tolerance)


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_scenario(sc))


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="ascii") as fh:
        return loads_scenario(fh.read())


def write_trajectory_csv(result: ScenarioResult, path) -> None:
    """Row per executed action: post-step pose, the commanded action,
    and whether the step ended in contact.  Row 0 is the start pose."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("step,x,y,heading,action_rot,action_trans,collided\n")
        traj = result.trajectory
        fh.write(f"0,{traj[0, 0]:.17g},{traj[0, 1]:.17g},"
                 f"{traj[0, 2]:.17g},0,0,0\n")
        for i in range(result.actions.shape[0]):
            fh.write(f"{i + 1},{traj[i + 1, 0]:.17g},{traj[i + 1, 1]:.17g},"
                     f"{traj[i + 1, 2]:.17g},{result.actions[i, 0]:.17g},"
                     f"{result.actions[i, 1]:.17g},"
                     f"{int(result.collided_steps[i])}\n")
