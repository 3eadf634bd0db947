"""Road geometry, vehicle mobility, and trajectory handling.

The synthetic scenario places vehicles on a grid of three dual-lane roads
per axis inside the configured region.  Real trajectories can be loaded
from CSV, rescaled into the region, resampled to the slot grid, and
sampled into per-run scenario subsets.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, ScenarioConfig

LANE_OFFSET_M = 2.0          # lane centerline offset from the road axis (4 m lanes)
ROADS_PER_AXIS = 3

_HEADING_VEC = {
    "u": (0.0, 1.0),
    "d": (0.0, -1.0),
    "l": (-1.0, 0.0),
    "r": (1.0, 0.0),
}


class ScenarioError(ValueError):
    pass


@dataclass
class VehicleState:
    id: int
    position: np.ndarray          # (3,) meters, z fixed at antenna height
    velocity: np.ndarray          # (2,) m/s
    heading: str                  # one of u/d/l/r, drives the turning rule
    speed: float
    is_target: bool = False
    v2v_peer: int | None = None

    def copy(self) -> "VehicleState":
        return VehicleState(
            id=self.id,
            position=self.position.copy(),
            velocity=self.velocity.copy(),
            heading=self.heading,
            speed=self.speed,
            is_target=self.is_target,
            v2v_peer=self.v2v_peer,
        )


class RoadGrid:
    """Lane coordinates for the dual-lane road grid (right-hand traffic)."""

    def __init__(self, width_m: float, height_m: float):
        self.width = width_m
        self.height = height_m
        xs = [width_m * (i + 1) / (ROADS_PER_AXIS + 1) for i in range(ROADS_PER_AXIS)]
        ys = [height_m * (i + 1) / (ROADS_PER_AXIS + 1) for i in range(ROADS_PER_AXIS)]
        self.up_lanes = [x + LANE_OFFSET_M for x in xs]
        self.down_lanes = [x - LANE_OFFSET_M for x in xs]
        self.right_lanes = [y - LANE_OFFSET_M for y in ys]
        self.left_lanes = [y + LANE_OFFSET_M for y in ys]
        self.vertical_axes = xs
        self.horizontal_axes = ys

    def lane_coordinate(self, heading: str, road: int) -> float:
        return {
            "u": self.up_lanes,
            "d": self.down_lanes,
            "r": self.right_lanes,
            "l": self.left_lanes,
        }[heading][road]


def _velocity(heading: str, speed: float) -> np.ndarray:
    dx, dy = _HEADING_VEC[heading]
    return np.array([dx * speed, dy * speed])


def build_grid_scenario(config: ScenarioConfig, rng_seed: int) -> list[VehicleState]:
    """Place vehicles on the lane grid, flag targets, and fix V2V pairings."""
    config.validate()
    rng = np.random.default_rng(rng_seed)
    grid = RoadGrid(config.region_width_m, config.region_height_m)
    z = config.vehicle_antenna_height_m
    headings = ["u", "d", "l", "r"]

    states: list[VehicleState] = []
    for vid in range(config.n_vehicles):
        heading = headings[rng.integers(0, 4)]
        road = int(rng.integers(0, ROADS_PER_AXIS))
        if heading in ("u", "d"):
            x = grid.lane_coordinate(heading, road)
            y = rng.uniform(0.0, config.region_height_m)
        else:
            x = rng.uniform(0.0, config.region_width_m)
            y = grid.lane_coordinate(heading, road)
        speed = rng.uniform(config.speed_range[0], config.speed_range[1])
        states.append(
            VehicleState(
                id=vid,
                position=np.array([x, y, z]),
                velocity=_velocity(heading, speed),
                heading=heading,
                speed=speed,
            )
        )

    if config.n_targets > 0:
        targets = rng.choice(config.n_vehicles, size=config.n_targets, replace=False)
        for t in targets:
            states[int(t)].is_target = True

    assign_v2v_pairs(states, config.n_pairs)
    return states


def assign_v2v_pairs(states: list[VehicleState], n_pairs: int) -> None:
    """Pair the first ``n_pairs`` vehicles with their nearest neighbors.

    Each pair has one transmitter (the vehicle itself) and one receiver;
    pairings are fixed for the episode.
    """
    if len(states) < 2:
        raise ScenarioError("no V2V peer available")
    positions = np.stack([s.position for s in states])
    for d in range(n_pairs):
        dist = np.linalg.norm(positions - positions[d], axis=1)
        dist[d] = np.inf
        states[d].v2v_peer = int(np.argmin(dist))


def step_mobility(
    grid: RoadGrid,
    states: list[VehicleState],
    dt: float,
    rng: np.random.Generator,
) -> list[VehicleState]:
    """Advance every vehicle by ``speed * dt`` along its lane.

    At each crossed intersection the vehicle keeps straight with
    probability 0.5, otherwise turns left or right with equal probability.
    At the region boundary it turns back inward onto the opposite lane of
    the same road.  Z stays fixed.
    """
    if dt < 0:
        raise ScenarioError("dt must be >= 0")
    out = []
    for s in states:
        ns = s.copy()
        if dt > 0:
            _advance_vehicle(grid, ns, ns.speed * dt, rng)
            ns.velocity = _velocity(ns.heading, ns.speed)
        out.append(ns)
    return out


def _advance_vehicle(grid: RoadGrid, s: VehicleState, dist: float, rng: np.random.Generator):
    # Walk segment by segment so multiple intersections in one step still work.
    guard = 0
    while dist > 0 and guard < 16:
        guard += 1
        moved = _advance_to_next_event(grid, s, dist, rng)
        dist -= moved
        if moved <= 0:
            break


def _advance_to_next_event(grid, s, dist, rng) -> float:
    x, y = float(s.position[0]), float(s.position[1])
    heading = s.heading
    dx, dy = _HEADING_VEC[heading]

    # Distance to the first perpendicular road axis ahead, if within reach.
    axes = grid.horizontal_axes if heading in ("u", "d") else grid.vertical_axes
    coord = y if heading in ("u", "d") else x
    direction = dy if heading in ("u", "d") else dx
    cross_dist = None
    cross_road = None
    for i, a in enumerate(axes):
        gap = (a - coord) * direction
        if 1e-9 < gap <= dist and (cross_dist is None or gap < cross_dist):
            cross_dist = gap
            cross_road = i

    if cross_dist is not None:
        # Move to the intersection, then maybe turn.
        x += dx * cross_dist
        y += dy * cross_dist
        u = rng.random()
        if u >= 0.5:
            turn_left = u < 0.75
            new_heading = _turned_heading(heading, left=turn_left)
            if new_heading in ("u", "d"):
                x = grid.lane_coordinate(new_heading, cross_road)
            else:
                y = grid.lane_coordinate(new_heading, cross_road)
            s.heading = new_heading
        s.position[0], s.position[1] = x, y
        return cross_dist

    # Plain straight move, bounce at the boundary.
    x += dx * dist
    y += dy * dist
    if not (0.0 <= x <= grid.width and 0.0 <= y <= grid.height):
        x, y = _bounce_inward(grid, s, x, y)
    s.position[0], s.position[1] = x, y
    return dist


def _turned_heading(heading: str, left: bool) -> str:
    order = ["u", "l", "d", "r"]        # counter-clockwise
    i = order.index(heading)
    return order[(i + 1) % 4] if left else order[(i - 1) % 4]


def _bounce_inward(grid, s, x, y):
    """Reverse direction onto the opposite lane of the same road."""
    heading = s.heading
    if heading in ("u", "d"):
        road = _nearest_index(grid.up_lanes if heading == "u" else grid.down_lanes, x)
        s.heading = "d" if heading == "u" else "u"
        x = grid.lane_coordinate(s.heading, road)
        y = min(max(y, 0.0), grid.height)
    else:
        road = _nearest_index(grid.right_lanes if heading == "r" else grid.left_lanes, y)
        s.heading = "l" if heading == "r" else "r"
        y = grid.lane_coordinate(s.heading, road)
        x = min(max(x, 0.0), grid.width)
    return x, y


def _nearest_index(values: list[float], v: float) -> int:
    return min(range(len(values)), key=lambda i: abs(values[i] - v))


# ---------------------------------------------------------------------------
# Trajectory playback
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    vehicle_id: str
    times: np.ndarray            # (n,) seconds, strictly increasing
    points: np.ndarray           # (n, 2) meters

    @property
    def path_length(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


@dataclass
class TrajectorySet:
    trajectories: list[Trajectory]
    strategy: str | None = None

    def __len__(self) -> int:
        return len(self.trajectories)


CSV_HEADER = ["vehicle_id", "timestamp_s", "x_m", "y_m"]


def load_trajectories(path: str, config: ScenarioConfig) -> TrajectorySet:
    """Load a trajectory CSV, rescale it into the region, resample to the slot grid.

    The file must carry the header ``vehicle_id,timestamp_s,x_m,y_m`` with
    rows grouped by vehicle and strictly increasing timestamps per vehicle.
    Positions are affinely mapped from the dataset bounding box onto the
    region rectangle, then linearly interpolated at ``slot_duration_s``
    steps for ``episode_slots`` samples per trajectory.
    """
    raw: dict[str, list[tuple[float, float, float]]] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ScenarioError(f"{path}: empty trajectory file")
        if [h.strip() for h in header] != CSV_HEADER:
            raise ScenarioError(f"{path}: bad header, expected {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ScenarioError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            vid = row[0].strip()
            try:
                t, x, y = float(row[1]), float(row[2]), float(row[3])
            except ValueError as exc:
                raise ScenarioError(f"{path}:{lineno}: {exc}") from exc
            if vid in raw and raw[vid] and t <= raw[vid][-1][0]:
                raise ScenarioError(f"{path}:{lineno}: timestamps not increasing for vehicle {vid}")
            if vid not in raw:
                raw[vid] = []
                order.append(vid)
            raw[vid].append((t, x, y))
    if not raw:
        raise ScenarioError(f"{path}: empty trajectory file")

    all_pts = np.array([(x, y) for rows in raw.values() for (_, x, y) in rows])
    lo = all_pts.min(axis=0)
    hi = all_pts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    region = np.array([config.region_width_m, config.region_height_m])

    trajectories = []
    for vid in order:
        rows = np.array(raw[vid])
        times = rows[:, 0]
        pts = (rows[:, 1:3] - lo) / span * region
        grid_t = times[0] + np.arange(config.episode_slots) * config.slot_duration_s
        xs = np.interp(grid_t, times, pts[:, 0])
        ys = np.interp(grid_t, times, pts[:, 1])
        trajectories.append(
            Trajectory(
                vehicle_id=vid,
                times=grid_t - times[0],
                points=np.column_stack([xs, ys]),
            )
        )
    return TrajectorySet(trajectories)


def sample_trajectories(
    tset: TrajectorySet,
    strategy: str,
    count: int,
    rng: np.random.Generator,
) -> TrajectorySet:
    """Pick ``count`` trajectories by the given strategy.

    random: uniform without replacement.  area_balanced: the region is cut
    into a 2x2 grid of cells and selection round-robins cells keyed by each
    trajectory's start point.  longest: descending total path length, ties
    broken by position in the set.
    """
    n = len(tset)
    if count > n:
        raise ScenarioError(f"requested {count} trajectories, only {n} available")
    trajs = tset.trajectories
    if strategy == "random":
        idx = rng.choice(n, size=count, replace=False)
        chosen = [trajs[int(i)] for i in idx]
    elif strategy == "longest":
        ranked = sorted(range(n), key=lambda i: (-trajs[i].path_length, i))
        chosen = [trajs[i] for i in ranked[:count]]
    elif strategy == "area_balanced":
        starts = np.stack([t.points[0] for t in trajs])
        mid = starts.max(axis=0) / 2.0 + starts.min(axis=0) / 2.0
        cells: list[list[int]] = [[], [], [], []]
        for i, p in enumerate(starts):
            cell = int(p[0] >= mid[0]) + 2 * int(p[1] >= mid[1])
            cells[cell].append(i)
        for bucket in cells:
            rng.shuffle(bucket)
        chosen_idx: list[int] = []
        c = 0
        while len(chosen_idx) < count:
            if cells[c % 4]:
                chosen_idx.append(cells[c % 4].pop(0))
            c += 1
        chosen = [trajs[i] for i in chosen_idx]
    else:
        raise ScenarioError(f"unknown sampling strategy {strategy!r}")
    return TrajectorySet([t for t in chosen], strategy=strategy)


def playback_scenario(
    config: ScenarioConfig,
    tset: TrajectorySet,
    rng_seed: int,
) -> tuple[list[VehicleState], np.ndarray]:
    """Build vehicle states from trajectory playback.

    Returns the initial states plus the full position array of shape
    (V, episode_slots, 2) used to drive mobility.
    """
    config.validate()
    if len(tset) < config.n_vehicles:
        raise ScenarioError(
            f"need {config.n_vehicles} trajectories, set holds {len(tset)}"
        )
    rng = np.random.default_rng(rng_seed)
    z = config.vehicle_antenna_height_m
    states = []
    playback = np.zeros((config.n_vehicles, config.episode_slots, 2))
    for vid in range(config.n_vehicles):
        traj = tset.trajectories[vid]
        playback[vid] = traj.points
        p0 = traj.points[0]
        if len(traj.points) > 1:
            v0 = (traj.points[1] - traj.points[0]) / config.slot_duration_s
        else:
            v0 = np.zeros(2)
        speed = float(np.linalg.norm(v0))
        states.append(
            VehicleState(
                id=vid,
                position=np.array([p0[0], p0[1], z]),
                velocity=v0.astype(float),
                heading="r",
                speed=speed if speed > 0 else config.speed_range[0],
            )
        )
    if config.n_targets > 0:
        targets = rng.choice(config.n_vehicles, size=config.n_targets, replace=False)
        for t in targets:
            states[int(t)].is_target = True
    assign_v2v_pairs(states, config.n_pairs)
    return states, playback


def generate_trajectory_csv(
    path: str,
    n_vehicles: int,
    seed: int,
    region: tuple[float, float] = (650.0, 450.0),
    duration_s: float = 60.0,
    period_s: float = 1.0,
    speed_range: tuple[float, float] = (10.0, 15.0),
) -> None:
    """Write a synthetic random-waypoint trajectory CSV (test fixture input)."""
    rng = np.random.default_rng(seed)
    w, h = region
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for vid in range(n_vehicles):
            pos = np.array([rng.uniform(0, w), rng.uniform(0, h)])
            target = np.array([rng.uniform(0, w), rng.uniform(0, h)])
            speed = rng.uniform(*speed_range)
            t = 0.0
            while t <= duration_s:
                writer.writerow([f"veh{vid}", f"{t:.3f}", f"{pos[0]:.3f}", f"{pos[1]:.3f}"])
                step = speed * period_s
                to_target = target - pos
                dist = np.linalg.norm(to_target)
                while dist < step:
                    pos = target.copy()
                    target = np.array([rng.uniform(0, w), rng.uniform(0, h)])
                    speed = rng.uniform(*speed_range)
                    to_target = target - pos
                    dist = np.linalg.norm(to_target)
                    step = speed * period_s
                pos = pos + to_target / dist * step
                t += period_s
