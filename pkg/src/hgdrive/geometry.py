"""Four-way intersection geometry and route arithmetic.

Layout: two orthogonal two-lane-per-direction roads crossing at the origin,
4 m lanes, right-hand traffic, 100 m legs. The shared conflict zone is the
square |x|, |y| <= 8. Straight-through routes keep their lane; left turns are
quarter-circle arcs whose radius depends on the entry lane. Vehicles live on
routes and are positioned by arclength, so kinematics stay one-dimensional
and poses are derived exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

LANE_WIDTH = 4.0
LEG_LENGTH = 100.0
HALF_ZONE = 8.0  # conflict zone: |x|, |y| <= HALF_ZONE
LANES_PER_DIRECTION = 2
VEHICLE_LENGTH = 5.0
VEHICLE_WIDTH = 2.0
CONFLICT_RADIUS = 3.0  # centerline clearance below which crossing routes conflict


class Approach(Enum):
    """Compass side a vehicle enters from."""

    SOUTH = 0
    NORTH = 1
    WEST = 2
    EAST = 3


_DIRECTIONS = {
    Approach.SOUTH: (np.array([0.0, 1.0]), np.array([1.0, 0.0])),
    Approach.NORTH: (np.array([0.0, -1.0]), np.array([-1.0, 0.0])),
    Approach.WEST: (np.array([1.0, 0.0]), np.array([0.0, -1.0])),
    Approach.EAST: (np.array([-1.0, 0.0]), np.array([0.0, 1.0])),
}


def _rot90(v: np.ndarray) -> np.ndarray:
    return np.array([-v[1], v[0]])


def lane_offset(lane: int) -> float:
    """Centerline offset to the driver's right of the road axis; lane 0 is inner."""
    return LANE_WIDTH / 2 + LANE_WIDTH * lane


@dataclass
class StraightSeg:
    start: np.ndarray
    direction: np.ndarray  # unit
    length: float

    def position(self, s: float):
        p = self.start + self.direction * s
        return p[0], p[1], math.atan2(self.direction[1], self.direction[0])

    def project(self, point: np.ndarray):
        s = float(np.dot(point - self.start, self.direction))
        s = min(max(s, 0.0), self.length)
        foot = self.start + self.direction * s
        return s, float(np.hypot(*(point - foot)))


@dataclass
class ArcSeg:
    """Counter-clockwise circular arc (left turns only)."""

    center: np.ndarray
    radius: float
    angle0: float
    sweep: float

    @property
    def length(self) -> float:
        return self.radius * self.sweep

    def position(self, s: float):
        ang = self.angle0 + s / self.radius
        x = self.center[0] + self.radius * math.cos(ang)
        y = self.center[1] + self.radius * math.sin(ang)
        return x, y, ang + math.pi / 2

    def project(self, point: np.ndarray):
        rel = point - self.center
        ang = math.atan2(rel[1], rel[0])
        delta = (ang - self.angle0) % (2 * math.pi)
        if delta > self.sweep:
            # outside the angular span: clamp to the nearer endpoint
            delta = 0.0 if (delta - self.sweep) % (2 * math.pi) > (2 * math.pi - delta) else self.sweep
        s = delta * self.radius
        x, y, _ = self.position(s)
        return s, float(np.hypot(point[0] - x, point[1] - y))


@dataclass
class Route:
    """Tangent-continuous path: approach leg, zone crossing, exit leg."""

    approach: Approach
    lane: int
    movement: str  # "straight" | "left"
    segments: list = field(default_factory=list)
    zone_enter: float = 0.0  # arclength where the centerline enters the zone
    zone_exit: float = 0.0

    @property
    def length(self) -> float:
        return sum(seg.length for seg in self.segments)

    def position(self, s: float):
        """(x, y, heading) at arclength s; overruns extrapolate the last leg."""
        if s < 0.0:
            s = 0.0
        remaining = s
        for seg in self.segments[:-1]:
            if remaining <= seg.length:
                return seg.position(remaining)
            remaining -= seg.length
        return self.segments[-1].position(remaining)

    def project(self, x: float, y: float):
        """(arclength, distance) of the nearest centerline point."""
        point = np.array([x, y])
        best_s, best_d = 0.0, float("inf")
        offset = 0.0
        for seg in self.segments:
            s, d = seg.project(point)
            if d < best_d:
                best_s, best_d = offset + s, d
            offset += seg.length
        return best_s, best_d

    def zone_samples(self, spacing: float = 0.25) -> np.ndarray:
        """Centerline points inside the conflict zone, for conflict tests."""
        n = max(2, int((self.zone_exit - self.zone_enter) / spacing) + 1)
        ss = np.linspace(self.zone_enter, self.zone_exit, n)
        return np.array([self.position(s)[:2] for s in ss])


def build_route(approach: Approach, lane: int, movement: str) -> Route:
    d, r = _DIRECTIONS[approach]
    off = lane_offset(lane)
    start = -d * (LEG_LENGTH + HALF_ZONE) + r * off
    entry = -d * HALF_ZONE + r * off
    route = Route(approach=approach, lane=lane, movement=movement)
    route.segments.append(StraightSeg(start=start, direction=d, length=LEG_LENGTH))
    if movement == "straight":
        route.segments.append(StraightSeg(entry, d, 2 * HALF_ZONE))
        route.segments.append(StraightSeg(d * HALF_ZONE + r * off, d, LEG_LENGTH))
        mid_len = 2 * HALF_ZONE
    elif movement == "left":
        center = -(d + r) * HALF_ZONE
        radius = HALF_ZONE + off
        rel = entry - center
        angle0 = math.atan2(rel[1], rel[0])
        route.segments.append(ArcSeg(center=center, radius=radius, angle0=angle0, sweep=math.pi / 2))
        d2, r2 = _rot90(d), _rot90(r)
        exit_point = d2 * HALF_ZONE + r2 * off
        route.segments.append(StraightSeg(exit_point, d2, LEG_LENGTH))
        mid_len = radius * math.pi / 2
    else:
        raise ValueError(f"unknown movement {movement!r}")
    route.zone_enter = LEG_LENGTH
    route.zone_exit = LEG_LENGTH + mid_len
    return route


_ROUTE_CACHE: dict = {}
_CONFLICT_CACHE: dict = {}


def get_route(approach: Approach, lane: int, movement: str) -> Route:
    key = (approach, lane, movement)
    if key not in _ROUTE_CACHE:
        _ROUTE_CACHE[key] = build_route(*key)
    return _ROUTE_CACHE[key]


def routes_conflict(a: Route, b: Route) -> bool:
    """True when the in-zone centerlines pass within CONFLICT_RADIUS.

    Same-approach pairs never conflict: parallel lanes cannot cross and
    same-lane interaction is plain car following.
    """
    if a.approach == b.approach:
        return False
    key_a = (a.approach.value, a.lane, a.movement)
    key_b = (b.approach.value, b.lane, b.movement)
    key = (key_a, key_b) if key_a <= key_b else (key_b, key_a)
    cached = _CONFLICT_CACHE.get(key)
    if cached is None:
        pa, pb = a.zone_samples(), b.zone_samples()
        d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
        cached = bool(d2.min() < CONFLICT_RADIUS**2)
        _CONFLICT_CACHE[key] = cached
    return cached


def rectangles_overlap(
    ax: float, ay: float, ah: float, al: float, aw: float,
    bx: float, by: float, bh: float, bl: float, bw: float,
) -> bool:
    """Oriented-rectangle overlap via the separating axis theorem."""
    half_a = (al / 2, aw / 2)
    half_b = (bl / 2, bw / 2)
    axes_a = ((math.cos(ah), math.sin(ah)), (-math.sin(ah), math.cos(ah)))
    axes_b = ((math.cos(bh), math.sin(bh)), (-math.sin(bh), math.cos(bh)))
    dx, dy = bx - ax, by - ay
    for axis in (*axes_a, *axes_b):
        proj_dist = abs(dx * axis[0] + dy * axis[1])
        ra = sum(h * abs(u[0] * axis[0] + u[1] * axis[1]) for h, u in zip(half_a, axes_a))
        rb = sum(h * abs(u[0] * axis[0] + u[1] * axis[1]) for h, u in zip(half_b, axes_b))
        if proj_dist > ra + rb:
            return False
    return True
