"""Heterogeneous ego-centric graph state built from a simulator world.

Nodes are typed by driver style and padded to a fixed slot count per style,
with presence masks. Edges form a star around the ego and carry a different
interaction measure per style: time-to-collision toward aggressive drivers,
average-acceleration difference toward normal drivers, and plain distance
toward conservative drivers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nn.hgnn import GraphBatch, RELATIONS
from .vehicle import DriverStyle, IDM_PRESETS, VehicleState

SLOTS_PER_STYLE = 4
TTC_CAP = 10.0
STYLE_CATEGORY = {"agg": 0.0, "nor": 1.0, "con": 2.0}
EGO_FEATURES = 5
HV_FEATURES = 7


@dataclass(frozen=True)
class GraphScales:
    """Divisors that map raw features into roughly [-1, 1] for the network."""

    position: float = 100.0
    speed: float = 20.0
    accel: float = 4.5
    ttc: float = 10.0
    distance: float = 100.0
    accel_diff: float = 9.0

    def to_dict(self) -> dict:
        return {
            "position": self.position,
            "speed": self.speed,
            "accel": self.accel,
            "ttc": self.ttc,
            "distance": self.distance,
            "accel_diff": self.accel_diff,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GraphScales":
        return cls(**d)


@dataclass
class HeteroGraphState:
    """Fixed-shape raw (unscaled) graph snapshot of one world step."""

    x_av: np.ndarray  # (5,)
    nodes: dict  # relation -> (SLOTS, 7)
    edges: dict  # relation -> (SLOTS,)
    masks: dict  # relation -> (SLOTS,)

    def to_payload(self) -> dict:
        return {
            "x_av": [float(v) for v in self.x_av],
            "nodes": {k: [[float(v) for v in row] for row in self.nodes[k]] for k in RELATIONS},
            "edges": {k: [float(v) for v in self.edges[k]] for k in RELATIONS},
            "masks": {k: [int(v) for v in self.masks[k]] for k in RELATIONS},
        }

    @classmethod
    def from_payload(cls, d: dict) -> "HeteroGraphState":
        return cls(
            x_av=np.asarray(d["x_av"], dtype=np.float64),
            nodes={k: np.asarray(d["nodes"][k], dtype=np.float64) for k in RELATIONS},
            edges={k: np.asarray(d["edges"][k], dtype=np.float64) for k in RELATIONS},
            masks={k: np.asarray(d["masks"][k], dtype=np.float64) for k in RELATIONS},
        )


def edge_ttc(ego: VehicleState, hv: VehicleState) -> float:
    """Projected time to collision, in (0, 10]; 10 when not closing."""
    dx, dy = hv.c_x - ego.c_x, hv.c_y - ego.c_y
    d = math.hypot(dx, dy)
    if d < 1e-12:
        return 0.0
    closing = ((ego.v_x - hv.v_x) * dx + (ego.v_y - hv.v_y) * dy) / d
    if closing <= 0.0:
        return TTC_CAP
    return min(d / closing, TTC_CAP)


def edge_accel_diff(ego: VehicleState, hv: VehicleState) -> float:
    return abs(hv.avg_recent_accel - ego.avg_recent_accel)


def edge_distance(ego: VehicleState, hv: VehicleState) -> float:
    return math.hypot(hv.c_x - ego.c_x, hv.c_y - ego.c_y)


def _style_extra(hv: VehicleState) -> float:
    if hv.style is DriverStyle.AGGRESSIVE:
        return IDM_PRESETS[hv.style].a_max
    if hv.style is DriverStyle.NORMAL:
        return hv.avg_recent_accel
    return -4.5


def node_features(world):
    """(x_av, nodes, masks) with per-style rows sorted by vehicle id."""
    ego = world.ego
    x_av = np.array([ego.c_x, ego.c_y, ego.v_x, ego.v_y, ego.a_x], dtype=np.float64)
    nodes = {k: np.zeros((SLOTS_PER_STYLE, HV_FEATURES)) for k in RELATIONS}
    masks = {k: np.zeros(SLOTS_PER_STYLE) for k in RELATIONS}
    fill = {k: 0 for k in RELATIONS}
    for hv in sorted(world.vehicles[1:], key=lambda v: v.id):
        k = hv.style.key
        slot = fill[k]
        if slot >= SLOTS_PER_STYLE:
            continue
        nodes[k][slot] = [hv.c_x, hv.c_y, hv.v_x, hv.v_y, hv.a_x, _style_extra(hv), STYLE_CATEGORY[k]]
        masks[k][slot] = 1.0
        fill[k] = slot + 1
    return x_av, nodes, masks


def build_graph(world) -> HeteroGraphState:
    x_av, nodes, masks = node_features(world)
    edges = {k: np.zeros(SLOTS_PER_STYLE) for k in RELATIONS}
    measure = {"agg": edge_ttc, "nor": edge_accel_diff, "con": edge_distance}
    fill = {k: 0 for k in RELATIONS}
    ego = world.ego
    for hv in sorted(world.vehicles[1:], key=lambda v: v.id):
        k = hv.style.key
        slot = fill[k]
        if slot >= SLOTS_PER_STYLE:
            continue
        edges[k][slot] = measure[k](ego, hv)
        fill[k] = slot + 1
    return HeteroGraphState(x_av=x_av, nodes=nodes, edges=edges, masks=masks)


def scale_graph(g: HeteroGraphState, scales: GraphScales = GraphScales()):
    """Scaled copies of the arrays, ready for the network."""
    node_div = np.array([
        scales.position, scales.position, scales.speed, scales.speed, scales.accel, scales.accel, 1.0,
    ])
    ego_div = np.array([scales.position, scales.position, scales.speed, scales.speed, scales.accel])
    edge_div = {"agg": scales.ttc, "nor": scales.accel_diff, "con": scales.distance}
    x_av = g.x_av / ego_div
    nodes = {k: g.nodes[k] / node_div for k in RELATIONS}
    edges = {k: g.edges[k] / edge_div[k] for k in RELATIONS}
    return x_av, nodes, edges


def to_batch(graphs: list, scales: GraphScales = GraphScales()) -> GraphBatch:
    """Stack raw graphs into one scaled GraphBatch for the network."""
    xs, nodes, edges, masks = [], {k: [] for k in RELATIONS}, {k: [] for k in RELATIONS}, {k: [] for k in RELATIONS}
    for g in graphs:
        x_av, n, e = scale_graph(g, scales)
        xs.append(x_av)
        for k in RELATIONS:
            nodes[k].append(n[k])
            edges[k].append(e[k])
            masks[k].append(g.masks[k])
    return GraphBatch(
        x_av=np.stack(xs),
        nodes={k: np.stack(nodes[k]) for k in RELATIONS},
        edges={k: np.stack(edges[k]) for k in RELATIONS},
        masks={k: np.stack(masks[k]) for k in RELATIONS},
    )
