"""Demonstration collection and supervised training of the expert model.

The scripted demonstrator is a deterministic gap-acceptance driver: it
predicts conflict-zone occupancy windows at nominal crossing speeds, slows
down whenever a conflicting vehicle's window overlaps its own (with margin)
or an aggressive vehicle closes below a time-to-collision floor, moves to
the inner turn lane when convenient, and otherwise drives at the speed cap.
Nominal-speed prediction keeps every window endpoint linear in vehicle
position, so the labels stay learnable by the shallow relational network.
The expert network is trained by cross-entropy on the recorded
(graph, action) pairs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .graph import GraphScales, HeteroGraphState, SLOTS_PER_STYLE, build_graph, edge_ttc, to_batch
from .geometry import routes_conflict
from .nn import Adam, NetConfig, ParamStore, cross_entropy, one_hot, q_values
from .nn.checkpoint import atomic_write_text
from .nn.tensor import no_grad
from .vehicle import EGO_V_MAX, IDM_PRESETS, DriverStyle, EgoAction, VehicleState
from .world import ScenarioConfig, spawn_scenario

DATASET_SCHEMA = 1
TTC_FLOOR = 3.0  # s, slow down when an aggressive vehicle closes faster
OCCUPANCY_MARGIN = 3.0  # s, demanded separation between occupancy windows
LANE_FIX_MIN_GAP = 15.0  # m to the entry line below which lane fixing stops
EGO_PLAN_SPEED = 8.0  # m/s, the pace the ego plans its own crossing at
YIELD_SPEED = 0.5  # m/s at or below which a vehicle counts as yielding
SPEED_SLACK = 0.5  # m/s under the cap before Accelerate stops


@dataclass
class Demonstration:
    graph: HeteroGraphState
    action: EgoAction
    episode_id: int
    step: int


def _occupancy_window(veh: VehicleState, plan_speed: float) -> tuple:
    """(t_enter, t_clear) for the conflict zone at a nominal crossing pace.

    Planning at a fixed pace keeps both endpoints linear in position, so the
    danger boundary stays representable by the shallow relational network;
    current speed only matters through the yielding gate.
    """
    t_in = max(veh.route.zone_enter - veh.front, 0.0) / plan_speed
    t_out = max(veh.route.zone_exit - veh.rear, 0.0) / plan_speed
    return t_in, t_out


def _danger(world) -> bool:
    ego = world.ego
    ego_in, ego_out = _occupancy_window(ego, EGO_PLAN_SPEED)
    for hv in world.vehicles[1:]:
        if hv.cleared_zone() or not routes_conflict(ego.route, hv.route):
            continue
        if hv.speed <= YIELD_SPEED:
            # a stopped (queued) vehicle poses no hazard now; if it launches
            # later the motion guards below re-engage while it accelerates
            continue
        if hv.style == DriverStyle.AGGRESSIVE and edge_ttc(ego, hv) < TTC_FLOOR:
            return True
        hv_in, hv_out = _occupancy_window(hv, IDM_PRESETS[hv.style].v_star)
        if ego_in - OCCUPANCY_MARGIN <= hv_out and hv_in <= ego_out + OCCUPANCY_MARGIN:
            return True
    return False


def scripted_expert(world) -> EgoAction:
    """Deterministic demonstrator action for the current world state."""
    ego = world.ego
    if not ego.entered_zone():
        if _danger(world):
            return EgoAction.SLOW_DOWN
        if ego.lane_index != 0 and ego.gap_to_zone_entry() > LANE_FIX_MIN_GAP:
            return EgoAction.LANE_LEFT
    if ego.speed < EGO_V_MAX - SPEED_SLACK:
        return EgoAction.ACCELERATE
    return EgoAction.CRUISE


def episode_seed(base_seed: int, episode_id: int) -> list:
    return [int(base_seed), int(episode_id)]


def collect_demonstrations(
    n_episodes: int,
    seed: int,
    scenario: ScenarioConfig = ScenarioConfig(),
    source: str = "scripted",
) -> list:
    """Roll out the demonstrator for n episodes; deterministic per seed."""
    if source != "scripted":
        raise ValueError("only the scripted source collects offline; human data comes from the session service")
    records = []
    for ep in range(n_episodes):
        world = spawn_scenario(episode_seed(seed, ep), scenario)
        step = 0
        while True:
            graph = build_graph(world)
            action = scripted_expert(world)
            records.append(Demonstration(graph=graph, action=action, episode_id=ep, step=step))
            outcome = world.step(action)
            step += 1
            if outcome.done:
                break
    return records


# ---- dataset file -------------------------------------------------------


def _round_floats(obj, ndigits: int = 6):
    if isinstance(obj, float):
        return round(obj, ndigits)
    if isinstance(obj, list):
        return [_round_floats(v, ndigits) for v in obj]
    if isinstance(obj, dict):
        return {k: _round_floats(v, ndigits) for k, v in obj.items()}
    return obj


def dataset_header(scales: GraphScales = GraphScales()) -> dict:
    return {
        "schema": DATASET_SCHEMA,
        "kind": "demonstrations",
        "slots_per_style": SLOTS_PER_STYLE,
        "scales": scales.to_dict(),
    }


def demonstration_line(rec: Demonstration) -> str:
    payload = {"episode": rec.episode_id, "step": rec.step, "action": int(rec.action)}
    payload.update(_round_floats(rec.graph.to_payload()))
    return json.dumps(payload, separators=(",", ":"))


def write_dataset(path, records, scales: GraphScales = GraphScales()) -> None:
    lines = [json.dumps(dataset_header(scales), separators=(",", ":"))]
    lines.extend(demonstration_line(r) for r in records)
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_dataset(path):
    """(records, scales) from a line-delimited dataset file."""
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != DATASET_SCHEMA or header.get("kind") != "demonstrations":
            raise ValueError(f"unrecognized dataset header in {path}")
        if header.get("slots_per_style") != SLOTS_PER_STYLE:
            raise ValueError("dataset slot count does not match this build")
        records = []
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            records.append(
                Demonstration(
                    graph=HeteroGraphState.from_payload(d),
                    action=EgoAction(d["action"]),
                    episode_id=d["episode"],
                    step=d["step"],
                )
            )
    return records, GraphScales.from_dict(header["scales"])


def is_train_episode(episode_id) -> bool:
    """Stable 70/30 split keyed by episode id.

    Stratified per block of ten consecutive ids: digests rank the block's
    slots and the seven smallest go to train, so any whole number of blocks
    splits exactly 70/30 while membership stays a pure function of the id.
    """
    episode_id = int(episode_id)
    block, slot = divmod(episode_id, 10)
    digests = sorted(range(10), key=lambda r: hashlib.sha256(f"{block}:{r}".encode("utf-8")).hexdigest())
    return slot in digests[:7]


def split_records(records) -> tuple:
    train = [r for r in records if is_train_episode(r.episode_id)]
    test = [r for r in records if not is_train_episode(r.episode_id)]
    return train, test


# ---- supervised training -------------------------------------------------


@dataclass(frozen=True)
class ExpertTrainConfig:
    epochs: int = 500
    batch_size: int = 32
    max_batches_per_epoch: int = 100
    learning_rate: float = 5e-4
    seed: int = 0


def _records_to_arrays(records, scales: GraphScales):
    batch = to_batch([r.graph for r in records], scales)
    actions = np.array([int(r.action) for r in records], dtype=np.int64)
    return batch, actions


def expert_logits(params: ParamStore, batch) -> np.ndarray:
    with no_grad():
        return q_values(params, batch).data


def eval_expert_accuracy(params: ParamStore, records, scales: GraphScales = GraphScales()) -> float:
    if not records:
        raise ValueError("empty evaluation split")
    batch, actions = _records_to_arrays(records, scales)
    correct = 0
    for lo in range(0, batch.size, 512):
        idx = slice(lo, min(lo + 512, batch.size))
        logits = expert_logits(params, batch.subset(idx))
        correct += int((logits.argmax(axis=1) == actions[idx]).sum())
    return correct / batch.size


def train_expert(
    records,
    config: ExpertTrainConfig = ExpertTrainConfig(),
    net: NetConfig = NetConfig(),
    scales: GraphScales = GraphScales(),
    log=None,
):
    """Cross-entropy training; returns (params, per-epoch mean losses)."""
    if not records:
        raise ValueError("empty dataset")
    params = ParamStore(net, seed=config.seed, with_fusion=False)
    opt = Adam(params, lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    batch, actions = _records_to_arrays(records, scales)
    n = batch.size
    history = []
    for epoch in range(config.epochs):
        # fresh shuffle each epoch, consumed without replacement
        perm = rng.permutation(n)
        n_batches = min(config.max_batches_per_epoch, max(n // config.batch_size, 1))
        losses = []
        for b in range(n_batches):
            lo = b * config.batch_size
            idx = perm[lo : lo + config.batch_size]
            mini = batch.subset(idx)
            targets = one_hot(actions[idx])
            params.zero_grad()
            loss = cross_entropy(q_values(params, mini), targets)
            loss.backward()
            opt.step()
            losses.append(float(loss.data))
        history.append(float(np.mean(losses)))
        if log is not None:
            log(f"epoch {epoch + 1}/{config.epochs} loss {history[-1]:.4f}")
    return params, history
