"""Acceptance gate: every primary requirement runs here, one PASS/FAIL line each.

Heavy artifacts (expert dataset + network, three full DDQN runs) are built once
in module-scoped fixtures and shared by the tests that grade them. Everything
is seeded, so the numbers printed below are bit-reproducible.
"""

import math
import time

import numpy as np
import pytest

from hgdrive.behavior import behavior_step
from hgdrive.control import idm_acceleration
from hgdrive.drl import DrlConfig, Transition, ddqn_loss, evaluate, metrics_csv, train, write_metrics
from hgdrive.expert import (
    ExpertTrainConfig,
    collect_demonstrations,
    eval_expert_accuracy,
    split_records,
    train_expert,
)
from hgdrive.geometry import Approach, get_route
from hgdrive.graph import (
    EGO_FEATURES,
    HV_FEATURES,
    SLOTS_PER_STYLE,
    TTC_CAP,
    GraphScales,
    HeteroGraphState,
    edge_accel_diff,
    edge_distance,
    edge_ttc,
    to_batch,
)
from hgdrive.nn import (
    ACTION_COUNT,
    GraphBatch,
    NetConfig,
    ParamStore,
    RELATIONS,
    cross_entropy,
    fused_forward,
    one_hot,
    q_values,
    rgat_embed,
)
from hgdrive.nn.checkpoint import load_checkpoint, save_checkpoint
from hgdrive.nn.tensor import no_grad
from hgdrive.vehicle import ACCEL_HISTORY_LEN, IDM_PRESETS, DriverStyle, VehicleState
from hgdrive.world import ScenarioConfig, World

# small but structurally complete network: every layer and head present,
# slot count matching the simulator graphs so batches are interchangeable
GRAD_NET = NetConfig(embed_dim=6, heads=2, policy_hidden=8, fusion_hidden=4)

TRAIN_SEEDS = (0, 1, 2)
EVAL_SEED_BASE = 1000
EVAL_EPISODES = 50


def check(ok: bool, name: str, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


def random_graph(rng) -> HeteroGraphState:
    nodes, edges, masks = {}, {}, {}
    for k in RELATIONS:
        n = int(rng.integers(0, SLOTS_PER_STYLE + 1))
        mask = np.zeros(SLOTS_PER_STYLE)
        mask[:n] = 1.0
        nodes[k] = rng.normal(size=(SLOTS_PER_STYLE, HV_FEATURES)) * mask[:, None]
        edges[k] = np.abs(rng.normal(size=SLOTS_PER_STYLE)) * mask
        masks[k] = mask
    return HeteroGraphState(x_av=rng.normal(size=EGO_FEATURES), nodes=nodes, edges=edges, masks=masks)


def jitter(store: ParamStore, rng) -> ParamStore:
    # keep biases off their exact-zero relu kinks so finite differences stay smooth
    for name in store.names():
        store[name].data += rng.normal(size=store[name].data.shape) * 0.05
    return store


def central_diff(loss_fn, tensor, idx: int, h: float = 1e-5) -> float:
    orig = tensor.data.flat[idx]
    tensor.data.flat[idx] = orig + h
    hi = loss_fn()
    tensor.data.flat[idx] = orig - h
    lo = loss_fn()
    tensor.data.flat[idx] = orig
    return (hi - lo) / (2 * h)


# ---- gradient oracle ---------------------------------------------------------


def test_gradient_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    scales = GraphScales()
    rel_errs = []
    kinks = 0

    def grade(params, loss_builder):
        nonlocal kinks
        params.zero_grad()
        loss = loss_builder()
        loss.backward()
        for name in params.names():
            t = params[name]
            grad = np.zeros_like(t.data) if t.grad is None else t.grad

            def value():
                with no_grad():
                    return float(loss_builder().data)

            for idx in rng.choice(t.data.size, size=min(2, t.data.size), replace=False):
                num = central_diff(value, t, int(idx))
                ana = float(grad.flat[idx])
                budget = 1e-4 * max(abs(ana), abs(num), 1e-3)
                if abs(ana - num) > budget:
                    # a relu kink inside the stencil shifts the estimate when the
                    # step halves; a wrong analytic gradient leaves it in place
                    refined = central_diff(value, t, int(idx), h=5e-6)
                    if abs(refined - num) > 0.5 * budget:
                        kinks += 1
                        continue
                rel_errs.append(abs(ana - num) / max(abs(ana), abs(num), 1e-3))

    for trial in range(50):
        inst = np.random.default_rng(trial)
        # supervised branch: cross entropy of the policy logits
        expert_style = jitter(ParamStore(GRAD_NET, seed=trial, with_fusion=False), inst)
        batch = to_batch([random_graph(inst) for _ in range(4)], scales)
        targets = one_hot(inst.integers(0, ACTION_COUNT, size=4))
        grade(expert_style, lambda: cross_entropy(q_values(expert_style, batch), targets))

        # value branch: squared Bellman error of the fused head
        online = jitter(ParamStore(GRAD_NET, seed=500 + trial, with_fusion=True), inst)
        target_net = jitter(ParamStore(GRAD_NET, seed=900 + trial, with_fusion=True), inst)
        frozen = jitter(ParamStore(GRAD_NET, seed=700 + trial, with_fusion=False), inst).freeze()
        trs = [
            Transition(random_graph(inst), int(inst.integers(0, ACTION_COUNT)),
                       float(inst.normal()), random_graph(inst), bool(inst.random() < 0.2))
            for _ in range(3)
        ]
        grade(online, lambda: ddqn_loss(trs, online, target_net, frozen, 0.99, scales))

    elapsed = time.perf_counter() - t0
    worst = max(rel_errs)
    check(worst <= 1e-4 and kinks <= 30 and elapsed < 60.0, "gradient-oracle",
          f"max rel err {worst:.3e} over {len(rel_errs)} coordinates, both losses, 50 instances, "
          f"h=1e-5, {kinks} kink-straddling coordinates excluded, {elapsed:.1f}s (bounds 1e-4, 60s)")


# ---- attention brute force -----------------------------------------------------


def brute_force_embed(params: ParamStore, batch: GraphBatch) -> np.ndarray:
    """Scalar triple-loop recomputation of the relational attention embedding."""
    cfg = params.config
    b, p, d = batch.size, cfg.heads, cfg.embed_dim

    def relu(x):
        return np.maximum(x, 0.0)

    def leaky(x):
        return np.where(x >= 0, x, cfg.leaky_slope * x)

    out = np.zeros((b, p * d))
    for i in range(b):
        ego_h = relu(batch.x_av[i] @ params["enc_ego_w"].data + params["enc_ego_b"].data)
        total = np.zeros((p, d))
        for k in RELATIONS:
            mask = batch.masks[k][i]
            if not mask.any():
                continue
            hv_h = relu(batch.nodes[k][i] @ params[f"enc_{k}_w"].data + params[f"enc_{k}_b"].data)
            hv_h = hv_h * mask[:, None]
            for head in range(p):
                wn = params[f"att_{k}_wn"].data[head]
                a_vec = params[f"att_{k}_a"].data[head]
                logits, transformed = [], []
                for j in range(cfg.slots_per_style):
                    if mask[j] == 0.0:
                        continue
                    e_val = np.concatenate([ego_h, hv_h[j], batch.edges[k][i, j : j + 1]])
                    e_scalar = float(e_val @ params[f"edge_{k}_w"].data[:, 0] + params[f"edge_{k}_b"].data[0])
                    gate = e_scalar * params[f"att_{k}_we_w"].data[head] + params[f"att_{k}_we_b"].data[head]
                    score = float(leaky(np.concatenate([wn @ ego_h, wn @ hv_h[j]])) @ a_vec)
                    logits.append(gate * score)
                    transformed.append(wn @ hv_h[j])
                weights = np.exp(np.array(logits) - max(logits))
                weights = weights / weights.sum()
                total[head] += (weights[:, None] * np.array(transformed)).sum(axis=0)
        out[i] = relu(total).reshape(-1)
    return out


def test_attention_brute_force():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    params = ParamStore(NetConfig(), seed=3)  # full production sizes
    graphs = []
    for _ in range(8):
        g = random_graph(rng)
        for k in RELATIONS:  # exactly two occupied slots per neighbor style
            g.masks[k][:] = 0.0
            g.masks[k][:2] = 1.0
            g.nodes[k] = rng.normal(size=(SLOTS_PER_STYLE, HV_FEATURES)) * g.masks[k][:, None]
            g.edges[k] = np.abs(rng.normal(size=SLOTS_PER_STYLE)) * g.masks[k]
        graphs.append(g)
    batch = to_batch(graphs, GraphScales())
    with no_grad():
        fast = rgat_embed(params, batch).data
    slow = brute_force_embed(params, batch)
    gap = float(np.max(np.abs(fast - slow)))
    elapsed = time.perf_counter() - t0
    check(gap <= 1e-12 and elapsed < 60.0, "attention-brute-force",
          f"2/2/2 graphs, max abs gap {gap:.2e} vs scalar triple loop, {elapsed:.1f}s (bound 1e-12)")


# ---- fusion simplex ------------------------------------------------------------


def test_fusion_simplex():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    n = 10_000
    nodes, edges, masks = {}, {}, {}
    for k in RELATIONS:
        occ = rng.integers(0, SLOTS_PER_STYLE + 1, size=n)
        mask = (np.arange(SLOTS_PER_STYLE)[None, :] < occ[:, None]).astype(float)
        nodes[k] = rng.normal(size=(n, SLOTS_PER_STYLE, HV_FEATURES)) * mask[:, :, None]
        edges[k] = np.abs(rng.normal(size=(n, SLOTS_PER_STYLE))) * mask
        masks[k] = mask
    batch = GraphBatch(x_av=rng.normal(size=(n, EGO_FEATURES)), nodes=nodes, edges=edges, masks=masks)
    params = ParamStore(GRAD_NET, seed=1, with_fusion=True)
    expert = ParamStore(GRAD_NET, seed=2, with_fusion=False)

    with no_grad():
        q_grl, beta, q_fin = fused_forward(params, expert, batch)
        _, _, q_pure_grl = fused_forward(params, expert, batch, beta_override=1.0)
        _, _, q_pure_exp = fused_forward(params, expert, batch, beta_override=0.0)
        expert_logits = q_values(expert, batch).data

    sums = q_fin.data.sum(axis=1)
    on_simplex = bool(np.all(q_fin.data >= 0.0) and np.all(np.abs(sums - 1.0) <= 1e-9))
    grl_match = bool(np.array_equal(np.argmax(q_pure_grl.data, 1), np.argmax(q_grl.data, 1)))
    exp_match = bool(np.array_equal(np.argmax(q_pure_exp.data, 1), np.argmax(expert_logits, 1)))
    elapsed = time.perf_counter() - t0
    check(on_simplex and grl_match and exp_match, "fusion-simplex",
          f"{n} forwards on simplex (max |sum-1| {np.max(np.abs(sums - 1.0)):.1e}, min entry "
          f"{q_fin.data.min():.1e}), blend endpoints reproduce both pure argmax policies, {elapsed:.1f}s")


# ---- edge measure oracles -------------------------------------------------------


def fresh_vehicle(vid: int, style: DriverStyle, approach: Approach) -> VehicleState:
    movement = "left" if style is DriverStyle.EGO else "straight"
    return VehicleState(id=vid, style=style, route=get_route(approach, 0, movement), s=50.0)


def place(v: VehicleState, x, y, vx=0.0, vy=0.0) -> VehicleState:
    v.c_x, v.c_y, v.v_x, v.v_y = x, y, vx, vy
    return v


def test_edge_measure_oracles():
    t0 = time.perf_counter()
    ego = fresh_vehicle(0, DriverStyle.EGO, Approach.SOUTH)
    hv = fresh_vehicle(1, DriverStyle.AGGRESSIVE, Approach.WEST)

    # head-on closing: 20 m at 5 m/s -> 4 s
    place(ego, 0.0, 0.0, vx=5.0)
    place(hv, 20.0, 0.0)
    head_on_err = abs(edge_ttc(ego, hv) - 4.0)

    # separating pair pegs at the cap
    place(ego, 0.0, 0.0, vx=-5.0)
    separating = edge_ttc(ego, hv)

    rng = np.random.default_rng(17)
    worst_ttc = worst_acc = worst_dist = 0.0
    for _ in range(10_000):
        ex, ey, hx, hy = rng.uniform(-60, 60, size=4)
        evx, evy, hvx, hvy = rng.uniform(-20, 20, size=4)
        place(ego, ex, ey, evx, evy)
        place(hv, hx, hy, hvx, hvy)
        for veh in (ego, hv):
            veh.accel_history.clear()
            veh.accel_history.extend(rng.uniform(-5, 5, size=ACCEL_HISTORY_LEN))

        d = math.hypot(hx - ex, hy - ey)
        closing = ((evx - hvx) * (hx - ex) + (evy - hvy) * (hy - ey)) / d
        want_ttc = TTC_CAP if closing <= 0 else min(d / closing, TTC_CAP)
        worst_ttc = max(worst_ttc, abs(edge_ttc(ego, hv) - want_ttc))

        want_acc = abs(np.mean(list(hv.accel_history)) - np.mean(list(ego.accel_history)))
        worst_acc = max(worst_acc, abs(edge_accel_diff(ego, hv) - want_acc))
        worst_dist = max(worst_dist, abs(edge_distance(ego, hv) - d))

    elapsed = time.perf_counter() - t0
    ok = (head_on_err <= 1e-9 and separating == TTC_CAP == 10.0
          and worst_ttc <= 1e-9 and worst_acc <= 1e-9 and worst_dist <= 1e-9)
    check(ok, "edge-measures",
          f"head-on err {head_on_err:.1e}, separating -> {separating}, 10000 random pairs "
          f"(ttc {worst_ttc:.1e}, accel-diff {worst_acc:.1e}, distance {worst_dist:.1e}), {elapsed:.1f}s")


# ---- driver model suite ----------------------------------------------------------


def test_driver_model_suite():
    t0 = time.perf_counter()
    eq_residuals = {}
    for style in (DriverStyle.AGGRESSIVE, DriverStyle.NORMAL, DriverStyle.CONSERVATIVE):
        p = IDM_PRESETS[style]
        eq_residuals[style.value] = abs(idm_acceleration(p.v_star, 0.0, math.inf, p))
    eq_ok = all(r <= 1e-12 for r in eq_residuals.values())

    rng = np.random.default_rng(23)
    violations = 0
    for _ in range(100):
        s_me = rng.uniform(20.0, 99.0)
        s_rival = rng.uniform(20.0, 110.0)
        v_me = rng.uniform(0.0, 16.0)
        v_rival = rng.uniform(0.0, 16.0)
        rival = VehicleState(id=2, style=DriverStyle.NORMAL,
                             route=get_route(Approach.EAST, 0, "straight"), s=s_rival, speed=v_rival)
        agg = VehicleState(id=1, style=DriverStyle.AGGRESSIVE,
                           route=get_route(Approach.NORTH, 0, "straight"), s=s_me, speed=v_me)
        con = VehicleState(id=1, style=DriverStyle.CONSERVATIVE,
                           route=get_route(Approach.NORTH, 0, "straight"), s=s_me, speed=v_me)
        cmd_agg = behavior_step(agg, World([agg, rival], ScenarioConfig()))
        cmd_con = behavior_step(con, World([con, rival], ScenarioConfig()))
        if cmd_con > cmd_agg + 1e-12:
            violations += 1

    elapsed = time.perf_counter() - t0
    check(eq_ok and violations == 0, "driver-model",
          f"free-road equilibrium residuals {max(eq_residuals.values()):.1e} for all three presets, "
          f"{violations} caution-ordering violations in 100 random conflict scenes, {elapsed:.1f}s")


# ---- expert pipeline --------------------------------------------------------------


@pytest.fixture(scope="module")
def expert_bundle(tmp_path_factory):
    t0 = time.perf_counter()
    records = collect_demonstrations(290, seed=42)
    train_recs, held_out = split_records(records)
    params, history = train_expert(train_recs, config=ExpertTrainConfig(epochs=100))
    accuracy = eval_expert_accuracy(params, held_out)
    ck_path = str(tmp_path_factory.mktemp("expert") / "expert.json")
    save_checkpoint(ck_path, params, extra={"held_out_accuracy": accuracy})
    return {
        "n_records": len(records),
        "n_train": len(train_recs),
        "n_held_out": len(held_out),
        "params": params,
        "final_loss": history[-1],
        "accuracy": accuracy,
        "checkpoint": ck_path,
        "elapsed": time.perf_counter() - t0,
    }


def test_expert_pipeline(expert_bundle):
    b = expert_bundle
    ok = b["n_records"] >= 50_000 and b["accuracy"] >= 0.97 and b["elapsed"] <= 900.0
    check(ok, "expert-pipeline",
          f"{b['n_records']} demonstrations from 290 episodes (floor 50000), split {b['n_train']}/{b['n_held_out']}, "
          f"100 epochs, held-out accuracy {b['accuracy']:.4f} (floor 0.97), {b['elapsed']:.0f}s (bound 900s)")


# ---- end-to-end value learning ------------------------------------------------------


@pytest.fixture(scope="module")
def e2e_runs(expert_bundle):
    runs = {}
    for seed in TRAIN_SEEDS:
        t0 = time.perf_counter()
        params, result = train(expert_bundle["checkpoint"], config=DrlConfig(episodes=150, seed=seed))
        ev = evaluate(params, expert_bundle["params"], EVAL_EPISODES, seed=EVAL_SEED_BASE + seed)
        runs[seed] = {"params": params, "train": result, "eval": ev,
                      "elapsed": time.perf_counter() - t0}
    return runs


def test_end_to_end_training(e2e_runs):
    parts = []
    ok = True
    total = 0.0
    for seed, run in e2e_runs.items():
        rewards = [s.reward for s in run["train"].stats]
        early = float(np.mean(rewards[:30]))
        late = float(np.mean(rewards[119:]))
        ev = run["eval"]
        succ_rows = [s for s in ev.stats if s.collisions == 0 and s.steps < 300]
        travel_ok = len(succ_rows) == ev.goals and all(s.travel_time_s < 30.0 for s in succ_rows)
        seed_ok = (late > early and ev.success_rate >= 0.90
                   and ev.collision_rate <= 0.05 and travel_ok)
        ok = ok and seed_ok
        total += run["elapsed"]
        parts.append(f"seed {seed}: reward {early:.2f}->{late:.2f}, success {ev.success_rate:.2f}, "
                     f"collisions {ev.collision_rate:.2f}, slowest win {max((s.travel_time_s for s in succ_rows), default=0.0):.1f}s")
    check(ok and total <= 7200.0, "end-to-end",
          "; ".join(parts) + f"; total {total:.0f}s (bound 7200s)")


def test_decision_latency(e2e_runs):
    per_seed = {seed: run["eval"].summary()["wall_ms_per_step"] for seed, run in e2e_runs.items()}
    ok = all(ms <= 5.0 for ms in per_seed.values())
    detail = ", ".join(f"seed {s}: {ms:.2f}ms" for s, ms in per_seed.items())
    check(ok, "decision-latency", f"greedy step mean from eval summary {detail} (bound 5ms)")


def test_eval_determinism(e2e_runs, expert_bundle, tmp_path):
    params = e2e_runs[0]["params"]
    first = evaluate(params, expert_bundle["params"], EVAL_EPISODES, seed=EVAL_SEED_BASE)
    second = evaluate(params, expert_bundle["params"], EVAL_EPISODES, seed=EVAL_SEED_BASE)
    write_metrics(str(tmp_path / "a.csv"), first.stats)
    write_metrics(str(tmp_path / "b.csv"), second.stats)
    same_text = metrics_csv(first.stats) == metrics_csv(second.stats)
    same_bytes = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    check(same_text and same_bytes, "eval-determinism",
          f"two {EVAL_EPISODES}-episode eval runs, metrics CSV byte-identical: {same_bytes}")
