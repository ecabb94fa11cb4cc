"""Metric checks against brute-force oracles, including the miss boundary."""

import numpy as np
import pytest

from goalgraph.autodiff.rng import RngStream
from goalgraph.metrics import (
    KTooLarge,
    MetricsReport,
    MissingGroundTruth,
    constant_velocity_baseline,
    evaluate_dataset,
    is_miss,
    min_ade_k,
    min_fde_k,
    miss_rate_k,
    offroad_rate,
)
from goalgraph.model.config import PredictionSet
from goalgraph.scenes import FuturePath, GenConfig, Scene, generate_dataset, generate_scene
from goalgraph.scenes.geometry import min_centerline_distance

F = 8


def _random_pred(seed, k=10, f=F, spread=3.0):
    rng = RngStream(seed)
    pi_raw = rng.uniform((k,), 0.05, 1.0)
    return PredictionSet(
        pi=pi_raw / pi_raw.sum(),
        mu=rng.normal((k, f, 2)) * spread,
        b=rng.uniform((k, f, 2), 0.1, 1.0),
    ), rng.normal((f, 2)) * spread


def _oracle_topk(pi, k):
    order = sorted(range(len(pi)), key=lambda i: (-pi[i], i))
    return order[:k]


# -- min_ade / min_fde -----------------------------------------------------------


def test_min_ade_top_mode_exact():
    pred, gt = _random_pred(0)
    mu = np.asarray(pred.mu)
    mu[int(np.argmax(pred.pi))] = gt
    assert min_ade_k(PredictionSet(pred.pi, mu, pred.b), gt, 1) == 0.0


def test_min_ade_monotone_in_k():
    for seed in range(20):
        pred, gt = _random_pred(seed)
        a1 = min_ade_k(pred, gt, 1)
        a5 = min_ade_k(pred, gt, 5)
        a10 = min_ade_k(pred, gt, 10)
        assert a1 >= a5 >= a10


def test_min_ade_matches_brute_force():
    for seed in range(100):
        pred, gt = _random_pred(seed)
        for k in (1, 3, 10):
            top = _oracle_topk(list(pred.pi), k)
            expected = min(
                np.mean([np.hypot(*(pred.mu[i, t] - gt[t])) for t in range(F)])
                for i in top)
            assert abs(min_ade_k(pred, gt, k) - expected) < 1e-9


def test_min_fde_matches_brute_force():
    for seed in range(100):
        pred, gt = _random_pred(seed + 1000)
        for k in (1, 5):
            top = _oracle_topk(list(pred.pi), k)
            expected = min(np.hypot(*(pred.mu[i, -1] - gt[-1])) for i in top)
            assert abs(min_fde_k(pred, gt, k) - expected) < 1e-9


def test_min_fde_single_mode_final_offset():
    _, gt = _random_pred(1, k=1)
    mu = np.broadcast_to(gt, (1, F, 2)).copy()
    mu[0, -1] += np.array([0.0, 3.0])
    pred = PredictionSet(np.array([1.0]), mu, np.ones((1, F, 2)))
    assert abs(min_fde_k(pred, gt, 1) - 3.0) < 1e-12
    assert min_ade_k(pred, gt, 1) > 0.0


def test_k_too_large_raises():
    pred, gt = _random_pred(2, k=4)
    with pytest.raises(KTooLarge):
        min_ade_k(pred, gt, 5)
    with pytest.raises(KTooLarge):
        min_fde_k(pred, gt, 9)


def test_top_k_tie_prefers_lower_index():
    gt = np.zeros((F, 2))
    mu = np.stack([np.full((F, 2), 5.0), np.zeros((F, 2))])
    pi = np.array([0.5, 0.5])  # tie: stable sort keeps mode 0 first
    pred = PredictionSet(pi, mu, np.ones((2, F, 2)))
    assert abs(min_ade_k(pred, gt, 1) - np.hypot(5.0, 5.0)) < 1e-12


# -- miss rate ----------------------------------------------------------------------


def _offset_pred(max_dev):
    """Single mode tracking gt except one point displaced by max_dev meters."""
    gt = np.cumsum(np.ones((F, 2)), axis=0)
    mu = gt[None].copy()
    mu[0, F // 2, 0] += max_dev
    return PredictionSet(np.array([1.0]), mu, np.ones((1, F, 2))), gt


def test_exactly_two_meters_is_not_a_miss():
    pred, gt = _offset_pred(2.0)
    assert not is_miss(pred, gt, 1)


def test_two_point_oh_one_meters_is_a_miss():
    pred, gt = _offset_pred(2.01)
    assert is_miss(pred, gt, 1)


def test_miss_rate_matches_brute_force():
    preds, gts = [], []
    for seed in range(100):
        p, g = _random_pred(seed + 2000, spread=1.5)
        preds.append(p)
        gts.append(g)
    for k in (1, 5, 10):
        expected = np.mean([
            all(max(np.hypot(*(p.mu[i, t] - g[t])) for t in range(F)) > 2.0
                for i in _oracle_topk(list(p.pi), k))
            for p, g in zip(preds, gts)])
        assert abs(miss_rate_k(preds, gts, k) - expected) < 1e-12


def test_miss_rate_monotone_in_k():
    preds, gts = zip(*[_random_pred(s + 3000, spread=1.5) for s in range(50)])
    rates = [miss_rate_k(list(preds), list(gts), k) for k in (1, 5, 10)]
    assert rates[0] >= rates[1] >= rates[2]


# -- offroad -----------------------------------------------------------------------


def _on_road_pred(scene, k=3):
    pts = scene.graph.nodes[0].poses[:4, :2]
    f = pts.shape[0]
    mu = np.broadcast_to(pts, (k, f, 2)).copy()
    return PredictionSet(np.full(k, 1.0 / k), mu, np.ones((k, f, 2)))


def test_offroad_zero_on_centerline():
    scene = generate_scene(0, GenConfig(scene_topology="t_junction"))
    assert offroad_rate([_on_road_pred(scene)], [scene.graph]) == 0.0


def test_offroad_one_when_far_away():
    scene = generate_scene(1, GenConfig(scene_topology="straight"))
    pred = _on_road_pred(scene)
    far = PredictionSet(pred.pi, np.asarray(pred.mu) + 10.0 * scene.graph.corridor_width * 50,
                        pred.b)
    assert offroad_rate([far], [scene.graph]) == 1.0


def test_offroad_matches_brute_force():
    rng = RngStream(9)
    scenes = [generate_scene(s, GenConfig(scene_topology="mixed")) for s in range(10)]
    preds = []
    for scene in scenes:
        base = scene.target.current_xy()
        mu = base[None, None, :] + rng.normal((4, F, 2)) * 6.0
        preds.append(PredictionSet(np.full(4, 0.25), mu, np.ones((4, F, 2))))
    expected_off, expected_total = 0, 0
    for pred, scene in zip(preds, scenes):
        for k in range(4):
            for t in range(F):
                d = min_centerline_distance(pred.mu[k, t][None, :], scene.graph)[0]
                expected_off += d > scene.graph.corridor_width / 2.0
                expected_total += 1
    got = offroad_rate(preds, [s.graph for s in scenes])
    assert abs(got - expected_off / expected_total) < 1e-12


def test_offroad_top1_variant():
    scene = generate_scene(2, GenConfig(scene_topology="straight"))
    on = _on_road_pred(scene, k=2)
    mu = np.asarray(on.mu).copy()
    mu[1] += 500.0  # low-pi mode far away
    pred = PredictionSet(np.array([0.9, 0.1]), mu, np.ones_like(mu))
    assert offroad_rate([pred], [scene.graph], all_modes=False) == 0.0
    assert offroad_rate([pred], [scene.graph], all_modes=True) == 0.5


# -- evaluate_dataset -----------------------------------------------------------------


def test_evaluate_dataset_perfect_oracle():
    scenes = generate_dataset(5, 12, GenConfig(scene_topology="mixed"))

    def oracle(scene, seed):
        f = scene.future.points.shape[0]
        mu = np.broadcast_to(scene.future.points, (5, f, 2)).copy()
        mu[1:] += 60.0
        pi = np.array([0.6, 0.1, 0.1, 0.1, 0.1])
        return PredictionSet(pi, mu, np.ones((5, f, 2)))

    report = evaluate_dataset(oracle, scenes)
    assert report.scene_count == 12
    assert report.min_ade[1] == 0.0
    assert report.min_fde[5] == 0.0
    assert report.miss_rate[1] == 0.0
    assert report.mean_inference_ms is not None


def test_evaluate_dataset_empty_raises():
    with pytest.raises(MissingGroundTruth):
        evaluate_dataset(lambda s, seed: None, [])


def test_evaluate_dataset_requires_futures():
    scene = generate_scene(3, GenConfig(scene_topology="straight"))
    bare = Scene(scene.target, scene.neighbors, scene.graph, None, scene.frame, scene.meta)
    with pytest.raises(MissingGroundTruth):
        evaluate_dataset(lambda s, seed: None, [bare])


def test_evaluate_dataset_ks_clipped_to_mode_count():
    scenes = generate_dataset(6, 4, GenConfig(scene_topology="straight"))
    report = evaluate_dataset(lambda s, seed: constant_velocity_baseline(s), scenes)
    assert set(report.min_ade) == {1}


def test_constant_velocity_positive_miss_rate_on_branching_data():
    scenes = generate_dataset(7, 40, GenConfig(scene_topology="t_junction"))
    report = evaluate_dataset(lambda s, seed: constant_velocity_baseline(s), scenes)
    assert report.miss_rate[1] > 0.0


def test_report_json_roundtrip():
    scenes = generate_dataset(8, 5, GenConfig(scene_topology="mixed"))
    report = evaluate_dataset(lambda s, seed: constant_velocity_baseline(s), scenes)
    back = MetricsReport.from_json(report.to_json())
    assert back.min_ade == report.min_ade
    assert back.miss_rate == report.miss_rate
    assert back.offroad_rate == report.offroad_rate
    assert back.scene_count == report.scene_count
    assert back.mean_inference_ms is None  # informational, not serialized


def test_constant_velocity_follows_straight_road():
    cfg = GenConfig(scene_topology="straight", noise_std=0.0)
    scene = generate_scene(11, cfg)
    pred = constant_velocity_baseline(scene)
    ade = min_ade_k(pred, scene.future, 1)
    assert ade < 0.1  # straight road, constant speed: near-perfect
