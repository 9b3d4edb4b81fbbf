"""Release acceptance suite: nine numbered criteria, one verdict line each.

Each test checks one release criterion against a closed-form oracle or a
stated threshold and records a PASS/FAIL line that the terminal summary
prints after the run. Criteria 7 and 8 share one fixture that runs the
full synthetic experiment twice (generate, train, score, cluster,
evaluate) single-threaded; those two runs dominate the suite's runtime.
"""

import math
import time

import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from burnscan import (ArchDescriptor, AugmentationConfig, GroundTruthMask,
                      NormStats, Scene, SynthSpec, TrainConfig, auprc_of,
                      build_eval_report, change_map, classify_severity,
                      compute_norm_stats, cosine_distance, diff_index,
                      euclidean_distance, extract_tiles, generate_pair,
                      init_encoder, kmeans_fit, load_checkpoint,
                      load_norm_stats, load_tileset, nbr, ndvi, normalize,
                      nt_xent_loss, pca_fit, save_change_map,
                      save_checkpoint, save_eval_report, save_norm_stats,
                      save_tileset, train, upsample_to_native)
from burnscan.nn.model import backward, forward_full

from _acceptance_log import record


class _criterion:
    """Record one PASS/FAIL summary line even when an assertion trips."""

    def __init__(self, number, name):
        self.number = number
        self.name = name
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        record(self.number, self.name, exc_type is None, self.detail)
        return False


def _batch_clear_of_kinks(params, rng, channels, margin=3e-4):
    """Draw batches until every ReLU input clears `margin`.

    A finite-difference probe moves any pre-activation by at most a few
    eps, so a comfortable margin guarantees the central difference never
    straddles an activation kink, where the two estimates legitimately
    disagree.
    """
    for _ in range(50):
        batch = rng.normal(0.5, 0.25, size=(4, 8, 8, channels))
        _, cache = forward_full(params, batch)
        gaps = [float(np.abs(a).min()) for a in cache["pre_acts"]]
        gaps.append(float(np.abs(cache["a1"]).min()))
        if min(gaps) > margin:
            return batch
    raise AssertionError("no kink-free batch found in 50 draws")


def test_criterion_1_gradients_match_finite_differences():
    with _criterion(1, "analytic gradients vs central differences") as c:
        t0 = time.perf_counter()
        worst = 0.0
        eps = 1e-5
        for trial in range(20):
            channels = 2 if trial % 2 == 0 else 4
            arch = ArchDescriptor(input_channels=channels, blocks=(4, 8),
                                  projection_dim=8, input_size=8)
            params = init_encoder(arch, seed=100 + trial).astype(np.float64)
            rng = np.random.default_rng(200 + trial)
            batch = _batch_clear_of_kinks(params, rng, channels)

            emb, cache = forward_full(params, batch)
            _, dz = nt_xent_loss(emb.z, 0.5)
            grads = backward(params, cache, dz)

            for tensor, grad in zip(params.tensors, grads):
                flat = tensor.reshape(-1)
                gflat = np.asarray(grad).reshape(-1)
                for k in range(flat.size):
                    orig = flat[k]
                    flat[k] = orig + eps
                    up = nt_xent_loss(forward_full(params, batch)[0].z, 0.5)[0]
                    flat[k] = orig - eps
                    dn = nt_xent_loss(forward_full(params, batch)[0].z, 0.5)[0]
                    flat[k] = orig
                    fd = (up - dn) / (2 * eps)
                    rel = abs(gflat[k] - fd) / max(abs(fd), abs(gflat[k]), 1e-6)
                    worst = max(worst, rel)
        elapsed = time.perf_counter() - t0
        c.detail = (f"max rel err {worst:.2e} over 20 nets, "
                    f"every parameter, {elapsed:.1f}s")
        assert worst < 1e-4
        assert elapsed < 120.0


def test_criterion_2_contrastive_loss_oracles():
    with _criterion(2, "contrastive loss closed-form values") as c:
        row = np.array([0.3, -1.2, 0.7, 2.0])
        identical, _ = nt_xent_loss(np.tile(row, (4, 1)), 0.5)
        assert abs(identical - math.log(3.0)) < 1e-6

        z = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        orthogonal, _ = nt_xent_loss(z, 1.0)
        want = math.log((math.e + 2.0) / math.e)
        assert abs(orthogonal - want) < 1e-6

        single, _ = nt_xent_loss(np.random.default_rng(2).normal(size=(2, 5)), 0.5)
        assert single == 0.0
        c.detail = (f"identical batch {identical:.6f}=ln3, "
                    f"orthogonal {orthogonal:.6f}=ln((e+2)/e), single pair 0")


def test_criterion_3_index_invariants():
    with _criterion(3, "index bounds, scale invariance, self-difference") as c:
        rng = np.random.default_rng(33)
        px = rng.uniform(0.01, 1.2, size=(1000, 1000, 3))
        scene = Scene(pixels=px, band_map={"red": 0, "nir": 1, "swir": 2},
                      geo=(0.0, 0.0, 10.0), crs_id="synthetic-utm",
                      timestamp=None, scene_id="invariants")
        v = ndvi(scene)
        b = nbr(scene)
        for values in (v.values, b.values):
            assert values.shape == (1000, 1000)
            assert np.all(np.isfinite(values))
            assert np.all(values >= -1.0) and np.all(values <= 1.0)

        drift = 0.0
        for k in rng.uniform(0.1, 10.0, size=5):
            scaled = Scene(pixels=px * k, band_map=scene.band_map,
                           geo=scene.geo, crs_id=scene.crs_id,
                           timestamp=None, scene_id="scaled")
            drift = max(drift,
                        float(np.abs(ndvi(scaled).values - v.values).max()),
                        float(np.abs(nbr(scaled).values - b.values).max()))
        assert drift <= 1e-12

        zero = diff_index(v, v)
        assert np.all(zero.values == 0.0)
        c.detail = f"2x10^6 index values in [-1,1], scale drift {drift:.1e}"


def test_criterion_4_distance_axioms():
    with _criterion(4, "distance symmetry, bounds, triangle inequality") as c:
        rng = np.random.default_rng(44)
        worst_scale = 0.0
        for _ in range(10_000):
            d = int(rng.integers(2, 33))
            u, v, w = rng.normal(size=(3, d)) + 0.01

            assert cosine_distance(u, v) == cosine_distance(v, u)
            assert euclidean_distance(u, v) == euclidean_distance(v, u)

            uv, vw, uw = (euclidean_distance(u, v), euclidean_distance(v, w),
                          euclidean_distance(u, w))
            assert uw <= uv + vw + 1e-12 * (1.0 + uv + vw)

            cd = cosine_distance(u, v)
            assert 0.0 <= cd <= 2.0 + 1e-12

            a, b2 = rng.uniform(0.1, 100.0, size=2)
            worst_scale = max(worst_scale,
                              abs(cosine_distance(a * u, b2 * v) - cd))
        assert worst_scale <= 1e-12
        c.detail = f"10^4 triples, cosine scale drift {worst_scale:.1e}"


def test_criterion_5_clustering_and_pca_oracles():
    with _criterion(5, "k-means exact centroids, inertia descent, PCA") as c:
        pts = np.array([0.0, 0.1, 10.0, 10.1]).reshape(-1, 1)
        model = kmeans_fit(pts, k=2, seed=0)
        got = sorted(model.centroids.ravel().tolist())
        assert got == [0.05, 10.05]

        rng = np.random.default_rng(55)
        for trial in range(100):
            data = rng.standard_normal((40, 3)) * rng.uniform(0.5, 3.0)
            hist = np.asarray(kmeans_fit(data, k=3, seed=trial).inertia_history)
            assert np.all(np.diff(hist) <= 1e-9)

        t = rng.normal(size=(300, 1))
        rank1 = t @ np.array([[3.0, -1.0, 2.0]]) + np.array([5.0, 6.0, 7.0])
        pca = pca_fit(rank1, 3)
        ratio = float(pca.explained_variance_ratio[0])
        assert ratio >= 0.99999
        c.detail = (f"centroids {got}, 100 descending inertia histories, "
                    f"rank-1 ratio {ratio:.7f}")


def test_criterion_6_ranking_metric_oracles():
    with _criterion(6, "area under precision-recall oracles") as c:
        rng = np.random.default_rng(66)
        labels = (rng.uniform(size=500) < 0.3).astype(np.int64)
        labels[:2] = [0, 1]
        perfect = labels * 10.0 + rng.uniform(0.0, 1.0, size=500)
        assert auprc_of(perfect, labels) == 1.0

        flat = np.full(500, 3.7)
        assert abs(auprc_of(flat, labels) - labels.mean()) <= 1e-12

        hand = auprc_of(np.array([4.0, 3.0, 2.0, 1.0]),
                        np.array([1, 0, 1, 0]))
        assert abs(hand - 5.0 / 6.0) <= 1e-9

        scores = np.round(rng.normal(size=1000), 1)
        base = auprc_of(scores, labels2 := (rng.uniform(size=1000) < 0.2).astype(int))
        worst = 0.0
        for i in range(20):
            a = float(rng.uniform(0.2, 5.0))
            b = float(rng.normal())
            transformed = [a * scores + b, np.exp(scores / 3.0) * a,
                           np.arctan(scores) * a + b, scores ** 3 * a][i % 4]
            worst = max(worst, abs(auprc_of(transformed, labels2) - base))
        assert worst <= 1e-12
        c.detail = (f"perfect 1.0, ties {labels.mean():.3f}, hand case "
                    f"{hand:.10f}, transform drift {worst:.1e}")


def _run_experiment(out_dir):
    """One full pass: synthesize, train, score, cluster, evaluate."""
    t0 = time.perf_counter()
    train_scenes = []
    for seed in (1, 2, 3, 4):
        pre, post, _, _ = generate_pair(SynthSpec(seed=seed))
        train_scenes += [pre, post]
    pre_e, post_e, burned, severity = generate_pair(SynthSpec(seed=99))

    stats = compute_norm_stats(train_scenes)
    corpus = np.concatenate(
        [extract_tiles(normalize(s, stats), 8).pixel_stack()
         for s in train_scenes], axis=0)
    cfg = TrainConfig(temperature=0.5, batch_size=256, learning_rate=1e-3,
                      max_epochs=6, patience=50, seed=0)
    params = init_encoder(ArchDescriptor(input_channels=4), cfg.seed)
    result = train(corpus, params, cfg, AugmentationConfig())
    ckpt_path = out_dir / "encoder.ckpt"
    save_checkpoint(result.params, ckpt_path)

    cm = change_map(result.params, normalize(pre_e, stats),
                    normalize(post_e, stats), 8, metric="cosine",
                    representation="h")
    map_path = out_dir / "change_map.tif"
    save_change_map(cm, map_path)
    native = upsample_to_native(cm, pre_e.height, pre_e.width)

    d = diff_index(ndvi(pre_e), ndvi(post_e))
    sev_map, _ = classify_severity(native, k=3, seed=0)
    gt = GroundTruthMask(labels=severity.astype(np.int64),
                         label_set=(0, 1, 2), geo=None, crs_id="")
    report = build_eval_report(native, burned, pred=sev_map, severity_gt=gt)
    report_path = out_dir / "report.json"
    save_eval_report(report, report_path)
    return {
        "auprc": float(report.auprc),
        "baseline": float(auprc_of(d.values, burned)),
        "f1": dict(report.f1),
        "macro_f1": float(np.mean(list(report.f1.values()))),
        "epochs": len(result.history),
        "elapsed": time.perf_counter() - t0,
        "checkpoint": ckpt_path.read_bytes(),
        "change_map": map_path.read_bytes(),
        "report": report_path.read_bytes(),
    }


@pytest.fixture(scope="module")
def experiment(tmp_path_factory):
    runs = []
    with threadpool_limits(limits=1):
        for name in ("first", "second"):
            runs.append(_run_experiment(tmp_path_factory.mktemp("exp_" + name)))
    return runs


def test_criterion_7_end_to_end_synthetic_experiment(experiment):
    with _criterion(7, "end-to-end change detection and severity") as c:
        r = experiment[0]
        c.detail = (f"AUPRC {r['auprc']:.4f} vs dNDVI {r['baseline']:.4f}, "
                    f"macro-F1 {r['macro_f1']:.4f}, "
                    f"{r['epochs']} epochs in {r['elapsed']:.0f}s")
        assert r["elapsed"] <= 1800.0
        assert r["auprc"] >= 0.90
        assert r["auprc"] >= r["baseline"] - 0.02
        assert r["macro_f1"] >= 0.70


def test_criterion_8_rerun_reproduces_artifacts(experiment):
    with _criterion(8, "deterministic rerun, byte-identical artifacts") as c:
        first, second = experiment
        assert second["elapsed"] <= 1800.0
        assert first["checkpoint"] == second["checkpoint"]
        assert first["change_map"] == second["change_map"]
        assert first["report"] == second["report"]
        c.detail = (f"checkpoint {len(first['checkpoint'])} B, change map "
                    f"{len(first['change_map'])} B, report "
                    f"{len(first['report'])} B all identical")


def test_criterion_9_format_round_trips(tmp_path):
    with _criterion(9, "bit-exact persistence round trips") as c:
        rng = np.random.default_rng(99)
        roles = ("red", "green", "blue", "nir", "swir")
        for trial in range(100):
            lo_values = rng.normal(0.0, 10.0, size=len(roles))
            spans = rng.uniform(1e-6, 10.0, size=len(roles))
            k = int(rng.integers(1, 6))
            bands = {roles[i]: (float(lo_values[i]), float(lo_values[i] + spans[i]))
                     for i in range(k)}
            stats = NormStats(bands=bands, source_scene_ids=(f"s{trial}",))
            stats_path = tmp_path / "stats.json"
            save_norm_stats(stats, stats_path)
            loaded = load_norm_stats(stats_path)
            assert loaded.bands == stats.bands
            assert loaded.fingerprint() == stats.fingerprint()

            ch = int(rng.integers(1, 6))
            h, w = (int(x) for x in rng.integers(32, 49, size=2))
            scene = Scene(
                pixels=rng.normal(size=(h, w, ch)).astype(np.float32),
                band_map={roles[i]: i for i in range(ch)},
                geo=(0.0, 0.0, 10.0), crs_id="synthetic-utm",
                timestamp=None, scene_id=f"scene{trial}")
            ts = extract_tiles(scene, int(rng.integers(1, 17)))
            tiles_path = tmp_path / "round.tiles"
            save_tileset(ts, tiles_path)
            back = load_tileset(tiles_path)
            assert back.pixel_stack().tobytes() == ts.pixel_stack().tobytes()
            assert np.array_equal(back.anchors(), ts.anchors())
            assert (back.stride, back.grid_shape) == (ts.stride, ts.grid_shape)

            arch = ArchDescriptor(
                input_channels=ch,
                blocks=(int(rng.integers(2, 9)), int(rng.integers(2, 9))),
                projection_dim=int(rng.integers(2, 17)), input_size=8)
            params = init_encoder(arch, seed=trial)
            ckpt_path = tmp_path / "round.ckpt"
            save_checkpoint(params, ckpt_path)
            restored = load_checkpoint(ckpt_path)
            assert all(a.tobytes() == b.tobytes()
                       for a, b in zip(restored.tensors, params.tensors))
            assert (restored.seed, restored.epochs_completed) == (
                params.seed, params.epochs_completed)
        c.detail = "100 randomized instances each: stats, tiles, checkpoint"
