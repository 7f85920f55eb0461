"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected into an "acceptance criteria" section of the
pytest terminal summary.
"""

from __future__ import annotations

import dataclasses
import json
import math
import threading
import time
from fractions import Fraction

import numpy as np
import pytest
from websockets.sync.client import connect

from botflow.classifiers import ClassifierSpec, fit, predict_batch
from botflow.classifiers.bayes import gaussian_density
from botflow.classifiers.neighbors import KNeighbors
from botflow.classifiers.tree import impurity
from botflow.dataset import build_matrix, stratified_kfold
from botflow.detector import (load_registry, parse_alert_line, parse_flow_log_line, register_model,
                              run_detection, stream_serve)
from botflow.errors import GridTooLarge
from botflow.flowcore import LabelClass, read_flow_file, write_flows
from botflow.ingest import aggregate, read_pcap
from botflow.ingest.aggregate import AggregatorConfig
from botflow.ingest.craft import handshake_frames, tcp_frame, udp_frame
from botflow.ingest.decode import TcpFlag
from botflow.ingest.pcap import write_pcap
from botflow.metrics import ConfusionMatrix, confusion_from_predictions, cross_validate, f1_from, score
from botflow.optimize import (GAConfig, GeneSpec, default_chromosome, fitness, grid_search,
                              reference_grid, run_ga)
from botflow.synthetic import synthetic_dataset, synthetic_flows

# 1. metric oracle ---------------------------------------------------------


def test_metric_oracle(criterion):
    with criterion("metric oracle (FPR 0.114190435%, F1 0.9990)", limit=1.0) as notes:
        m = score(ConfusionMatrix(tp=0, fp=1419, tn=1242661, fn=0))
        fpr_pct = 100.0 * m["fpr"]
        notes.append(f"fpr={fpr_pct:.9f}%")
        assert abs(fpr_pct - 0.114190435) <= 1e-6
        f1 = f1_from(0.9994, 0.9987)
        notes.append(f"f1={f1:.6f}")
        assert abs(f1 - 0.9990) <= 5e-4


# 2. brute-force metric equivalence -----------------------------------------


def _oracle_metrics(t: list[int], p: list[int]) -> dict[str, float]:
    tp = fp = tn = fn = 0
    for a, b in zip(t, p):
        if a == 1 and b == 1:
            tp += 1
        elif a == 0 and b == 1:
            fp += 1
        elif a == 0 and b == 0:
            tn += 1
        else:
            fn += 1
    prec = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
    rec = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else Fraction(0)
    fpr = Fraction(fp, tn) if tn else Fraction(1 if fp else 0)
    acc = Fraction(tp + tn, len(t))
    return {"counts": (tp, fp, tn, fn), "accuracy": float(acc), "precision": float(prec),
            "recall": float(rec), "f1": float(f1), "fpr": float(fpr)}


def test_brute_force_metric_equivalence(criterion):
    rng = np.random.default_rng(2024)
    with criterion("brute-force metric equivalence (1000 vectors)", limit=5.0) as notes:
        for _ in range(1000):
            n = int(rng.integers(1, 501))
            t = rng.integers(0, 2, n).tolist()
            p = rng.integers(0, 2, n).tolist()
            truth = [LabelClass.from_code(v) for v in t]
            pred = [LabelClass.from_code(v) for v in p]
            cm = confusion_from_predictions(truth, pred)
            got = score(cm)
            want = _oracle_metrics(t, p)
            assert (cm.tp, cm.fp, cm.tn, cm.fn) == want["counts"]
            for name in ("accuracy", "precision", "recall", "f1", "fpr"):
                assert got[name] == want[name], (name, got[name], want[name])
        notes.append("all exact")


# 3. stratification ---------------------------------------------------------


def test_stratification(criterion):
    rng = np.random.default_rng(7)
    with criterion("stratification (500 configurations)", limit=10.0) as notes:
        for _ in range(500):
            k = int(rng.integers(2, 21))
            n = int(rng.integers(2 * k, 3001))
            n_bot = int(rng.integers(k, n - k + 1))
            y = np.zeros(n, dtype=np.int8)
            y[rng.choice(n, n_bot, replace=False)] = 1
            plan = stratified_kfold(y, k, seed=int(rng.integers(1 << 31)))
            seen = np.zeros(n, dtype=np.int64)
            for fold in range(k):
                test = plan.test_indices(fold)
                seen[test] += 1
                train = plan.train_indices(fold)
                assert len(np.intersect1d(train, test)) == 0
                assert len(train) + len(test) == n
                for cls, total in ((0, n - n_bot), (1, n_bot)):
                    in_fold = int(np.count_nonzero(y[test] == cls))
                    assert abs(in_fold - total / k) <= 1.0
            assert np.all(seen == 1)
        notes.append("bounds and partition hold")


# 4. classifier correctness -------------------------------------------------


def _bayes_oracle(rows, labels, query, eps):
    best, best_score = None, -math.inf
    for cls in (0, 1):
        members = [r for r, l in zip(rows, labels) if l == cls]
        prior = len(members) / len(rows)
        post = prior
        for j, xq in enumerate(query):
            col = [r[j] for r in members]
            mu = sum(col) / len(col)
            var = sum((c - mu) ** 2 for c in col) / len(col) + eps
            post *= math.exp(-((xq - mu) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)
        if post > best_score:
            best, best_score = cls, post
    return best


def test_classifier_correctness(criterion):
    rng = np.random.default_rng(11)
    with criterion("classifier correctness (GNB, kNN, RF==DT, density, entropy)", limit=30.0) as notes:
        # Gaussian NB against the closed-form posterior
        rows = [[1.0, 5.0], [2.0, 4.5], [1.5, 6.0], [4.0, 1.0], [5.5, 2.0], [4.5, 0.5]]
        labels = [0, 0, 0, 1, 1, 1]
        ds = _matrix_dataset(np.array(rows), np.array(labels, dtype=np.int8))
        model = fit(ClassifierSpec("GaussianNB"), ds)
        eps = 1e-9 * max(float(np.var(np.array(rows)[:, j])) for j in range(2))
        queries = rng.uniform(0.0, 7.0, size=(20, 2))
        got = predict_batch(model, queries)
        want = [_bayes_oracle(rows, labels, q.tolist(), eps) for q in queries]
        assert got.tolist() == want
        notes.append("GNB 20/20")

        # kNN tree search against brute force
        x = rng.normal(size=(500, 4))
        y = (rng.random(500) < 0.3).astype(np.int8)
        q = rng.normal(size=(100, 4))
        for algo in ("kd_tree", "ball_tree"):
            tree = KNeighbors(5, algorithm=algo).fit(x, y)
            brute = KNeighbors(5, algorithm="brute").fit(x, y)
            for row in q:
                assert tree.kneighbors(row)[1].tolist() == brute.kneighbors(row)[1].tolist()
            assert tree.predict(q).tolist() == brute.predict(q).tolist()
        notes.append("kNN tree==brute")

        # single unbagged, unsubsampled forest tree equals a decision tree
        flows_ds = synthetic_dataset(3000, 0.1, seed=21)
        rf = fit(ClassifierSpec("RandomForest", {"n_estimators": 1, "bootstrap": False,
                                                 "max_features": None}), flows_ds, seed=0)
        dt = fit(ClassifierSpec("DecisionTree"), flows_ds, seed=0)
        a, b = rf.estimator.trees[0].arrays(), dt.estimator.tree.arrays()
        assert a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)
        assert np.array_equal(predict_batch(rf, flows_ds.x), predict_batch(dt, flows_ds.x))
        notes.append("RF(1)==DT")

        density = float(gaussian_density(0.0, 0.0, 1.0))
        assert abs(density - 0.3989423) <= 1e-6
        ent = impurity([3, 1], "entropy")
        assert abs(ent - 0.8112781) <= 1e-6
        notes.append(f"density={density:.7f} entropy={ent:.7f}")


def _matrix_dataset(x, y):
    from botflow.dataset import LabeledDataset

    return LabeledDataset(x, y, tuple(f"f{i}" for i in range(x.shape[1])), "inline")


# 5. synthetic end-to-end quality -------------------------------------------


def test_synthetic_end_to_end(criterion):
    with criterion("synthetic 20k flows: RF F1>=0.98, acc>=0.99, GNB<RF", limit=120.0) as notes:
        ds = synthetic_dataset(20000, 0.05, seed=0)
        assert int(ds.y.sum()) == 1000
        rf = cross_validate(ClassifierSpec("RandomForest"), ds, k=10, seed=0)
        gnb = cross_validate(ClassifierSpec("GaussianNB"), ds, k=10, seed=0)
        rf_f1, rf_acc, gnb_f1 = rf.mean("f1"), rf.mean("accuracy"), gnb.mean("f1")
        notes.append(f"RF f1={rf_f1:.4f} acc={rf_acc:.4f}; GNB f1={gnb_f1:.4f}")
        assert rf_f1 >= 0.98
        assert rf_acc >= 0.99
        assert gnb_f1 < rf_f1


# 6. GA guarantees ----------------------------------------------------------

_TOY_OPTIMUM = 42
_TOY_POOL = (GeneSpec("x", "integer", (10, 200), 100),)


def _toy_fitness(chrom) -> float:
    return 1.0 - abs(chrom.genes[0] - _TOY_OPTIMUM) / 200.0


def _running_max_ok(history) -> bool:
    best = -math.inf
    running = []
    for rec in history:
        best = max(best, rec.fitness)
        running.append(best)
    return all(b >= a for a, b in zip(running, running[1:]))


def test_ga_guarantees(criterion):
    with criterion("GA guarantees (injection, running max, toy 90/100)", limit=60.0) as notes:
        hits = 0
        cfg_base = GAConfig(population_size=10, generation_limit=10)
        default_fit = _toy_fitness(default_chromosome("toy", _TOY_POOL))
        for seed in range(100):
            cfg = dataclasses.replace(cfg_base, seed=seed)
            result = run_ga("toy", None, cfg, evaluate=_toy_fitness, pool=_TOY_POOL)
            assert result.best_fitness >= default_fit
            assert _running_max_ok(result.history)
            hits += abs(result.best.genes[0] - _TOY_OPTIMUM) <= 10
        notes.append(f"toy hits {hits}/100")
        assert hits >= 90

        # real fitness on a small flow dataset: never below the default chromosome
        ds = synthetic_dataset(1500, 0.1, seed=4)
        for seed in range(3):
            cfg = GAConfig(10, 10, k=3, seed=seed)
            result = run_ga("DecisionTree", ds, cfg)
            base = fitness(default_chromosome("DecisionTree"), ds, cfg)
            assert result.best_fitness >= base
            assert _running_max_ok(result.history)
        notes.append("DT GA >= default on seeds 0-2")


@pytest.mark.slow
def test_ga_over_flow_dataset(criterion):
    with criterion("GA over the synthetic flow dataset (slow)", limit=1800.0) as notes:
        ds = synthetic_dataset(20000, 0.05, seed=0)
        for kind in ("DecisionTree", "RandomForest"):
            cfg = GAConfig(10, 10, k=10, seed=0)
            data = ds if kind == "DecisionTree" else ds.subset(np.arange(4000))
            result = run_ga(kind, data, cfg)
            base = fitness(default_chromosome(kind), data, cfg)
            notes.append(f"{kind} best={result.best_fitness:.4f} default={base:.4f}")
            assert result.best_fitness >= base
            assert _running_max_ok(result.history)


# 7. grid combinatorics -----------------------------------------------------


def test_grid_combinatorics(criterion):
    with criterion("grid combinatorics (DT 1408, RF cap)", limit=1.0) as notes:
        from botflow.optimize import grid_chromosomes

        count = sum(1 for _ in grid_chromosomes("DecisionTree", reference_grid("DecisionTree")))
        notes.append(f"DT grid {count}")
        assert count == 1408
        calls = []
        with pytest.raises(GridTooLarge):
            grid_search("RandomForest", reference_grid("RandomForest"), None, cap=2000,
                        evaluate=lambda c: calls.append(c) or 0.0)
        assert calls == []
        notes.append("RF 3456 > cap 2000 rejected before evaluation")


# 8. ingest conservation and timing -----------------------------------------

_HOSTS = ("10.0.0.1", "10.0.0.2", "192.168.1.7", "172.16.0.9")


def _random_stream(rng) -> list[tuple[float, bytes]]:
    frames, ts, total = [], 1_000_000.0, int(rng.integers(1, 80))
    for _ in range(total):
        ts += float(rng.exponential(2.0))
        a, b = rng.choice(len(_HOSTS), 2, replace=False)
        sport, dport = int(rng.integers(1000, 1010)), int(rng.choice((53, 80, 443)))
        size = int(rng.integers(0, 600))
        if rng.random() < 0.6:
            flags = TcpFlag(int(rng.choice([TcpFlag.SYN, TcpFlag.SYN | TcpFlag.ACK, TcpFlag.ACK,
                                            TcpFlag.FIN | TcpFlag.ACK, TcpFlag.RST, TcpFlag.PSH | TcpFlag.ACK])))
            frame = tcp_frame(_HOSTS[a], _HOSTS[b], sport, dport, flags, size)
        else:
            frame = udp_frame(_HOSTS[a], _HOSTS[b], sport, dport, size)
        frames.append((round(ts, 6), frame))
    return frames


def test_ingest_conservation_and_timing(criterion, tmp_path):
    with criterion("ingest handshake timing, conservation, determinism", limit=10.0) as notes:
        pcap = tmp_path / "handshake.pcap"
        write_pcap(pcap, handshake_frames())
        (flow,) = list(aggregate(read_pcap(pcap)))
        assert (flow.syn_ack, flow.ack_dat, flow.tcp_rtt) == (0.050, 0.070, 0.120)
        notes.append("handshake exact")

        rng = np.random.default_rng(99)
        for i in range(100):
            frames = _random_stream(rng)
            path = tmp_path / f"s{i}.pcap"
            write_pcap(path, frames)
            packets = list(read_pcap(path))
            cfg = AggregatorConfig(idle_timeout=float(rng.uniform(1, 30)),
                                   active_timeout=float(rng.uniform(30, 120)))
            flows = list(aggregate(packets, cfg))
            assert sum(f.tot_pkts for f in flows) == len(packets) == len(frames)
            assert sum(f.tot_bytes for f in flows) == sum(p.ip_total_len for p in packets)
            assert all(f.src_pkts + f.dst_pkts == f.tot_pkts for f in flows)
            assert all(f.src_bytes + f.dst_bytes == f.tot_bytes for f in flows)
        notes.append("100 streams conserved")

        outputs = []
        for run in range(2):
            out = tmp_path / f"run{run}.binetflow"
            with open(out, "w", encoding="utf-8", newline="\n") as fh:
                write_flows(fh, aggregate(read_pcap(tmp_path / "s7.pcap")))
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
        notes.append("byte-identical")


# 9. detector end to end ----------------------------------------------------


def _threshold_model(tmp_path):
    """DecisionTree on SrcBytes alone; learns a single cut between 1000 and 5000."""
    base = synthetic_flows(400, 0.5, seed=8)
    train = [dataclasses.replace(f, src_bytes=(6000 + i if f.label == "Botnet" else 100 + i))
             for i, f in enumerate(base)]
    ds = build_matrix(train, ["SrcBytes"], provenance="threshold-train")
    model = fit(ClassifierSpec("DecisionTree"), ds)
    models_dir = tmp_path / "models"
    register_model(model, models_dir, models_dir / "models.json", "threshold",
                   created_at="2026-01-01T00:00:00")
    return models_dir


def _census() -> set[str]:
    return {t.name for t in threading.enumerate()}


def test_detector_end_to_end(criterion, tmp_path):
    with criterion("detector end to end (alerts, logs, stream, shutdown)", limit=30.0) as notes:
        baseline = _census()
        models_dir = _threshold_model(tmp_path)
        registry = load_registry(models_dir, models_dir / "models.json")

        flows = [dataclasses.replace(f, src_bytes=(9000 if i % 7 == 0 else 200))
                 for i, f in enumerate(synthetic_flows(60, 0.0, seed=9))]
        expected_alerts = sum(1 for i in range(60) if i % 7 == 0)
        source = tmp_path / "crafted.binetflow"
        with open(source, "w", encoding="utf-8", newline="\n") as fh:
            write_flows(fh, flows)
        _, written = read_flow_file(source)

        server = stream_serve("127.0.0.1:0")
        received: list[dict] = []
        with connect(f"ws://127.0.0.1:{server.port}") as ws:
            time.sleep(0.2)  # let the handler register the client
            summary = run_detection(source, registry, tmp_path / "alerts.log", tmp_path / "flows.log",
                                    server)
            deadline = time.monotonic() + 5.0
            while len(received) < len(flows) + expected_alerts and time.monotonic() < deadline:
                received.append(json.loads(ws.recv(timeout=5.0)))
            ws.send(json.dumps({"type": "get_all_data"}))
            replay = json.loads(ws.recv(timeout=5.0))
        server.stop()

        notes.append(f"alerts={summary.alerts}/{expected_alerts}")
        assert summary.flows == len(flows)
        assert summary.alerts == expected_alerts

        alerts = [parse_alert_line(l) for l in (tmp_path / "alerts.log").read_text().splitlines()]
        assert len(alerts) == expected_alerts
        assert [a.flow for a in alerts] == [f for f in written if f.src_bytes == 9000]
        assert all(a.triggering_model_ids == ("threshold",) for a in alerts)
        logged = [parse_flow_log_line(l) for l in (tmp_path / "flows.log").read_text().splitlines()]
        assert [f for f, _ in logged] == written
        assert [lab for _, lab in logged].count(LabelClass.BOTNET) == expected_alerts

        kinds = [m["type"] for m in received]
        assert kinds.count("flow") == len(flows) and kinds.count("alert") == expected_alerts
        assert replay["type"] == "all_data"
        assert len(replay["flows"]) == len(flows) and len(replay["alerts"]) == expected_alerts
        assert replay["flows"] == [m for m in received if m["type"] == "flow"]
        notes.append("stream and replay complete")

        deadline = time.monotonic() + 2.0
        while _census() != baseline and time.monotonic() < deadline:
            time.sleep(0.05)
        assert _census() == baseline, _census() - baseline
        notes.append("threads back to baseline")
