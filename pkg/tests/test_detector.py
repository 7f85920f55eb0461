from __future__ import annotations

import json
import socket
import threading
import time
from pathlib import Path

import numpy as np
import pytest
from websockets.sync.client import connect

from botflow.classifiers import ClassifierSpec, fit
from botflow.dataset import build_matrix
from botflow.detector import (Alert, StreamServer, alert_line, alert_message, check_features, classify_batch,
                              classify_flow, flow_from_payload, flow_message, load_registry, parse_alert_line,
                              parse_flow_log_line, read_metadata, register_model, run_detection, stream_serve,
                              write_metadata)
from botflow.detector.engine import flow_log_line
from botflow.errors import BindFailed, FeatureMissing, MetadataParse, NoValidModels
from botflow.flowcore import FIELD_ORDER, LabelClass, serialize_flow_line, write_flows
from botflow.ingest.craft import handshake_frames
from botflow.ingest.pcap import write_pcap

GOLDEN = Path(__file__).parent / "golden"


def _model(flows, features, kind="DecisionTree"):
    return fit(ClassifierSpec(kind), build_matrix(flows, features, provenance="unit"))


@pytest.fixture
def registry_dir(tmp_path, tiny_flows):
    d = tmp_path / "models"
    register_model(_model(tiny_flows, ["sTtl", "SrcWin"]), d, d / "models.json", "ttl-win",
                   created_at="2026-01-01T00:00:00")
    register_model(_model(tiny_flows, ["SrcBytes"]), d, d / "models.json", "bytes",
                   created_at="2026-01-01T00:00:00")
    return d


def _write(path, flows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_flows(fh, flows)
    return path


# registry -----------------------------------------------------------------

def test_register_and_load(registry_dir):
    entries = read_metadata(registry_dir / "models.json")
    assert [e.model_id for e in entries] == ["ttl-win", "bytes"]
    assert entries[0].features == ("sTtl", "SrcWin") and entries[0].kind == "DecisionTree"
    reg = load_registry(registry_dir, registry_dir / "models.json")
    assert len(reg) == 2 and not reg.skipped


def test_reregister_replaces_entry(registry_dir, tiny_flows):
    register_model(_model(tiny_flows, ["sTtl"]), registry_dir, registry_dir / "models.json", "bytes")
    entries = read_metadata(registry_dir / "models.json")
    assert [e.model_id for e in entries] == ["ttl-win", "bytes"]
    assert entries[1].features == ("sTtl",)


def test_bad_entries_are_skipped(registry_dir):
    meta = registry_dir / "models.json"
    entries = read_metadata(meta)
    (registry_dir / "bytes.model").write_bytes(b"garbage")
    missing = entries[0].__class__("ghost", "ghost.model", "KNN", ("sTtl",))
    wrong_features = entries[0].__class__("liar", "ttl-win.model", "DecisionTree", ("Dur",))
    write_metadata(meta, entries + [missing, wrong_features])
    reg = load_registry(registry_dir, meta)
    assert [m.model_id for m in reg.loaded] == ["ttl-win"]
    assert {s.model_id for s in reg.skipped} == {"bytes", "ghost", "liar"}


def test_no_valid_models(tmp_path):
    meta = tmp_path / "models.json"
    meta.write_text(json.dumps({"format_version": 1, "models": []}))
    with pytest.raises(NoValidModels):
        load_registry(tmp_path, meta)


@pytest.mark.parametrize("doc", [
    "not json",
    json.dumps({"models": {}}),
    json.dumps({"format_version": 2, "models": []}),
    json.dumps({"models": [{"model_id": "a"}]}),
    json.dumps({"models": [{"model_id": "a", "file_name": "a", "kind": "KNN", "features": ["sTtl"]},
                           {"model_id": "a", "file_name": "b", "kind": "KNN", "features": ["sTtl"]}]}),
])
def test_metadata_parse_errors(tmp_path, doc):
    meta = tmp_path / "m.json"
    meta.write_text(doc)
    with pytest.raises(MetadataParse):
        read_metadata(meta)


# classification -------------------------------------------------------------

def test_or_rule(registry_dir, tiny_flows):
    reg = load_registry(registry_dir, registry_dir / "models.json")
    results = classify_batch(tiny_flows, reg)
    for flow, res in zip(tiny_flows, results):
        single = [classify_flow(flow, [m]).label for m in reg.loaded]
        expect = LabelClass.BOTNET if LabelClass.BOTNET in single else LabelClass.NORMAL
        assert res.label is expect
        assert (res.label is LabelClass.BOTNET) == bool(res.triggering_model_ids)


def test_check_features(registry_dir):
    reg = load_registry(registry_dir, registry_dir / "models.json")
    check_features(reg)
    with pytest.raises(FeatureMissing):
        check_features(reg, ["sTtl", "SrcWin"])


def test_log_lines_round_trip(tiny_flows):
    alert = Alert("2013-10-22T00:00:01", tiny_flows[0], ("a", "b"))
    back = parse_alert_line(alert_line(alert))
    assert back == alert
    assert parse_flow_log_line(flow_log_line(tiny_flows[1], LabelClass.NORMAL)) == \
        (tiny_flows[1], LabelClass.NORMAL)
    with pytest.raises(ValueError):
        Alert("t", tiny_flows[0], ())


# messages -------------------------------------------------------------------

def test_stream_messages_match_golden(tiny_flows):
    flow = tiny_flows[0]
    alert = Alert(flow.last_time.isoformat(), flow, ("m1",))
    golden = json.loads((GOLDEN / "stream_messages.json").read_text())
    assert flow_message(flow, LabelClass.NORMAL) == golden["flow"]
    assert alert_message(alert) == golden["alert"]
    payload = golden["flow"]["flow"]
    assert list(payload) == list(FIELD_ORDER)
    assert ",".join(payload.values()) == serialize_flow_line(flow)
    assert flow_from_payload(payload) == flow


# detection runs -------------------------------------------------------------

def test_run_detection_from_flow_file(tmp_path, registry_dir, tiny_flows):
    reg = load_registry(registry_dir, registry_dir / "models.json")
    src = _write(tmp_path / "in.binetflow", tiny_flows)
    summary = run_detection(src, reg, tmp_path / "a.log", tmp_path / "f.log")
    expected = sum(r.label is LabelClass.BOTNET for r in classify_batch(tiny_flows, reg))
    assert summary.flows == 200 and summary.alerts == expected and summary.mode == "flows"
    lines = (tmp_path / "f.log").read_text().splitlines()
    assert [parse_flow_log_line(l)[0] for l in lines] == tiny_flows


def test_run_detection_from_pcap(tmp_path, tiny_flows):
    d = tmp_path / "models"
    register_model(_model(tiny_flows, ["TcpRtt"]), d, d / "models.json", "rtt")
    pcap = tmp_path / "h.pcap"
    write_pcap(pcap, handshake_frames())
    summary = run_detection(pcap, load_registry(d, d / "models.json"))
    assert summary.mode == "pcap" and summary.flows == 1 and summary.decode["decoded"] == 3


def test_flow_file_missing_model_column(tmp_path, registry_dir, tiny_flows):
    reg = load_registry(registry_dir, registry_dir / "models.json")
    src = tmp_path / "narrow.binetflow"
    with open(src, "w", newline="\n") as fh:
        write_flows(fh, tiny_flows, ["SrcAddr", "sTtl", "SrcBytes", "Label"])
    with pytest.raises(FeatureMissing):
        run_detection(src, reg)


def test_source_errors_propagate(tmp_path, registry_dir, tiny_flows):
    reg = load_registry(registry_dir, registry_dir / "models.json")
    with pytest.raises(FileNotFoundError):
        run_detection(tmp_path / "nope", reg)
    src = _write(tmp_path / "bad.binetflow", tiny_flows[:5])
    with open(src, "a") as fh:
        fh.write("1,2,3\n")
    before = threading.active_count()
    with pytest.raises(Exception) as exc:
        run_detection(src, reg)
    assert "expected 33 fields" in str(exc.value)
    assert threading.active_count() == before


def test_cancel_stops_run(tmp_path, registry_dir, tiny_flows):
    reg = load_registry(registry_dir, registry_dir / "models.json")
    src = _write(tmp_path / "in.binetflow", tiny_flows)
    cancel = threading.Event()
    cancel.set()
    summary = run_detection(src, reg, cancel=cancel)
    assert summary.flows <= len(tiny_flows)


# stream server ----------------------------------------------------------------

def test_bind_failure():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        s.listen()
        port = s.getsockname()[1]
        with pytest.raises(BindFailed):
            stream_serve(f"127.0.0.1:{port}")
    with pytest.raises(BindFailed):
        stream_serve("127.0.0.1:http")


def test_replay_and_retention(tiny_flows):
    with StreamServer("127.0.0.1", 0, flow_retention=5) as server:
        for f in tiny_flows[:8]:
            server.publish_flow(f, LabelClass.NORMAL)
        server.flush()
        with connect(server.address) as ws:
            ws.send("get_all_data")
            msg = json.loads(ws.recv(timeout=5))
        assert msg["type"] == "all_data" and len(msg["flows"]) == 5 and msg["alerts"] == []
        assert msg["flows"][-1] == flow_message(tiny_flows[7], LabelClass.NORMAL)


def test_slow_client_is_dropped(tiny_flows):
    with StreamServer("127.0.0.1", 0, client_queue=2) as server:
        with connect(server.address, max_queue=1) as ws:
            ws.socket.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 1024)
            time.sleep(0.1)
            big = tiny_flows[0].replace(state="X" * 60000)
            deadline = time.monotonic() + 5
            while server.dropped_clients == 0 and time.monotonic() < deadline:
                for _ in range(20):
                    server.publish_flow(big, LabelClass.NORMAL)
                server.flush()
                time.sleep(0.01)
        assert server.dropped_clients == 1


def test_publish_after_stop_is_harmless(tiny_flows):
    server = stream_serve("127.0.0.1:0")
    server.stop()
    server.publish_flow(tiny_flows[0], LabelClass.NORMAL)
    server.flush()
    assert not server._thread.is_alive()


def test_matrix_uses_model_feature_order(tiny_flows):
    model = _model(tiny_flows, ["SrcBytes", "sTtl"])
    from botflow.detector.registry import LoadedModel, ModelMetadata

    lm = LoadedModel(ModelMetadata("m", "m.model", "DecisionTree", model.feature_names), model)
    got = [r.label.code for r in classify_batch(tiny_flows, [lm])]
    from botflow.classifiers import predict_batch

    x = np.array([[f.src_bytes, f.s_ttl] for f in tiny_flows], dtype=float)
    assert got == predict_batch(model, x).tolist()
