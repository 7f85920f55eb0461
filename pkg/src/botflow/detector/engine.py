"""Detection pipeline: flow source -> per-model classification -> sinks.

A producer thread reads flows from the source into a bounded queue; the
calling thread classifies them in arrival order, writes the labelled-flow
and alert logs, and hands messages to the optional stream server. Any one
model predicting Botnet raises an alert naming every model that did.

Log formats (one line each, ``\\t`` separated):

* alert log: ISO-8601 time of the flow's last packet, triggering model ids
  joined by ``,``, the flow as a canonical ``.binetflow`` line
* flow log: the canonical flow line, then the label
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from ..classifiers.model import predict_batch
from ..errors import FeatureMissing
from ..flowcore import (COLUMN_TO_ATTR, FIELD_ORDER, NUMERIC_FEATURES, FlowRecord, LabelClass,
                        parse_flow_line, parse_header, read_flows, serialize_flow_line)
from ..ingest import AggregatorConfig, DecodeStats, aggregate, is_pcap, live_capture, read_pcap
from .registry import LoadedModel, Registry

log = logging.getLogger(__name__)

SEVERITY = "botnet"
_BATCH = 256
_DONE = object()


@dataclass(frozen=True)
class Alert:
    timestamp: str
    flow: FlowRecord
    triggering_model_ids: tuple[str, ...]
    severity: str = SEVERITY

    def __post_init__(self):
        object.__setattr__(self, "triggering_model_ids", tuple(self.triggering_model_ids))
        if not self.triggering_model_ids:
            raise ValueError("an alert needs at least one triggering model")


@dataclass(frozen=True)
class Classification:
    label: LabelClass
    triggering_model_ids: tuple[str, ...] = ()


def _models(models) -> list[LoadedModel]:
    return list(models.loaded if isinstance(models, Registry) else models)


def check_features(models, available: Iterable[str] = NUMERIC_FEATURES) -> None:
    """Raise FeatureMissing if any model needs a column the source lacks."""
    have = set(available)
    for m in _models(models):
        missing = [f for f in m.features if f not in have]
        if missing:
            raise FeatureMissing(f"model {m.model_id} needs {', '.join(missing)}, "
                                 f"which this input does not provide")


def _matrix(flows: Sequence[FlowRecord], features: Sequence[str]) -> np.ndarray:
    attrs = [COLUMN_TO_ATTR[f] for f in features]
    return np.array([[getattr(fl, a) for a in attrs] for fl in flows], dtype=np.float64).reshape(
        len(flows), len(attrs))


def classify_batch(flows: Sequence[FlowRecord], models) -> list[Classification]:
    models = _models(models)
    check_features(models)
    votes = []
    for m in models:
        votes.append(predict_batch(m.model, _matrix(flows, m.features)) if flows else np.empty(0))
    out = []
    for i in range(len(flows)):
        ids = tuple(m.model_id for m, v in zip(models, votes) if v[i] == 1)
        out.append(Classification(LabelClass.BOTNET if ids else LabelClass.NORMAL, ids))
    return out


def classify_flow(flow: FlowRecord, models) -> Classification:
    """Botnet iff at least one model says so."""
    return classify_batch([flow], models)[0]


# logs ------------------------------------------------------------------

def alert_line(alert: Alert) -> str:
    return f"{alert.timestamp}\t{','.join(alert.triggering_model_ids)}\t{serialize_flow_line(alert.flow)}"


def parse_alert_line(line: str) -> Alert:
    timestamp, ids, flow_line = line.rstrip("\n").split("\t")
    return Alert(timestamp, parse_flow_line(flow_line, FIELD_ORDER), tuple(ids.split(",")))


def flow_log_line(flow: FlowRecord, label: LabelClass) -> str:
    return f"{serialize_flow_line(flow)}\t{LabelClass(label).value}"


def parse_flow_log_line(line: str) -> tuple[FlowRecord, LabelClass]:
    flow_line, label = line.rstrip("\n").split("\t")
    return parse_flow_line(flow_line, FIELD_ORDER), LabelClass(label)


class _LogSink:
    def __init__(self, path):
        self.path = path
        self.fh: TextIO | None = open(path, "w", encoding="utf-8", newline="\n") if path else None

    def write(self, line: str) -> None:
        if self.fh is not None:
            self.fh.write(line + "\n")

    def close(self) -> None:
        if self.fh is not None:
            self.fh.close()
            self.fh = None


@dataclass
class RunSummary:
    flows: int = 0
    alerts: int = 0
    duration: float = 0.0
    sink_errors: int = 0
    source: str = ""
    mode: str = ""
    decode: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"flows": self.flows, "alerts": self.alerts, "duration": round(self.duration, 6),
                "sink_errors": self.sink_errors, "source": self.source, "mode": self.mode}


# sources ---------------------------------------------------------------

def _flow_file_source(path) -> tuple[Iterator[FlowRecord], list[str]]:
    fh = open(path, "r", encoding="utf-8", newline="")
    header = fh.readline()
    columns = parse_header(header) if header.strip() else list(FIELD_ORDER)

    def gen():
        try:
            fh.seek(0)
            yield from read_flows(fh)
        finally:
            fh.close()

    return gen(), columns


def open_source(source, live: bool = False, cancel: threading.Event | None = None,
                agg_cfg: AggregatorConfig | None = None, stats: DecodeStats | None = None):
    """(flow iterator, available feature columns, mode name)."""
    if live:
        return aggregate(live_capture(str(source), cancel), agg_cfg), list(FIELD_ORDER), "live"
    path = Path(source)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    if is_pcap(path):
        return aggregate(read_pcap(path, stats), agg_cfg), list(FIELD_ORDER), "pcap"
    flows, columns = _flow_file_source(path)
    return flows, columns, "flows"


def run_detection(source, registry, alert_log=None, flow_log=None, stream=None, live: bool = False,
                  cancel: threading.Event | None = None, queue_size: int = 1024,
                  agg_cfg: AggregatorConfig | None = None) -> RunSummary:
    """Classify every flow from ``source``; see the module docstring."""
    models = _models(registry)
    cancel = cancel if cancel is not None else threading.Event()
    stats = DecodeStats()
    flows, columns, mode = open_source(source, live, cancel, agg_cfg, stats)
    check_features(models, [c for c in columns if c in NUMERIC_FEATURES])
    summary = RunSummary(source=str(source), mode=mode)
    q: queue.Queue = queue.Queue(maxsize=queue_size)
    failure: list[BaseException] = []

    def produce():
        try:
            for flow in flows:
                while not cancel.is_set():
                    try:
                        q.put(flow, timeout=0.1)
                        break
                    except queue.Full:
                        continue
                if cancel.is_set():
                    break
        except BaseException as exc:  # handed to the consumer
            failure.append(exc)
        finally:
            close = getattr(flows, "close", None)
            if close is not None:
                close()
            while True:
                try:
                    q.put(_DONE, timeout=0.1)
                    break
                except queue.Full:
                    if cancel.is_set():
                        _drain(q)

    alerts_sink, flows_sink = _LogSink(alert_log), _LogSink(flow_log)
    producer = threading.Thread(target=produce, name="botflow-source", daemon=True)
    start = time.perf_counter()
    producer.start()
    try:
        done = False
        while not done and not cancel.is_set():
            try:
                item = q.get(timeout=0.1)
            except queue.Empty:
                continue
            batch = []
            while item is not _DONE:
                batch.append(item)
                if len(batch) >= _BATCH:
                    break
                try:
                    item = q.get_nowait()
                except queue.Empty:
                    break
            done = item is _DONE
            _handle(batch, models, summary, alerts_sink, flows_sink, stream)
    finally:
        cancel.set()
        _drain(q)
        producer.join(timeout=5.0)
        alerts_sink.close()
        flows_sink.close()
        if stream is not None:
            stream.flush()
        summary.duration = time.perf_counter() - start
        summary.decode = dict(vars(stats))
    if failure:
        raise failure[0]
    log.info("detection finished: %d flows, %d alerts in %.2fs", summary.flows, summary.alerts,
             summary.duration)
    return summary


def _drain(q: queue.Queue) -> None:
    while True:
        try:
            q.get_nowait()
        except queue.Empty:
            return


def _handle(batch, models, summary: RunSummary, alerts_sink, flows_sink, stream) -> None:
    if not batch:
        return
    for flow, result in zip(batch, classify_batch(batch, models)):
        summary.flows += 1
        alert = None
        if result.label is LabelClass.BOTNET:
            summary.alerts += 1
            alert = Alert(flow.last_time.isoformat(), flow, result.triggering_model_ids)
        try:
            flows_sink.write(flow_log_line(flow, result.label))
            if alert is not None:
                alerts_sink.write(alert_line(alert))
        except OSError as exc:
            summary.sink_errors += 1
            log.error("log write failed: %s", exc)
        if stream is not None:
            try:
                stream.publish_flow(flow, result.label)
                if alert is not None:
                    stream.publish_alert(alert)
            except Exception as exc:  # the feed must never stop detection
                summary.sink_errors += 1
                log.error("stream publish failed: %s", exc)
