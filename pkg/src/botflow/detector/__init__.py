"""Detection engine: model registry, flow classification, logs and feed."""

from .engine import (Alert, Classification, RunSummary, alert_line, check_features, classify_batch,
                     classify_flow, flow_log_line, open_source, parse_alert_line, parse_flow_log_line,
                     run_detection)
from .registry import (LoadedModel, ModelMetadata, Registry, SkippedModel, load_registry, read_metadata,
                       register_model, write_metadata)
from .stream import StreamServer, alert_message, flow_from_payload, flow_message, stream_serve

__all__ = [
    "Alert", "Classification", "LoadedModel", "ModelMetadata", "Registry", "RunSummary", "SkippedModel",
    "StreamServer", "alert_line", "alert_message", "check_features", "classify_batch", "classify_flow",
    "flow_from_payload", "flow_log_line", "flow_message", "load_registry", "open_source",
    "parse_alert_line", "parse_flow_log_line", "read_metadata", "register_model", "run_detection",
    "stream_serve", "write_metadata",
]
