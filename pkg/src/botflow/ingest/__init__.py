"""Packet sources and flow aggregation."""

from .aggregate import AggregatorConfig, FlowAggregator, aggregate, estimate_hops, flow_key
from .capture import LiveCapture, live_capture
from .decode import DecodeStats, LinkType, PacketSummary, TcpFlag, decode_packet
from .pcap import is_pcap, iter_frames, read_pcap, write_pcap

__all__ = [
    "AggregatorConfig", "FlowAggregator", "aggregate", "estimate_hops", "flow_key",
    "LiveCapture", "live_capture",
    "DecodeStats", "LinkType", "PacketSummary", "TcpFlag", "decode_packet",
    "is_pcap", "iter_frames", "read_pcap", "write_pcap",
]
