"""Link-layer frame decoding down to the header fields flows need."""

from __future__ import annotations

import enum
import socket
import struct
from dataclasses import dataclass, field

from ..errors import TruncatedFrame


class LinkType(enum.IntEnum):
    # pcap LINKTYPE_* values
    ETHERNET = 1
    RAW = 101
    LINUX_SLL = 113
    IPV4 = 228


class TcpFlag(enum.IntFlag):
    FIN = 0x01
    SYN = 0x02
    RST = 0x04
    PSH = 0x08
    ACK = 0x10
    URG = 0x20


PROTO_NAMES = {1: "icmp", 6: "tcp", 17: "udp"}

ETH_P_IP = 0x0800
ETH_P_IPV6 = 0x86DD


@dataclass(frozen=True, slots=True)
class PacketSummary:
    timestamp: float
    src_addr: str
    dst_addr: str
    proto: str
    sport: int | None
    dport: int | None
    ttl: int
    tos: int
    ip_total_len: int
    l4_payload_len: int
    tcp_flags: TcpFlag = TcpFlag(0)
    tcp_window: int = 0


@dataclass
class DecodeStats:
    decoded: int = 0
    skipped_non_ip: int = 0
    skipped_ipv6: int = 0
    skipped_fragment: int = 0
    by_reason: dict = field(default_factory=dict)


def _need(buf: bytes, end: int, what: str) -> None:
    if len(buf) < end:
        raise TruncatedFrame(f"{what}: need {end} bytes, frame has {len(buf)}")


def decode_packet(raw: bytes, link_type: LinkType | int, timestamp: float = 0.0,
                  stats: DecodeStats | None = None) -> PacketSummary | None:
    """Decode one frame. Returns ``None`` for frames that are not IPv4
    (ARP, IPv6, ...) and for non-first IP fragments."""
    link_type = LinkType(link_type)
    if link_type is LinkType.ETHERNET:
        _need(raw, 14, "ethernet header")
        ethertype = struct.unpack_from("!H", raw, 12)[0]
        offset = 14
    elif link_type is LinkType.LINUX_SLL:
        _need(raw, 16, "linux cooked header")
        ethertype = struct.unpack_from("!H", raw, 14)[0]
        offset = 16
    else:
        _need(raw, 1, "ip header")
        ethertype = ETH_P_IP if raw[0] >> 4 == 4 else ETH_P_IPV6 if raw[0] >> 4 == 6 else 0
        offset = 0

    if ethertype != ETH_P_IP:
        if stats is not None:
            if ethertype == ETH_P_IPV6:
                stats.skipped_ipv6 += 1
            else:
                stats.skipped_non_ip += 1
        return None

    _need(raw, offset + 20, "ipv4 header")
    ver_ihl, tos, total_len, _ident, frag, ttl, proto = struct.unpack_from("!BBHHHBB", raw, offset)
    if ver_ihl >> 4 != 4:
        if stats is not None:
            stats.skipped_non_ip += 1
        return None
    ihl = (ver_ihl & 0x0F) * 4
    if ihl < 20:
        raise TruncatedFrame(f"ipv4 header length {ihl} < 20")
    _need(raw, offset + ihl, "ipv4 options")
    src = socket.inet_ntoa(raw[offset + 12:offset + 16])
    dst = socket.inet_ntoa(raw[offset + 16:offset + 20])
    if frag & 0x1FFF:
        if stats is not None:
            stats.skipped_fragment += 1
        return None

    l4 = offset + ihl
    ip_payload = max(total_len - ihl, 0)
    sport = dport = None
    flags = TcpFlag(0)
    window = 0
    if proto == 6:
        _need(raw, l4 + 20, "tcp header")
        sport, dport, _seq, _ack, off_flags, window = struct.unpack_from("!HHIIHH", raw, l4)
        tcp_len = (off_flags >> 12) * 4
        if tcp_len < 20:
            raise TruncatedFrame(f"tcp header length {tcp_len} < 20")
        _need(raw, l4 + tcp_len, "tcp options")
        flags = TcpFlag(off_flags & 0x3F)
        payload = ip_payload - tcp_len
    elif proto == 17:
        _need(raw, l4 + 8, "udp header")
        sport, dport = struct.unpack_from("!HH", raw, l4)
        payload = ip_payload - 8
    elif proto == 1:
        _need(raw, l4 + 8, "icmp header")
        payload = ip_payload - 8
    else:
        payload = ip_payload

    if stats is not None:
        stats.decoded += 1
    return PacketSummary(
        timestamp=timestamp,
        src_addr=src,
        dst_addr=dst,
        proto=PROTO_NAMES.get(proto, str(proto)),
        sport=sport,
        dport=dport,
        ttl=ttl,
        tos=tos,
        ip_total_len=total_len,
        l4_payload_len=max(payload, 0),
        tcp_flags=flags,
        tcp_window=window,
    )
