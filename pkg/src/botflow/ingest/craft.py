"""Build Ethernet/IPv4 frames, for fixtures and synthetic captures."""

from __future__ import annotations

import socket
import struct

from .decode import TcpFlag

_PROTO_NUMBERS = {"icmp": 1, "tcp": 6, "udp": 17}


def _checksum(data: bytes) -> int:
    if len(data) % 2:
        data += b"\x00"
    total = sum(struct.unpack(f"!{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def ipv4_packet(src: str, dst: str, proto: str, l4: bytes, ttl: int = 64, tos: int = 0,
                ident: int = 0) -> bytes:
    total = 20 + len(l4)
    hdr = struct.pack("!BBHHHBBH4s4s", 0x45, tos, total, ident, 0x4000, ttl,
                      _PROTO_NUMBERS[proto], 0, socket.inet_aton(src), socket.inet_aton(dst))
    hdr = hdr[:10] + struct.pack("!H", _checksum(hdr)) + hdr[12:]
    return hdr + l4


def ethernet(payload: bytes, ethertype: int = 0x0800,
             src_mac: bytes = b"\x02\x00\x00\x00\x00\x01", dst_mac: bytes = b"\x02\x00\x00\x00\x00\x02") -> bytes:
    return dst_mac + src_mac + struct.pack("!H", ethertype) + payload


def tcp_segment(sport: int, dport: int, flags: TcpFlag = TcpFlag.ACK, payload_len: int = 0,
                window: int = 64240, seq: int = 0, ack: int = 0, options: bytes = b"") -> bytes:
    if len(options) % 4:
        options += b"\x00" * (4 - len(options) % 4)
    offset = (20 + len(options)) // 4
    hdr = struct.pack("!HHIIHHHH", sport, dport, seq, ack, (offset << 12) | int(flags), window, 0, 0)
    return hdr + options + b"\x00" * payload_len


def udp_datagram(sport: int, dport: int, payload_len: int = 0) -> bytes:
    return struct.pack("!HHHH", sport, dport, 8 + payload_len, 0) + b"\x00" * payload_len


def icmp_echo(payload_len: int = 0, ident: int = 1, seq: int = 1) -> bytes:
    return struct.pack("!BBHHH", 8, 0, 0, ident, seq) + b"\x00" * payload_len


def tcp_frame(src: str, dst: str, sport: int, dport: int, flags: TcpFlag, payload_len: int = 0,
              ttl: int = 64, tos: int = 0, window: int = 64240) -> bytes:
    return ethernet(ipv4_packet(src, dst, "tcp", tcp_segment(sport, dport, flags, payload_len, window),
                                ttl=ttl, tos=tos))


def udp_frame(src: str, dst: str, sport: int, dport: int, payload_len: int = 0,
              ttl: int = 64, tos: int = 0) -> bytes:
    return ethernet(ipv4_packet(src, dst, "udp", udp_datagram(sport, dport, payload_len), ttl=ttl, tos=tos))


def handshake_frames(client: str = "10.0.0.5", server: str = "93.184.216.34",
                     sport: int = 49152, dport: int = 80) -> list[tuple[float, bytes]]:
    """SYN at 0.000 s, SYN-ACK at 0.050 s, ACK at 0.120 s."""
    return [
        (0.000, tcp_frame(client, server, sport, dport, TcpFlag.SYN, ttl=64, window=64240)),
        (0.050, tcp_frame(server, client, dport, sport, TcpFlag.SYN | TcpFlag.ACK, ttl=57, window=65535)),
        (0.120, tcp_frame(client, server, sport, dport, TcpFlag.ACK, ttl=64, window=64240)),
    ]
