"""Classic libpcap file reading and writing (no pcapng)."""

from __future__ import annotations

import struct
from typing import BinaryIO, Iterable, Iterator

from ..errors import BadMagic, TruncatedRecord
from .decode import DecodeStats, LinkType, PacketSummary, decode_packet

MAGIC_USEC = 0xA1B2C3D4
MAGIC_NSEC = 0xA1B23C4D

_GLOBAL_HDR = 24
_RECORD_HDR = 16


def _open_header(fh: BinaryIO) -> tuple[str, int, int]:
    """Returns (byte-order prefix, subsecond divisor, link type)."""
    hdr = fh.read(_GLOBAL_HDR)
    if len(hdr) < 4:
        raise BadMagic("file too short for a pcap header")
    for order in ("<", ">"):
        magic = struct.unpack(order + "I", hdr[:4])[0]
        if magic in (MAGIC_USEC, MAGIC_NSEC):
            break
    else:
        raise BadMagic(f"unrecognised pcap magic {hdr[:4].hex()}")
    if len(hdr) < _GLOBAL_HDR:
        raise TruncatedRecord("truncated pcap global header")
    linktype = struct.unpack(order + "I", hdr[20:24])[0] & 0x0FFFFFFF
    divisor = 1_000_000 if magic == MAGIC_USEC else 1_000_000_000
    return order, divisor, linktype


def iter_frames(path) -> Iterator[tuple[float, bytes, int]]:
    """Yield (timestamp, frame bytes, link type) in file order."""
    with open(path, "rb") as fh:
        order, divisor, linktype = _open_header(fh)
        rec = struct.Struct(order + "IIII")
        index = 0
        while True:
            hdr = fh.read(_RECORD_HDR)
            if not hdr:
                return
            if len(hdr) < _RECORD_HDR:
                raise TruncatedRecord(f"record {index}: truncated record header")
            sec, frac, incl_len, _orig_len = rec.unpack(hdr)
            data = fh.read(incl_len)
            if len(data) < incl_len:
                raise TruncatedRecord(f"record {index}: expected {incl_len} bytes, got {len(data)}")
            if divisor == 1_000_000:
                ts = sec + frac / 1e6
            else:
                # keep microsecond precision; flows carry no finer resolution
                ts = sec + (frac // 1000) / 1e6
            yield ts, data, linktype
            index += 1


def read_pcap(path, stats: DecodeStats | None = None) -> Iterator[PacketSummary]:
    """Yield decoded IPv4 packets of a pcap file; other frames are dropped."""
    for ts, frame, linktype in iter_frames(path):
        pkt = decode_packet(frame, LinkType(linktype), timestamp=ts, stats=stats)
        if pkt is not None:
            yield pkt


def is_pcap(path) -> bool:
    with open(path, "rb") as fh:
        head = fh.read(4)
    if len(head) < 4:
        return False
    return any(struct.unpack(o + "I", head)[0] in (MAGIC_USEC, MAGIC_NSEC) for o in "<>")


def write_pcap(path, frames: Iterable[tuple[float, bytes]], link_type: int = LinkType.ETHERNET,
               nanosecond: bool = False, big_endian: bool = False, snaplen: int = 65535) -> int:
    """Write (timestamp, frame) pairs as a classic pcap file."""
    order = ">" if big_endian else "<"
    magic = MAGIC_NSEC if nanosecond else MAGIC_USEC
    scale = 1_000_000_000 if nanosecond else 1_000_000
    count = 0
    with open(path, "wb") as fh:
        fh.write(struct.pack(order + "IHHiIII", magic, 2, 4, 0, 0, snaplen, int(link_type)))
        for ts, frame in frames:
            total = round(ts * scale)
            sec, frac = divmod(total, scale)
            fh.write(struct.pack(order + "IIII", sec, frac, len(frame), len(frame)))
            fh.write(frame)
            count += 1
    return count
