"""Bidirectional flow aggregation of decoded packets into FlowRecords."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import timedelta
from typing import Iterable, Iterator

from ..flowcore import EPOCH, FlowRecord
from .decode import PacketSummary, TcpFlag

INITIAL_TTLS = (32, 64, 128, 255)


def estimate_hops(observed_ttl: int) -> int:
    """Hops travelled, assuming the sender started from the nearest common
    OS initial TTL at or above the observed value."""
    for initial in INITIAL_TTLS:
        if observed_ttl <= initial:
            return initial - observed_ttl
    return 0


@dataclass(frozen=True)
class AggregatorConfig:
    idle_timeout: float = 60.0
    active_timeout: float = 3600.0
    status_interval: float = 5.0

    def __post_init__(self):
        if not 0 < self.idle_timeout <= self.active_timeout:
            raise ValueError("require 0 < idle_timeout <= active_timeout")
        if self.status_interval <= 0:
            raise ValueError("status_interval must be positive")


def flow_key(pkt: PacketSummary) -> tuple:
    a = (pkt.src_addr, -1 if pkt.sport is None else pkt.sport)
    b = (pkt.dst_addr, -1 if pkt.dport is None else pkt.dport)
    return (pkt.proto,) + ((a, b) if a <= b else (b, a))


def _micros(ts: float) -> int:
    return round(ts * 1_000_000)


class _Direction:
    __slots__ = ("pkts", "bytes", "app_bytes", "ttl", "tos", "win", "fin")

    def __init__(self):
        self.pkts = 0
        self.bytes = 0
        self.app_bytes = 0
        self.ttl = None
        self.tos = None
        self.win = None
        self.fin = False


class _FlowState:
    __slots__ = ("src_addr", "dst_addr", "sport", "dport", "proto", "first_us", "last_us",
                 "fwd", "rev", "syn_us", "synack_us", "ack_us", "syn_from_src", "rst", "closed")

    def __init__(self, pkt: PacketSummary, ts_us: int):
        self.src_addr = pkt.src_addr
        self.dst_addr = pkt.dst_addr
        self.sport = pkt.sport
        self.dport = pkt.dport
        self.proto = pkt.proto
        self.first_us = ts_us
        self.last_us = ts_us
        self.fwd = _Direction()
        self.rev = _Direction()
        self.syn_us = None
        self.synack_us = None
        self.ack_us = None
        self.syn_from_src = True
        self.rst = False
        self.closed = False

    def add(self, pkt: PacketSummary, ts_us: int) -> None:
        forward = pkt.src_addr == self.src_addr and pkt.sport == self.sport
        if pkt.src_addr == pkt.dst_addr and pkt.sport == pkt.dport:
            forward = True
        side = self.fwd if forward else self.rev
        side.pkts += 1
        side.bytes += pkt.ip_total_len
        side.app_bytes += pkt.l4_payload_len
        if side.ttl is None:
            side.ttl = pkt.ttl
            side.tos = pkt.tos
        self.last_us = ts_us
        if self.proto != "tcp":
            return
        if side.win is None:
            side.win = pkt.tcp_window
        flags = pkt.tcp_flags
        syn, ack = TcpFlag.SYN in flags, TcpFlag.ACK in flags
        if syn and not ack and self.syn_us is None:
            self.syn_us = ts_us
            self.syn_from_src = forward
        elif syn and ack and self.syn_us is not None and self.synack_us is None \
                and forward != self.syn_from_src:
            self.synack_us = ts_us
        elif ack and not syn and self.synack_us is not None and self.ack_us is None \
                and forward == self.syn_from_src:
            self.ack_us = ts_us
        if TcpFlag.RST in flags:
            self.rst = True
        if TcpFlag.FIN in flags:
            side.fin = True
        elif self.fwd.fin and self.rev.fin and ack and pkt.l4_payload_len == 0:
            # final ACK of the close handshake
            self.closed = True

    @property
    def finished(self) -> bool:
        return self.rst or self.closed

    def state(self) -> str:
        if self.proto != "tcp":
            return "INT"
        if self.rst:
            return "RST"
        if self.fwd.fin or self.rev.fin:
            return "FIN"
        if self.ack_us is not None or (self.fwd.pkts and self.rev.pkts and self.synack_us is not None):
            return "EST"
        if self.syn_us is not None:
            return "SYN"
        return "CON"

    def to_record(self) -> FlowRecord:
        dur = (self.last_us - self.first_us) / 1e6
        syn_ack = (self.synack_us - self.syn_us) / 1e6 if self.synack_us is not None else 0.0
        ack_dat = (self.ack_us - self.synack_us) / 1e6 if self.ack_us is not None else 0.0
        fwd, rev = self.fwd, self.rev
        tot_pkts = fwd.pkts + rev.pkts

        def per_sec(n: int) -> float:
            return n / dur if dur > 0 else 0.0

        return FlowRecord(
            src_addr=self.src_addr,
            dst_addr=self.dst_addr,
            proto=self.proto,
            sport=self.sport,
            dport=self.dport,
            state=self.state(),
            s_tos=fwd.tos or 0,
            d_tos=rev.tos or 0,
            src_win=fwd.win or 0,
            dst_win=rev.win or 0,
            s_hops=estimate_hops(fwd.ttl) if fwd.ttl is not None else 0,
            d_hops=estimate_hops(rev.ttl) if rev.ttl is not None else 0,
            start_time=EPOCH + timedelta(microseconds=self.first_us),
            last_time=EPOCH + timedelta(microseconds=self.last_us),
            s_ttl=fwd.ttl or 0,
            d_ttl=rev.ttl or 0,
            tcp_rtt=round(syn_ack, 6) + round(ack_dat, 6),
            syn_ack=syn_ack,
            ack_dat=ack_dat,
            src_pkts=fwd.pkts,
            dst_pkts=rev.pkts,
            tot_pkts=tot_pkts,
            src_bytes=fwd.bytes,
            dst_bytes=rev.bytes,
            tot_bytes=fwd.bytes + rev.bytes,
            s_app_bytes=fwd.app_bytes,
            d_app_bytes=rev.app_bytes,
            tot_app_bytes=fwd.app_bytes + rev.app_bytes,
            dur=dur,
            rate=per_sec(tot_pkts),
            src_rate=per_sec(fwd.pkts),
            dst_rate=per_sec(rev.pkts),
        )


class FlowAggregator:
    """Single-writer aggregator: feed packets in timestamp order, collect
    finished flows from the return values of :meth:`add` and :meth:`expire`,
    then call :meth:`flush` at end of stream."""

    def __init__(self, cfg: AggregatorConfig | None = None):
        self.cfg = cfg or AggregatorConfig()
        self._flows: dict[tuple, _FlowState] = {}
        self._idle_us = round(self.cfg.idle_timeout * 1e6)
        self._active_us = round(self.cfg.active_timeout * 1e6)
        self._scan_us = round(self.cfg.status_interval * 1e6)
        self._next_scan: int | None = None
        self._clock = None
        self.packets = 0

    def __len__(self) -> int:
        return len(self._flows)

    def add(self, pkt: PacketSummary) -> list[FlowRecord]:
        ts = _micros(pkt.timestamp)
        if self._clock is not None and ts < self._clock:
            ts = self._clock  # clamp small reorderings from capture sources
        self._clock = ts
        self.packets += 1
        out = []
        if self._next_scan is None:
            self._next_scan = ts + self._scan_us
        elif ts >= self._next_scan:
            out.extend(self._expire_at(ts))
            self._next_scan = ts + self._scan_us

        key = flow_key(pkt)
        state = self._flows.get(key)
        if state is not None:
            restart = (
                ts - state.last_us > self._idle_us
                or ts - state.first_us > self._active_us
                or (state.finished and pkt.proto == "tcp"
                    and TcpFlag.SYN in pkt.tcp_flags and TcpFlag.ACK not in pkt.tcp_flags)
            )
            if restart:
                out.append(self._flows.pop(key).to_record())
                state = None
        if state is None:
            state = _FlowState(pkt, ts)
            self._flows[key] = state
        state.add(pkt, ts)
        if state.finished:
            out.append(self._flows.pop(key).to_record())
        return out

    def _expire_at(self, now_us: int) -> list[FlowRecord]:
        done = [
            key for key, st in self._flows.items()
            if now_us - st.last_us > self._idle_us or now_us - st.first_us > self._active_us
        ]
        return [self._flows.pop(key).to_record() for key in done]

    def expire(self, now: float) -> list[FlowRecord]:
        """Flush flows idle or active past their timeout at time ``now``."""
        return self._expire_at(_micros(now))

    def flush(self) -> list[FlowRecord]:
        out = [st.to_record() for st in self._flows.values()]
        self._flows.clear()
        return out


def aggregate(packets: Iterable[PacketSummary], cfg: AggregatorConfig | None = None) -> Iterator[FlowRecord]:
    agg = FlowAggregator(cfg)
    for pkt in packets:
        yield from agg.add(pkt)
    yield from agg.flush()
