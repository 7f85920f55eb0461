"""Flow record model and the ``.binetflow`` text format.

A ``.binetflow`` file is a comma-separated header line of field names
followed by one flow per line. Column names follow the extended argus/CTU-13
naming (``SrcAddr``, ``sTtl``, ``TotAppByte`` ...); :data:`FIELD_ORDER` is the
canonical 33-column layout.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Iterable, Iterator, Sequence, TextIO

from .errors import FieldCountMismatch, NumericParse, UnknownField

EPOCH = datetime(1970, 1, 1)
TIME_FORMAT = "%Y/%m/%d %H:%M:%S.%f"


class LabelClass(str, enum.Enum):
    NORMAL = "Normal"
    BOTNET = "Botnet"

    def __str__(self) -> str:
        return self.value

    @property
    def code(self) -> int:
        return 1 if self is LabelClass.BOTNET else 0

    @classmethod
    def from_code(cls, code: int) -> "LabelClass":
        return cls.BOTNET if int(code) == 1 else cls.NORMAL


# column name -> FlowRecord attribute, in canonical order
COLUMN_TO_ATTR: dict[str, str] = {
    "SrcAddr": "src_addr",
    "DstAddr": "dst_addr",
    "Proto": "proto",
    "Sport": "sport",
    "Dport": "dport",
    "State": "state",
    "sTos": "s_tos",
    "dTos": "d_tos",
    "SrcWin": "src_win",
    "DstWin": "dst_win",
    "sHops": "s_hops",
    "dHops": "d_hops",
    "StartTime": "start_time",
    "LastTime": "last_time",
    "sTtl": "s_ttl",
    "dTtl": "d_ttl",
    "TcpRtt": "tcp_rtt",
    "SynAck": "syn_ack",
    "AckDat": "ack_dat",
    "SrcPkts": "src_pkts",
    "DstPkts": "dst_pkts",
    "SrcBytes": "src_bytes",
    "DstBytes": "dst_bytes",
    "SAppBytes": "s_app_bytes",
    "DAppBytes": "d_app_bytes",
    "Dur": "dur",
    "TotPkts": "tot_pkts",
    "TotBytes": "tot_bytes",
    "TotAppByte": "tot_app_bytes",
    "Rate": "rate",
    "SrcRate": "src_rate",
    "DstRate": "dst_rate",
    "Label": "label",
}
ATTR_TO_COLUMN = {attr: col for col, attr in COLUMN_TO_ATTR.items()}

FIELD_ORDER: tuple[str, ...] = tuple(COLUMN_TO_ATTR)

# The 24 behavioural columns kept after dropping addresses, ports, protocol,
# state, timestamps and the label.
NUMERIC_FEATURES: tuple[str, ...] = (
    "sTos", "dTos", "SrcWin", "DstWin", "sHops", "dHops",
    "sTtl", "dTtl", "TcpRtt", "SynAck", "AckDat",
    "SrcPkts", "DstPkts", "SrcBytes", "DstBytes", "SAppBytes", "DAppBytes",
    "Dur", "TotPkts", "TotBytes", "TotAppByte", "Rate", "SrcRate", "DstRate",
)

# Columns present in some CTU-13 exports that carry no FlowRecord field.
IGNORED_COLUMNS = frozenset({"Dir", "sVid", "dVid", "sMac", "dMac"})

_INT_ATTRS = frozenset({
    "s_tos", "d_tos", "src_win", "dst_win", "s_hops", "d_hops", "s_ttl", "d_ttl",
    "src_pkts", "dst_pkts", "tot_pkts", "src_bytes", "dst_bytes", "tot_bytes",
    "s_app_bytes", "d_app_bytes", "tot_app_bytes",
})
_FLOAT_ATTRS = frozenset({"tcp_rtt", "syn_ack", "ack_dat", "dur", "rate", "src_rate", "dst_rate"})
_PORT_ATTRS = frozenset({"sport", "dport"})
_TIME_ATTRS = frozenset({"start_time", "last_time"})
_STR_ATTRS = frozenset({"src_addr", "dst_addr", "proto", "state"})


def _resolve(name: str) -> str:
    """Map a column name or attribute name to the FlowRecord attribute."""
    if name in COLUMN_TO_ATTR:
        return COLUMN_TO_ATTR[name]
    if name in ATTR_TO_COLUMN:
        return name
    raise UnknownField(f"unknown flow field {name!r}")


@dataclass(frozen=True)
class FlowRecord:
    """One bidirectional flow. Floats are held at microsecond (6 dp) precision."""

    src_addr: str = ""
    dst_addr: str = ""
    proto: str = ""
    sport: int | None = None
    dport: int | None = None
    state: str = ""
    s_tos: int = 0
    d_tos: int = 0
    src_win: int = 0
    dst_win: int = 0
    s_hops: int = 0
    d_hops: int = 0
    start_time: datetime = EPOCH
    last_time: datetime = EPOCH
    s_ttl: int = 0
    d_ttl: int = 0
    tcp_rtt: float = 0.0
    syn_ack: float = 0.0
    ack_dat: float = 0.0
    src_pkts: int = 0
    dst_pkts: int = 0
    tot_pkts: int = 0
    src_bytes: int = 0
    dst_bytes: int = 0
    tot_bytes: int = 0
    s_app_bytes: int = 0
    d_app_bytes: int = 0
    tot_app_bytes: int = 0
    dur: float = 0.0
    rate: float = 0.0
    src_rate: float = 0.0
    dst_rate: float = 0.0
    label: str | None = None

    def __post_init__(self) -> None:
        for attr in _FLOAT_ATTRS:
            object.__setattr__(self, attr, round(float(getattr(self, attr)), 6) + 0.0)
        for attr in _TIME_ATTRS:
            value = getattr(self, attr)
            if value.tzinfo is not None:
                object.__setattr__(self, attr, value.astimezone(timezone.utc).replace(tzinfo=None))

    def get(self, name: str):
        """Field value by column name (``sTtl``) or attribute name (``s_ttl``)."""
        return getattr(self, _resolve(name))

    def replace(self, **changes) -> "FlowRecord":
        return dataclasses.replace(self, **changes)

    def feature_vector(self, names: Sequence[str]) -> list[float]:
        return [float(self.get(n)) for n in names]

    def invariant_violations(self) -> list[str]:
        """Names of the additivity/range invariants this record breaks."""
        bad = []
        if self.tot_pkts != self.src_pkts + self.dst_pkts:
            bad.append("tot_pkts")
        if self.tot_bytes != self.src_bytes + self.dst_bytes:
            bad.append("tot_bytes")
        if self.tot_app_bytes != self.s_app_bytes + self.d_app_bytes:
            bad.append("tot_app_bytes")
        if self.last_time < self.start_time:
            bad.append("last_time")
        for attr in _INT_ATTRS | _FLOAT_ATTRS:
            if getattr(self, attr) < 0:
                bad.append(attr)
        for attr in ("s_ttl", "d_ttl", "s_tos", "d_tos"):
            if getattr(self, attr) > 255:
                bad.append(attr)
        return bad


def format_time(value: datetime) -> str:
    return value.strftime(TIME_FORMAT)


def parse_time(token: str) -> datetime:
    """Accept ``YYYY/MM/DD HH:MM:SS[.ffffff]`` or raw epoch seconds."""
    token = token.strip()
    if not token:
        return EPOCH
    try:
        return datetime.strptime(token, TIME_FORMAT)
    except ValueError:
        pass
    try:
        return datetime.strptime(token, "%Y/%m/%d %H:%M:%S")
    except ValueError:
        pass
    seconds = float(token)
    micros = round(seconds * 1_000_000)
    return EPOCH + timedelta(microseconds=micros)


def _parse_int(token: str) -> int:
    try:
        return int(token, 0) if token.lower().startswith("0x") else int(token)
    except ValueError:
        value = float(token)
        if not value.is_integer():
            raise
        return int(value)


def _format_value(attr: str, value) -> str:
    if attr in _FLOAT_ATTRS:
        return f"{value:.6f}"
    if attr in _TIME_ATTRS:
        return format_time(value)
    if value is None:
        return ""
    return str(value)


def parse_flow_line(line: str, field_order: Sequence[str], line_no: int | None = None) -> FlowRecord:
    """Parse one comma-delimited flow line laid out per ``field_order``.

    Blank numeric columns become 0, blank ports become ``None`` and a blank
    label becomes ``None``. Columns named in :data:`IGNORED_COLUMNS` are
    skipped.
    """
    tokens = line.rstrip("\r\n").split(",")
    if len(tokens) != len(field_order):
        raise FieldCountMismatch(
            f"expected {len(field_order)} fields, got {len(tokens)}", line_no=line_no
        )
    values: dict[str, object] = {}
    for column, (name, token) in enumerate(zip(field_order, tokens), start=1):
        if name in IGNORED_COLUMNS:
            continue
        attr = _resolve(name)
        token = token.strip()
        try:
            if attr in _INT_ATTRS:
                values[attr] = _parse_int(token) if token else 0
            elif attr in _FLOAT_ATTRS:
                values[attr] = float(token) if token else 0.0
            elif attr in _PORT_ATTRS:
                values[attr] = _parse_int(token) if token else None
            elif attr in _TIME_ATTRS:
                values[attr] = parse_time(token)
            elif attr == "label":
                values[attr] = token or None
            else:
                values[attr] = token
        except ValueError:
            raise NumericParse(
                f"field {name!r}: cannot parse {token!r}", line_no=line_no, column=column
            ) from None
    return FlowRecord(**values)


def serialize_flow_line(flow: FlowRecord, field_order: Sequence[str] = FIELD_ORDER) -> str:
    attrs = [_resolve(name) for name in field_order]
    return ",".join(_format_value(attr, getattr(flow, attr)) for attr in attrs)


def header_line(field_order: Sequence[str] = FIELD_ORDER) -> str:
    for name in field_order:
        _resolve(name)
    return ",".join(field_order)


def parse_header(line: str) -> list[str]:
    names = [n.strip() for n in line.rstrip("\r\n").split(",")]
    for name in names:
        if name not in IGNORED_COLUMNS:
            _resolve(name)
    return names


def read_flows(stream: TextIO) -> Iterator[FlowRecord]:
    """Yield flows from an open ``.binetflow`` text stream (header first)."""
    header = stream.readline()
    if not header.strip():
        return
    order = parse_header(header)
    for line_no, line in enumerate(stream, start=2):
        if not line.strip():
            continue
        yield parse_flow_line(line, order, line_no=line_no)


def read_flow_file(path) -> tuple[list[str], list[FlowRecord]]:
    """Read a whole ``.binetflow`` file; returns (column names, flows)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if not header.strip():
            return [], []
        order = parse_header(header)
        flows = [
            parse_flow_line(line, order, line_no=n)
            for n, line in enumerate(fh, start=2)
            if line.strip()
        ]
    return order, flows


def write_flows(stream: TextIO, flows: Iterable[FlowRecord], field_order: Sequence[str] = FIELD_ORDER) -> int:
    stream.write(header_line(field_order) + "\n")
    count = 0
    for flow in flows:
        stream.write(serialize_flow_line(flow, field_order) + "\n")
        count += 1
    return count
