"""Live packet capture from a network interface (Linux AF_PACKET).

Capture runs on one dedicated thread that feeds a bounded queue. Stopping
sets a cancellation event, closes the socket and joins the thread, so no
capture worker outlives the :class:`LiveCapture` object.
"""

from __future__ import annotations

import errno
import logging
import queue
import socket
import threading
import time
from typing import Iterator

from ..errors import NoSuchInterface, PermissionDenied
from .decode import DecodeStats, LinkType, PacketSummary, decode_packet

log = logging.getLogger(__name__)

ETH_P_ALL = 0x0003
PACKET_OUTGOING = 4
# ARPHRD_* hardware types framed with an Ethernet header
_ETHERNET_HATYPES = {1, 772}
_SENTINEL = object()


class LiveCapture:
    """Iterate decoded packets from ``interface`` until :meth:`stop`."""

    def __init__(self, interface: str, queue_size: int = 10_000, poll: float = 0.2):
        try:
            socket.if_nametoindex(interface)
        except OSError:
            raise NoSuchInterface(f"no such interface: {interface!r}") from None
        try:
            self._sock = socket.socket(socket.AF_PACKET, socket.SOCK_RAW, socket.ntohs(ETH_P_ALL))
        except PermissionError:
            raise PermissionDenied("packet capture requires CAP_NET_RAW (run as root)") from None
        except OSError as exc:
            if exc.errno in (errno.EPERM, errno.EACCES):
                raise PermissionDenied(str(exc)) from None
            raise
        try:
            self._sock.bind((interface, 0))
        except OSError as exc:
            self._sock.close()
            if exc.errno == errno.ENODEV:
                raise NoSuchInterface(f"no such interface: {interface!r}") from None
            raise
        self._sock.settimeout(poll)
        self.interface = interface
        self.stats = DecodeStats()
        self.dropped = 0
        self._queue: queue.Queue = queue.Queue(maxsize=queue_size)
        self._cancel = threading.Event()
        self._thread = threading.Thread(target=self._run, name=f"capture-{interface}", daemon=True)
        self._started = False

    def start(self) -> "LiveCapture":
        if not self._started:
            self._started = True
            self._thread.start()
        return self

    def _run(self) -> None:
        last_ts = 0.0
        try:
            while not self._cancel.is_set():
                try:
                    frame, addr = self._sock.recvfrom(65535)
                except socket.timeout:
                    continue
                except OSError:
                    if self._cancel.is_set():
                        break
                    raise
                ifname, _proto, pkttype, hatype = addr[0], addr[1], addr[2], addr[3]
                if pkttype == PACKET_OUTGOING and ifname == "lo":
                    continue  # loopback delivers every frame twice
                ts = max(time.time(), last_ts)
                last_ts = ts
                link = LinkType.ETHERNET if hatype in _ETHERNET_HATYPES else LinkType.RAW
                try:
                    pkt = decode_packet(frame, link, timestamp=ts, stats=self.stats)
                except Exception as exc:  # malformed frames must not kill capture
                    log.debug("dropping undecodable frame: %s", exc)
                    continue
                if pkt is None:
                    continue
                try:
                    self._queue.put_nowait(pkt)
                except queue.Full:
                    self.dropped += 1
        finally:
            self._queue.put(_SENTINEL)

    def __iter__(self) -> Iterator[PacketSummary]:
        self.start()
        while True:
            item = self._queue.get()
            if item is _SENTINEL:
                return
            yield item

    def get(self, timeout: float | None = None) -> PacketSummary | None:
        """Next packet, or ``None`` on timeout or once capture has ended."""
        self.start()
        try:
            item = self._queue.get(timeout=timeout)
        except queue.Empty:
            return None
        if item is _SENTINEL:
            self._queue.put(_SENTINEL)
            return None
        return item

    @property
    def running(self) -> bool:
        return self._thread.is_alive()

    def stop(self, timeout: float = 2.0) -> None:
        self._cancel.set()
        if self._started:
            self._thread.join(timeout)
        self._sock.close()
        # unblock any consumer waiting on the queue
        while True:
            try:
                self._queue.get_nowait()
            except queue.Empty:
                break
        self._queue.put(_SENTINEL)

    def __enter__(self) -> "LiveCapture":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def live_capture(interface: str, cancel: threading.Event | None = None,
                 poll: float = 0.2) -> Iterator[PacketSummary]:
    """Generator over live packets; ends when ``cancel`` is set or the
    generator is closed. The capture thread is joined before returning."""
    cap = LiveCapture(interface, poll=poll).start()
    try:
        while cancel is None or not cancel.is_set():
            pkt = cap.get(timeout=poll)
            if pkt is None:
                if not cap.running:
                    break
                continue
            yield pkt
    finally:
        cap.stop()
