"""Websocket feed of labelled flows and alerts.

Wire protocol: UTF-8 JSON text messages.

* ``{"type": "flow", "label": "Normal"|"Botnet", "flow": {column: token}}``
* ``{"type": "alert", "timestamp": iso8601, "models": [ids], "severity": "botnet",
  "flow": {column: token}}``
* ``{"type": "all_data", "flows": [flow messages], "alerts": [alert messages]}``,
  sent in reply to a client message ``{"type": "get_all_data"}`` (the bare
  text ``get_all_data`` is accepted too).

``flow`` objects map each canonical column name to its ``.binetflow`` text
token, so ``",".join(flow.values())`` is a valid flow line.

The server runs its own event loop on a background thread. Publishing never
blocks: messages are handed to the loop, retained in bounded ring buffers,
and queued per client. A client whose queue fills up is disconnected.
"""

from __future__ import annotations

import asyncio
import collections
import json
import logging
import threading

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from ..errors import BindFailed
from ..flowcore import FIELD_ORDER, FlowRecord, LabelClass, parse_flow_line, serialize_flow_line

log = logging.getLogger(__name__)

FLOW_RETENTION = 10_000
ALERT_RETENTION = 1_000


def flow_payload(flow: FlowRecord) -> dict[str, str]:
    return dict(zip(FIELD_ORDER, serialize_flow_line(flow).split(",")))


def flow_from_payload(payload: dict[str, str]) -> FlowRecord:
    columns = list(payload)
    return parse_flow_line(",".join(payload[c] for c in columns), columns)


def flow_message(flow: FlowRecord, label) -> dict:
    return {"type": "flow", "label": LabelClass(label).value, "flow": flow_payload(flow)}


def alert_message(alert) -> dict:
    return {"type": "alert", "timestamp": alert.timestamp, "models": list(alert.triggering_model_ids),
            "severity": alert.severity, "flow": flow_payload(alert.flow)}


def _encode(message: dict) -> str:
    return json.dumps(message, separators=(",", ":"))


class StreamServer:
    def __init__(self, host: str = "127.0.0.1", port: int = 8765, flow_retention: int = FLOW_RETENTION,
                 alert_retention: int = ALERT_RETENTION, client_queue: int = 1000):
        self.host = host
        self.port = port
        self.flows = collections.deque(maxlen=flow_retention)
        self.alerts = collections.deque(maxlen=alert_retention)
        self.client_queue = client_queue
        self.dropped_clients = 0
        self._clients: dict = {}
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._ready = threading.Event()
        self._error: BaseException | None = None
        self._stop: asyncio.Event | None = None

    # lifecycle -----------------------------------------------------------
    def start(self) -> "StreamServer":
        self._thread = threading.Thread(target=self._run, name="botflow-stream", daemon=True)
        self._thread.start()
        self._ready.wait()
        if self._error is not None:
            self._thread.join()
            raise BindFailed(f"cannot listen on {self.host}:{self.port}: {self._error}") from self._error
        return self

    def _run(self) -> None:
        loop = asyncio.new_event_loop()
        self._loop = loop
        try:
            loop.run_until_complete(self._main())
        finally:
            loop.run_until_complete(loop.shutdown_asyncgens())
            loop.close()

    async def _main(self) -> None:
        self._stop = asyncio.Event()
        try:
            server = await serve(self._handler, self.host, self.port)
        except OSError as exc:
            self._error = exc
            self._ready.set()
            return
        self.port = server.sockets[0].getsockname()[1]
        self._ready.set()
        async with server:
            await self._stop.wait()
            server.close()
            for client in list(self._clients):
                await client.close()
        await server.wait_closed()

    def stop(self, timeout: float = 2.0) -> None:
        if self._loop is not None and self._thread is not None and self._thread.is_alive():
            self._loop.call_soon_threadsafe(self._stop.set)
            self._thread.join(timeout)

    def __enter__(self) -> "StreamServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    @property
    def address(self) -> str:
        return f"ws://{self.host}:{self.port}"

    # publishing (any thread) --------------------------------------------
    def publish_flow(self, flow: FlowRecord, label) -> None:
        self._submit("flow", flow_message(flow, label))

    def publish_alert(self, alert) -> None:
        self._submit("alert", alert_message(alert))

    def _submit(self, kind: str, message: dict) -> None:
        loop = self._loop
        if loop is None or loop.is_closed():
            return
        try:
            loop.call_soon_threadsafe(self._publish, kind, message)
        except RuntimeError:
            pass  # loop shut down meanwhile

    def flush(self, timeout: float = 2.0) -> None:
        """Wait until every message published so far has been dispatched."""
        if self._loop is None or self._loop.is_closed():
            return
        done = threading.Event()
        try:
            self._loop.call_soon_threadsafe(done.set)
        except RuntimeError:
            return
        done.wait(timeout)

    # event loop side ----------------------------------------------------
    def _publish(self, kind: str, message: dict) -> None:
        (self.flows if kind == "flow" else self.alerts).append(message)
        text = _encode(message)
        for client, queue in list(self._clients.items()):
            self._enqueue(client, queue, text)

    def _enqueue(self, client, queue: asyncio.Queue, text: str) -> None:
        try:
            queue.put_nowait(text)
        except asyncio.QueueFull:
            log.warning("disconnecting slow stream client %s", client.remote_address)
            self.dropped_clients += 1
            self._clients.pop(client, None)
            asyncio.ensure_future(client.close(code=1008, reason="too slow"))

    def _all_data(self) -> str:
        return _encode({"type": "all_data", "flows": list(self.flows), "alerts": list(self.alerts)})

    async def _handler(self, ws) -> None:
        queue: asyncio.Queue = asyncio.Queue(maxsize=self.client_queue)
        self._clients[ws] = queue
        sender = asyncio.ensure_future(self._sender(ws, queue))
        try:
            async for raw in ws:
                if _is_replay_request(raw):
                    self._enqueue(ws, queue, self._all_data())
        except ConnectionClosed:
            pass
        finally:
            self._clients.pop(ws, None)
            sender.cancel()
            try:
                await sender
            except (asyncio.CancelledError, ConnectionClosed):
                pass

    async def _sender(self, ws, queue: asyncio.Queue) -> None:
        while True:
            text = await queue.get()
            await ws.send(text)


def _is_replay_request(raw) -> bool:
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8", "replace")
    if raw.strip() == "get_all_data":
        return True
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError:
        return False
    return isinstance(msg, dict) and msg.get("type") == "get_all_data"


def stream_serve(bind_address: str = "127.0.0.1:8765", **kwargs) -> StreamServer:
    """Start a feed on ``host:port`` (port 0 picks a free port)."""
    host, _, port = bind_address.rpartition(":")
    try:
        port_num = int(port)
    except ValueError as exc:
        raise BindFailed(f"bad listen address {bind_address!r}") from exc
    return StreamServer(host or "127.0.0.1", port_num, **kwargs).start()
