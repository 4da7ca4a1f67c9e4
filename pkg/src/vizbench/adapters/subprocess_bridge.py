"""Adapter for systems living in another process.

The child process reads newline-delimited JSON requests on stdin and
writes one JSON object per line on stdout. Every request carries an
integer ``id``; responses echo it, so queries may be answered out of
order.

Requests::

    {"id": 0, "op": "setup", "dataset": "<path>", "table": "<name>", "schema": {...}}
    {"id": 1, "op": "query", "viz": {...}, "filter": [...], "table": "<name>",
     "deadline": <epoch seconds | null>, "time_requirement": <seconds | null>,
     "confidence": 0.95}
    {"id": 2, "op": "link", "source": "<viz>", "target": "<viz>"}
    {"id": 3, "op": "delete", "vizs": ["<viz>", ...]}
    {"id": 4, "op": "start"}
    {"id": 5, "op": "end"}

Only ``setup`` and ``query`` are answered::

    {"id": 0, "capabilities": {"supports_margins": true, ...}}
    {"id": 1, "bins": [{"key": ["AA", 3], "estimate": 12.0, "margin": 0.4}],
     "progress": 0.25}
    {"id": 1, "error": "<message>"}

``margin`` may be omitted or null (no margin), or the string ``"inf"``
(unbounded). Keys list one component per binning dimension: the
category for nominal dimensions, the integer bin index otherwise.

A line that is not a JSON object with an integer ``id`` fails the
longest-waiting call; replies to calls nobody waits for are dropped.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import queue
import shlex
import subprocess
import threading
from typing import Iterable, Sequence

from vizbench.adapters.base import AdapterCapabilities, QueryRequest, SystemAdapter
from vizbench.data.loader import DatasetSource
from vizbench.errors import (
    AdapterError,
    AdapterFailure,
    AdapterProtocolError,
    QueryTimeoutError,
    SchemaError,
)
from vizbench.model.results import BinValue, ResultTable
from vizbench.model.schema import DatasetSchema
from vizbench.model.viz import VizSpec

logger = logging.getLogger(__name__)

SETUP_TIMEOUT = 600.0
_EXITED = object()


class _Malformed:
    def __init__(self, line: str):
        self.line = line


class SubprocessAdapter(SystemAdapter):
    """Speaks the NDJSON protocol above with a child process."""

    name = "subprocess"

    def __init__(self, command: str | Sequence[str], setup_timeout: float = SETUP_TIMEOUT):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ValueError("Subprocess adapter needs a command")
        self.setup_timeout = setup_timeout
        self.capabilities = AdapterCapabilities()
        self._proc: subprocess.Popen | None = None
        self._reader: threading.Thread | None = None
        self._pending: dict[int, queue.Queue] = {}
        self._pending_lock = threading.Lock()
        self._write_lock = threading.Lock()
        self._ids = itertools.count()
        self._exited = False

    # ------------------------------------------------------------------
    # Process plumbing
    # ------------------------------------------------------------------

    def _start(self) -> None:
        logger.info("Starting adapter process: %s", " ".join(self.command))
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as err:
            raise AdapterFailure(f"Cannot start adapter process {self.command!r}: {err}") from err
        self._exited = False
        self._reader = threading.Thread(target=self._read_loop, name="adapter-reader", daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        for line in self._proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                message = json.loads(line)
                request_id = message["id"]
            except (json.JSONDecodeError, KeyError, TypeError):
                request_id = None
            if not isinstance(request_id, int) or isinstance(request_id, bool):
                logger.warning("Malformed line from adapter process: %.200s", line)
                self._deliver_oldest(_Malformed(line))
                continue
            with self._pending_lock:
                waiter = self._pending.pop(request_id, None)
            if waiter is None:
                logger.debug("Dropping reply to request %d, nobody is waiting", request_id)
            else:
                waiter.put(message)
        self._exited = True
        self._broadcast(_EXITED)

    def _deliver_oldest(self, item) -> None:
        """Hand ``item`` to the longest-waiting call only."""
        with self._pending_lock:
            if not self._pending:
                return
            waiter = self._pending.pop(next(iter(self._pending)))
        waiter.put(item)

    def _broadcast(self, item) -> None:
        with self._pending_lock:
            waiters = list(self._pending.values())
            self._pending.clear()
        for waiter in waiters:
            waiter.put(item)

    def _exit_code(self) -> int | None:
        proc = self._proc
        return None if proc is None else proc.poll()

    def _send(self, message: dict) -> None:
        if self._proc is None:
            raise AdapterError(f"{self.name}: setup() has not been called")
        if self._exited or self._exit_code() is not None:
            raise AdapterFailure(f"Adapter process exited with code {self._exit_code()}")
        try:
            with self._write_lock:
                self._proc.stdin.write(json.dumps(message) + "\n")
                self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as err:
            raise AdapterFailure(f"Adapter process is gone: {err}") from err

    def _notify(self, op: str, **payload) -> None:
        self._send({"id": next(self._ids), "op": op, **payload})

    def _call(self, op: str, timeout: float, **payload) -> dict:
        request_id = next(self._ids)
        waiter: queue.Queue = queue.Queue(maxsize=1)
        with self._pending_lock:
            self._pending[request_id] = waiter
        try:
            self._send({"id": request_id, "op": op, **payload})
            reply = waiter.get(timeout=None if math.isinf(timeout) else max(timeout, 0.0))
        except queue.Empty:
            raise TimeoutError(f"No reply to '{op}' within {timeout:.3f}s") from None
        finally:
            with self._pending_lock:
                self._pending.pop(request_id, None)
        if reply is _EXITED:
            raise AdapterFailure(f"Adapter process exited with code {self._exit_code()}")
        if isinstance(reply, _Malformed):
            raise AdapterProtocolError(f"Malformed reply: {reply.line[:200]}")
        if "error" in reply:
            raise AdapterError(str(reply["error"]))
        return reply

    # ------------------------------------------------------------------
    # Adapter interface
    # ------------------------------------------------------------------

    def _prepare(self, source: DatasetSource, schema: DatasetSchema) -> None:
        self._start()
        try:
            reply = self._call(
                "setup",
                self.setup_timeout,
                dataset=str(source.path),
                table=source.table,
                schema=schema.to_dict(),
            )
        except TimeoutError as err:
            raise AdapterFailure(str(err)) from err
        caps = reply.get("capabilities", {})
        try:
            self.capabilities = AdapterCapabilities.from_dict(caps)
        except (AttributeError, SchemaError) as err:
            raise AdapterProtocolError(f"Bad capabilities {caps!r}: {err}") from err

    def process_request(self, request: QueryRequest) -> ResultTable:
        try:
            reply = self._call(
                "query",
                request.remaining(),
                viz=request.viz.to_dict(),
                filter=request.effective.to_list(),
                table=request.table,
                deadline=request.deadline,
                time_requirement=request.time_requirement,
                confidence=request.confidence,
            )
        except TimeoutError:
            raise QueryTimeoutError(request.viz.name, request.time_requirement) from None
        return parse_result(reply, request.viz, request.schema)

    def link_vizs(self, source: str, target: str) -> None:
        self._notify("link", source=source, target=target)

    def delete_vizs(self, vizs: Iterable[str]) -> None:
        self._notify("delete", vizs=list(vizs))

    def workflow_start(self) -> None:
        self._notify("start")

    def workflow_end(self) -> None:
        self._notify("end")

    def close(self) -> None:
        if self._proc is None:
            return
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()
        self._proc = None


def _margin(raw) -> float | None:
    if raw is None:
        return None
    if isinstance(raw, str):
        if raw.lower() in ("inf", "infinity"):
            return math.inf
        raise ValueError(f"margin {raw!r}")
    return float(raw)


def parse_result(reply: dict, viz: VizSpec, schema: DatasetSchema) -> ResultTable:
    """Decode a query reply into a :class:`ResultTable`.

    Raises
    ------
    AdapterProtocolError
        On missing fields, wrong key arity or non-numeric values.
    """
    bins = reply.get("bins")
    if not isinstance(bins, list):
        raise AdapterProtocolError(f"Reply for '{viz.name}' has no 'bins' list")
    nominal = [schema.column(b.column).is_nominal for b in viz.binning]
    table = {}
    try:
        for item in bins:
            raw_key = item["key"]
            if not isinstance(raw_key, list) or len(raw_key) != viz.dims:
                raise ValueError(f"key {raw_key!r} for a {viz.dims}-D viz")
            key = []
            for part, is_nominal in zip(raw_key, nominal):
                if is_nominal:
                    key.append(str(part))
                elif float(part).is_integer():
                    key.append(int(part))
                else:
                    raise ValueError(f"bin index {part!r}")
            table[tuple(key)] = BinValue(float(item["estimate"]), _margin(item.get("margin")))
        return ResultTable(table, progress=float(reply.get("progress", 1.0)))
    except (KeyError, TypeError, ValueError, SchemaError) as err:
        raise AdapterProtocolError(f"Bad reply for '{viz.name}': {err}") from err
