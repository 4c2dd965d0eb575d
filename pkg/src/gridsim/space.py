"""The shared communication space: a one-sided tape of cells with a write log."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

POLICIES = ("reject", "priority-order", "controller-arbitrated")
PLACEHOLDER = "_"


class WriteEvent(NamedTuple):
    tick: int
    writer: str
    cell: int
    symbol: str


class Conflict(NamedTuple):
    first: WriteEvent
    second: WriteEvent


class ConflictError(RuntimeError):
    def __init__(self, conflict: Conflict):
        self.conflict = conflict
        super().__init__(f"conflicting writes {conflict.first} / {conflict.second}")


class Ok(NamedTuple):
    event: WriteEvent


@dataclass
class CommSpace:
    policy: str = "reject"
    blank: str = "_"

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown conflict policy {self.policy!r}")
        self.cells: dict[int, str] = {}
        # trace-shaped records (tick, "write", writer, cell, symbol), shared
        # with the caller's trace to save an allocation per write
        self._log: list[tuple] = []
        self._events: list[WriteEvent] = []
        self._tick = None
        self._tick_start = 0  # log index of the current tick's first write
        self._free = 0

    @property
    def write_log(self) -> list[WriteEvent]:
        events = self._events
        if len(events) < len(self._log):
            events.extend(WriteEvent(e[0], e[2], e[3], e[4]) for e in self._log[len(events):])
        return events

    def read(self, cell: int) -> str:
        if cell < 0:
            raise ValueError("cell index must be non-negative")
        return self.cells.get(cell, self.blank)

    def first_free(self) -> int:
        while self._free in self.cells:
            self._free += 1
        return self._free

    def _enter(self, tick: int):
        if tick != self._tick:
            if self._tick is not None and tick < self._tick:
                raise ValueError(f"write at tick {tick} after tick {self._tick}")
            self._tick = tick
            self._tick_start = len(self._log)

    def _tick_cells(self) -> dict[int, WriteEvent]:
        return {e[3]: WriteEvent(e[0], e[2], e[3], e[4]) for e in self._log[self._tick_start:]}

    def write(self, tick: int, writer: str, cell: int, symbol: str) -> Ok | Conflict:
        """Record a write, or report a same-tick disagreement on ``cell``.

        Under ``priority-order`` the later write wins and is recorded even
        when it disagrees; the other policies leave the cell untouched and
        return the :class:`Conflict` for the caller to settle.
        """
        if cell < 0:
            raise ValueError("cell index must be non-negative")
        if symbol == self.blank:
            raise ValueError("the blank cannot be written; cells are never erased")
        self._enter(tick)
        event = WriteEvent(tick, writer, cell, symbol)
        prior = self._tick_cells().get(cell)
        if prior is not None and prior.symbol != symbol and self.policy != "priority-order":
            return Conflict(prior, event)
        self._commit(event)
        return Ok(event)

    def settle(self, conflict: Conflict, symbol: str, by: str) -> WriteEvent:
        """Commit the arbitrated outcome of ``conflict`` as a write by ``by``."""
        event = WriteEvent(conflict.second.tick, by, conflict.second.cell, symbol)
        self._commit(event)
        return event

    def commit(self, tick: int, writes, out: list, resolve=None, allow=None) -> None:
        """Commit one tick's writes in order.

        ``writes`` holds ``(writer, cell, symbol)`` with ``cell=None`` for an
        append to the first free cell. Trace records are appended to ``out``:
        ``(tick, "write", writer, cell, symbol)``, ``(tick, "deny", ...)`` for
        writes refused by ``allow(cell)``, and ``(tick, "conflict", cell,
        writer1, sym1, writer2, sym2, winner, how)``. ``resolve(conflict)``
        returns ``(winner, by)``; without it an unsettled conflict raises
        :class:`ConflictError`.
        """
        if tick != self._tick:
            self._enter(tick)
        cells = self.cells
        log = self._log
        if allow is None and len(writes) == 1 and len(log) == self._tick_start:
            # lone write: nothing to conflict with
            writer, cell, symbol = writes[0]
            if cell is None:
                cell = self._free
                while cell in cells:
                    cell += 1
                self._free = cell
            cells[cell] = symbol
            rec = (tick, "write", writer, cell, symbol)
            log.append(rec)
            out.append(rec)
            return
        # cell -> (writer, symbol) for writes already made this tick
        tick_cells = {e[3]: (e[2], e[4]) for e in log[self._tick_start:]}
        priority = self.policy == "priority-order"
        for writer, cell, symbol in writes:
            if cell is None:
                cell = self._free
                while cell in cells:
                    cell += 1
                self._free = cell
            if allow is not None and not allow(cell):
                out.append((tick, "deny", writer, cell, symbol))
                continue
            prior = tick_cells.get(cell)
            if prior is not None and prior[1] != symbol:
                p_writer, p_symbol = prior
                if priority:
                    out.append((tick, "conflict", cell, p_writer, p_symbol, writer, symbol, symbol, "priority"))
                else:
                    conflict = Conflict(WriteEvent(tick, p_writer, cell, p_symbol),
                                        WriteEvent(tick, writer, cell, symbol))
                    if resolve is None:
                        raise ConflictError(conflict)
                    symbol, writer = resolve(conflict)
                    out.append((tick, "conflict", cell, p_writer, p_symbol,
                                conflict.second.writer, conflict.second.symbol, symbol, "arbiter"))
            cells[cell] = symbol
            tick_cells[cell] = (writer, symbol)
            rec = (tick, "write", writer, cell, symbol)
            log.append(rec)
            out.append(rec)

    def commit_lone(self, tick: int, write, out: list) -> None:
        """:meth:`commit` for a tick with exactly one write and no gate.

        Only valid as the first commit of ``tick``.
        """
        writer, cell, symbol = write
        log = self._log
        self._tick = tick
        self._tick_start = len(log)
        if cell is None:
            cells = self.cells
            cell = self._free
            while cell in cells:
                cell += 1
            self._free = cell
        self.cells[cell] = symbol
        rec = (tick, "write", writer, cell, symbol)
        log.append(rec)
        out.append(rec)

    def _commit(self, event: WriteEvent):
        self.cells[event.cell] = event.symbol
        self._log.append((event.tick, "write", event.writer, event.cell, event.symbol))

    def snapshot(self, upto_cell: int | None = None) -> str:
        """Cells ``0..upto_cell`` as a word, blanks shown as ``_``.

        Without ``upto_cell`` the window ends at the last written cell.
        """
        if upto_cell is None:
            upto_cell = max(self.cells, default=-1)
        buf = [PLACEHOLDER] * (upto_cell + 1)
        for cell, sym in self.cells.items():
            if cell <= upto_cell:
                buf[cell] = sym
        return "".join(buf)


def replay_log(events: Iterable[WriteEvent]) -> dict[int, str]:
    cells = {}
    for ev in events:
        cells[ev.cell] = ev.symbol
    return cells


def format_log(events: Iterable[WriteEvent]) -> str:
    return "".join(f"{e.tick} {e.writer} {e.cell} {e.symbol}\n" for e in events)


def parse_log(text: str) -> list[WriteEvent]:
    events = []
    for line in text.splitlines():
        if not line.strip():
            continue
        tick, writer, cell, symbol = line.split()
        events.append(WriteEvent(int(tick), writer, int(cell), symbol))
    return events
