"""Parsing and normalization of raw key-event logs.

The canonical interchange format is CSV with header
``user_id,platform,session_id,key,action,time_ms``, action ``P`` or ``R``,
UTF-8, LF line endings. Fields never contain commas: a literal comma key is
spelled ``COMMA``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DuplicateSessionError, EmptyInputError, MalformedRowError

CSV_HEADER = "user_id,platform,session_id,key,action,time_ms"

# Fixed uppercase names for non-character keys. Dotted logger names
# ("Key.space") are collapsed to the part after the dot; left/right modifier
# variants fold onto one label.
_SPECIAL_ALIASES = {
    "space": "SPACE",
    "spacebar": "SPACE",
    "enter": "ENTER",
    "return": "ENTER",
    "tab": "TAB",
    "backspace": "BACKSPACE",
    "delete": "DELETE",
    "shift": "SHIFT",
    "shift_l": "SHIFT",
    "shift_r": "SHIFT",
    "ctrl": "CTRL",
    "control": "CTRL",
    "ctrl_l": "CTRL",
    "ctrl_r": "CTRL",
    "alt": "ALT",
    "alt_l": "ALT",
    "alt_r": "ALT",
    "alt_gr": "ALT",
    "meta": "META",
    "cmd": "META",
    "cmd_l": "META",
    "cmd_r": "META",
    "super": "META",
    "win": "META",
}


class Action(str, Enum):
    PRESS = "P"
    RELEASE = "R"


_WHITESPACE_KEYS = {" ": "SPACE", "\t": "TAB", "\n": "ENTER", "\r": "ENTER"}


def canonicalize_key(label: str) -> str:
    """Map a raw key label to its canonical form.

    Character keys are lowercased (so ``a`` and ``A`` share one feature);
    whitespace and modifier keys get fixed uppercase names. A literal comma
    becomes ``COMMA`` because the CSV format forbids commas inside fields.
    """
    if label in _WHITESPACE_KEYS:
        return _WHITESPACE_KEYS[label]
    label = label.strip()
    if not label:
        raise ValueError("empty key label")
    if "." in label and len(label) > 1:
        label = label.rsplit(".", 1)[1] or label
    if len(label) == 1:
        if label == ",":
            return "COMMA"
        return label.lower()
    return _SPECIAL_ALIASES.get(label.lower(), label.upper())


@dataclass(frozen=True)
class KeyEvent:
    key: str
    action: Action
    time_ms: float


@dataclass
class SessionLog:
    """All key events of one (user, platform, session), sorted by time."""

    user_id: str
    platform: str
    session_id: int
    events: list[KeyEvent] = field(default_factory=list)

    @property
    def session_key(self) -> tuple[str, str, int]:
        return (self.user_id, self.platform, self.session_id)


@dataclass(frozen=True)
class PairedKeystroke:
    key: str
    press_ms: float
    release_ms: float

    @property
    def hold_ms(self) -> float:
        return self.release_ms - self.press_ms


@dataclass
class Corpus:
    """Session logs keyed by (user_id, platform, session_id)."""

    sessions: dict[tuple[str, str, int], SessionLog]

    @classmethod
    def from_logs(cls, logs: Iterable[SessionLog]) -> "Corpus":
        sessions: dict[tuple[str, str, int], SessionLog] = {}
        for log in logs:
            if log.session_key in sessions:
                raise DuplicateSessionError(f"duplicate session {log.session_key}")
            sessions[log.session_key] = log
        return cls(sessions)

    @property
    def roster(self) -> list[str]:
        return sorted({key[0] for key in self.sessions})

    @property
    def platforms(self) -> list[str]:
        return sorted({key[1] for key in self.sessions})

    def session_ids(self, user_id: str, platform: str) -> list[int]:
        return sorted(s for (u, p, s) in self.sessions if u == user_id and p == platform)

    def get(self, user_id: str, platform: str, session_id: int) -> SessionLog | None:
        return self.sessions.get((user_id, platform, session_id))

    def __len__(self) -> int:
        return len(self.sessions)

    def __iter__(self) -> Iterator[SessionLog]:
        return iter(self.sessions[key] for key in sorted(self.sessions))


@dataclass
class ParseResult:
    sessions: list[SessionLog]
    warnings: list[str] = field(default_factory=list)
    rows_total: int = 0
    rows_rejected: int = 0
    resorted_sessions: int = 0


def parse_log(data: bytes | str, *, strict: bool = True, source: str | None = None) -> ParseResult:
    """Parse canonical CSV into session logs.

    Rows with an unknown action, malformed timestamp, negative time, or the
    wrong field count are rejected: in strict mode the first one raises
    :class:`MalformedRowError`, otherwise each is recorded as a warning and
    skipped. Duplicate rows are kept. Events are sorted by time (stable), and
    sessions whose rows arrived out of order are counted in
    ``resorted_sessions``.
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    lines = text.splitlines()
    if not lines:
        raise EmptyInputError("empty input" + (f": {source}" if source else ""))
    if lines[0].strip() != CSV_HEADER:
        raise MalformedRowError(1, f"bad header (expected {CSV_HEADER!r})", source)

    result = ParseResult(sessions=[])
    grouped: dict[tuple[str, str, int], list[KeyEvent]] = {}

    def reject(row: int, reason: str) -> None:
        if strict:
            raise MalformedRowError(row, reason, source)
        result.rows_rejected += 1
        result.warnings.append(f"row {row}: {reason} (skipped)")

    for row_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        result.rows_total += 1
        fields = line.split(",")
        if len(fields) != 6:
            reject(row_no, f"expected 6 fields, got {len(fields)}")
            continue
        user_id, platform, session_raw, key_raw, action_raw, time_raw = (f.strip() for f in fields)
        if not user_id or not platform or not key_raw:
            reject(row_no, "empty user_id, platform, or key")
            continue
        try:
            session_id = int(session_raw)
        except ValueError:
            reject(row_no, f"malformed session_id {session_raw!r}")
            continue
        if action_raw not in ("P", "R"):
            reject(row_no, f"unknown action {action_raw!r}")
            continue
        try:
            time_ms = float(time_raw)
        except ValueError:
            reject(row_no, f"malformed timestamp {time_raw!r}")
            continue
        if time_ms != time_ms or time_ms < 0:
            reject(row_no, f"negative or NaN timestamp {time_raw!r}")
            continue
        event = KeyEvent(canonicalize_key(key_raw), Action(action_raw), time_ms)
        grouped.setdefault((user_id, platform, session_id), []).append(event)

    if result.rows_total == 0:
        raise EmptyInputError("no data rows" + (f": {source}" if source else ""))

    for key in sorted(grouped):
        events = grouped[key]
        if any(a.time_ms > b.time_ms for a, b in zip(events, events[1:])):
            events = sorted(events, key=lambda e: e.time_ms)
            result.resorted_sessions += 1
            result.warnings.append(f"session {key}: out-of-order timestamps, re-sorted")
        user_id, platform, session_id = key
        result.sessions.append(SessionLog(user_id, platform, session_id, events))
    return result


def serialize_corpus(corpus: Corpus) -> str:
    """Emit the canonical CSV for a corpus; inverse of :func:`parse_log`."""
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for key in sorted(corpus.sessions):
        log = corpus.sessions[key]
        for event in log.events:
            out.write(
                f"{log.user_id},{log.platform},{log.session_id},"
                f"{event.key},{event.action.value},{event.time_ms!r}\n"
            )
    return out.getvalue()


def read_corpus(path: str | Path, *, strict: bool = True) -> tuple[Corpus, ParseResult]:
    """Load one CSV file or every ``*.csv`` under a directory into a corpus."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise EmptyInputError(f"no .csv files in {path}")
    else:
        files = [path]
    combined = ParseResult(sessions=[])
    logs: list[SessionLog] = []
    for file in files:
        res = parse_log(file.read_bytes(), strict=strict, source=str(file))
        logs.extend(res.sessions)
        combined.warnings.extend(res.warnings)
        combined.rows_total += res.rows_total
        combined.rows_rejected += res.rows_rejected
        combined.resorted_sessions += res.resorted_sessions
    corpus = Corpus.from_logs(logs)
    combined.sessions = logs
    return corpus, combined


@dataclass
class PairingResult:
    pairs: list[PairedKeystroke]
    dropped_repeats: int = 0
    dropped_orphan_releases: int = 0
    dropped_unreleased: int = 0

    @property
    def dropped_total(self) -> int:
        return self.dropped_repeats + self.dropped_orphan_releases + self.dropped_unreleased


def pair_events(log: SessionLog) -> PairingResult:
    """Match each PRESS to the next RELEASE of the same key.

    A second PRESS of a key already held is OS auto-repeat and is dropped; a
    RELEASE with no pending PRESS is dropped; presses never released within
    the session are dropped. Output is ordered by press time (stable).
    """
    result = PairingResult(pairs=[])
    pending: dict[str, float] = {}
    for event in log.events:
        if event.action is Action.PRESS:
            if event.key in pending:
                result.dropped_repeats += 1
            else:
                pending[event.key] = event.time_ms
        else:
            press_ms = pending.pop(event.key, None)
            if press_ms is None:
                result.dropped_orphan_releases += 1
            else:
                result.pairs.append(PairedKeystroke(event.key, press_ms, event.time_ms))
    result.dropped_unreleased = len(pending)
    result.pairs.sort(key=lambda p: p.press_ms)
    return result
