"""Collaboration metrics over exported event logs: session segmentation,
participation balance, synchronous-moment detection, and the summary report.

Pure batch functions; the log is the only input.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Optional

DEFAULT_SYNC_WINDOW_MS = 60_000


class MalformedLogError(Exception):
    pass


class InvalidFractionsError(ValueError):
    pass


@dataclass
class Session:
    """One connect-to-disconnect span. Duration counts only when the user
    added at least one block during the span."""

    user: str
    connect_at: int
    disconnect_at: int = 0
    blocks_added: int = 0
    add_times: list[int] = field(default_factory=list)
    colors: set = field(default_factory=set)
    truncated: bool = False

    @property
    def duration(self) -> Optional[int]:
        if self.blocks_added < 1:
            return None
        return self.disconnect_at - self.connect_at


@dataclass
class SyncMoment:
    """Maximal interval where two or more distinct users added blocks within
    the simultaneity window of each other."""

    start: int
    end: int
    users: set
    blocks_added: int


@dataclass
class Report:
    users: int = 0
    user_sessions: int = 0
    users_with_gt1_session: int = 0
    sessions_with_blocks: int = 0
    avg_blocks_per_session: float = 0.0
    avg_time_per_session_min: float = 0.0
    blocks_added: int = 0
    blocks_deleted: int = 0
    deletion_by_others: int = 0
    sync_moments: int = 0
    sync_blocks: int = 0
    async_sessions: int = 0
    async_blocks: int = 0
    colors_per_session: list[int] = field(default_factory=list)  # auxiliary

    def to_dict(self) -> dict:
        return {
            "users": self.users,
            "user_sessions": self.user_sessions,
            "users_with_gt1_session": self.users_with_gt1_session,
            "sessions_with_blocks": self.sessions_with_blocks,
            "avg_blocks_per_session": self.avg_blocks_per_session,
            "avg_time_per_session_min": self.avg_time_per_session_min,
            "blocks_added": self.blocks_added,
            "blocks_deleted": self.blocks_deleted,
            "deletion_by_others": self.deletion_by_others,
            "sync_moments": self.sync_moments,
            "sync_blocks": self.sync_blocks,
            "async_sessions": self.async_sessions,
            "async_blocks": self.async_blocks,
            "colors_per_session": self.colors_per_session,
        }


def segment_sessions(records: list[dict]) -> list[Session]:
    """One Session per join..leave span per user, in log order. An unmatched
    join closes at the last record's time and is flagged truncated."""
    open_sessions: dict[str, Session] = {}
    done: list[Session] = []
    last_time = 0
    for rec in records:
        p = rec["payload"]
        k = p["k"]
        t = rec["time"]
        last_time = max(last_time, t)
        if k == "join":
            user = p["user"]
            if user in open_sessions:
                raise MalformedLogError(f"join for {user} at {t} while a session is open")
            open_sessions[user] = Session(user=user, connect_at=t)
        elif k == "leave":
            user = p["user"]
            session = open_sessions.pop(user, None)
            if session is None:
                raise MalformedLogError(f"leave for {user} at {t} without a join")
            session.disconnect_at = t
            done.append(session)
        elif k == "add":
            session = open_sessions.get(rec["origin"])
            if session is not None:
                session.blocks_added += 1
                session.add_times.append(t)
                session.colors.add(tuple(p["block"]["rgb"]))
    for user in sorted(open_sessions):
        session = open_sessions[user]
        session.disconnect_at = last_time
        session.truncated = True
        done.append(session)
    done.sort(key=lambda s: (s.connect_at, s.user))
    return done


def participation_balance(fractions: list[float]) -> float:
    """One minus the sample variance of the contributors' block-count shares.

    Sample variance (n-1 denominator) is the flavor that reproduces both
    published anchor points for a pair: an equal split gives 1.0, and a
    single contributor gives 0.5 (population variance would give 0.75).
    """
    if len(fractions) < 2:
        raise InvalidFractionsError("need at least two contributors")
    if any(f < 0 for f in fractions):
        raise InvalidFractionsError(f"negative fraction in {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidFractionsError(f"fractions sum to {sum(fractions)}, not 1")
    return 1.0 - statistics.variance(fractions)


def detect_sync_moments(records: list[dict], window_ms: int = DEFAULT_SYNC_WINDOW_MS) -> list[SyncMoment]:
    """Merge every pair of adds by distinct users at most `window_ms` apart
    into maximal intervals; count all adds landing inside each interval."""
    adds = sorted(
        ((rec["time"], rec["origin"]) for rec in records if rec["payload"]["k"] == "add"),
        key=lambda a: a[0],
    )
    # One candidate interval per add: out to the furthest other-user add in range.
    intervals = []
    n = len(adds)
    for i in range(n):
        t_i, user_i = adds[i]
        end = None
        j = i + 1
        while j < n and adds[j][0] - t_i <= window_ms:
            if adds[j][1] != user_i:
                end = adds[j][0]
            j += 1
        if end is not None:
            intervals.append((t_i, end))
    merged: list[list[int]] = []
    for start, end in intervals:
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    moments = []
    for start, end in merged:
        inside = [(t, u) for t, u in adds if start <= t <= end]
        moments.append(
            SyncMoment(start=start, end=end, users={u for _, u in inside}, blocks_added=len(inside))
        )
    return moments


def summarize(records: list[dict], window_ms: int = DEFAULT_SYNC_WINDOW_MS) -> Report:
    """Compute every report field from one world's log."""
    sessions = segment_sessions(records)
    moments = detect_sync_moments(records, window_ms)

    owners: dict[int, str] = {}
    blocks_added = blocks_deleted = deletion_by_others = 0
    for rec in records:
        p = rec["payload"]
        if p["k"] == "add":
            blocks_added += 1
            owners[p["block"]["id"]] = p["block"]["owner"]
        elif p["k"] == "del":
            blocks_deleted += 1
            owner = owners.get(p["id"], p.get("owner"))
            if p["by"] != owner:
                deletion_by_others += 1
        elif p["k"] == "undo" and p["removed"] is not None:
            blocks_deleted += 1

    with_blocks = [s for s in sessions if s.blocks_added >= 1]
    sync_blocks = sum(m.blocks_added for m in moments)

    def in_any_moment(t: int) -> bool:
        return any(m.start <= t <= m.end for m in moments)

    async_sessions = sum(1 for s in with_blocks if not any(in_any_moment(t) for t in s.add_times))

    per_user_sessions: dict[str, int] = {}
    for s in sessions:
        per_user_sessions[s.user] = per_user_sessions.get(s.user, 0) + 1

    durations = [s.duration for s in sessions if s.duration is not None]
    return Report(
        users=len(per_user_sessions),
        user_sessions=len(sessions),
        users_with_gt1_session=sum(1 for c in per_user_sessions.values() if c > 1),
        sessions_with_blocks=len(with_blocks),
        avg_blocks_per_session=(
            sum(s.blocks_added for s in with_blocks) / len(with_blocks) if with_blocks else 0.0
        ),
        avg_time_per_session_min=(sum(durations) / len(durations) / 60_000 if durations else 0.0),
        blocks_added=blocks_added,
        blocks_deleted=blocks_deleted,
        deletion_by_others=deletion_by_others,
        sync_moments=len(moments),
        sync_blocks=sync_blocks,
        async_sessions=async_sessions,
        async_blocks=blocks_added - sync_blocks,
        colors_per_session=[len(s.colors) for s in sessions],
    )


_TABLE_ROWS = [
    ("General Statistics", None),
    ("Users", "users"),
    ("User sessions", "user_sessions"),
    ("Users with >1 session", "users_with_gt1_session"),
    ("Sessions with blocks added", "sessions_with_blocks"),
    ("Avg blocks per session", "avg_blocks_per_session"),
    ("Avg time per session (min)", "avg_time_per_session_min"),
    ("Creation", None),
    ("Blocks added", "blocks_added"),
    ("Blocks deleted", "blocks_deleted"),
    ("Deletion by others", "deletion_by_others"),
    ("Collaboration", None),
    ("Synchronous moments", "sync_moments"),
    ("Sync: blocks added", "sync_blocks"),
    ("Asynchronous sessions", "async_sessions"),
    ("Async: blocks added", "async_blocks"),
]


def render_table(report: Report) -> str:
    """Aligned two-column text table with the study-style row labels."""
    lines = []
    for label, attr in _TABLE_ROWS:
        if attr is None:
            lines.append(label)
            continue
        value = getattr(report, attr)
        text = f"{value:.1f}" if isinstance(value, float) else str(value)
        lines.append(f"  {label:<28}{text:>10}")
    return "\n".join(lines)
