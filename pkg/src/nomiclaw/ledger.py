"""Run-log persistence and the flat analysis table.

Log files are named ``nomiclaw_<homo|hetero>_<vignette>_run<NN>.json``. The
analysis CSV has one row per agent per non-excluded round; excluded rounds
stay in the JSON logs for auditing.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Iterable, Sequence

import pandas as pd

from nomiclaw.protocol import (
    Ballot,
    Condition,
    GameConfig,
    Outcome,
    OutcomeKind,
    Proposal,
    ProtocolError,
    RosterEntry,
    RoundRecord,
    RunLog,
    validate_run_log,
)

SCHEMA_VERSION = 1
FILENAME_RE = re.compile(r"^nomiclaw_(?P<cond>homo|hetero)_(?P<vignette>[A-Za-z0-9.-]+)_run(?P<run>\d{2,})\.json$")


class LoadError(Exception):
    def __init__(self, path: Path, reason: str) -> None:
        self.path = Path(path)
        self.reason = reason
        super().__init__(f"{self.path.name}: {reason}")


def log_filename(log: RunLog) -> str:
    if not re.fullmatch(r"[A-Za-z0-9.-]+", log.vignette_id):
        raise ValueError(f"vignette id {log.vignette_id!r} cannot be used in a filename")
    return f"nomiclaw_{log.condition.short}_{log.vignette_id}_run{log.run_index:02d}.json"


def _outcome_dict(o: Outcome, seat_order: Sequence[str]) -> dict[str, Any]:
    return {
        "kind": o.kind.value,
        "winners": [a for a in seat_order if a in o.winners],
        "vote_counts": {a: o.vote_counts[a] for a in seat_order if a in o.vote_counts},
    }


def log_to_dict(log: RunLog) -> dict[str, Any]:
    cfg = log.config
    seats = cfg.seat_order
    return {
        "schema_version": SCHEMA_VERSION,
        "run_id": log.run_id,
        "run_index": log.run_index,
        "condition": cfg.condition.value,
        "vignette_id": log.vignette_id,
        "config": {
            "num_agents": cfg.num_agents,
            "num_rounds": cfg.num_rounds,
            "points_win": cfg.points_win,
            "points_tie": cfg.points_tie,
            "condition": cfg.condition.value,
            "seat_order": list(seats),
            "rng_seed": cfg.rng_seed,
            "backend_params": dict(cfg.backend_params),
        },
        "roster": [asdict(e) for e in log.roster],
        "rounds": [
            {
                "round": r.round,
                "excluded": r.excluded,
                "proposals": [asdict(p) for p in r.proposals],
                "ballots": [asdict(b) for b in r.ballots],
                "outcome": _outcome_dict(r.outcome, seats),
                "point_deltas": {a: r.point_deltas[a] for a in seats},
            }
            for r in log.rounds
        ],
        "final_scores": {a: log.final_scores[a] for a in seats},
    }


def log_from_dict(d: dict[str, Any]) -> RunLog:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
    c = d["config"]
    cfg = GameConfig(
        num_agents=c["num_agents"],
        seat_order=tuple(c["seat_order"]),
        condition=Condition.parse(c["condition"]),
        num_rounds=c["num_rounds"],
        points_win=c["points_win"],
        points_tie=c["points_tie"],
        rng_seed=c["rng_seed"],
        backend_params=c.get("backend_params", {}),
    )
    rounds = tuple(
        RoundRecord(
            round=r["round"],
            proposals=tuple(Proposal(**p) for p in r["proposals"]),
            ballots=tuple(Ballot(**b) for b in r["ballots"]),
            outcome=Outcome(
                OutcomeKind(r["outcome"]["kind"]),
                frozenset(r["outcome"]["winners"]),
                dict(r["outcome"]["vote_counts"]),
            ),
            point_deltas=dict(r["point_deltas"]),
            excluded=r["excluded"],
        )
        for r in d["rounds"]
    )
    return RunLog(
        run_id=d["run_id"],
        run_index=d["run_index"],
        vignette_id=d["vignette_id"],
        config=cfg,
        roster=tuple(RosterEntry(**e) for e in d["roster"]),
        rounds=rounds,
        final_scores=dict(d["final_scores"]),
    )


def dumps_log(log: RunLog) -> str:
    return json.dumps(log_to_dict(log), indent=2, ensure_ascii=False) + "\n"


def write_run_log(log: RunLog, directory: str | os.PathLike) -> Path:
    validate_run_log(log)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / log_filename(log)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(dumps_log(log))
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return target


def load_run_log(path: str | os.PathLike) -> RunLog:
    path = Path(path)
    m = FILENAME_RE.match(path.name)
    if not m:
        raise LoadError(path, "filename does not follow the log naming convention")
    try:
        log = log_from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (ValueError, KeyError, TypeError) as exc:
        raise LoadError(path, f"malformed log ({exc})") from exc
    if log.condition.short != m["cond"]:
        raise LoadError(path, f"filename condition {m['cond']} != body {log.condition.short}")
    if log.vignette_id != m["vignette"]:
        raise LoadError(path, f"filename vignette {m['vignette']} != body {log.vignette_id}")
    if log.run_index != int(m["run"]):
        raise LoadError(path, f"filename run {m['run']} != body {log.run_index}")
    try:
        validate_run_log(log)
    except ProtocolError as exc:
        raise LoadError(path, str(exc)) from exc
    return log


def load_run_logs(directory: str | os.PathLike) -> tuple[list[RunLog], list[LoadError]]:
    """Load every ``nomiclaw_*.json`` file; bad files are reported, not fatal."""
    logs, errors = [], []
    for path in sorted(Path(directory).glob("nomiclaw_*.json")):
        try:
            logs.append(load_run_log(path))
        except LoadError as exc:
            errors.append(exc)
    return logs, errors


@dataclass
class InteractionRow:
    run_id: str
    vignette_id: str
    condition: str
    round: int
    agent_id: str
    model_id: str
    seat: int
    vote_target: str
    self_vote: bool
    won: bool
    tied: bool
    points: int
    rule_text: str
    reasoning_text: str
    vote_justification: str
    rule_theme: str = ""
    reasoning_theme: str = ""
    vote_theme: str = ""
    peer_mentioned: bool | None = None
    winner_mentioned: bool | None = None


COLUMNS = [f.name for f in fields(InteractionRow)]
KEY = ["run_id", "round", "agent_id"]


def _run_sort_key(log: RunLog):
    return (log.condition.short, log.vignette_id, log.run_index, log.run_id)


def export_rows(logs: Iterable[RunLog]) -> list[InteractionRow]:
    rows = []
    for log in sorted(logs, key=_run_sort_key):
        for rec in log.rounds:
            if rec.excluded:
                continue
            props = {p.proposer: p for p in rec.proposals}
            votes = {b.voter: b for b in rec.ballots}
            tie = rec.outcome.kind is OutcomeKind.TIE
            for entry in sorted(log.roster, key=lambda e: e.seat):
                a = entry.agent_id
                b = votes[a]
                rows.append(
                    InteractionRow(
                        run_id=log.run_id,
                        vignette_id=log.vignette_id,
                        condition=log.condition.short,
                        round=rec.round,
                        agent_id=a,
                        model_id=entry.model_id,
                        seat=entry.seat,
                        vote_target=b.target,
                        self_vote=b.target == a,
                        won=rec.outcome.winner == a,
                        tied=tie and a in rec.outcome.winners,
                        points=rec.point_deltas[a],
                        rule_text=props[a].rule_text,
                        reasoning_text=props[a].reasoning_text,
                        vote_justification=b.justification_text,
                    )
                )
    return rows


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def frame_to_csv_text(df: pd.DataFrame) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(df.columns))
    for rec in df.itertuples(index=False):
        w.writerow([_cell(_native(v)) for v in rec])
    return buf.getvalue()


def _native(v: Any) -> Any:
    if v is None or (isinstance(v, float) and v != v):
        return None
    if hasattr(v, "item"):
        return v.item()
    return v


def rows_to_frame(rows: Sequence[InteractionRow]) -> pd.DataFrame:
    df = pd.DataFrame([asdict(r) for r in rows], columns=COLUMNS)
    return _coerce(df)


def export_csv(logs: Iterable[RunLog], path: str | os.PathLike | None = None) -> pd.DataFrame:
    """Flatten ``logs`` to the analysis table; write it to ``path`` if given."""
    df = rows_to_frame(export_rows(logs))
    if path is not None:
        write_table(df, path)
    return df


def write_table(df: pd.DataFrame, path: str | os.PathLike) -> None:
    Path(path).write_text(frame_to_csv_text(df), encoding="utf-8", newline="")


_BOOL = {"true": True, "false": False, "True": True, "False": False, "1": True, "0": False}


def _coerce(df: pd.DataFrame) -> pd.DataFrame:
    df = df.copy()
    for col in ("round", "seat", "points"):
        if col in df:
            df[col] = df[col].astype(int)
    for col in ("self_vote", "won", "tied"):
        if col in df:
            df[col] = df[col].map(lambda v: _BOOL.get(str(v), v) if not isinstance(v, bool) else v).astype(bool)
    for col in ("peer_mentioned", "winner_mentioned"):
        if col in df:
            df[col] = df[col].map(lambda v: None if v is None or v == "" or v != v else _BOOL.get(str(v), v)).astype(object)
    return df


def read_table(path: str | os.PathLike) -> pd.DataFrame:
    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    missing = [c for c in COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    return _coerce(df)


@dataclass
class BalanceReport:
    rows_per_agent: dict[tuple[str, str], int]
    rows_per_run: dict[str, int]
    is_balanced: bool
    excluded_rounds: int
    offending: list[tuple[str, str]]

    def summary(self) -> str:
        state = "balanced" if self.is_balanced else "UNBALANCED"
        text = (
            f"{sum(self.rows_per_run.values())} rows, {len(self.rows_per_run)} runs, "
            f"{self.excluded_rounds} excluded rounds: {state}"
        )
        if self.offending:
            text += "; short agents: " + ", ".join(f"{r}/{a}" for r, a in self.offending)
        return text


def verify_balance(table: pd.DataFrame, num_rounds: int | None = None) -> BalanceReport:
    """Every agent of a run must have one row for each round the run kept."""
    if table.empty:
        return BalanceReport({}, {}, True, 0, [])
    per_agent = table.groupby(["run_id", "agent_id"], sort=True).size()
    rounds_kept = table.groupby("run_id")["round"].nunique()
    expected = num_rounds or int(table["round"].max())
    offending = [
        (run, agent) for (run, agent), n in per_agent.items() if n != rounds_kept[run]
    ]
    excluded = int(sum(expected - n for n in rounds_kept.values))
    return BalanceReport(
        rows_per_agent={(r, a): int(n) for (r, a), n in per_agent.items()},
        rows_per_run={r: int(n) for r, n in table.groupby("run_id").size().items()},
        is_balanced=not offending,
        excluded_rounds=excluded,
        offending=offending,
    )
