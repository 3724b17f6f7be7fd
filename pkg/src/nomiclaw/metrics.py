"""Interaction metrics computed from the analysis table.

Conventions used throughout:

* Rates whose denominator is empty are undefined and returned as ``None``
  (``NaN`` inside data frames); they are never coerced to zero.
* "Consecutive" means round numbers ``t-1`` and ``t`` are both present, so an
  excluded round breaks a chain instead of bridging it.
* The winning bloc of a decided round is the winner plus every agent who
  voted for the winner. Tie rounds carry no bloc information.
* Edge density counts every ballot (self-votes included) over ``n(n-1)``.
* Clustering is the directed-triangle coefficient on the self-loop-free vote
  graph, averaged over all nodes (nodes with no possible triangle count 0).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from nomiclaw.protocol import RoundRecord
from nomiclaw.themes import CODES

RATE_METRICS = ("svr", "avr", "wr", "vv", "vp", "ri", "csr", "bs", "ed", "cc", "fmw")


def _ratio(num: float, den: float) -> float | None:
    return None if den == 0 else num / den


def _sorted(history: pd.DataFrame) -> pd.DataFrame:
    return history.sort_values("round", kind="stable")


def self_vote_rate(history: pd.DataFrame) -> float | None:
    """Share of an agent's rounds in which it voted for itself."""
    return _ratio(int(history["self_vote"].sum()), len(history))


def win_rate(history: pd.DataFrame) -> float | None:
    return _ratio(int(history["won"].sum()), len(history))


def avg_votes_received(run_table: pd.DataFrame, agent_id: str) -> float | None:
    """Ballots naming ``agent_id`` per kept round of the run."""
    return _ratio(int((run_table["vote_target"] == agent_id).sum()), run_table["round"].nunique())


def _consecutive_pairs(rounds: Sequence[int]):
    present = sorted(set(rounds))
    return [(t - 1, t) for t in present if t - 1 in set(present)]


def vote_volatility(history: pd.DataFrame) -> float | None:
    targets = dict(zip(history["round"], history["vote_target"]))
    pairs = _consecutive_pairs(list(targets))
    changes = sum(targets[a] != targets[b] for a, b in pairs)
    return _ratio(changes, len(pairs))


def vote_persistence(history: pd.DataFrame) -> float | None:
    vv = vote_volatility(history)
    return None if vv is None else 1.0 - vv


def reciprocity_index(run_table: pd.DataFrame, agent_id: str, per: str = "supporter") -> float | None:
    """Returned votes over prior-support opportunities.

    ``per="supporter"`` counts each (supporter, round) pair as one opportunity;
    ``per="round"`` counts a round once if the agent had any supporter in the
    previous round and returns it if the agent backs any of them.
    """
    votes = {(r, v): t for r, v, t in zip(run_table["round"], run_table["agent_id"], run_table["vote_target"])}
    rounds = sorted(set(run_table["round"]))
    opportunities = returned = 0
    for t in rounds:
        if t - 1 not in rounds or (t, agent_id) not in votes:
            continue
        supporters = sorted(
            v for (r, v), tgt in votes.items() if r == t - 1 and tgt == agent_id and v != agent_id
        )
        if not supporters:
            continue
        mine = votes[(t, agent_id)]
        if per == "supporter":
            opportunities += len(supporters)
            returned += sum(mine == s for s in supporters)
        elif per == "round":
            opportunities += 1
            returned += mine in supporters
        else:
            raise ValueError(f"unknown reciprocity mode {per!r}")
    return _ratio(returned, opportunities)


def bloc_trace(run_table: pd.DataFrame) -> dict[str, dict[int, bool | None]]:
    """Per agent: round -> in winning bloc (``None`` for tie rounds)."""
    trace: dict[str, dict[int, bool | None]] = {a: {} for a in run_table["agent_id"].unique()}
    for rnd, rows in run_table.groupby("round", sort=True):
        winners = rows.loc[rows["won"], "agent_id"].tolist()
        if len(winners) != 1:
            for a in rows["agent_id"]:
                trace[a][int(rnd)] = None
            continue
        w = winners[0]
        bloc = {w} | set(rows.loc[rows["vote_target"] == w, "agent_id"])
        for a in rows["agent_id"]:
            trace[a][int(rnd)] = a in bloc
    return trace


def coalition_switch_rate(membership: Mapping[int, bool | None]) -> float | None:
    pairs = [
        (membership[a], membership[b])
        for a, b in _consecutive_pairs(list(membership))
        if membership[a] is not None and membership[b] is not None
    ]
    return _ratio(sum(x != y for x, y in pairs), len(pairs))


def bloc_stability(membership: Mapping[int, bool | None]) -> float | None:
    defined = sorted((r, m) for r, m in membership.items() if m is not None)
    joined = [r for r, m in defined if m]
    if not joined:
        return None
    t0 = joined[0]
    after = [m for r, m in defined if r >= t0]
    return sum(after) / len(after)


@dataclass(frozen=True)
class VoteGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def adjacency(self, self_loops: bool = False) -> np.ndarray:
        idx = {n: i for i, n in enumerate(self.nodes)}
        a = np.zeros((len(self.nodes), len(self.nodes)))
        for u, v in self.edges:
            if u != v or self_loops:
                a[idx[u], idx[v]] = 1.0
        return a


def vote_graph(nodes: Sequence[str], ballots: Iterable[tuple[str, str]]) -> VoteGraph:
    return VoteGraph(tuple(nodes), tuple((u, v) for u, v in ballots))


def graph_from_round(record: RoundRecord, roster: Sequence[str]) -> VoteGraph:
    return vote_graph(roster, ((b.voter, b.target) for b in record.ballots))


def edge_density(graph: VoteGraph) -> float | None:
    n = len(graph.nodes)
    return _ratio(len(graph.edges), n * (n - 1))


def clustering_coefficient(graph: VoteGraph) -> float | None:
    if not graph.nodes:
        return None
    a = graph.adjacency()
    s = a + a.T
    triangles = np.diagonal(s @ s @ s) / 2.0
    degree = a.sum(axis=0) + a.sum(axis=1)
    reciprocal = np.diagonal(a @ a)
    denom = degree * (degree - 1) - 2 * reciprocal
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(denom > 0, triangles / np.where(denom > 0, denom, 1), 0.0)
    return float(c.mean())


def _round_graphs(run_table: pd.DataFrame):
    nodes = tuple(run_table.sort_values("seat").drop_duplicates("agent_id")["agent_id"])
    for _, rows in run_table.groupby("round", sort=True):
        yield vote_graph(nodes, zip(rows["agent_id"], rows["vote_target"]))


def first_mover_outcome(run_table: pd.DataFrame, mode: str = "round1") -> bool | None:
    """Did the seat-1 agent prevail? ``None`` when the run is undecided."""
    first = run_table.loc[run_table["seat"] == run_table["seat"].min(), "agent_id"].iloc[0]
    if mode == "round1":
        r1 = run_table[run_table["round"] == 1]
        if r1.empty or not r1["won"].any():
            return None
        return bool(r1.loc[r1["agent_id"] == first, "won"].any())
    if mode == "final":
        totals = run_table.groupby("agent_id")["points"].sum()
        top = totals[totals == totals.max()]
        if len(top) != 1:
            return None
        return top.index[0] == first
    raise ValueError(f"unknown first-mover mode {mode!r}")


def first_mover_win_rate(table: pd.DataFrame, mode: str = "round1") -> float | None:
    results = [first_mover_outcome(g, mode) for _, g in table.groupby("run_id", sort=True)]
    decided = [r for r in results if r is not None]
    return _ratio(sum(decided), len(decided))


def _mentions(text: str, ident: str) -> bool:
    pattern = rf"(?<![A-Za-z0-9_]){re.escape(ident)}(?![A-Za-z0-9_])"
    return bool(text) and re.search(pattern, text, flags=re.IGNORECASE) is not None


def annotate_mentions(table: pd.DataFrame) -> pd.DataFrame:
    """Fill ``peer_mentioned`` / ``winner_mentioned`` from vote justifications."""
    out = table.copy()
    winners = (
        table[table["won"] | table["tied"]].groupby(["run_id", "round"])["agent_id"].agg(list).to_dict()
    )
    peer, winner = [], []
    for run, rnd, target, text in zip(out["run_id"], out["round"], out["vote_target"], out["vote_justification"]):
        text = text or ""
        peer.append(_mentions(text, target))
        winner.append(any(_mentions(text, w) for w in winners.get((run, rnd), [])))
    out["peer_mentioned"] = pd.Series(peer, index=out.index, dtype=object)
    out["winner_mentioned"] = pd.Series(winner, index=out.index, dtype=object)
    return out


def mention_rates(table: pd.DataFrame, by: Sequence[str] = ("model_id", "condition")) -> pd.DataFrame:
    """Pooled peer- and winner-mention rates per group."""
    t = annotate_mentions(table)
    t["peer_mentioned"] = t["peer_mentioned"].astype(bool)
    t["winner_mentioned"] = t["winner_mentioned"].astype(bool)
    g = t.groupby(list(by), sort=True)
    return pd.DataFrame(
        {
            "pm": g["peer_mentioned"].mean(),
            "wm": g["winner_mentioned"].mean(),
            "n": g.size(),
        }
    ).reset_index()


def proposal_vote_consistency(
    table: pd.DataFrame,
    by: Sequence[str] = ("model_id", "condition"),
    rule_col: str = "rule_theme",
    vote_col: str = "vote_theme",
) -> pd.DataFrame:
    """VM (vote theme equals rule theme) and TC (theme changed) per group.

    Both rates share one denominator: rows whose two themes are known.
    """
    known = table[table[rule_col].isin(CODES) & table[vote_col].isin(CODES)]
    same = known[rule_col] == known[vote_col]
    frame = known.assign(_same=same)
    g = frame.groupby(list(by), sort=True)
    out = pd.DataFrame({"vm": g["_same"].mean(), "n": g.size()}).reset_index()
    out["tc"] = 1.0 - out["vm"]
    return out[[*by, "vm", "tc", "n"]]



def per_unit_metrics(table: pd.DataFrame, ri_mode: str = "supporter", fmw_mode: str = "round1") -> pd.DataFrame:
    """One row per (run, agent) with every interaction metric."""
    records = []
    for run_id, run in table.groupby("run_id", sort=True):
        graphs = list(_round_graphs(run))
        ed = [edge_density(g) for g in graphs]
        cc = [clustering_coefficient(g) for g in graphs]
        trace = bloc_trace(run)
        fm = first_mover_outcome(run, fmw_mode)
        first_seat = run["seat"].min()
        for agent_id, hist in run.groupby("agent_id", sort=False):
            hist = _sorted(hist)
            first = hist.iloc[0]
            is_first = int(first["seat"]) == first_seat
            records.append(
                {
                    "run_id": run_id,
                    "vignette_id": first["vignette_id"],
                    "condition": first["condition"],
                    "agent_id": agent_id,
                    "model_id": first["model_id"],
                    "seat": int(first["seat"]),
                    "svr": self_vote_rate(hist),
                    "avr": avg_votes_received(run, agent_id),
                    "wr": win_rate(hist),
                    "vv": vote_volatility(hist),
                    "vp": vote_persistence(hist),
                    "ri": reciprocity_index(run, agent_id, ri_mode),
                    "csr": coalition_switch_rate(trace[agent_id]),
                    "bs": bloc_stability(trace[agent_id]),
                    "ed": float(np.mean(ed)) if ed else None,
                    "cc": float(np.mean(cc)) if cc else None,
                    "fmw": (float(fm) if fm is not None else None) if is_first else None,
                }
            )
    df = pd.DataFrame.from_records(records)
    if not df.empty:
        df = df.sort_values(["run_id", "seat"], kind="stable").reset_index(drop=True)
        df[list(RATE_METRICS)] = df[list(RATE_METRICS)].astype(float)
    return df


@dataclass
class MetricReport:
    table: pd.DataFrame
    grouping: tuple[str, ...]
    metrics: tuple[str, ...] = field(default=RATE_METRICS)


def summarize(units: pd.DataFrame, by: Sequence[str] = ("model_id", "condition"), metrics: Sequence[str] = RATE_METRICS) -> MetricReport:
    """Mean and sample SD per metric per group; undefined values are skipped.

    Groups with a single defined value report SD 0 with ``<metric>_n`` = 1.
    """
    rows = []
    for key, grp in units.groupby(list(by), sort=True):
        key = key if isinstance(key, tuple) else (key,)
        row = dict(zip(by, key))
        row["n_units"] = len(grp)
        for m in metrics:
            vals = grp[m].dropna().to_numpy(dtype=float)
            n = len(vals)
            row[m] = float(vals.mean()) if n else math.nan
            row[f"{m}_sd"] = float(vals.std(ddof=1)) if n > 1 else (0.0 if n == 1 else math.nan)
            row[f"{m}_n"] = n
        rows.append(row)
    cols = [*by, "n_units"]
    for m in metrics:
        cols += [m, f"{m}_sd", f"{m}_n"]
    return MetricReport(pd.DataFrame(rows, columns=cols), tuple(by), tuple(metrics))
