"""Turn raw model replies into proposals and ballots.

Replies are expected to hold one JSON object. When that fails we fall back to
labelled prose sections such as ``RULE: ...`` / ``REASONING: ...``.
"""

from __future__ import annotations

import json
import re
from typing import Any, Sequence

from nomiclaw.protocol import AgentError, Ballot, Proposal


class ParseFailure(AgentError):
    """The reply could not be turned into a proposal or ballot."""


_LABEL = r"(?:^|\n)[ \t>*#_-]*{name}[ \t*_]*[:\-][ \t*_]*"
_RULE_KEYS = ("rule", "proposed_rule", "proposal", "law")
_REASON_KEYS = ("reasoning", "justification", "rationale", "reason")
_TARGET_KEYS = ("vote_target", "vote", "target", "vote_for")
_JUST_KEYS = ("justification", "reasoning", "rationale", "reason")


def _json_objects(text: str):
    decoder = json.JSONDecoder()
    i = text.find("{")
    while i != -1:
        try:
            obj, _ = decoder.raw_decode(text, i)
        except json.JSONDecodeError:
            pass
        else:
            if isinstance(obj, dict):
                yield obj
        i = text.find("{", i + 1)


def _pick(obj: dict[str, Any], keys: Sequence[str]) -> str:
    lowered = {str(k).lower(): v for k, v in obj.items()}
    for k in keys:
        v = lowered.get(k)
        if isinstance(v, (str, int, float)) and str(v).strip():
            return str(v).strip()
    return ""


def _sections(text: str, labels: dict[str, tuple[str, ...]]) -> dict[str, str]:
    """Split prose on ``LABEL:`` markers; each section runs to the next marker."""
    marks = []
    for field, names in labels.items():
        for name in names:
            pattern = _LABEL.format(name=re.escape(name))
            for m in re.finditer(pattern, text, flags=re.IGNORECASE):
                marks.append((m.start(), m.end(), field))
    marks.sort()
    out: dict[str, str] = {}
    for i, (_, end, field) in enumerate(marks):
        stop = marks[i + 1][0] if i + 1 < len(marks) else len(text)
        if field not in out:
            out[field] = text[end:stop].strip().strip("*").strip()
    return out


def parse_proposal(raw: str, round_no: int = 0, proposer: str = "") -> Proposal:
    if not raw or not raw.strip():
        raise ParseFailure("empty reply")
    for obj in _json_objects(raw):
        rule, reasoning = _pick(obj, _RULE_KEYS), _pick(obj, _REASON_KEYS)
        if rule and reasoning:
            return Proposal(round_no, proposer, rule, reasoning)
    found = _sections(raw, {"rule": ("rule", "proposed rule"), "reasoning": ("reasoning", "justification")})
    rule, reasoning = found.get("rule", ""), found.get("reasoning", "")
    if rule and reasoning:
        return Proposal(round_no, proposer, rule, reasoning)
    raise ParseFailure("no rule/reasoning found in reply")


def _boundary(ident: str) -> re.Pattern[str]:
    return re.compile(rf"(?<![A-Za-z0-9_]){re.escape(ident)}(?![A-Za-z0-9_])", re.IGNORECASE)


def resolve_target(text: str, valid_targets: Sequence[str]) -> str:
    """Exact identifier first, then a unique case-insensitive mention."""
    cleaned = text.strip().strip("\"'`*.").strip()
    if cleaned in valid_targets:
        return cleaned
    hits = [t for t in valid_targets if _boundary(t).search(text)]
    if len(hits) == 1:
        return hits[0]
    if not hits:
        raise ParseFailure(f"vote names no valid target: {text[:80]!r}")
    raise ParseFailure(f"vote names several targets {hits}")


def parse_ballot(raw: str, valid_targets: Sequence[str], round_no: int = 0, voter: str = "") -> Ballot:
    if not valid_targets:
        raise ValueError("valid_targets must be non-empty")
    if not raw or not raw.strip():
        raise ParseFailure("empty reply")
    for obj in _json_objects(raw):
        target = _pick(obj, _TARGET_KEYS)
        if target:
            return Ballot(round_no, voter, resolve_target(target, valid_targets), _pick(obj, _JUST_KEYS))
    found = _sections(raw, {"vote": ("vote", "vote_target", "vote for"), "justification": ("justification", "reasoning")})
    if found.get("vote"):
        vote_line = found["vote"].splitlines()[0]
        return Ballot(round_no, voter, resolve_target(vote_line, valid_targets), found.get("justification", ""))
    return Ballot(round_no, voter, resolve_target(raw, valid_targets), raw.strip())
