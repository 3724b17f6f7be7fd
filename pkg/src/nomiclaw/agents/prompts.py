"""Prompt templates and rendering for the propose and vote phases."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from string import Template

from nomiclaw.protocol import ConfigurationError, OutcomeKind, PromptContext, RoundRecord

EMPTY_HISTORY = "(no previous rounds)"
NO_PROPOSALS = "(none yet)"
REQUIRED = ("system", "propose", "vote")


@dataclass(frozen=True)
class TemplateSet:
    templates: dict[str, str]

    @classmethod
    def default(cls) -> "TemplateSet":
        root = resources.files("nomiclaw") / "templates"
        return cls({name: (root / f"{name}.txt").read_text(encoding="utf-8") for name in REQUIRED})

    @classmethod
    def from_dir(cls, path: str | Path) -> "TemplateSet":
        path = Path(path)
        found = {}
        for name in REQUIRED:
            f = path / f"{name}.txt"
            if f.exists():
                found[name] = f.read_text(encoding="utf-8")
        return cls(found)

    def get(self, name: str) -> Template:
        try:
            return Template(self.templates[name])
        except KeyError:
            raise ConfigurationError(f"missing prompt template {name!r}") from None


def _format_round(rec: RoundRecord) -> str:
    lines = [f"Round {rec.round}:"]
    for p in rec.proposals:
        lines.append(f"  {p.proposer} proposed: {p.rule_text}")
        lines.append(f"    reasoning: {p.reasoning_text}")
    for b in rec.ballots:
        lines.append(f"  {b.voter} voted for {b.target}: {b.justification_text}")
    out = rec.outcome
    if rec.excluded:
        lines.append("  Outcome: round voided")
    elif out.kind is OutcomeKind.WINNER:
        lines.append(f"  Outcome: {out.winner} won")
    else:
        lines.append(f"  Outcome: tie between {', '.join(sorted(out.winners))}")
    return "\n".join(lines)


def format_history(transcript) -> str:
    if not transcript:
        return EMPTY_HISTORY
    return "\n".join(_format_round(r) for r in transcript)


def format_proposals(proposals) -> str:
    if not proposals:
        return NO_PROPOSALS
    return "\n".join(
        f"- {p.proposer}: {p.rule_text}\n  reasoning: {p.reasoning_text}" for p in proposals
    )


def render_prompt(
    ctx: PromptContext,
    template_set: TemplateSet | None = None,
    *,
    points_win: int = 10,
    points_tie: int = 5,
) -> tuple[str, str]:
    """Return the (system, user) message pair for ``ctx``."""
    ts = template_set or TemplateSet.default()
    if ctx.phase not in ("propose", "vote"):
        raise ConfigurationError(f"unknown phase {ctx.phase!r}")
    system = ts.get("system").substitute(
        self_id=ctx.self_id,
        points_win=points_win,
        points_tie=points_tie,
        vignette_title=ctx.vignette.title,
        vignette_body=ctx.vignette.body,
    )
    fields = dict(
        round=ctx.round,
        scores="\n".join(f"- {a}: {s}" for a, s in ctx.scores.items()),
        history=format_history(ctx.transcript),
        current_proposals=format_proposals(ctx.current_proposals),
    )
    if ctx.phase == "vote":
        fields["targets"] = "\n".join(f"- {t}" for t in ctx.valid_targets)
    user = ts.get(ctx.phase).substitute(**fields)
    return system, user
