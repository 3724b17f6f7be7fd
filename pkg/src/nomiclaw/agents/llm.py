"""Agent backed by a chat-completion model server."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from nomiclaw.agents.backend import BackendClient
from nomiclaw.agents.parsing import parse_ballot, parse_proposal
from nomiclaw.agents.prompts import TemplateSet, render_prompt
from nomiclaw.protocol import Ballot, PromptContext, Proposal


@dataclass
class BackendAgent:
    """Keeps a conversation buffer and sends it along with every prompt.

    A failed attempt (transport or parse) is not written to memory, so a
    retry sees the same conversation.
    """

    agent_id: str
    model_id: str
    client: BackendClient
    params: Mapping[str, Any] = field(default_factory=dict)
    templates: TemplateSet = field(default_factory=TemplateSet.default)
    points_win: int = 10
    points_tie: int = 5
    memory: list[dict[str, str]] = field(default_factory=list, init=False)

    def reset(self) -> None:
        self.memory = []

    def _ask(self, ctx: PromptContext) -> tuple[str, list[dict[str, str]]]:
        system, user = render_prompt(
            ctx, self.templates, points_win=self.points_win, points_tie=self.points_tie
        )
        turn = [{"role": "user", "content": user}]
        messages = [{"role": "system", "content": system}, *self.memory, *turn]
        raw = self.client.complete(self.model_id, messages, self.params)
        return raw, turn

    def propose(self, ctx: PromptContext) -> Proposal:
        raw, turn = self._ask(ctx)
        proposal = parse_proposal(raw, ctx.round, self.agent_id)
        self.memory += [*turn, {"role": "assistant", "content": raw}]
        return proposal

    def vote(self, ctx: PromptContext) -> Ballot:
        raw, turn = self._ask(ctx)
        ballot = parse_ballot(raw, ctx.valid_targets, ctx.round, self.agent_id)
        self.memory += [*turn, {"role": "assistant", "content": raw}]
        return ballot
