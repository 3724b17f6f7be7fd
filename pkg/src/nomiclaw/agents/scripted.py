"""Deterministic and seeded agents for tests and dry runs."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Mapping

from nomiclaw.protocol import AgentError, Ballot, ConfigurationError, PromptContext, Proposal

POLICIES = (
    "always_self_vote",
    "vote_for_seat",
    "vote_previous_seat",
    "vote_previous_supporter",
    "uniform_random",
    "replay",
)


@dataclass
class ScriptedAgent:
    """Agent whose votes follow a fixed policy.

    ``policy_params`` per policy:

    - ``vote_for_seat``: ``seat`` (1-based, into the round's proposal order)
    - ``uniform_random``: ``seed``
    - ``replay``: ``fixture``, a mapping ``round -> {rule, reasoning, vote,
      justification}``; a ``fail`` count makes the first attempts raise.
    """

    agent_id: str
    model_id: str
    policy: str = "always_self_vote"
    policy_params: Mapping[str, Any] = field(default_factory=dict)
    memory: list[dict[str, str]] = field(default_factory=list, init=False)
    _rng: random.Random = field(init=False, repr=False)
    _failures: dict[tuple[int, str], int] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.policy not in POLICIES:
            raise ConfigurationError(f"unknown policy {self.policy!r}")
        if self.policy == "replay" and "fixture" not in self.policy_params:
            raise ConfigurationError("replay policy needs a fixture")
        self.reset()

    def reset(self) -> None:
        self.memory = []
        self._failures = {}
        seed = self.policy_params.get("seed", 0)
        self._rng = random.Random(f"{seed}:{self.agent_id}")

    def _script(self, rnd: int) -> Mapping[str, Any]:
        fixture = self.policy_params.get("fixture", {})
        return fixture.get(rnd, fixture.get(str(rnd), {}))

    def _maybe_fail(self, rnd: int, phase: str) -> None:
        want = int(self._script(rnd).get(f"fail_{phase}", 0))
        seen = self._failures.get((rnd, phase), 0)
        if seen < want:
            self._failures[(rnd, phase)] = seen + 1
            raise AgentError(f"{self.agent_id}: scripted failure {seen + 1}/{want}")

    def propose(self, ctx: PromptContext) -> Proposal:
        self._maybe_fail(ctx.round, "propose")
        script = self._script(ctx.round)
        rule = script.get("rule") or f"Rule {ctx.round} from {self.agent_id} on {ctx.vignette.id}"
        reasoning = script.get("reasoning") or f"{self.agent_id} argues this rule prevents harm."
        self.memory.append({"role": "user", "content": f"[{ctx.vignette.id}] propose round {ctx.round}"})
        self.memory.append({"role": "assistant", "content": rule})
        return Proposal(ctx.round, self.agent_id, rule, reasoning)

    def _target(self, ctx: PromptContext) -> str:
        targets = list(ctx.valid_targets)
        if self.policy == "always_self_vote":
            return self.agent_id
        if self.policy == "vote_for_seat":
            seat = int(self.policy_params.get("seat", 1))
            return targets[(seat - 1) % len(targets)]
        if self.policy == "vote_previous_seat":
            return targets[(targets.index(self.agent_id) - 1) % len(targets)]
        if self.policy == "vote_previous_supporter":
            if ctx.transcript:
                last = ctx.transcript[-1]
                supporters = [
                    b.voter for b in last.ballots if b.target == self.agent_id and b.voter != self.agent_id
                ]
                for s in supporters:
                    if s in targets:
                        return s
            return self.agent_id
        if self.policy == "uniform_random":
            return self._rng.choice(targets)
        return self._script(ctx.round)["vote"]

    def vote(self, ctx: PromptContext) -> Ballot:
        self._maybe_fail(ctx.round, "vote")
        target = self._target(ctx)
        default = f"I support {target}'s rule." if target != self.agent_id else "My own rule is best."
        justification = self._script(ctx.round).get("justification", default)
        self.memory.append({"role": "user", "content": f"[{ctx.vignette.id}] vote round {ctx.round}"})
        self.memory.append({"role": "assistant", "content": target})
        return Ballot(ctx.round, self.agent_id, target, justification)


def scripted_agent(agent_id: str, model_id: str, policy: str, **policy_params) -> ScriptedAgent:
    return ScriptedAgent(agent_id, model_id, policy, policy_params)
