from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from nomiclaw.agents.backend import BackendClient
from nomiclaw.agents.llm import BackendAgent
from nomiclaw.agents.prompts import TemplateSet
from nomiclaw.agents.scripted import ScriptedAgent
from nomiclaw.protocol import ConfigurationError

KINDS = ("scripted", "stochastic", "backend")


@dataclass(frozen=True)
class AgentBinding:
    agent_id: str
    model_id: str
    kind: str = "scripted"
    policy_params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown agent kind {self.kind!r}")


def build_agent(
    binding: AgentBinding,
    client: BackendClient | None = None,
    *,
    backend_params: Mapping[str, Any] | None = None,
    templates: TemplateSet | None = None,
    points: tuple[int, int] = (10, 5),
):
    params = dict(binding.policy_params)
    if binding.kind == "backend":
        if client is None:
            raise ConfigurationError(f"{binding.agent_id}: backend agent without a client")
        return BackendAgent(
            binding.agent_id,
            binding.model_id,
            client,
            params=dict(backend_params or {}),
            templates=templates or TemplateSet.default(),
            points_win=points[0],
            points_tie=points[1],
        )
    default = "uniform_random" if binding.kind == "stochastic" else "always_self_vote"
    policy = params.pop("policy", default)
    return ScriptedAgent(binding.agent_id, binding.model_id, policy, params)
