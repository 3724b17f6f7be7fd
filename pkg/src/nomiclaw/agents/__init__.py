from nomiclaw.agents.backend import BackendClient, BackendError, RateLimiter, backend_complete
from nomiclaw.agents.llm import BackendAgent
from nomiclaw.agents.parsing import ParseFailure, parse_ballot, parse_proposal
from nomiclaw.agents.prompts import TemplateSet, render_prompt
from nomiclaw.agents.scripted import ScriptedAgent, scripted_agent

__all__ = [
    "BackendAgent",
    "BackendClient",
    "BackendError",
    "ParseFailure",
    "RateLimiter",
    "ScriptedAgent",
    "TemplateSet",
    "backend_complete",
    "parse_ballot",
    "parse_proposal",
    "render_prompt",
    "scripted_agent",
]
