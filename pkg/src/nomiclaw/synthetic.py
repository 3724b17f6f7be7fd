"""Replay fixtures that drive the real engine to a prescribed set of outcomes."""

from __future__ import annotations

import random
from typing import Mapping, Sequence

from nomiclaw.agents.scripted import ScriptedAgent
from nomiclaw.protocol import Condition, GameConfig, RunLog, Vignette, run_game
from nomiclaw.vignettes import BUILTIN

MODEL_POOL = (
    "deepseek-r1",
    "llama2",
    "phi4-reasoning",
    "granite3.3",
    "phi4-mini-reasoning",
    "phi4",
    "gemma2",
    "qwen3",
    "gemma3",
    "llama3",
)

# heterogeneous win counts over 120 rounds; the other 30 rounds were ties
HETERO_WIN_COUNTS: Mapping[str, int] = {
    "deepseek-r1": 21,
    "llama2": 16,
    "phi4-reasoning": 13,
    "granite3.3": 12,
    "phi4-mini-reasoning": 12,
    "phi4": 8,
    "gemma2": 4,
    "qwen3": 2,
    "gemma3": 1,
    "llama3": 1,
}

_THEMES = (
    "ensures fair access and avoids unjust bias",
    "complies with existing regulation and statute",
    "requires independent oversight and audit",
    "must be explainable with full disclosure",
    "requires informed consent and opt-in",
    "prevents harm and reduces future risk",
    "protects the right to privacy and liberty",
    "reduces cost and improves efficiency",
    "assigns clear liability and responsibility",
    "benefits society and protects future generations",
)


def _ballots_for(outcome: str | None, seats: Sequence[str], rng: random.Random) -> dict[str, str]:
    """Voter -> target so that ``outcome`` wins outright, or a tie if None."""
    n = len(seats)
    if outcome is None:
        if rng.random() < 0.5 or n < 6:
            return {a: a for a in seats}
        a, b = rng.sample(list(seats), 2)
        rest = [s for s in seats if s not in (a, b)]
        votes = {a: a, b: b, rest[0]: a, rest[1]: b}
        # the others give at most one vote to each non-leader
        for k in range(2, len(rest)):
            votes[rest[k]] = rest[(k + 1) % len(rest)]
        return votes
    w = outcome
    ring = [s for s in seats if s != w]
    helper = rng.choice(ring)
    votes = {w: w, helper: w}
    for k, v in enumerate(ring):
        if v != helper:
            votes[v] = ring[(k + 1) % len(ring)]
    return votes


def outcome_fixture_logs(
    win_counts: Mapping[str, int] = HETERO_WIN_COUNTS,
    undecided: int = 30,
    vignettes: Sequence[Vignette] = BUILTIN,
    runs_per_vignette: int = 6,
    num_rounds: int = 5,
    seed: int = 0,
) -> list[RunLog]:
    """Heterogeneous logs whose round winners follow ``win_counts`` exactly.

    Rounds are assigned to winners (or ties) in a seeded shuffle, then each
    run is played by replay agents so every log goes through the engine.
    """
    models = list(win_counts)
    slots = len(vignettes) * runs_per_vignette * num_rounds
    plan: list[str | None] = [m for m in models for _ in range(win_counts[m])] + [None] * undecided
    if len(plan) != slots:
        raise ValueError(f"{len(plan)} outcomes for {slots} rounds")
    rng = random.Random(seed)
    rng.shuffle(plan)
    logs = []
    slot = 0
    for vignette in vignettes:
        for run in range(1, runs_per_vignette + 1):
            seats = models[:]
            rng.shuffle(seats)
            scripts: dict[str, dict[int, dict]] = {m: {} for m in models}
            for rnd in range(1, num_rounds + 1):
                votes = _ballots_for(plan[slot], seats, rng)
                slot += 1
                for m in models:
                    t = votes[m]
                    theme = _THEMES[rng.randrange(len(_THEMES))]
                    scripts[m][rnd] = {
                        "rule": f"{m} rule {rnd}: a measure that {theme}.",
                        "reasoning": f"This rule {_THEMES[rng.randrange(len(_THEMES))]}.",
                        "vote": t,
                        "justification": (
                            f"I back {t} because the proposal {theme}."
                            if rng.random() < 0.6
                            else f"This proposal {theme}."
                        ),
                    }
            agents = [ScriptedAgent(m, m, "replay", {"fixture": scripts[m]}) for m in seats]
            cfg = GameConfig(
                num_agents=len(models),
                seat_order=tuple(seats),
                condition=Condition.HETEROGENEOUS,
                num_rounds=num_rounds,
                rng_seed=seed,
            )
            logs.append(run_game(cfg, vignette, agents, run_index=run))
    return logs


def random_logs(
    n_runs: int,
    seed: int = 0,
    max_agents: int = 6,
    num_rounds: int = 5,
    fail_prob: float = 0.0,
) -> list[RunLog]:
    """Small seeded games with uniformly random voters, for property checks."""
    rng = random.Random(seed)
    logs = []
    vignette = BUILTIN[0]
    for i in range(n_runs):
        n = rng.randint(2, max_agents)
        ids = [f"Agent_{k}" for k in range(1, n + 1)]
        rng.shuffle(ids)
        fixtures = {}
        for a in ids:
            fixtures[a] = {
                r: {"fail_vote": 3} for r in range(1, num_rounds + 1) if rng.random() < fail_prob
            }
        agents = [
            _RandomReplay(a, f"model-{a}", rng.randrange(2**31), fixtures[a]) for a in ids
        ]
        cfg = GameConfig(num_agents=n, seat_order=tuple(ids), num_rounds=num_rounds, rng_seed=i)
        logs.append(run_game(cfg, vignette, agents, run_index=i + 1, run_id=f"hetero_v1_run{i + 1:02d}"))
    return logs


class _RandomReplay(ScriptedAgent):
    """uniform_random voting with optional scripted failures and varied prose."""

    def __init__(self, agent_id: str, model_id: str, seed: int, failures: dict) -> None:
        super().__init__(agent_id, model_id, "uniform_random", {"seed": seed, "fixture": failures})

    def vote(self, ctx):
        ballot = super().vote(ctx)
        r = self._rng.random()
        if r < 0.3:
            text = f"{ballot.target} has the best rule."
        elif r < 0.6 and ctx.transcript and ctx.transcript[-1].outcome.winners:
            prev = sorted(ctx.transcript[-1].outcome.winners)[0]
            text = f"Following {prev}, I pick this one."
        else:
            text = "This proposal is the most balanced."
        return type(ballot)(ballot.round, ballot.voter, ballot.target, text)
