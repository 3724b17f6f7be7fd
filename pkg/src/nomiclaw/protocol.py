"""Turn-based propose / justify / vote game engine.

A game is a fixed number of rounds over one vignette. In every round each
agent, in seat order, proposes a rule (seeing the proposals made earlier in
the same round), then every agent votes for exactly one proposal. A strict
plurality earns the proposer ``points_win``; a shared maximum earns
``points_tie`` for every proposer in the maximal set.
"""

from __future__ import annotations

import enum
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol, Sequence

logger = logging.getLogger(__name__)

RETRY_BUDGET = 3


class ConfigurationError(ValueError):
    """Invalid game configuration or roster."""


class ProtocolError(ValueError):
    """Ballots or outcomes that break the voting rules."""


class AgentError(RuntimeError):
    """An agent could not produce a usable proposal or ballot."""


class Condition(str, enum.Enum):
    HOMOGENEOUS = "homogeneous"
    HETEROGENEOUS = "heterogeneous"

    @property
    def short(self) -> str:
        return "homo" if self is Condition.HOMOGENEOUS else "hetero"

    @classmethod
    def parse(cls, value: "str | Condition") -> "Condition":
        if isinstance(value, Condition):
            return value
        v = str(value).strip().lower()
        for c in cls:
            if v in (c.value, c.short):
                return c
        raise ConfigurationError(f"unknown condition {value!r}")


class OutcomeKind(str, enum.Enum):
    WINNER = "winner"
    TIE = "tie"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class GameConfig:
    num_agents: int
    seat_order: tuple[str, ...]
    condition: Condition = Condition.HETEROGENEOUS
    num_rounds: int = 5
    points_win: int = 10
    points_tie: int = 5
    rng_seed: int = 0
    backend_params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "seat_order", tuple(self.seat_order))
        object.__setattr__(self, "condition", Condition.parse(self.condition))
        if self.num_agents < 1:
            raise ConfigurationError("num_agents must be positive")
        if self.num_rounds < 1:
            raise ConfigurationError("num_rounds must be >= 1")
        if not self.points_win > self.points_tie > 0:
            raise ConfigurationError("require points_win > points_tie > 0")
        if len(set(self.seat_order)) != len(self.seat_order):
            raise ConfigurationError("seat_order contains duplicates")
        if len(self.seat_order) != self.num_agents:
            raise ConfigurationError(
                f"seat_order has {len(self.seat_order)} agents, expected {self.num_agents}"
            )


@dataclass(frozen=True)
class Vignette:
    id: str
    title: str
    body: str
    legal_domain: str = ""

    def __post_init__(self) -> None:
        if not self.body.strip():
            raise ConfigurationError(f"vignette {self.id!r} has an empty body")


@dataclass(frozen=True)
class Proposal:
    round: int
    proposer: str
    rule_text: str
    reasoning_text: str
    parse_ok: bool = True

    def __post_init__(self) -> None:
        if self.parse_ok and not (self.rule_text.strip() and self.reasoning_text.strip()):
            raise ValueError("parsed proposal needs non-empty rule and reasoning")


@dataclass(frozen=True)
class Ballot:
    round: int
    voter: str
    target: str
    justification_text: str = ""


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    winners: frozenset[str]
    vote_counts: Mapping[str, int]

    @property
    def winner(self) -> str | None:
        if self.kind is OutcomeKind.WINNER:
            return next(iter(self.winners))
        return None


@dataclass(frozen=True)
class RosterEntry:
    agent_id: str
    model_id: str
    seat: int


@dataclass(frozen=True)
class RoundRecord:
    round: int
    proposals: tuple[Proposal, ...]
    ballots: tuple[Ballot, ...]
    outcome: Outcome
    point_deltas: Mapping[str, int]
    excluded: bool = False


@dataclass(frozen=True)
class RunLog:
    run_id: str
    run_index: int
    vignette_id: str
    config: GameConfig
    roster: tuple[RosterEntry, ...]
    rounds: tuple[RoundRecord, ...]
    final_scores: Mapping[str, int]

    @property
    def condition(self) -> Condition:
        return self.config.condition

    def model_of(self, agent_id: str) -> str:
        for entry in self.roster:
            if entry.agent_id == agent_id:
                return entry.model_id
        raise KeyError(agent_id)


def make_run_id(condition: Condition | str, vignette_id: str, run_index: int) -> str:
    return f"{Condition.parse(condition).short}_{vignette_id}_run{run_index:02d}"


class Agent(Protocol):
    """What the engine needs from a participant.

    ``propose`` and ``vote`` raise :class:`AgentError` on failure. They must
    not mutate the context they are handed.
    """

    agent_id: str
    model_id: str

    def reset(self) -> None: ...

    def propose(self, ctx: "PromptContext") -> Proposal: ...

    def vote(self, ctx: "PromptContext") -> Ballot: ...


@dataclass(frozen=True)
class PromptContext:
    """Everything an agent may see when it acts."""

    vignette: Vignette
    transcript: tuple[RoundRecord, ...]
    scores: Mapping[str, int]
    phase: str  # "propose" | "vote"
    self_id: str
    round: int
    current_proposals: tuple[Proposal, ...] = ()
    valid_targets: tuple[str, ...] = ()


def tally(ballots: Sequence[Ballot], roster: Sequence[str]) -> Outcome:
    roster_set = set(roster)
    seen: set[str] = set()
    for b in ballots:
        if b.voter in seen:
            raise ProtocolError(f"duplicate ballot from {b.voter}")
        if b.voter not in roster_set:
            raise ProtocolError(f"ballot from unknown voter {b.voter}")
        if b.target not in roster_set:
            raise ProtocolError(f"ballot for unknown target {b.target}")
        seen.add(b.voter)
    if seen != roster_set:
        missing = sorted(roster_set - seen)
        raise ProtocolError(f"missing ballots from {missing}")
    counts = Counter(b.target for b in ballots)
    vote_counts = {agent: counts.get(agent, 0) for agent in roster}
    top = max(vote_counts.values())
    leaders = frozenset(a for a, c in vote_counts.items() if c == top)
    kind = OutcomeKind.WINNER if len(leaders) == 1 else OutcomeKind.TIE
    return Outcome(kind, leaders, vote_counts)


def award_points(outcome: Outcome, config: GameConfig) -> dict[str, int]:
    deltas = {agent: 0 for agent in config.seat_order}
    if outcome.kind is OutcomeKind.WINNER:
        deltas[outcome.winner] = config.points_win
    elif outcome.kind is OutcomeKind.TIE:
        for agent in outcome.winners:
            deltas[agent] = config.points_tie
    return deltas


def check_score_conservation(record: RoundRecord, config: GameConfig) -> None:
    total = sum(record.point_deltas.values())
    if record.excluded:
        if total != 0:
            raise ProtocolError(f"excluded round {record.round} carries points")
        return
    if record.outcome.kind is OutcomeKind.WINNER:
        ok = total == config.points_win
    else:
        k = len(record.outcome.winners)
        ok = k >= 2 and total == k * config.points_tie
    if not ok:
        raise ProtocolError(f"round {record.round}: point total {total} breaks conservation")


def validate_run_log(log: RunLog) -> None:
    """Raise ProtocolError if the log is internally inconsistent."""
    cfg = log.config
    if len(log.rounds) != cfg.num_rounds:
        raise ProtocolError(f"{log.run_id}: {len(log.rounds)} rounds, expected {cfg.num_rounds}")
    totals = {a: 0 for a in cfg.seat_order}
    for rec in log.rounds:
        check_score_conservation(rec, cfg)
        if not rec.excluded:
            again = tally(rec.ballots, cfg.seat_order)
            if again.kind != rec.outcome.kind or again.winners != rec.outcome.winners:
                raise ProtocolError(f"{log.run_id}: round {rec.round} outcome does not re-tally")
        for a, d in rec.point_deltas.items():
            totals[a] = totals.get(a, 0) + d
    if dict(totals) != dict(log.final_scores):
        raise ProtocolError(f"{log.run_id}: final scores differ from summed deltas")


def _check_roster(config: GameConfig, agents: Sequence[Agent]) -> None:
    if len(agents) != config.num_agents:
        raise ConfigurationError(f"roster has {len(agents)} agents, expected {config.num_agents}")
    ids = [a.agent_id for a in agents]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("agent ids must be unique")
    if set(ids) != set(config.seat_order):
        raise ConfigurationError("seat_order does not match roster")
    models = [a.model_id for a in agents]
    if config.condition is Condition.HOMOGENEOUS and len(set(models)) != 1:
        raise ConfigurationError("homogeneous game needs a single model")
    if config.condition is Condition.HETEROGENEOUS and len(set(models)) != len(models):
        raise ConfigurationError("heterogeneous game needs distinct models")


@dataclass
class GameState:
    config: GameConfig
    vignette: Vignette
    agents: dict[str, Agent]
    round: int = 1
    transcript: list[RoundRecord] = field(default_factory=list)
    scores: dict[str, int] = field(default_factory=dict)

    @property
    def finished(self) -> bool:
        return self.round > self.config.num_rounds

    def roster(self) -> tuple[RosterEntry, ...]:
        return tuple(
            RosterEntry(agent_id, self.agents[agent_id].model_id, seat)
            for seat, agent_id in enumerate(self.config.seat_order, start=1)
        )


def new_game(config: GameConfig, vignette: Vignette, agents: Sequence[Agent]) -> GameState:
    _check_roster(config, agents)
    by_id = {a.agent_id: a for a in agents}
    for a in agents:
        a.reset()
    return GameState(
        config=config,
        vignette=vignette,
        agents=by_id,
        scores={a: 0 for a in config.seat_order},
    )


def _with_retries(action, what: str):
    last: Exception | None = None
    for attempt in range(1, RETRY_BUDGET + 1):
        try:
            return action()
        except AgentError as exc:
            last = exc
            logger.debug("%s failed (attempt %d/%d): %s", what, attempt, RETRY_BUDGET, exc)
    raise AgentError(f"{what}: retry budget exhausted ({last})")


def _excluded(state: GameState, proposals, ballots) -> RoundRecord:
    counts = Counter(b.target for b in ballots)
    return RoundRecord(
        round=state.round,
        proposals=tuple(proposals),
        ballots=tuple(ballots),
        outcome=Outcome(OutcomeKind.UNDECIDED, frozenset(), dict(counts)),
        point_deltas={a: 0 for a in state.config.seat_order},
        excluded=True,
    )


def run_round(state: GameState) -> RoundRecord:
    if state.finished:
        raise ProtocolError("game already finished")
    cfg = state.config
    transcript = tuple(state.transcript)
    scores = dict(state.scores)
    proposals: list[Proposal] = []
    ballots: list[Ballot] = []
    record: RoundRecord | None = None

    for agent_id in cfg.seat_order:
        ctx = PromptContext(
            vignette=state.vignette,
            transcript=transcript,
            scores=scores,
            phase="propose",
            self_id=agent_id,
            round=state.round,
            current_proposals=tuple(proposals),
        )
        agent = state.agents[agent_id]
        try:
            proposal = _with_retries(lambda: agent.propose(ctx), f"{agent_id} propose r{state.round}")
        except AgentError as exc:
            logger.warning("round %d excluded: %s", state.round, exc)
            record = _excluded(state, proposals, ballots)
            break
        proposals.append(proposal)

    if record is None:
        targets = tuple(p.proposer for p in proposals)
        for agent_id in cfg.seat_order:
            ctx = PromptContext(
                vignette=state.vignette,
                transcript=transcript,
                scores=scores,
                phase="vote",
                self_id=agent_id,
                round=state.round,
                current_proposals=tuple(proposals),
                valid_targets=targets,
            )
            agent = state.agents[agent_id]

            def cast(agent=agent, ctx=ctx):
                ballot = agent.vote(ctx)
                if ballot.target not in targets or ballot.voter != ctx.self_id:
                    raise AgentError(f"invalid ballot {ballot.voter}->{ballot.target}")
                return ballot

            try:
                ballots.append(_with_retries(cast, f"{agent_id} vote r{state.round}"))
            except AgentError as exc:
                logger.warning("round %d excluded: %s", state.round, exc)
                record = _excluded(state, proposals, ballots)
                break

    if record is None:
        outcome = tally(ballots, cfg.seat_order)
        record = RoundRecord(
            round=state.round,
            proposals=tuple(proposals),
            ballots=tuple(ballots),
            outcome=outcome,
            point_deltas=award_points(outcome, cfg),
        )
    for a, d in record.point_deltas.items():
        state.scores[a] += d
    state.transcript.append(record)
    state.round += 1
    return record


def run_game(
    config: GameConfig,
    vignette: Vignette,
    agents: Sequence[Agent],
    *,
    run_index: int = 1,
    run_id: str | None = None,
) -> RunLog:
    state = new_game(config, vignette, agents)
    while not state.finished:
        run_round(state)
    return RunLog(
        run_id=run_id or make_run_id(config.condition, vignette.id, run_index),
        run_index=run_index,
        vignette_id=vignette.id,
        config=config,
        roster=state.roster(),
        rounds=tuple(state.transcript),
        final_scores=dict(state.scores),
    )
