"""Closed-set jurisprudential theme coding of rule, reasoning and vote texts."""

from __future__ import annotations

import json
import logging
import math
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from string import Template
from typing import Iterable, Mapping, Protocol, Sequence

import pandas as pd

from nomiclaw.agents.backend import BackendClient, RateLimiter
from nomiclaw.protocol import AgentError
from nomiclaw.stats.agreement import UndefinedKappa, cohens_kappa, theme_persistence_or

logger = logging.getLogger(__name__)

UNKNOWN = "UNKNOWN"
STAGES = ("rule", "reasoning", "vote")
STAGE_TEXT = {"rule": "rule_text", "reasoning": "reasoning_text", "vote": "vote_justification"}
MIN_CHARS = 10
KAPPA_BAR = 0.7
ROW_KEY = ("run_id", "round", "agent_id")


@dataclass(frozen=True)
class Theme:
    code: str
    name: str
    grounding: str
    description: str
    cues: tuple[str, ...]


CODEBOOK: tuple[Theme, ...] = (
    Theme("JUST", "Fairness / Justice", "Natural law; Rawlsian theory; human dignity traditions",
          "Appeals to equity, non-discrimination, or procedural justice.",
          ("fair", "equit", "justice", "unjust", "discriminat", "bias", "equal")),
    Theme("LEG", "Legality / Rule of Law", "Legal positivism; constitutionalism",
          "Legal validity, codified norms, procedural legitimacy.",
          ("statute", "regulat", "comply", "complian", "legislat", "lawful", "legal", "legitima")),
    Theme("ACC", "Accountability", "Legal realism; institutional rule of law",
          "Traceability, institutional responsibility, enforcement.",
          ("accountab", "oversight", "audit", "enforce", "traceab")),
    Theme("TRAN", "Transparency", "Legal process theory; democratic legal theory",
          "Access to reasoning, interpretability, due process.",
          ("transparen", "explainab", "explain", "disclos", "interpretab", "opaque", "due process")),
    Theme("CONS", "Consent / Autonomy", "Liberalism; social contract theory",
          "Voluntary agreement, informed choice, personal autonomy.",
          ("consent", "opt-in", "opt in", "autonom", "voluntar", "informed choice")),
    Theme("HARM", "Harm / Risk", "Utilitarianism; tort law; precautionary principle",
          "Prevention of physical, social, or systemic harm.",
          ("harm", "risk", "safety", "injur", "danger", "hazard")),
    Theme("RGHT", "Rights-based Reasoning", "Natural rights; human rights law",
          "Inherent dignity, privacy, or liberty.",
          ("right", "privacy", "liberty", "freedom", "dignity")),
    Theme("UTIL", "Utility / Welfare", "Consequentialism; economic analysis of law",
          "Maximizing benefit or efficiency.",
          ("cost", "efficien", "welfare", "utility", "greatest good")),
    Theme("RESP", "Responsibility / Liability", "Civil and criminal law",
          "Assigns legal or moral burden.",
          ("responsib", "liab", "burden", "fault")),
    Theme("SOLI", "Solidarity / Common Good", "Communitarianism",
          "Collective welfare, public interest, environmental justice.",
          ("society", "public interest", "common good", "communit", "future generations", "collective")),
)
CODES: tuple[str, ...] = tuple(t.code for t in CODEBOOK)


def first_token_code(reply: str, codes: Sequence[str] = CODES) -> str:
    """Uppercased first whitespace token, punctuation stripped, if it is a code."""
    parts = (reply or "").split()
    if not parts:
        return UNKNOWN
    token = re.sub(r"[^A-Za-z0-9]", "", parts[0]).upper()
    return token if token in codes else UNKNOWN


def codebook_prompt(codebook: Sequence[Theme] = CODEBOOK, template: str | None = None) -> str:
    if template is None:
        template = (resources.files("nomiclaw") / "templates" / "theme_system.txt").read_text(encoding="utf-8")
    codes = "\n".join(f"{t.code}: {t.name}. {t.description}" for t in codebook)
    return Template(template).substitute(codes=codes, example=codebook[0].code)


class Classifier(Protocol):
    classifier_id: str

    def __call__(self, system: str, text: str) -> str: ...


@dataclass
class MockClassifier:
    """Keyword lookup over the codebook cues; deterministic and offline."""

    classifier_id: str = "mock"
    codebook: Sequence[Theme] = CODEBOOK

    def __call__(self, system: str, text: str) -> str:
        low = text.lower()
        best, best_hits = None, 0
        for theme in self.codebook:
            hits = sum(low.count(cue) for cue in theme.cues)
            if hits > best_hits:
                best, best_hits = theme.code, hits
        return f"{best} ({best_hits} cue hits)" if best else "NONE"


@dataclass
class BackendClassifier:
    client: BackendClient
    model_id: str
    params: Mapping = field(default_factory=lambda: {"temperature": 0.0})

    @property
    def classifier_id(self) -> str:
        return self.model_id

    def __call__(self, system: str, text: str) -> str:
        messages = [{"role": "system", "content": system}, {"role": "user", "content": text}]
        return self.client.complete(self.model_id, messages, self.params)


@dataclass(frozen=True)
class Annotation:
    run_id: str
    round: int
    agent_id: str
    stage: str
    code: str
    raw_reply: str
    classifier_id: str
    error: str = ""

    @property
    def key(self) -> tuple:
        return (self.run_id, self.round, self.agent_id, self.stage, self.classifier_id)


def annotate_text(text: str, classifier: Classifier, system: str) -> tuple[str, str, str]:
    """Return (code, raw reply, error note)."""
    try:
        raw = classifier(system, text)
    except AgentError as exc:
        return UNKNOWN, "", str(exc)
    return first_token_code(raw), raw, ""


def classify(text: str, classifier: Classifier, codebook: Sequence[Theme] = CODEBOOK) -> str:
    code, _, _ = annotate_text(text, classifier, codebook_prompt(codebook))
    return code


@dataclass
class Item:
    run_id: str
    round: int
    agent_id: str
    stage: str
    text: str


@dataclass
class DropReport:
    parse_failure: int = 0
    empty: int = 0
    too_short: int = 0

    @property
    def total(self) -> int:
        return self.parse_failure + self.empty + self.too_short


def preprocess(table: pd.DataFrame, stages: Sequence[str] = STAGES) -> tuple[list[Item], DropReport]:
    """Per-stage texts worth classifying; short or empty texts are dropped."""
    items, report = [], DropReport()
    for rec in table.to_dict("records"):
        try:
            key = (str(rec["run_id"]), int(rec["round"]), str(rec["agent_id"]))
            if not all(key[i] for i in (0, 2)):
                raise ValueError
        except (KeyError, ValueError, TypeError):
            report.parse_failure += len(stages)
            continue
        for stage in stages:
            text = rec.get(STAGE_TEXT[stage])
            text = "" if text is None or (isinstance(text, float) and math.isnan(text)) else str(text)
            if not text.strip():
                report.empty += 1
            elif len(text.strip()) < MIN_CHARS:
                report.too_short += 1
            else:
                items.append(Item(*key, stage, text))
    return items, report


def _theme_col(stage: str, classifier_id: str | None = None) -> str:
    return f"{stage}_theme" if classifier_id is None else f"{stage}_theme__{classifier_id}"


def load_checkpoint(path: Path | None) -> dict[tuple, Annotation]:
    done: dict[tuple, Annotation] = {}
    if path is None or not path.exists():
        return done
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            continue  # torn final line from a killed writer
        a = Annotation(**rec)
        done[a.key] = a
    return done


def annotate_dataset(
    table: pd.DataFrame,
    classifiers: Sequence[Classifier],
    *,
    codebook: Sequence[Theme] = CODEBOOK,
    rate_limit: float | RateLimiter | None = None,
    checkpoint: str | Path | None = None,
    workers: int = 1,
) -> pd.DataFrame:
    """Annotate every stage text with every classifier.

    Results are appended to ``checkpoint`` (JSON lines) as they arrive, so a
    rerun after an interruption only requests what is missing. The first
    classifier fills ``rule_theme``/``reasoning_theme``/``vote_theme``; each
    classifier also gets its own ``<stage>_theme__<id>`` columns.
    """
    if not classifiers:
        raise ValueError("need at least one classifier")
    system = codebook_prompt(codebook)
    items, report = preprocess(table)
    logger.info("classifying %d texts (%d dropped)", len(items), report.total)
    limiter = RateLimiter(rate_limit) if isinstance(rate_limit, (int, float)) else rate_limit
    ckpt = Path(checkpoint) if checkpoint else None
    done = load_checkpoint(ckpt)

    pending = [
        (item, clf)
        for clf in classifiers
        for item in items
        if (item.run_id, item.round, item.agent_id, item.stage, clf.classifier_id) not in done
    ]

    def work(job) -> Annotation:
        item, clf = job
        if limiter is not None:
            limiter.acquire()
        code, raw, err = annotate_text(item.text, clf, system)
        return Annotation(item.run_id, item.round, item.agent_id, item.stage, code, raw, clf.classifier_id, err)

    fh = ckpt.open("a", encoding="utf-8") if ckpt else None
    try:
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results: Iterable[Annotation] = pool.map(work, pending)
                _collect(results, done, fh)
        else:
            _collect(map(work, pending), done, fh)
    finally:
        if fh:
            fh.close()

    out = table.copy()
    keys = list(zip(out["run_id"].astype(str), out["round"].astype(int), out["agent_id"].astype(str)))
    for n, clf in enumerate(classifiers):
        for stage in STAGES:
            col = [
                done[(r, t, a, stage, clf.classifier_id)].code if (r, t, a, stage, clf.classifier_id) in done else UNKNOWN
                for r, t, a in keys
            ]
            out[_theme_col(stage, clf.classifier_id)] = col
            if n == 0:
                out[_theme_col(stage)] = col
    return out


def _collect(results: Iterable[Annotation], done: dict, fh) -> None:
    for a in results:
        done[a.key] = a
        if fh:
            fh.write(json.dumps(a.__dict__, ensure_ascii=False) + "\n")
            fh.flush()


def _allocate(sizes: Mapping[str, int], fraction: float) -> dict[str, int]:
    """Largest-remainder split of round(fraction * total) across strata."""
    total = round(fraction * sum(sizes.values()))
    raw = {s: fraction * n for s, n in sizes.items()}
    alloc = {s: min(sizes[s], math.floor(v)) for s, v in raw.items()}
    rest = total - sum(alloc.values())
    for s in sorted(raw, key=lambda s: (-(raw[s] - math.floor(raw[s])), s)):
        if rest <= 0:
            break
        if alloc[s] < sizes[s]:
            alloc[s] += 1
            rest -= 1
    return alloc


def sample_for_agreement(table: pd.DataFrame, fraction: float, seed: int = 0) -> pd.DataFrame:
    """Seeded stage-stratified sample of texts with a blank ``human_label`` column."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    items, _ = preprocess(table)
    by_stage: dict[str, list[Item]] = {s: [] for s in STAGES}
    for it in items:
        by_stage[it.stage].append(it)
    alloc = _allocate({s: len(v) for s, v in by_stage.items()}, fraction)
    rng = random.Random(seed)
    chosen = []
    for stage in STAGES:
        pool = by_stage[stage]
        picked = sorted(rng.sample(range(len(pool)), alloc[stage]))
        chosen += [pool[i] for i in picked]
    return pd.DataFrame(
        [
            {"run_id": c.run_id, "round": c.round, "agent_id": c.agent_id, "stage": c.stage, "text": c.text, "human_label": ""}
            for c in chosen
        ],
        columns=[*ROW_KEY, "stage", "text", "human_label"],
    )


class AgreementError(ValueError):
    pass


def agreement_report(
    human: pd.DataFrame,
    annotated: pd.DataFrame,
    classifier_ids: Sequence[str] | None = None,
    stages: Sequence[str] = STAGES,
    bar: float = KAPPA_BAR,
) -> pd.DataFrame:
    """Cohen's kappa between human and model labels per stage and classifier."""
    labels = human["human_label"].fillna("").astype(str).str.strip().str.upper()
    blank = human[labels == ""]
    if not blank.empty:
        keys = [f"{r.run_id}/{r.round}/{r.agent_id}/{r.stage}" for r in blank.itertuples()]
        raise AgreementError(f"missing human labels for: {', '.join(keys)}")
    absent = [s for s in stages if s not in set(human["stage"])]
    if absent:
        raise AgreementError(f"no human labels for stage(s): {', '.join(absent)}")
    if classifier_ids is None:
        classifier_ids = sorted(
            {c.split("__", 1)[1] for c in annotated.columns if "_theme__" in c}
        )
    ann = annotated.copy()
    ann["round"] = ann["round"].astype(int)
    ann_index = ann.set_index([*ROW_KEY])
    rows = []
    for stage in stages:
        h = human[human["stage"] == stage]
        for cid in classifier_ids:
            col = _theme_col(stage, cid)
            if col not in ann_index.columns:
                raise AgreementError(f"annotated table lacks column {col}")
            model_labels = []
            for r in h.itertuples():
                key = (str(r.run_id), int(r.round), str(r.agent_id))
                try:
                    model_labels.append(ann_index.loc[key, col])
                except KeyError:
                    raise AgreementError(f"row {key} not in annotated table") from None
            human_labels = labels[h.index].tolist()
            try:
                k = cohens_kappa(human_labels, model_labels)
                kappa, p_o, p_e = k.kappa, k.p_o, k.p_e
            except UndefinedKappa:
                kappa, p_o, p_e = math.nan, 1.0, 1.0
            rows.append(
                {"stage": stage, "classifier": cid, "kappa": kappa, "p_o": p_o, "p_e": p_e,
                 "n": len(h), "below_bar": not (kappa >= bar)}
            )
    return pd.DataFrame(rows)


def theme_trends(annotated: pd.DataFrame, by: Sequence[str] = ("condition", "vignette_id")) -> pd.DataFrame:
    """Share of each known code per group and stage (shares sum to 1)."""
    rows = []
    for stage in STAGES:
        col = _theme_col(stage)
        known = annotated[annotated[col].isin(CODES)]
        for key, grp in known.groupby(list(by), sort=True):
            key = key if isinstance(key, tuple) else (key,)
            counts = grp[col].value_counts()
            total = int(counts.sum())
            for code in CODES:
                c = int(counts.get(code, 0))
                rows.append({**dict(zip(by, key)), "stage": stage, "code": code, "count": c, "share": c / total})
        unknown = int((annotated[col] == UNKNOWN).sum())
        if unknown:
            logger.info("%s stage: %d UNKNOWN labels excluded", stage, unknown)
    return pd.DataFrame(rows, columns=[*by, "stage", "code", "count", "share"])


def persistence_table(annotated: pd.DataFrame, by: str = "condition", method: str = "marginal") -> pd.DataFrame:
    """Rule-to-reasoning persistence odds ratio per theme and group."""
    rows = []
    for key, grp in annotated.groupby(by, sort=True):
        ors = theme_persistence_or(grp["rule_theme"].tolist(), grp["reasoning_theme"].tolist(), CODES, method)
        for code in CODES:
            rows.append({by: key, "code": code, "odds_ratio": ors[code]})
    return pd.DataFrame(rows, columns=[by, "code", "odds_ratio"])


def is_annotated(table: pd.DataFrame) -> bool:
    cols = [_theme_col(s) for s in STAGES]
    return all(c in table for c in cols) and bool((table[cols].astype(str) != "").any().all())
