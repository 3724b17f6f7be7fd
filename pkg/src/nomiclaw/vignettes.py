"""Built-in legal scenarios and vignette-set loading."""

from __future__ import annotations

import json
from pathlib import Path

from nomiclaw.protocol import ConfigurationError, Vignette

BUILTIN: tuple[Vignette, ...] = (
    Vignette(
        "v1",
        "Self-Driving Collision",
        "An autonomous delivery vehicle swerves to avoid a child who ran into the road and "
        "strikes a cyclist instead. The vehicle's software followed its manufacturer's "
        "collision-avoidance policy; the fleet operator had disabled a remote-monitoring "
        "feature to cut costs. The cyclist is seriously injured. Who should bear liability, "
        "and what rule should govern such decisions in the future?",
        "tort and product liability",
    ),
    Vignette(
        "v2",
        "Patterned Discrimination",
        "A bank's loan-approval model never sees applicants' ethnicity, yet approval rates for "
        "one minority neighbourhood are half those of comparable applicants elsewhere. The "
        "model relies on postcode and shopping-history features that correlate with "
        "ethnicity. Applicants were told decisions were automated but not how. What rule "
        "should apply to such systems?",
        "anti-discrimination and consumer credit law",
    ),
    Vignette(
        "v3",
        "Social Graph Scanning",
        "A city deploys software that scans public social-media connections to flag residents "
        "who are 'socially close' to people with criminal records, and shares the flags with "
        "police and landlords. Flagged residents are not notified and cannot contest the "
        "score. What rule should govern this practice?",
        "data protection and surveillance law",
    ),
    Vignette(
        "v4",
        "AI-Created Symphony",
        "A composer fine-tunes a generative model on public-domain and copyrighted scores, then "
        "releases a symphony produced largely by the model with light editing. A publisher "
        "whose catalogue was used in training claims a share of royalties; the composer claims "
        "sole authorship. What rule should decide ownership and compensation?",
        "intellectual property",
    ),
)


def load_vignettes(path: str | Path | None = None) -> list[Vignette]:
    """Read a JSON list of ``{id, title, body, legal_domain}``; built-ins if no path."""
    if path is None:
        return list(BUILTIN)
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    vignettes = [Vignette(d["id"], d.get("title", d["id"]), d["body"], d.get("legal_domain", "")) for d in data]
    ids = [v.id for v in vignettes]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("vignette ids must be unique")
    return vignettes
