"""Acceptance checks, one PASS/FAIL line per criterion.

Reference numbers come from two places: the published win-count table and
its derived GLM / pairwise figures (constants below), and brute-force
oracles in ``oracles.py``.
"""

from __future__ import annotations

import json
import math
import os
import random
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import httpx
import numpy as np
import pandas as pd
import pytest
import yaml

import oracles
from nomiclaw import metrics as M
from nomiclaw import themes as T
from nomiclaw.agents import ScriptedAgent
from nomiclaw.cli import main
from nomiclaw.ledger import dumps_log, export_csv, read_table, verify_balance
from nomiclaw.protocol import GameConfig, OutcomeKind, check_score_conservation, run_game, tally
from nomiclaw.stats import multivariate as MV
from nomiclaw.stats.agreement import kappa_from_table, theme_persistence_or
from nomiclaw.stats.gee import gee_logit_exchangeable
from nomiclaw.stats.glm import glm_logit
from nomiclaw.stats.significance import benjamini_hochberg
from nomiclaw.synthetic import random_logs
from nomiclaw.vignettes import BUILTIN
from test_metrics import check_against_oracle
from test_themes import ADVERSARIAL, text_table

CONFIGS = Path(__file__).parent.parent / "configs"

# model: (estimate, se, odds ratio, ci low, ci high), reference deepseek-r1
GLM_REFERENCE = {
    "gemma2": (-1.82, 0.56, 0.16, 0.05, 0.49),
    "gemma3": (-3.23, 1.03, 0.04, 0.01, 0.30),
    "granite3.3": (-0.65, 0.39, 0.52, 0.25, 1.12),
    "llama2": (-0.32, 0.36, 0.73, 0.36, 1.47),
    "llama3": (-3.23, 1.03, 0.04, 0.01, 0.30),
    "phi4": (-1.09, 0.44, 0.34, 0.14, 0.79),
    "phi4-mini-reasoning": (-0.65, 0.39, 0.52, 0.25, 1.12),
    "phi4-reasoning": (-0.56, 0.38, 0.57, 0.27, 1.21),
    "qwen3": (-2.53, 0.75, 0.08, 0.02, 0.35),
}

# (stronger, weaker): quoted BH-adjusted p, or None where only "< 0.001" is given
PAIRWISE_REFERENCE = {
    ("deepseek-r1", "gemma2"): 0.0025,
    ("deepseek-r1", "gemma3"): None,
    ("deepseek-r1", "llama3"): None,
    ("deepseek-r1", "phi4"): 0.025,
    ("deepseek-r1", "qwen3"): None,
    ("granite3.3", "llama3"): 0.0059,
    ("granite3.3", "qwen3"): 0.0156,
    ("llama2", "gemma2"): 0.0152,
    ("llama2", "qwen3"): 0.0039,
    ("phi4-mini-reasoning", "qwen3"): 0.0156,
    ("phi4-reasoning", "qwen3"): 0.0108,
}

WIN_RATES = [0.175, 0.133, 0.108, 0.100, 0.100, 0.067, 0.033, 0.017, 0.008, 0.008]


def verdict(capsys, number, title, failures):
    status = "PASS" if not failures else "FAIL"
    with capsys.disabled():
        print(f"\n[criterion {number:>2}] {status}: {title}")
        for f in failures[:10]:
            print(f"    - {f}")
    assert not failures, failures


def close(a, b, tol):
    return a is not None and b is not None and abs(a - b) <= tol


# ---------------------------------------------------------------------------


def test_c01_glm_table(win_csv, tmp_path, capsys):
    start = time.perf_counter()
    rc = main(["stats", "glm", str(win_csv), "--ref", "deepseek-r1", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    bad = [] if rc == 0 else [f"exit code {rc}"]
    table = pd.read_csv(tmp_path / "glm_table.csv").set_index("model")
    for model, (est, se, odds, lo, hi) in GLM_REFERENCE.items():
        row = table.loc[model]
        got = (row.estimate, row.se, row.odds_ratio, row.ci_low, row.ci_high)
        for name, want, have in zip(("estimate", "se", "or", "ci_low", "ci_high"), (est, se, odds, lo, hi), got):
            if not close(want, float(have), 0.01 + 1e-9):
                bad.append(f"{model} {name}: {have:.4f} vs {want}")
    if elapsed >= 1.0:
        bad.append(f"runtime {elapsed:.2f}s")
    verdict(capsys, 1, f"GLM rows within 0.01 of reference ({elapsed * 1000:.0f} ms)", bad)


def test_c02_chi_square(win_csv, tmp_path, capsys):
    main(["stats", "wins", str(win_csv), "--out", str(tmp_path)])
    chi = json.loads((tmp_path / "chi_square.json").read_text())
    bad = []
    if not close(chi["statistic"], 47.78, 0.01):
        bad.append(f"chi2 {chi['statistic']}")
    if chi["df"] != 9:
        bad.append(f"df {chi['df']}")
    if not 3e-7 / 1.5 <= chi["p_value"] <= 3e-7 * 1.5:
        bad.append(f"p {chi['p_value']}")
    verdict(capsys, 2, f"chi2(9) = {chi['statistic']:.2f}, p = {chi['p_value']:.2e}", bad)


def test_c03_pairwise_bh(win_csv, tmp_path, capsys):
    main(["stats", "pairwise", str(win_csv), "--out", str(tmp_path)])
    pw = pd.read_csv(tmp_path / "pairwise.csv")
    lookup = {}
    for r in pw.itertuples():
        lookup[(r.model_a, r.model_b)] = r
        lookup[(r.model_b, r.model_a)] = r
    bad = []
    for (strong, weak), quoted in PAIRWISE_REFERENCE.items():
        r = lookup[(strong, weak)]
        wins = {r.model_a: r.wins_a, r.model_b: r.wins_b}
        if not (r.significant and wins[strong] > wins[weak]):
            bad.append(f"{strong} > {weak} not significant (p_adj {r.p_adj:.4g})")
        if quoted is None:
            if r.p_adj >= 0.001:
                bad.append(f"{strong} vs {weak}: p_adj {r.p_adj:.4g} not < 0.001")
        elif abs(r.p_adj - quoted) > 0.2 * quoted:
            bad.append(f"{strong} vs {weak}: p_adj {r.p_adj:.4g} vs {quoted}")
    verdict(capsys, 3, f"{len(PAIRWISE_REFERENCE)} reference pairs significant after BH, quoted p_adj within 20%", bad)


def test_c04_win_rates(win_csv, tmp_path, capsys):
    main(["stats", "wins", str(win_csv), "--out", str(tmp_path)])
    wins = pd.read_csv(tmp_path / "wins.csv")
    models = wins[wins["model"] != "Undecided"]
    und = wins[wins["model"] == "Undecided"].iloc[0]
    bad = []
    if models["win_rate"].tolist() != WIN_RATES:
        bad.append(f"win rates {models['win_rate'].tolist()}")
    if (und.wins, und.rounds) != (30, 120):
        bad.append(f"undecided {und.wins}/{und.rounds}")
    verdict(capsys, 4, "win rates and 30/120 undecided exact", bad)


def one_round(n, seed):
    rng = random.Random(seed)
    ids = [f"Agent_{k}" for k in range(1, n + 1)]
    agents = [
        ScriptedAgent(a, f"m-{a}", "replay", {"fixture": {1: {"vote": rng.choice([b for b in ids if b != a])}}})
        for a in ids
    ]
    log = run_game(GameConfig(n, tuple(ids), num_rounds=1), BUILTIN[0], agents)
    return M.per_unit_metrics(export_csv([log]))["ed"].unique().tolist()


def test_c05_edge_density(capsys):
    bad = []
    for n, want in ((10, 10 / 90), (5, 0.25)):
        got = one_round(n, n)
        if got != [want]:
            bad.append(f"{n} agents: {got} vs {want}")
    verdict(capsys, 5, "ED = 10/90 for ten ballots, 0.25 for five", bad)


def test_c06_metric_oracles(capsys):
    logs = random_logs(200, seed=606, max_agents=6, num_rounds=5, fail_prob=0.05)
    bad = [str(m) for m in check_against_oracle(logs)]

    # VM / TC over randomly assigned themes, pooled per model
    rng = random.Random(7)
    labels = [*T.CODES, T.UNKNOWN]
    themes = {}
    pairs = {}
    for log in logs:
        for rec in log.rounds:
            if rec.excluded:
                continue
            for b in rec.ballots:
                rule, vote = rng.choice(labels), rng.choice(labels)
                themes[(log.run_id, rec.round, b.voter)] = (rule, vote)
                pairs.setdefault(log.model_of(b.voter), []).append((rule, vote))
    table = export_csv(logs)
    keys = list(zip(table["run_id"], table["round"], table["agent_id"]))
    table["rule_theme"] = [themes[k][0] for k in keys]
    table["vote_theme"] = [themes[k][1] for k in keys]
    vm = M.proposal_vote_consistency(table, ("model_id",)).set_index("model_id")
    for model, ps in pairs.items():
        same, n = oracles.vm_counts(ps)
        if n == 0:
            if model in vm.index:
                bad.append(f"{model}: VM defined on no pairs")
            continue
        row = vm.loc[model]
        if (row.vm, row.tc, row.n) != (same / n, 1 - same / n, n):
            bad.append(f"{model}: vm {row.vm} tc {row.tc} n {row.n} vs {same}/{n}")
    verdict(capsys, 6, "15 metrics equal brute-force recount on 200 random runs", bad)


def test_c07_protocol_invariants(tmp_path, capsys):
    bad = []
    first = random_logs(1000, seed=707, fail_prob=0.05)
    second = random_logs(1000, seed=707, fail_prob=0.05)
    ties = excluded = 0
    for log, again in zip(first, second):
        cfg = log.config
        for rec in log.rounds:
            try:
                check_score_conservation(rec, cfg)
            except Exception as exc:
                bad.append(f"{log.run_id} r{rec.round}: {exc}")
            if rec.excluded:
                excluded += 1
                continue
            fresh = tally(rec.ballots, cfg.seat_order)
            if (fresh.kind, fresh.winners, fresh.vote_counts) != (rec.outcome.kind, rec.outcome.winners, rec.outcome.vote_counts):
                bad.append(f"{log.run_id} r{rec.round}: re-tally differs")
            ties += rec.outcome.kind is OutcomeKind.TIE
        if sum(log.final_scores.values()) != sum(sum(r.point_deltas.values()) for r in log.rounds):
            bad.append(f"{log.run_id}: final scores")
        if dumps_log(log) != dumps_log(again):
            bad.append(f"{log.run_id}: replay not byte-identical")

    counts = {}
    for name, want in (("hetero_scripted.yaml", 24 * 5 * 10), ("homo_scripted.yaml", 10 * 4 * 5 * 5)):
        logs_dir = tmp_path / name / "logs"
        main(["simulate", str(CONFIGS / name), "--out", str(logs_dir), "--jobs", "4"])
        out = tmp_path / name / "table.csv"
        main(["export", str(logs_dir), str(out)])
        table = read_table(out)
        counts[name] = len(table)
        if len(table) != want:
            bad.append(f"{name}: {len(table)} rows, expected {want}")
        if not verify_balance(table).is_balanced:
            bad.append(f"{name}: unbalanced")
    if not ties or not excluded:
        bad.append(f"random games never exercised ties ({ties}) or exclusions ({excluded})")
    verdict(
        capsys,
        7,
        f"1000 games conserve, re-tally and replay ({ties} ties, {excluded} excluded rounds); "
        f"rows {counts.get('hetero_scripted.yaml')} / {counts.get('homo_scripted.yaml')}",
        bad,
    )


def test_c08_stats_oracles(capsys):
    bad = []
    k = kappa_from_table([[20, 5], [10, 15]]).kappa
    if k != pytest.approx(0.4, abs=1e-12):
        bad.append(f"kappa {k}")
    bh = benjamini_hochberg([0.001, 0.01, 0.02, 0.04])
    if not np.allclose(bh, [0.004, 0.02, 0.0267, 0.04], atol=1e-4, rtol=0):
        bad.append(f"BH {bh}")

    rng = np.random.default_rng(8)
    x = np.column_stack([np.ones(300), rng.normal(size=300)])
    y = (rng.uniform(size=300) < 1 / (1 + np.exp(-(0.2 - 0.7 * x[:, 1])))).astype(float)
    diff = np.abs(gee_logit_exchangeable(x, y, np.arange(300)).estimates - glm_logit(x, y).estimates).max()
    if diff > 1e-6:
        bad.append(f"singleton GEE vs GLM {diff:.2e}")

    y, g = oracles.exchangeable_clusters(200, 10, 0.3, 0.3, np.random.default_rng(2024))
    x = np.column_stack([np.ones(len(y)), np.random.default_rng(1).normal(size=len(y))])
    alpha = gee_logit_exchangeable(x, y, g).alpha
    if abs(alpha - 0.3) > 0.1:
        bad.append(f"alpha {alpha:.3f}")

    for seed in range(5):
        pts = np.random.default_rng(seed).normal(size=(5, 3))
        ours = MV.ward_cluster(pts).merges
        ref = oracles.brute_ward(pts)
        for (a, b, h, s), (ra, rb, rh, rs) in zip(ours, ref):
            if (int(a), int(b), int(s)) != (ra, rb, rs) or abs(h - rh) > 1e-9:
                bad.append(f"ward seed {seed}: {(a, b, h, s)} vs {(ra, rb, rh, rs)}")
                break

    data = np.random.default_rng(3).normal(size=(10, 6))
    res = MV.pca(data)
    z, _, _ = MV.standardize(data)
    err = np.abs(res.scores @ res.loadings.T - z).max()
    if err >= 1e-8:
        bad.append(f"PCA reconstruction {err:.2e}")
    verdict(capsys, 8, f"kappa, BH, GEE (alpha {alpha:.3f}), Ward, PCA (err {err:.1e})", bad)


def test_c09_theme_pipeline(tmp_path, capsys):
    bad = []
    corpus = text_table(750, empty_votes=50)
    items, _ = T.preprocess(corpus)
    ann = T.annotate_dataset(corpus, [T.MockClassifier()])
    coded = sum((ann[f"{s}_theme"] != T.UNKNOWN).sum() for s in T.STAGES)
    if len(items) != 2200 or coded != 2200:
        bad.append(f"{len(items)} texts, {coded} coded")
    for reply, code in ADVERSARIAL:
        if T.first_token_code(reply) != code:
            bad.append(f"first token of {reply!r}")

    src, out = tmp_path / "ann.csv", tmp_path / "sample.csv"
    ann.to_csv(src, index=False)
    main(["themes", "sample", str(src), "--fraction", "0.10", "--seed", "9", "--out", str(out)])
    n = len(pd.read_csv(out))
    if n != 220:
        bad.append(f"sample has {n} texts")

    a = ["HARM"] * 20
    b = ["HARM"] * 15 + ["SOLI"] * 5
    soli = theme_persistence_or(a, b, T.CODES)["SOLI"]
    if soli != math.inf:
        bad.append(f"SOLI OR {soli}")
    verdict(capsys, 9, f"2200 texts coded, {len(ADVERSARIAL)} adversarial replies, sample {n}, SOLI OR {soli}", bad)


# --- criterion 10: smoke runs against a chat endpoint ---------------------------


class _StubChat(BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        me = body["messages"][0]["content"].split()[2].rstrip(",")
        if "Valid vote targets" in body["messages"][-1]["content"]:
            text = json.dumps({"vote_target": "Agent_1", "justification": f"{me} backs Agent_1 for safety."})
        else:
            text = f"RULE: {me} requires human review.\nREASONING: It reduces the risk of harm."
        data = json.dumps({"message": {"role": "assistant", "content": text}}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


def smoke(tmp_path, url, models):
    tmp_path.mkdir(parents=True, exist_ok=True)
    vig = tmp_path / "vignette.json"
    vig.write_text(json.dumps([{"id": v.id, "title": v.title, "body": v.body} for v in BUILTIN[:1]]))
    manifest = tmp_path / "smoke.yaml"
    manifest.write_text(
        yaml.safe_dump(
            {
                "condition": "heterogeneous",
                "runs_per_vignette": 1,
                "seed": 1,
                "vignettes": str(vig),
                "backend": {"url": url, "timeout": 300, "retries": 1},
                "agents": [{"model": m} for m in models],
            }
        )
    )
    logs, table = tmp_path / "logs", tmp_path / "table.csv"
    problems = []
    if main(["simulate", str(manifest), "--out", str(logs)]) != 0:
        problems.append("simulate failed")
    if main(["export", str(logs), str(table)]) != 0:
        problems.append("export failed")
    else:
        df = read_table(table)
        if len(df) != 15:
            problems.append(f"{len(df)} rows, expected 15 (1 run x 3 agents x 5 rounds)")
    return problems


def live_endpoint():
    url = os.environ.get("NOMIC_BACKEND_URL")
    if not url:
        return None
    try:
        httpx.get(url, timeout=2.0)
    except httpx.HTTPError:
        return None
    return url


def test_c10_declared_and_smoke(tmp_path, capsys):
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubChat)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        bad = smoke(tmp_path / "stub", f"http://127.0.0.1:{server.server_port}", ["m1", "m2", "m3"])
    finally:
        server.shutdown()
    url = live_endpoint()
    if url:
        models = os.environ.get("NOMIC_SMOKE_MODELS", "llama3,llama3,llama3").split(",")
        bad += [f"live: {p}" for p in smoke(tmp_path / "live", url, models)]
        note = f"live smoke against {url}"
    else:
        note = "live smoke not run (NOMIC_BACKEND_URL unset or unreachable); HTTP stub smoke run instead"
    verdict(capsys, 10, f"declared non-reproducible; covered by 5-9 + {note}", bad)


@pytest.mark.live
def test_live_smoke(tmp_path):
    url = live_endpoint()
    if not url:
        pytest.skip("no reachable NOMIC_BACKEND_URL")
    models = os.environ.get("NOMIC_SMOKE_MODELS", "llama3,llama3,llama3").split(",")
    assert smoke(tmp_path, url, models) == []
