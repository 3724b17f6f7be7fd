"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 input or validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import yaml

from nomiclaw import metrics as M
from nomiclaw import themes as T
from nomiclaw.agents.backend import BackendClient, backend_url
from nomiclaw.agents.roster import AgentBinding, build_agent
from nomiclaw.ledger import export_csv, frame_to_csv_text, load_run_logs, read_table, verify_balance, write_run_log, write_table
from nomiclaw.protocol import Condition, ConfigurationError, GameConfig, OutcomeKind, run_game
from nomiclaw.stats import chi_square_gof, cut, pairwise_win_tests, pca, ward_cluster, win_gee, win_glm
from nomiclaw.stats.multivariate import standardize
from nomiclaw.vignettes import load_vignettes

logger = logging.getLogger("nomiclaw")

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2
PCA_METRICS = ("svr", "avr", "wr", "vv", "vp", "ri", "csr", "bs", "ed")


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


# ---------------------------------------------------------------- simulate


@dataclass
class RunManifest:
    path: Path
    condition: Condition
    runs_per_vignette: int
    output_dir: Path
    jobs: int
    vignettes_path: Path | None
    num_rounds: int = 5
    points_win: int = 10
    points_tie: int = 5
    seed: int = 0
    shuffle_seats: bool = True
    group_size: int = 5
    agents: list[dict[str, Any]] = field(default_factory=list)
    models: list[str] = field(default_factory=list)
    agent_template: dict[str, Any] = field(default_factory=lambda: {"kind": "backend"})
    backend: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path, *, output_dir=None, jobs=None) -> "RunManifest":
        path = Path(path)
        if not path.exists():
            raise InputError(f"manifest {path} not found")
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        base = path.parent
        vig = raw.get("vignettes")
        vig_path = (base / vig) if vig else None
        if vig_path is not None and not vig_path.exists():
            raise InputError(f"vignette set {vig_path} not found")
        env_jobs = os.environ.get("NOMIC_JOBS")
        m = cls(
            path=path,
            condition=Condition.parse(raw.get("condition", "heterogeneous")),
            runs_per_vignette=int(raw.get("runs_per_vignette", 1)),
            output_dir=Path(output_dir) if output_dir else base / raw.get("output_dir", "logs"),
            jobs=int(jobs or env_jobs or raw.get("jobs", 1)),
            vignettes_path=vig_path,
            num_rounds=int(raw.get("num_rounds", 5)),
            points_win=int(raw.get("points_win", 10)),
            points_tie=int(raw.get("points_tie", 5)),
            seed=int(raw.get("seed", 0)),
            shuffle_seats=bool(raw.get("shuffle_seats", True)),
            group_size=int(raw.get("group_size", 5)),
            agents=list(raw.get("agents", [])),
            models=list(raw.get("models", [])),
            agent_template=dict(raw.get("agent", {"kind": "backend"})),
            backend=dict(raw.get("backend", {})),
        )
        if m.condition is Condition.HETEROGENEOUS and not m.agents:
            raise InputError("heterogeneous manifest needs an 'agents' list")
        if m.condition is Condition.HOMOGENEOUS and not m.models:
            raise InputError("homogeneous manifest needs a 'models' list")
        return m

    def backend_params(self) -> dict[str, Any]:
        return {"temperature": self.backend.get("temperature", 0.7), **self.backend.get("options", {})}

    def groups(self) -> list[list[dict[str, Any]]]:
        """Agent specs per game group (one group for heterogeneous runs)."""
        if self.condition is Condition.HETEROGENEOUS:
            return [self.agents]
        return [[{**self.agent_template, "model": model}] * self.group_size for model in self.models]


def _bindings(specs: list[dict[str, Any]], seed: str) -> list[AgentBinding]:
    out = []
    for k, spec in enumerate(specs, start=1):
        params = {key: v for key, v in spec.items() if key not in ("model", "kind", "id")}
        if spec.get("kind", "backend") != "backend":
            params.setdefault("seed", seed)
        out.append(AgentBinding(spec.get("id", f"Agent_{k}"), spec["model"], spec.get("kind", "backend"), params))
    return out


def cmd_simulate(args) -> int:
    manifest = RunManifest.load(args.manifest, output_dir=args.out, jobs=args.jobs)
    vignettes = load_vignettes(manifest.vignettes_path)
    needs_backend = any(
        s.get("kind", "backend") == "backend" for g in manifest.groups() for s in g
    )
    client = None
    if needs_backend:
        client = BackendClient(
            backend_url(args.backend_url or os.environ.get("NOMIC_BACKEND_URL") or manifest.backend.get("url")),
            timeout=float(manifest.backend.get("timeout", 120)),
            retries=int(manifest.backend.get("retries", 3)),
            rate_limit=manifest.backend.get("rate_limit"),
        )
    jobs = []
    for vignette in vignettes:
        index = 0
        for group in manifest.groups():
            for _ in range(manifest.runs_per_vignette):
                index += 1
                jobs.append((vignette, index, group))

    def play(vignette, index, group):
        seed = f"{manifest.seed}-{vignette.id}-{index}"
        bindings = _bindings(group, seed)
        seats = [b.agent_id for b in bindings]
        if manifest.shuffle_seats:
            random.Random(seed).shuffle(seats)
        cfg = GameConfig(
            num_agents=len(bindings),
            seat_order=tuple(seats),
            condition=manifest.condition,
            num_rounds=manifest.num_rounds,
            points_win=manifest.points_win,
            points_tie=manifest.points_tie,
            rng_seed=manifest.seed,
            backend_params=manifest.backend_params() if needs_backend else {},
        )
        agents = [
            build_agent(b, client, backend_params=cfg.backend_params, points=(cfg.points_win, cfg.points_tie))
            for b in bindings
        ]
        log = run_game(cfg, vignette, agents, run_index=index)
        path = write_run_log(log, manifest.output_dir)
        return log, path

    failures = 0
    try:
        with ThreadPoolExecutor(max(1, manifest.jobs)) as pool:
            futures = {pool.submit(play, *job): job for job in jobs}
            results = []
            for fut in as_completed(futures):
                vignette, index, _ = futures[fut]
                try:
                    results.append(fut.result())
                except ConfigurationError:
                    raise
                except Exception as exc:  # a broken run must not stop the batch
                    failures += 1
                    logger.error("run %s/%d failed: %s", vignette.id, index, exc)
    finally:
        if client:
            client.close()
    for log, path in sorted(results, key=lambda r: r[1].name):
        wins = [r.outcome.winner for r in log.rounds if r.outcome.kind is OutcomeKind.WINNER]
        ties = sum(r.outcome.kind is OutcomeKind.TIE for r in log.rounds)
        excluded = sum(r.excluded for r in log.rounds)
        hetero = log.condition is Condition.HETEROGENEOUS
        label = {e.agent_id: e.model_id if hetero else e.agent_id for e in log.roster}
        tally = ", ".join(f"{label[w]}:{wins.count(w)}" for w in sorted(set(wins)))
        print(f"{path.name}: wins [{tally}] ties {ties} excluded {excluded}")
    return EXIT_RUNTIME if failures else EXIT_OK


# ---------------------------------------------------------------- export


def cmd_export(args) -> int:
    src = Path(args.logs)
    if not src.is_dir():
        raise InputError(f"{src} is not a directory")
    logs, errors = load_run_logs(src)
    for err in errors:
        print(f"error: {err}", file=sys.stderr)
    df = export_csv(logs, args.csv)
    report = verify_balance(df)
    print(f"wrote {args.csv}: {report.summary()}")
    if errors:
        return EXIT_INPUT
    if not report.is_balanced:
        if args.allow_unbalanced:
            print("warning: table is unbalanced", file=sys.stderr)
            return EXIT_OK
        return EXIT_INPUT
    return EXIT_OK


# ---------------------------------------------------------------- analysis helpers


def _load(path: str, condition: str | None = None) -> pd.DataFrame:
    p = Path(path)
    if not p.exists():
        raise InputError(f"{p} not found")
    try:
        df = read_table(p)
    except (ValueError, pd.errors.EmptyDataError) as exc:
        raise InputError(str(exc)) from exc
    if condition and condition != "all":
        df = df[df["condition"] == Condition.parse(condition).short].reset_index(drop=True)
    if df.empty:
        raise InputError(f"{p}: no rows to analyse")
    return df


def _emit(out: str | None, name: str, df: pd.DataFrame) -> None:
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        write_table(df, Path(out) / name)
    else:
        print(f"# {name}")
        sys.stdout.write(frame_to_csv_text(df))


def _emit_json(out: str | None, name: str, data: dict) -> None:
    text = json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text, encoding="utf-8")
    else:
        print(f"# {name}")
        sys.stdout.write(text)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if math.isnan(v) else ("inf" if math.isinf(v) else v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


# ---------------------------------------------------------------- metrics


BY = {"model": ("model_id", "condition"), "model-vignette": ("model_id", "condition", "vignette_id"), "condition": ("condition",)}


def metrics_report(df: pd.DataFrame, by: str = "model", ri_mode: str = "supporter", fmw_mode: str = "round1") -> pd.DataFrame:
    units = M.per_unit_metrics(df, ri_mode=ri_mode, fmw_mode=fmw_mode)
    return M.summarize(units, BY[by]).table


def cmd_metrics(args) -> int:
    df = _load(args.csv, args.condition)
    _emit(args.out, "metrics_by_model.csv", metrics_report(df, args.by, args.ri_mode, args.fmw_mode))
    if args.units:
        _emit(args.out, "metrics_units.csv", M.per_unit_metrics(df, args.ri_mode, args.fmw_mode))
    _emit(args.out, "mention_rates.csv", M.mention_rates(df, BY[args.by]))
    if T.is_annotated(df):
        _emit(args.out, "theme_consistency.csv", M.proposal_vote_consistency(df, BY[args.by]))
    return EXIT_OK


# ---------------------------------------------------------------- stats


def win_table(df: pd.DataFrame) -> tuple[pd.DataFrame, dict]:
    per_model = df.groupby("model_id").agg(wins=("won", "sum"), rounds=("won", "size"))
    per_model = per_model.sort_values(["wins", "rounds"], ascending=[False, True], kind="stable")
    rounds = df.groupby(["run_id", "round"])["won"].any()
    undecided = int((~rounds).sum())
    total = int(len(rounds))
    table = pd.DataFrame(
        {
            "model": list(per_model.index) + ["Undecided"],
            "wins": [int(w) for w in per_model["wins"]] + [undecided],
            "rounds": [int(r) for r in per_model["rounds"]] + [total],
        }
    )
    table["win_rate"] = (table["wins"] / table["rounds"]).round(3)
    chi = chi_square_gof([int(w) for w in per_model["wins"]])
    return table, {"statistic": chi.statistic, "df": chi.df, "p_value": chi.p_value, "decided_rounds": total - undecided}


def pairwise_table(df: pd.DataFrame, alpha: float = 0.05) -> pd.DataFrame:
    g = df.groupby("model_id").agg(wins=("won", "sum"), rounds=("won", "size"))
    g = g.sort_values(["wins"], ascending=False, kind="stable")
    wins = {m: int(w) for m, w in g["wins"].items()}
    totals = {m: int(n) for m, n in g["rounds"].items()}
    rows = []
    for res in pairwise_win_tests(wins, totals):
        a, b = res.label.split(" vs ")
        rows.append({"model_a": a, "model_b": b, "wins_a": wins[a], "wins_b": wins[b], "z": res.statistic,
                     "p": res.p_value, "p_adj": res.adjusted_p, "significant": res.adjusted_p < alpha})
    return pd.DataFrame(rows)


def glm_outputs(df: pd.DataFrame, ref: str | None) -> tuple[pd.DataFrame, dict]:
    models = sorted(df["model_id"].unique())
    ref = ref or models[0]
    if ref not in models:
        raise InputError(f"reference model {ref!r} not in data ({', '.join(models)})")
    fit = win_glm(df, ref)
    t = fit.table()
    rows = [{"model": f"{ref} (ref)", "estimate": None, "se": None, "z": None, "p": None,
             "odds_ratio": 1.0, "ci_low": None, "ci_high": None}]
    for r in t.itertuples():
        if r.term == "(Intercept)":
            continue
        rows.append({"model": r.term[len("model_id["):-1], "estimate": r.estimate, "se": r.se, "z": r.z, "p": r.p,
                     "odds_ratio": r.odds_ratio, "ci_low": r.ci_low, "ci_high": r.ci_high})
    meta = {"reference": ref, "intercept": float(t.loc[0, "estimate"]), "deviance": fit.deviance,
            "residual_df": fit.residual_df, "dispersion_ratio": fit.dispersion_ratio,
            "converged": fit.converged, "iterations": fit.iterations, "n": int(len(df))}
    return pd.DataFrame(rows), meta


def gee_outputs(df: pd.DataFrame, ref: str | None, include_model=True, include_vignette=True) -> tuple[pd.DataFrame, dict]:
    fit = win_gee(df, ref, include_model, include_vignette)
    meta = {"alpha": fit.alpha, "scale": fit.scale, "clusters": fit.n_clusters, "converged": fit.converged,
            "iterations": fit.iterations}
    return fit.table(), meta


def model_metric_matrix(df: pd.DataFrame, metrics=PCA_METRICS) -> pd.DataFrame:
    units = M.per_unit_metrics(df)
    table = M.summarize(units, ("model_id",), metrics).table
    return table.set_index("model_id")[list(metrics)].fillna(0.0)


def pca_outputs(df: pd.DataFrame, metrics=PCA_METRICS):
    mat = model_metric_matrix(df, metrics)
    res = pca(mat.to_numpy(), list(mat.columns))
    pcs = [f"PC{i + 1}" for i in range(len(res.columns))]
    scores = pd.DataFrame(res.scores, columns=pcs)
    scores.insert(0, "model", list(mat.index))
    loadings = pd.DataFrame(res.loadings, columns=pcs)
    loadings.insert(0, "metric", res.columns)
    var = pd.DataFrame({"component": pcs, "variance_explained": res.variance_explained})
    return scores, loadings, var


def cluster_outputs(df: pd.DataFrame, k: int, metrics=PCA_METRICS):
    mat = model_metric_matrix(df, metrics)
    z, _, _ = standardize(mat.to_numpy(), list(mat.columns))
    tree = ward_cluster(z)
    merges = pd.DataFrame(tree.merges, columns=["a", "b", "height", "size"]).astype({"a": int, "b": int, "size": int})
    k = min(k, tree.n)
    labels = cut(tree, k)
    assign = pd.DataFrame({"model": list(mat.index), "cluster": labels})
    return merges, assign


def cmd_stats(args) -> int:
    df = _load(args.csv, args.condition)
    what = args.what
    if what == "wins":
        table, chi = win_table(df)
        _emit(args.out, "wins.csv", table)
        _emit_json(args.out, "chi_square.json", chi)
        print(f"chi2({chi['df']}) = {chi['statistic']:.2f}, p = {chi['p_value']:.3g}")
    elif what == "pairwise":
        _emit(args.out, "pairwise.csv", pairwise_table(df, args.alpha))
    elif what == "glm":
        table, meta = glm_outputs(df, args.ref)
        _emit(args.out, "glm_table.csv", table)
        _emit_json(args.out, "glm_fit.json", meta)
    elif what == "gee":
        table, meta = gee_outputs(df, args.ref, not args.no_model, not args.no_vignette)
        _emit(args.out, "gee_table.csv", table)
        _emit_json(args.out, "gee_fit.json", meta)
    elif what == "pca":
        scores, loadings, var = pca_outputs(df)
        _emit(args.out, "pca_scores.csv", scores)
        _emit(args.out, "pca_loadings.csv", loadings)
        _emit(args.out, "pca_variance.csv", var)
    elif what == "cluster":
        merges, assign = cluster_outputs(df, args.k)
        _emit(args.out, "cluster_tree.csv", merges)
        _emit(args.out, "cluster_assignments.csv", assign)
    return EXIT_OK


# ---------------------------------------------------------------- themes


def _classifiers(names: list[str] | None, url: str | None, rate: float | None):
    names = names or ["llama3", "gemma3"]
    out, client = [], None
    for name in names:
        if name == "mock":
            out.append(T.MockClassifier())
        else:
            client = client or BackendClient(backend_url(url), rate_limit=None)
            out.append(T.BackendClassifier(client, name))
    return out


def cmd_themes(args) -> int:
    if args.what == "annotate":
        df = _load(args.csv)
        classifiers = _classifiers(args.classifier, args.backend_url, args.rate_limit)
        out = T.annotate_dataset(df, classifiers, rate_limit=args.rate_limit, checkpoint=args.checkpoint,
                                 workers=args.workers)
        write_table(out, args.out)
        unknown = {s: int((out[f"{s}_theme"] == T.UNKNOWN).sum()) for s in T.STAGES}
        print(f"wrote {args.out}: {len(out)} rows; UNKNOWN per stage {unknown}")
    elif args.what == "sample":
        df = _load(args.csv)
        sample = T.sample_for_agreement(df, args.fraction, args.seed)
        write_table(sample, args.out)
        print(f"wrote {args.out}: {len(sample)} texts")
    elif args.what == "agreement":
        human = pd.read_csv(args.human, dtype=str, keep_default_na=False)
        ann = _load(args.csv)
        try:
            report = T.agreement_report(human, ann, args.classifier)
        except T.AgreementError as exc:
            raise InputError(str(exc)) from exc
        _emit(args.out, "agreement.csv", report)
        for r in report.itertuples():
            if r.below_bar:
                print(f"warning: kappa {r.kappa:.2f} for {r.stage}/{r.classifier} is below {T.KAPPA_BAR}", file=sys.stderr)
    elif args.what == "trends":
        df = _load(args.csv)
        if not T.is_annotated(df):
            raise InputError("table has no theme annotations; run 'themes annotate' first")
        _emit(args.out, "theme_trends.csv", T.theme_trends(df))
        _emit(args.out, "theme_persistence.csv", T.persistence_table(df, method=args.or_method))
    return EXIT_OK


# ---------------------------------------------------------------- report


def cmd_report(args) -> int:
    df = _load(args.csv)
    out = args.out
    _emit(out, "metrics_by_model.csv", metrics_report(df, "model"))
    _emit(out, "mention_rates.csv", M.mention_rates(df))
    hetero = df[df["condition"] == "hetero"].reset_index(drop=True)
    if hetero.empty:
        print("notice: no heterogeneous rows; inference tables skipped")
    else:
        table, chi = win_table(hetero)
        _emit(out, "wins.csv", table)
        _emit_json(out, "chi_square.json", chi)
        _emit(out, "pairwise.csv", pairwise_table(hetero))
        glm_t, glm_meta = glm_outputs(hetero, args.ref if args.ref in set(hetero["model_id"]) else None)
        _emit(out, "glm_table.csv", glm_t)
        _emit_json(out, "glm_fit.json", glm_meta)
        if hetero["run_id"].nunique() >= 2:
            gee_t, gee_meta = gee_outputs(hetero, glm_meta["reference"])
            _emit(out, "gee_table.csv", gee_t)
            _emit_json(out, "gee_fit.json", gee_meta)
    if df["model_id"].nunique() >= 2:
        scores, loadings, var = pca_outputs(df)
        _emit(out, "pca_scores.csv", scores)
        _emit(out, "pca_loadings.csv", loadings)
        _emit(out, "pca_variance.csv", var)
        merges, assign = cluster_outputs(df, args.k)
        _emit(out, "cluster_tree.csv", merges)
        _emit(out, "cluster_assignments.csv", assign)
    if T.is_annotated(df):
        _emit(out, "theme_trends.csv", T.theme_trends(df))
        _emit(out, "theme_persistence.csv", T.persistence_table(df))
        _emit(out, "theme_consistency.csv", M.proposal_vote_consistency(df))
    else:
        print("notice: no theme annotations; theme tables skipped")
    print(f"report written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nomiclaw", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="play games from a manifest and write JSON logs")
    s.add_argument("manifest")
    s.add_argument("--out", help="log directory (overrides manifest)")
    s.add_argument("--jobs", type=int, help="parallel games (env NOMIC_JOBS)")
    s.add_argument("--backend-url", help="model server URL (env NOMIC_BACKEND_URL)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("export", help="flatten logs to the analysis CSV")
    s.add_argument("logs")
    s.add_argument("csv")
    s.add_argument("--allow-unbalanced", action="store_true")
    s.set_defaults(func=cmd_export)

    s = sub.add_parser("metrics", help="interaction metrics per model")
    s.add_argument("csv")
    s.add_argument("--by", choices=sorted(BY), default="model")
    s.add_argument("--condition", default="all", help="hetero, homo or all")
    s.add_argument("--ri-mode", choices=("supporter", "round"), default="supporter")
    s.add_argument("--fmw-mode", choices=("round1", "final"), default="round1")
    s.add_argument("--units", action="store_true", help="also write per agent-run values")
    s.add_argument("--out")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("stats", help="win-rate inference and multivariate analyses")
    s.add_argument("what", choices=("wins", "pairwise", "glm", "gee", "pca", "cluster"))
    s.add_argument("csv")
    s.add_argument("--condition", default="hetero")
    s.add_argument("--ref", help="reference model for glm/gee")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("-k", type=int, default=3, help="clusters to cut")
    s.add_argument("--no-model", action="store_true", help="gee: drop the model factor")
    s.add_argument("--no-vignette", action="store_true", help="gee: drop the vignette factor")
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("themes", help="theme annotation, sampling, agreement and trends")
    s.add_argument("what", choices=("annotate", "sample", "agreement", "trends"))
    s.add_argument("csv", help="analysis CSV (annotated for agreement/trends)")
    s.add_argument("--human", help="agreement: completed human-label CSV")
    s.add_argument("--classifier", action="append", help="'mock' or a model id; repeatable")
    s.add_argument("--backend-url")
    s.add_argument("--rate-limit", type=float, default=None, help="requests per second")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--checkpoint", help="JSON-lines progress file for resumable annotation")
    s.add_argument("--fraction", type=float, default=0.10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--or-method", choices=("marginal", "conditional"), default="marginal")
    s.add_argument("--out")
    s.set_defaults(func=cmd_themes)

    s = sub.add_parser("report", help="all figure-ready tables into one directory")
    s.add_argument("csv")
    s.add_argument("--out", required=True)
    s.add_argument("--ref", default="deepseek-r1")
    s.add_argument("-k", type=int, default=3)
    s.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "themes":
        if args.what in ("annotate", "sample") and not args.out:
            parser.error(f"themes {args.what} needs --out")
        if args.what == "agreement" and not args.human:
            parser.error("themes agreement needs --human")
    try:
        return args.func(args)
    except (InputError, ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:
        logger.debug("unhandled", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
