import math

import numpy as np
import pandas as pd
import pytest
import statsmodels.api as sm
from scipy import stats as sps
from scipy.cluster.hierarchy import linkage
from sklearn.metrics import cohen_kappa_score
from statsmodels.stats.multitest import multipletests

from nomiclaw.stats import (
    SingularCovarianceError,
    UndefinedKappa,
    benjamini_hochberg,
    chi2_sf,
    chi_square_gof,
    cohens_kappa,
    cut,
    design_matrix,
    gammaincc,
    gee_logit_exchangeable,
    glm_logit,
    kappa_from_table,
    norm_two_sided,
    pairwise_win_tests,
    pca,
    theme_persistence_or,
    two_prop_z,
    ward_cluster,
    win_gee,
    win_glm,
)
from nomiclaw.synthetic import HETERO_WIN_COUNTS
from oracles import brute_ward, exchangeable_clusters

# --- distributions -----------------------------------------------------------


@pytest.mark.parametrize("a, x", [(0.5, 0.1), (1, 1), (4.5, 23.9), (4.5, 2.0), (10, 3), (30, 80), (2.5, 0.0)])
def test_gammaincc_vs_scipy(a, x):
    from scipy.special import gammaincc as ref

    assert gammaincc(a, x) == pytest.approx(ref(a, x), rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("x, df", [(47.78, 9), (3.84, 1), (0.5, 3), (200, 9), (12.0, 44)])
def test_chi2_sf_vs_scipy(x, df):
    assert chi2_sf(x, df) == pytest.approx(sps.chi2.sf(x, df), rel=1e-9)


@pytest.mark.parametrize("z", [0.0, 0.5, 1.96, 3.3, 6.0, 9.5])
def test_normal_tail_vs_scipy(z):
    assert norm_two_sided(z) == pytest.approx(2 * sps.norm.sf(z), rel=1e-10)
    assert norm_two_sided(-z) == norm_two_sided(z)


# --- chi-square, z tests, BH -------------------------------------------------


def test_chi_square_win_counts():
    r = chi_square_gof(list(HETERO_WIN_COUNTS.values()))
    assert r.statistic == pytest.approx(430 / 9)
    assert r.df == 9
    ref = sps.chisquare(list(HETERO_WIN_COUNTS.values()))
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_chi_square_uniform_is_zero():
    r = chi_square_gof([5, 5, 5, 5])
    assert (r.statistic, r.p_value) == (0.0, 1.0)


def test_chi_square_rejects_zero_total():
    with pytest.raises(ValueError):
        chi_square_gof([0, 0])


def test_two_prop_z_vs_statsmodels():
    from statsmodels.stats.proportion import proportions_ztest

    z, p = proportions_ztest([21, 2], [120, 120])
    r = two_prop_z(21, 120, 2, 120)
    assert r.statistic == pytest.approx(z, rel=1e-12)
    assert r.p_value == pytest.approx(p, rel=1e-9)
    assert r.statistic == pytest.approx(4.17, abs=0.01)


def test_two_prop_z_degenerate():
    with pytest.raises(ValueError, match="degenerate"):
        two_prop_z(0, 10, 0, 10)
    res = pairwise_win_tests({"a": 0, "b": 0, "c": 3}, {"a": 10, "b": 10, "c": 10})
    assert res[0].p_value == 1.0


def test_bh_example():
    assert benjamini_hochberg([0.001, 0.01, 0.02, 0.04]) == pytest.approx([0.004, 0.02, 0.0266667, 0.04], abs=1e-4)


@pytest.mark.parametrize("seed", range(10))
def test_bh_vs_statsmodels(seed):
    p = np.random.default_rng(seed).uniform(0, 0.2, size=45)
    p[3] = p[7]  # a tie
    ours = benjamini_hochberg(list(p))
    assert ours == pytest.approx(list(multipletests(p, method="fdr_bh")[1]), rel=1e-12)
    assert all(q >= x for q, x in zip(ours, p))


def test_bh_monotone_in_rank():
    p = [0.03, 0.001, 0.5, 0.02]
    q = benjamini_hochberg(p)
    order = sorted(range(4), key=p.__getitem__)
    assert all(q[order[i]] <= q[order[i + 1]] for i in range(3))


def test_pairwise_has_45_pairs():
    totals = {m: 120 for m in HETERO_WIN_COUNTS}
    res = pairwise_win_tests(dict(HETERO_WIN_COUNTS), totals)
    assert len(res) == 45
    assert len({r.label for r in res}) == 45


# --- GLM -----------------------------------------------------------------------


def win_rows(counts=HETERO_WIN_COUNTS, n=120):
    rows = []
    for m, w in counts.items():
        rows += [{"model_id": m, "won": k < w} for k in range(n)]
    return pd.DataFrame(rows)


def test_glm_closed_form():
    fit = win_glm(win_rows(), "deepseek-r1")
    logit = lambda p: math.log(p / (1 - p))  # noqa: E731
    base = logit(21 / 120)
    est = dict(zip(fit.names, fit.estimates))
    assert est["(Intercept)"] == pytest.approx(base, abs=1e-9)
    assert est["model_id[gemma2]"] == pytest.approx(logit(4 / 120) - base, abs=1e-9)
    se = dict(zip(fit.names, fit.standard_errors))
    expect = math.sqrt(1 / 21 + 1 / 99 + 1 / 4 + 1 / 116)
    assert se["model_id[gemma2]"] == pytest.approx(expect, rel=1e-8)


def test_glm_vs_statsmodels():
    rng = np.random.default_rng(3)
    x = np.column_stack([np.ones(400), rng.normal(size=400), rng.integers(0, 2, 400)])
    y = (rng.uniform(size=400) < 1 / (1 + np.exp(-(0.3 + 0.8 * x[:, 1] - 0.5 * x[:, 2])))).astype(float)
    ours = glm_logit(x, y)
    ref = sm.GLM(y, x, family=sm.families.Binomial()).fit()
    assert ours.estimates == pytest.approx(ref.params, abs=1e-6)
    assert ours.standard_errors == pytest.approx(ref.bse, abs=1e-6)
    assert ours.deviance == pytest.approx(ref.deviance, rel=1e-8)
    assert ours.ci_low == pytest.approx(np.exp(ref.conf_int()[:, 0]), rel=1e-3)  # odds-ratio scale


def test_glm_separation_reported():
    x = np.column_stack([np.ones(8), [0, 0, 0, 0, 1, 1, 1, 1]])
    y = np.array([0, 0, 0, 0, 1, 1, 1, 1.0])
    fit = glm_logit(x, y)
    assert not fit.converged or np.all(np.abs(fit.estimates) > 10)


def test_design_matrix_reference():
    df = pd.DataFrame({"model_id": ["b", "a", "c"]})
    x, names = design_matrix(df, ["model_id"], {"model_id": "b"})
    assert names == ["(Intercept)", "model_id[a]", "model_id[c]"]
    assert x.tolist() == [[1, 0, 0], [1, 1, 0], [1, 0, 1]]


def test_dispersion_ratio():
    fit = win_glm(win_rows(), "deepseek-r1")
    assert fit.dispersion_ratio == pytest.approx(0.49, abs=0.01)


# --- GEE -----------------------------------------------------------------------


def test_gee_singletons_equal_glm():
    rng = np.random.default_rng(8)
    x = np.column_stack([np.ones(300), rng.normal(size=300)])
    y = (rng.uniform(size=300) < 1 / (1 + np.exp(-(0.2 - 0.7 * x[:, 1])))).astype(float)
    glm = glm_logit(x, y)
    gee = gee_logit_exchangeable(x, y, np.arange(300))
    assert gee.estimates == pytest.approx(glm.estimates, abs=1e-6)


def test_gee_alpha_recovery():
    rng = np.random.default_rng(2024)
    y, g = exchangeable_clusters(200, 10, 0.3, 0.3, rng)
    x = np.column_stack([np.ones(len(y)), rng.normal(size=len(y))])
    fit = gee_logit_exchangeable(x, y, g)
    assert fit.alpha == pytest.approx(0.3, abs=0.1)


def test_gee_vs_statsmodels():
    rng = np.random.default_rng(5)
    y, g = exchangeable_clusters(60, 5, 0.4, 0.2, rng)
    x = np.column_stack([np.ones(len(y)), rng.normal(size=len(y))])
    ours = gee_logit_exchangeable(x, y, g)
    ref = sm.GEE(y, x, groups=g, family=sm.families.Binomial(), cov_struct=sm.cov_struct.Exchangeable()).fit()
    assert ours.estimates == pytest.approx(ref.params, abs=1e-4)
    assert ours.standard_errors == pytest.approx(ref.bse, rel=1e-3)


def test_gee_singular_design():
    x = np.column_stack([np.ones(20), np.ones(20)])
    with pytest.raises(SingularCovarianceError):
        gee_logit_exchangeable(x, np.r_[np.ones(10), np.zeros(10)], np.repeat(np.arange(4), 5))


def test_exchangeable_inverse_singular():
    from nomiclaw.stats.gee import _exchangeable_inverse

    with pytest.raises(SingularCovarianceError):
        _exchangeable_inverse(4, 1.0)


def test_win_gee_on_fixture(win_table):
    fit = win_gee(win_table, "deepseek-r1")
    assert fit.n_clusters == 24
    tbl = fit.table().set_index("term")
    vig = [t for t in tbl.index if t.startswith("vignette_id[")]
    assert len(vig) == 3
    assert (tbl.loc[vig, "wald_p"] > 0.05).all()


# --- agreement -----------------------------------------------------------------


def test_kappa_table():
    k = kappa_from_table([[20, 5], [10, 15]])
    assert k.kappa == pytest.approx(0.4, abs=1e-12)
    assert (k.p_o, k.p_e) == pytest.approx((0.7, 0.5))


@pytest.mark.parametrize("seed", range(5))
def test_kappa_vs_sklearn(seed):
    rng = np.random.default_rng(seed)
    a = rng.choice(list("ABCD"), 200)
    b = np.where(rng.uniform(size=200) < 0.7, a, rng.choice(list("ABCD"), 200))
    assert cohens_kappa(list(a), list(b)).kappa == pytest.approx(cohen_kappa_score(a, b), abs=1e-12)


def test_kappa_undefined():
    with pytest.raises(UndefinedKappa):
        cohens_kappa(["A"] * 5, ["A"] * 5)
    with pytest.raises(ValueError):
        cohens_kappa(["A"], ["A", "B"])


def test_persistence_or():
    a = ["HARM"] * 9 + ["JUST"] * 1
    b = ["HARM"] * 5 + ["SOLI"] * 3 + ["JUST"] * 2
    ors = theme_persistence_or(a, b, ["HARM", "SOLI", "JUST", "LEG"])
    assert ors["SOLI"] == math.inf
    assert ors["LEG"] is None
    assert ors["JUST"] == pytest.approx((0.2 / 0.8) / (0.1 / 0.9))


def test_persistence_or_example():
    a = ["X"] * 10 + ["Y"] * 90
    b = ["X"] * 236 + ["Y"] * 764
    # unequal lengths are not allowed for paired data, so pad with UNKNOWN
    a += ["UNKNOWN"] * (len(b) - len(a))
    ors = theme_persistence_or(a, b, ["X"])
    assert ors["X"] == pytest.approx(2.78, abs=0.01)


# --- PCA / Ward ----------------------------------------------------------------


def test_pca_reconstruction_and_sklearn():
    from sklearn.decomposition import PCA

    rng = np.random.default_rng(1)
    data = rng.normal(size=(10, 6)) @ rng.normal(size=(6, 6))
    res = pca(data)
    assert np.max(np.abs(res.reconstruct() - res.standardized)) < 1e-8
    ref = PCA().fit(res.standardized)
    assert res.variance_explained == pytest.approx(ref.explained_variance_ratio_, abs=1e-12)
    assert np.abs(res.scores) == pytest.approx(np.abs(ref.transform(res.standardized)), abs=1e-9)


def test_pca_drops_constant_column():
    data = np.column_stack([np.arange(5.0), np.arange(5.0) ** 2, np.ones(5)])
    with pytest.warns(UserWarning):
        res = pca(data, ["a", "b", "c"])
    assert res.dropped == ["c"] and res.columns == ["a", "b"]


@pytest.mark.parametrize("seed", range(8))
def test_ward_matches_brute_force(seed):
    pts = np.random.default_rng(seed).normal(size=(5, 3))
    tree = ward_cluster(pts)
    brute = brute_ward(pts)
    for row, (a, b, h, n) in zip(tree.merges, brute):
        assert (int(row[0]), int(row[1]), int(row[3])) == (a, b, n)
        assert row[2] == pytest.approx(h, abs=1e-10)
    ref = linkage(pts, method="ward")
    assert tree.heights == pytest.approx(ref[:, 2] ** 2 / 2, abs=1e-10)


def test_ward_tie_break_and_cut():
    pts = np.array([[0.0], [1.0], [10.0], [11.0], [30.0]])
    tree = ward_cluster(pts)
    assert tree.merges[0][:2].tolist() == [0, 1]
    assert tree.merges[1][:2].tolist() == [2, 3]
    labels = cut(tree, 3)
    assert labels[0] == labels[1] != labels[2] == labels[3] != labels[4]
    assert len(set(cut(tree, 5))) == 5 and len(set(cut(tree, 1))) == 1
