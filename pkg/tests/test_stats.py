"""Quality filters, match scores, and the self-contained test statistics."""
import itertools
import math

import numpy as np
import pytest
import scipy.stats

from cfstudy import stats
from cfstudy.survey import DONT_KNOW, PREFER_NOT_TO_ANSWER

MIXED_LIKERT = {3: 4, 4: 2, 5: 4, 6: 3, 7: PREFER_NOT_TO_ANSWER, 8: 1, 9: 5, 10: 4}


def make_session(**overrides):
    """A clean 12-trial session that trips no filter."""
    choices = [(0, 2, 0, 1, i % 7) for i in range(12)]  # no block ever repeats
    base = dict(
        session_id="s0",
        condition="control",
        experiment=1,
        choices=choices,
        pack_after=[20 + 2 * i for i in range(12)],
        decision_time_ms=[3000 + 100 * i for i in range(12)],
        growth=[1.36] * 12,
        delta=[4] * 12,
        attention_correct=[True, True],
        likert=dict(MIXED_LIKERT),
        relevant_plants=frozenset({2, 4, 5}),
        irrelevant_plants=frozenset({1, 3}),
        age_band="25-34y",
        gender="female",
    )
    base.update(overrides)
    return stats.SessionData(**base)


def test_clean_session_has_no_flags():
    flags = stats.quality_flags(make_session())
    assert not flags.any()
    assert (flags.speeder, flags.inattentive, flags.straightliner_game, flags.straightliner_survey) == (
        False,
        False,
        False,
        False,
    )


def test_speeder_boundary():
    fast = [1999] * 4 + [3000] * 8
    assert stats.flag_speeder(make_session(decision_time_ms=fast))
    assert not stats.flag_speeder(make_session(decision_time_ms=[1999] * 3 + [3000] * 9))
    # exactly at the threshold is not "under two seconds"
    assert not stats.flag_speeder(make_session(decision_time_ms=[2000] * 12))
    with pytest.raises(ValueError):
        stats.flag_speeder(make_session(decision_time_ms=[3000] * 5))


def test_inattentive_rules():
    assert stats.flag_inattentive(make_session(attention_correct=[False, False]))
    assert not stats.flag_inattentive(make_session(attention_correct=[False, True]))
    assert not stats.flag_inattentive(make_session(attention_correct=[True, False]))
    # answering the catch item with anything but the instructed option fails
    bad_catch = {**MIXED_LIKERT, 7: 3}
    assert stats.flag_inattentive(make_session(likert=bad_catch))
    with pytest.raises(ValueError):
        stats.flag_inattentive(make_session(attention_correct=[True]))
    with pytest.raises(ValueError):
        stats.flag_inattentive(make_session(likert={3: 4}))


def test_straightliner_game():
    same = [(0, 0, 0, 0, 0)] * 12
    flat = [2] * 12
    assert stats.flag_straightliner_game(make_session(choices=same, pack_after=flat))
    # repeating choices while the pack still grows is fine
    assert not stats.flag_straightliner_game(make_session(choices=same, pack_after=[20 + i for i in range(12)]))
    # two stagnant repeats stay under the threshold of three
    mixed = same[:6] + [(1, 0, 0, 0, 0)] * 2 + [(2, 0, 0, 0, 0)] * 2 + [(3, 0, 0, 0, 0)] * 2
    assert not stats.flag_straightliner_game(make_session(choices=mixed, pack_after=flat))


def test_straightliner_survey():
    positive = {i: 4 for i in (3, 4, 5, 6, 8, 9, 10)}
    positive[7] = PREFER_NOT_TO_ANSWER
    assert stats.flag_straightliner_survey(make_session(likert=positive))
    negative = {i: (1 if i % 2 else 2) for i in (3, 4, 5, 6, 8, 9, 10)}
    negative[7] = PREFER_NOT_TO_ANSWER
    assert stats.flag_straightliner_survey(make_session(likert=negative))
    all_pna = {i: PREFER_NOT_TO_ANSWER for i in (3, 4, 5, 6, 7, 8, 9, 10)}
    assert stats.flag_straightliner_survey(make_session(likert=all_pna))
    assert not stats.flag_straightliner_survey(make_session())
    # a neutral answer breaks a run of positives
    softened = {**positive, 5: 3}
    assert not stats.flag_straightliner_survey(make_session(likert=softened))


def test_match_score():
    assert stats.match_score(frozenset({2, 4, 5}), "relevant", 1) == 5
    assert stats.match_score(frozenset({2, 4}), "relevant", 1) == 4
    assert stats.match_score(frozenset({1, 3}), "irrelevant", 1) == 5
    assert stats.match_score(frozenset({2, 4}), "relevant", 2) == 5
    assert stats.match_score(frozenset(), "relevant", 1) == 2
    assert stats.match_score(DONT_KNOW, "relevant", 1) == 2  # counts as selecting nothing
    assert stats.match_score(None, "irrelevant", 1) == 3
    assert stats.match_score(frozenset({1, 2, 3, 4, 5}), "relevant", 1) == 3
    with pytest.raises(ValueError):
        stats.match_score(frozenset(), "important", 1)


def exact_mwu_p(a, b):
    # Brute-force two-sided p by enumerating all group assignments.
    pooled = sorted(a + b)
    ranks = {v: i + 1 for i, v in enumerate(pooled)}
    observed = sum(ranks[v] for v in a)
    n1 = len(a)
    sums = [sum(combo) for combo in itertools.combinations(range(1, len(pooled) + 1), n1)]
    total = len(sums)
    p_low = sum(1 for s in sums if s <= observed) / total
    p_high = sum(1 for s in sums if s >= observed) / total
    return min(1.0, 2.0 * min(p_low, p_high))


def test_mwu_frozen_example():
    result = stats.mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert result.statistic == 0.0
    assert result.p_value == pytest.approx(0.1)
    assert result.method == "exact"
    assert result.effect_size == pytest.approx(1.0)
    assert result.effect_kind == "rank_biserial_r"


def test_mwu_exact_matches_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n1, n2 = rng.integers(2, 7, size=2)
        pool = rng.permutation(100)[: n1 + n2].astype(float)  # distinct values, no ties
        a, b = list(pool[:n1]), list(pool[n1:])
        result = stats.mann_whitney_u(a, b)
        assert result.method == "exact"
        assert result.p_value == pytest.approx(exact_mwu_p(a, b))
        ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided", method="exact")
        assert result.p_value == pytest.approx(ref.pvalue)
        assert result.statistic == pytest.approx(ref.statistic)


def test_mwu_ties_fall_back_to_normal_approximation():
    result = stats.mann_whitney_u([1, 2, 2, 3], [2, 4, 5, 6])
    assert result.method == "normal_approx"
    ref = scipy.stats.mannwhitneyu(
        [1, 2, 2, 3], [2, 4, 5, 6], alternative="two-sided", method="asymptotic", use_continuity=True
    )
    assert result.p_value == pytest.approx(ref.pvalue)
    assert result.statistic == pytest.approx(ref.statistic)


def test_mwu_large_samples_use_normal_approximation():
    rng = np.random.default_rng(2)
    a = list(rng.normal(0.0, 1.0, size=15))
    b = list(rng.normal(0.8, 1.0, size=15))
    result = stats.mann_whitney_u(a, b)
    assert result.method == "normal_approx"
    ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True)
    assert result.p_value == pytest.approx(ref.pvalue)


def test_mwu_is_rank_based():
    a, b = [1.0, 2.0, 5.0], [3.0, 8.0, 9.0]
    plain = stats.mann_whitney_u(a, b)
    squashed = stats.mann_whitney_u([math.tanh(v) for v in a], [math.tanh(v) for v in b])
    assert plain.statistic == squashed.statistic
    assert plain.p_value == squashed.p_value


def test_mwu_rejects_empty():
    with pytest.raises(ValueError):
        stats.mann_whitney_u([], [1.0])


def test_welch_identical_samples():
    result = stats.welch_t([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert result.statistic == 0.0
    assert result.p_value == pytest.approx(1.0)
    assert result.effect_size == 0.0
    assert result.effect_kind == "cohens_d"


def test_welch_matches_reference():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = list(rng.normal(0.0, 1.0, size=int(rng.integers(3, 20))))
        b = list(rng.normal(0.5, 2.0, size=int(rng.integers(3, 20))))
        result = stats.welch_t(a, b)
        ref = scipy.stats.ttest_ind(a, b, equal_var=False)
        assert result.statistic == pytest.approx(ref.statistic, rel=1e-10)
        assert result.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_welch_antisymmetry():
    a, b = [1.0, 2.0, 4.0], [2.0, 5.0, 9.0, 3.0]
    fwd = stats.welch_t(a, b)
    rev = stats.welch_t(b, a)
    assert fwd.statistic == pytest.approx(-rev.statistic)
    assert fwd.p_value == pytest.approx(rev.p_value)


def test_welch_degenerate_inputs():
    with pytest.raises(ValueError):
        stats.welch_t([1.0], [2.0, 3.0])
    with pytest.raises(ValueError):
        stats.welch_t([2.0, 2.0], [3.0, 3.0])


def simulate_lmm_rows(n_per_group, n_trials, sd_subject, sd_noise, seed):
    rng = np.random.default_rng(seed)
    rows = []
    for g_idx, group in enumerate(("control", "cfe")):
        for s in range(n_per_group):
            subject = f"{group}-{s:02d}"
            intercept = rng.normal(0.0, sd_subject)
            for t in range(1, n_trials + 1):
                mean = 10.0 + 2.0 * g_idx + (0.3 + 0.5 * g_idx) * t
                rows.append((subject, group, t, mean + intercept + rng.normal(0.0, sd_noise)))
    return rows


def test_lmm_lambda_zero_is_ols():
    rows = simulate_lmm_rows(6, 5, 1.0, 0.5, seed=4)
    fit = stats.fit_lmm_random_intercept(rows, lambda_override=0.0)
    y, X, _, _, names = stats._lmm_design(rows)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    for name, ols_value in zip(names, beta):
        assert fit.fixed_effects[name] == pytest.approx(ols_value, abs=1e-6)
    assert fit.sigma2_subject == 0.0


def test_lmm_design_names_and_reference_level():
    rows = simulate_lmm_rows(2, 3, 0.1, 0.1, seed=5)
    _, _, _, n_subjects, names = stats._lmm_design(rows)
    assert n_subjects == 4
    # groups are ordered alphabetically, so "cfe" is the reference level
    assert names[:2] == ["intercept", "group[control]"]
    assert "trial[2]" in names and "group[control]:trial[3]" in names
    assert "trial[1]" not in names


def test_lmm_recovers_variance_components():
    rows = simulate_lmm_rows(30, 8, sd_subject=1.0, sd_noise=0.6, seed=6)
    fit = stats.fit_lmm_random_intercept(rows)
    assert fit.converged
    assert fit.sigma2_subject == pytest.approx(1.0, rel=0.3)
    assert fit.sigma2_residual == pytest.approx(0.36, rel=0.3)
    # group effect at the final trial: 2.0 + 0.5 * 8 relative to control... the
    # contrast here is control-minus-cfe, so the signs flip
    assert fit.fixed_effects["group[control]"] < 0


def test_lmm_profile_is_maximised():
    rows = simulate_lmm_rows(10, 6, 0.8, 0.5, seed=7)
    fit = stats.fit_lmm_random_intercept(rows)
    for lam in (0.0, 0.01, 0.1, 1.0, 10.0, 100.0):
        pinned = stats.fit_lmm_random_intercept(rows, lambda_override=lam)
        assert fit.reml_loglik >= pinned.reml_loglik - 1e-6


def test_lmm_rejects_bad_designs():
    with pytest.raises(stats.LmmError):
        stats.fit_lmm_random_intercept([])
    one_group = [("s1", "control", 1, 1.0), ("s1", "control", 2, 2.0), ("s2", "control", 1, 1.5), ("s2", "control", 2, 2.5)]
    with pytest.raises(stats.LmmError):
        stats.fit_lmm_random_intercept(one_group)
    switcher = [
        ("s1", "control", 1, 1.0),
        ("s1", "cfe", 2, 2.0),
        ("s2", "cfe", 1, 1.0),
        ("s3", "control", 1, 1.0),
    ]
    with pytest.raises(stats.LmmError):
        stats.fit_lmm_random_intercept(switcher)
    with pytest.raises(stats.LmmError):
        rows = simulate_lmm_rows(4, 3, 0.5, 0.5, seed=8)
        stats.fit_lmm_random_intercept(rows, lambda_override=-1.0)


def test_lmm_names_singular_columns():
    # every subject sees only trial 1, so the trial dummies never vary
    rows = []
    for group in ("control", "cfe"):
        for s in range(3):
            rows.append((f"{group}{s}", group, 1, float(s)))
            rows.append((f"{group}{s}", group, 2, float(s)))
    # drop all trial-2 rows of one group: the interaction column duplicates others
    rows = [r for r in rows if not (r[1] == "cfe" and r[2] == 2)]
    with pytest.raises(stats.LmmError) as err:
        stats.fit_lmm_random_intercept(rows)
    assert "singular" in str(err.value)


def test_per_trial_summary():
    sessions = [
        make_session(session_id="a", condition="control", pack_after=[10] * 12),
        make_session(session_id="b", condition="control", pack_after=[20] * 12),
        make_session(session_id="c", condition="cfe", pack_after=[30] * 12),
    ]
    rows = stats.per_trial_summary(sessions)
    assert len(rows) == 24
    control_t1 = next(r for r in rows if r["condition"] == "control" and r["trial"] == 1)
    assert control_t1["n"] == 2
    assert control_t1["pack_mean"] == 15.0
    assert control_t1["pack_sem"] == pytest.approx(5.0)
    cfe_t1 = next(r for r in rows if r["condition"] == "cfe" and r["trial"] == 1)
    assert cfe_t1["n"] == 1
    assert math.isnan(cfe_t1["pack_sem"])  # one session, no spread estimate


def test_per_trial_summary_excludes_flagged():
    speeder = make_session(session_id="fast", condition="cfe", decision_time_ms=[500] * 12)
    clean = make_session(session_id="ok", condition="cfe")
    rows = stats.per_trial_summary([speeder, clean, make_session(session_id="c", condition="control")])
    cfe_rows = [r for r in rows if r["condition"] == "cfe"]
    assert all(r["n"] == 1 for r in cfe_rows)
    with pytest.raises(ValueError):
        stats.per_trial_summary([speeder, make_session(session_id="c", condition="control")])
    with pytest.raises(ValueError):
        stats.per_trial_summary([])
