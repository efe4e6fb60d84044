"""Quality filters, survey scoring, and group comparisons for exported sessions.

The filters mirror the pre-registered exclusion rules: speeding, failed
attention/catch checks, and straight-lining in the game or the survey.
The test statistics are self-contained (midrank Mann-Whitney with an exact
small-sample distribution, Welch's t via a continued-fraction incomplete
beta, and a profiled-REML random-intercept model), so results do not move
with third-party library versions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import survey as survey_mod
from .datagen import RELEVANT_PLANTS
from .game import Session, TRIALS_PER_SESSION

SPEEDER_THRESHOLD_MS = 2000
SPEEDER_MIN_TRIALS = 4
STAGNANT_BLOCKS_THRESHOLD = 3
EXACT_MWU_MAX_N = 20

POSITIVE_VALENCE = {4, 5}
NEGATIVE_VALENCE = {1, 2}


@dataclass
class SessionData:
    """The slice of a finished session the filters and tests consume."""

    session_id: str
    condition: str
    experiment: int
    choices: list[tuple[int, ...]]
    pack_after: list[int]
    decision_time_ms: list[int]
    growth: list[float]
    delta: list[int]
    attention_correct: list[bool]
    likert: dict[int, int | str]
    relevant_plants: frozenset[int] | str | None
    irrelevant_plants: frozenset[int] | str | None
    age_band: str | None = None
    gender: str | None = None

    @classmethod
    def from_session(cls, session: Session) -> "SessionData":
        resp = session.survey
        return cls(
            session_id=session.id,
            condition=session.condition.value,
            experiment=session.experiment,
            choices=[r.choice for r in session.trials],
            pack_after=[r.pack_after for r in session.trials],
            decision_time_ms=[r.decision_time_ms for r in session.trials],
            growth=[r.growth for r in session.trials],
            delta=[r.delta for r in session.trials],
            attention_correct=[a.correct for a in session.attention],
            likert=dict(resp.likert) if resp else {},
            relevant_plants=resp.relevant_plants if resp else None,
            irrelevant_plants=resp.irrelevant_plants if resp else None,
            age_band=resp.age_band if resp else None,
            gender=resp.gender if resp else None,
        )


@dataclass
class QualityFlags:
    speeder: bool
    inattentive: bool
    straightliner_game: bool
    straightliner_survey: bool

    def any(self) -> bool:
        return self.speeder or self.inattentive or self.straightliner_game or self.straightliner_survey


def _require_complete_game(s: SessionData) -> None:
    if len(s.choices) != TRIALS_PER_SESSION or len(s.decision_time_ms) != TRIALS_PER_SESSION:
        raise ValueError(f"session {s.session_id} has {len(s.choices)} trials, expected {TRIALS_PER_SESSION}")


def flag_speeder(s: SessionData) -> bool:
    """At least four trials decided in under two seconds."""
    _require_complete_game(s)
    fast = sum(1 for t in s.decision_time_ms if t < SPEEDER_THRESHOLD_MS)
    return fast >= SPEEDER_MIN_TRIALS


def flag_inattentive(s: SessionData) -> bool:
    """Both pack-size checks wrong, or the catch item not answered as instructed."""
    if len(s.attention_correct) != 2:
        raise ValueError(f"session {s.session_id} has {len(s.attention_correct)} attention checks, expected 2")
    catch = s.likert.get(survey_mod.CATCH_ITEM)
    if catch is None:
        raise ValueError(f"session {s.session_id} is missing the catch item")
    both_wrong = not any(s.attention_correct)
    catch_failed = catch != survey_mod.PREFER_NOT_TO_ANSWER
    return both_wrong or catch_failed


def flag_straightliner_game(s: SessionData) -> bool:
    """Three or more blocks repeating the previous block's choices without pack growth."""
    _require_complete_game(s)
    n_blocks = TRIALS_PER_SESSION // 2
    stagnant = 0
    for b in range(1, n_blocks):  # compare block b+1 against block b (0-based b)
        c_prev = (s.choices[2 * b - 2], s.choices[2 * b - 1])
        c_here = (s.choices[2 * b], s.choices[2 * b + 1])
        end_prev = s.pack_after[2 * b - 1]
        end_here = s.pack_after[2 * b + 1]
        if c_here == c_prev and end_here <= end_prev:
            stagnant += 1
    return stagnant >= STAGNANT_BLOCKS_THRESHOLD


def flag_straightliner_survey(s: SessionData) -> bool:
    """All answered rating items share one valence (catch item excluded)."""
    answered = []
    for item in survey_mod.VALENCE_ITEMS:
        v = s.likert.get(item)
        if v is None:
            raise ValueError(f"session {s.session_id} is missing rating item {item}")
        if v != survey_mod.PREFER_NOT_TO_ANSWER:
            answered.append(v)
    if not answered:
        return True  # declining every item is treated as straight-lining
    return all(v in POSITIVE_VALENCE for v in answered) or all(v in NEGATIVE_VALENCE for v in answered)


def quality_flags(s: SessionData) -> QualityFlags:
    return QualityFlags(
        speeder=flag_speeder(s),
        inattentive=flag_inattentive(s),
        straightliner_game=flag_straightliner_game(s),
        straightliner_survey=flag_straightliner_survey(s),
    )


def match_score(selection: frozenset[int] | str | None, item_kind: str, experiment: int) -> int:
    """Agreement (0..5) between a plant selection and the ground truth.

    `item_kind` is "relevant" or "irrelevant"; the truth set for the latter
    is the complement. "Don't know" counts as selecting nothing.
    """
    if item_kind not in ("relevant", "irrelevant"):
        raise ValueError(f"unknown item kind {item_kind!r}")
    truth = RELEVANT_PLANTS[experiment]
    if item_kind == "irrelevant":
        truth = frozenset(survey_mod.PLANT_IDS) - truth
    if selection is None or selection == survey_mod.DONT_KNOW:
        chosen: frozenset[int] = frozenset()
    else:
        chosen = frozenset(selection)
    return sum(1 for p in survey_mod.PLANT_IDS if (p in chosen) == (p in truth))


@dataclass
class TestResult:
    statistic: float
    statistic_kind: str  # "U" | "t"
    p_value: float
    effect_size: float
    effect_kind: str  # "rank_biserial_r" | "cohens_d"
    method: str  # "exact" | "normal_approx" | "welch"


def _midranks(values: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Midranks of the pooled sample plus the sizes of tie groups."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    ties: list[int] = []
    i = 0
    sorted_vals = values[order]
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        # ranks i+1 .. j+1 share their average
        avg = (i + j + 2) / 2.0
        ranks[order[i : j + 1]] = avg
        if j > i:
            ties.append(j - i + 1)
        i = j + 1
    return ranks, ties


def _exact_rank_sum_cdf(n1: int, n2: int) -> np.ndarray:
    """Counts of n1-subsets of ranks 1..n1+n2 by rank sum (index = sum)."""
    total = n1 + n2
    max_sum = total * (total + 1) // 2
    counts = np.zeros((n1 + 1, max_sum + 1), dtype=np.float64)
    counts[0, 0] = 1.0
    for rank in range(1, total + 1):
        upper = min(n1, rank)
        for j in range(upper, 0, -1):
            counts[j, rank:] += counts[j - 1, : max_sum + 1 - rank]
    return counts[n1]


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided Mann-Whitney U with midranks.

    The p-value is exact (rank-sum enumeration) for combined n <= 20 with no
    ties, otherwise a normal approximation with tie and continuity
    corrections. The effect size is the absolute rank-biserial correlation.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be nonempty")
    n1, n2 = len(a), len(b)
    pooled = np.concatenate([a, b])
    ranks, ties = _midranks(pooled)
    rank_sum_a = float(ranks[:n1].sum())
    u = rank_sum_a - n1 * (n1 + 1) / 2.0

    if n1 + n2 <= EXACT_MWU_MAX_N and not ties:
        counts = _exact_rank_sum_cdf(n1, n2)
        total = counts.sum()
        r_obs = int(round(rank_sum_a))
        p_low = counts[: r_obs + 1].sum() / total
        p_high = counts[r_obs:].sum() / total
        p = min(1.0, 2.0 * min(p_low, p_high))
        method = "exact"
    else:
        n = n1 + n2
        mu = n1 * n2 / 2.0
        tie_term = sum(t**3 - t for t in ties) / (n * (n - 1)) if n > 1 else 0.0
        sigma2 = n1 * n2 / 12.0 * ((n + 1) - tie_term)
        if sigma2 <= 0:
            p = 1.0
        else:
            z = (abs(u - mu) - 0.5) / math.sqrt(sigma2)
            z = max(z, 0.0)
            p = min(1.0, math.erfc(z / math.sqrt(2.0)))
        method = "normal_approx"

    r = 1.0 - 2.0 * u / (n1 * n2)
    return TestResult(
        statistic=u,
        statistic_kind="U",
        p_value=p,
        effect_size=abs(r),
        effect_kind="rank_biserial_r",
        method=method,
    )


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (Lentz's method)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            break
    return h


def _betainc_reg(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _student_t_two_sided_p(t: float, df: float) -> float:
    """P(|T_df| >= |t|) through the incomplete beta identity."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    x = df / (df + t * t)
    return _betainc_reg(df / 2.0, 0.5, x)


def welch_t(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Welch's unequal-variance t test with Cohen's d on the pooled SD."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise ValueError("both samples need at least two observations")
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        raise ValueError("both samples are constant; the statistic is undefined")
    se2 = va / n1 + vb / n2
    t = float(a.mean() - b.mean()) / math.sqrt(se2)
    df = se2**2 / ((va / n1) ** 2 / (n1 - 1) + (vb / n2) ** 2 / (n2 - 1))
    p = _student_t_two_sided_p(t, df)
    pooled_sd = math.sqrt(((n1 - 1) * va + (n2 - 1) * vb) / (n1 + n2 - 2))
    d = float(a.mean() - b.mean()) / pooled_sd
    return TestResult(
        statistic=t,
        statistic_kind="t",
        p_value=p,
        effect_size=d,
        effect_kind="cohens_d",
        method="welch",
    )


@dataclass
class LmmFit:
    fixed_effects: dict[str, float]
    sigma2_subject: float
    sigma2_residual: float
    reml_loglik: float
    converged: bool


class LmmError(ValueError):
    pass


def _lmm_design(rows: list[tuple[str, str, object, float]]):
    """Build y, X, subject blocks, and column names for the interaction model."""
    subjects: dict[str, str] = {}
    for subj, group, _, _ in rows:
        if subj in subjects and subjects[subj] != group:
            raise LmmError(f"subject {subj!r} appears in two groups")
        subjects[subj] = group
    groups = sorted(set(subjects.values()))
    if len(groups) != 2:
        raise LmmError(f"expected exactly 2 groups, got {groups}")
    for g in groups:
        if sum(1 for v in subjects.values() if v == g) < 2:
            raise LmmError(f"group {g!r} has fewer than 2 subjects")
    trials = sorted({t for _, _, t, _ in rows}, key=lambda v: (str(type(v)), v))
    if len(trials) < 2:
        raise LmmError("need at least 2 trial levels")
    subj_order = sorted(subjects)
    subj_index = {s: i for i, s in enumerate(subj_order)}
    ref_group, alt_group = groups[0], groups[1]
    nontrivial_trials = trials[1:]

    names = ["intercept", f"group[{alt_group}]"]
    names += [f"trial[{t}]" for t in nontrivial_trials]
    names += [f"group[{alt_group}]:trial[{t}]" for t in nontrivial_trials]

    ordered = sorted(range(len(rows)), key=lambda i: (subj_index[rows[i][0]], i))
    n, p = len(rows), len(names)
    X = np.zeros((n, p), dtype=np.float64)
    y = np.empty(n, dtype=np.float64)
    block_of = np.empty(n, dtype=np.int64)
    t_pos = {t: j for j, t in enumerate(nontrivial_trials)}
    for out_i, i in enumerate(ordered):
        subj, group, trial, value = rows[i]
        y[out_i] = value
        block_of[out_i] = subj_index[subj]
        X[out_i, 0] = 1.0
        is_alt = group == alt_group
        if is_alt:
            X[out_i, 1] = 1.0
        if trial in t_pos:
            j = t_pos[trial]
            X[out_i, 2 + j] = 1.0
            if is_alt:
                X[out_i, 2 + len(nontrivial_trials) + j] = 1.0
    return y, X, block_of, len(subj_order), names


def _check_singular(X: np.ndarray, names: list[str]) -> None:
    rank = np.linalg.matrix_rank(X)
    if rank == X.shape[1]:
        return
    # Greedy pass to name the offending columns.
    kept: list[int] = []
    collinear: list[str] = []
    for j in range(X.shape[1]):
        cand = X[:, kept + [j]]
        if np.linalg.matrix_rank(cand) > len(kept):
            kept.append(j)
        else:
            collinear.append(names[j])
    raise LmmError(f"design matrix is singular; collinear terms: {collinear}")


def _profile_reml(y: np.ndarray, X: np.ndarray, block_of: np.ndarray, n_subjects: int, lam: float):
    """GLS fit and REML log-likelihood at a fixed variance ratio lambda."""
    n, p = X.shape
    xtvx = np.zeros((p, p))
    xtvy = np.zeros(p)
    ytvy = 0.0
    logdet_v = 0.0
    per_block: list[tuple[np.ndarray, np.ndarray]] = []
    for s in range(n_subjects):
        rows = np.flatnonzero(block_of == s)
        Xi, yi = X[rows], y[rows]
        ni = len(rows)
        ci = lam / (1.0 + lam * ni)
        sx = Xi.sum(axis=0)
        sy = yi.sum()
        xtvx += Xi.T @ Xi - ci * np.outer(sx, sx)
        xtvy += Xi.T @ yi - ci * sx * sy
        ytvy += float(yi @ yi) - ci * sy * sy
        logdet_v += math.log1p(lam * ni)
        per_block.append((Xi, yi))
    beta = np.linalg.solve(xtvx, xtvy)
    rss = 0.0
    for s in range(n_subjects):
        Xi, yi = per_block[s]
        ri = yi - Xi @ beta
        ni = len(yi)
        ci = lam / (1.0 + lam * ni)
        sr = ri.sum()
        rss += float(ri @ ri) - ci * sr * sr
    sigma2 = rss / (n - p)
    sign, logdet_xtvx = np.linalg.slogdet(xtvx)
    if sign <= 0:
        raise LmmError("X' V^-1 X is not positive definite")
    loglik = -0.5 * (
        (n - p) * (math.log(2.0 * math.pi * sigma2) + 1.0) + logdet_v + logdet_xtvx
    )
    return beta, sigma2, loglik


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def fit_lmm_random_intercept(
    rows: Iterable[tuple[str, str, object, float]],
    lambda_override: float | None = None,
) -> LmmFit:
    """Random-intercept model y ~ group * trial + (1 | subject), REML.

    The subject/residual variance ratio is profiled out and maximised by
    golden-section search over log-lambda in [-10, 10]; the closed-form GLS
    solution handles everything else. `lambda_override` pins the ratio
    (0 collapses to ordinary least squares).
    """
    rows = list(rows)
    if not rows:
        raise LmmError("no rows")
    y, X, block_of, n_subjects, names = _lmm_design(rows)
    _check_singular(X, names)

    if lambda_override is not None:
        if lambda_override < 0:
            raise LmmError("lambda_override must be >= 0")
        beta, sigma2, loglik = _profile_reml(y, X, block_of, n_subjects, lambda_override)
        return LmmFit(
            fixed_effects=dict(zip(names, beta.tolist())),
            sigma2_subject=lambda_override * sigma2,
            sigma2_residual=sigma2,
            reml_loglik=loglik,
            converged=True,
        )

    lo, hi = -10.0, 10.0
    cache: dict[float, float] = {}

    def objective(loglam: float) -> float:
        if loglam not in cache:
            cache[loglam] = _profile_reml(y, X, block_of, n_subjects, math.exp(loglam))[2]
        return cache[loglam]

    a_pt, b_pt = lo, hi
    c_pt = b_pt - _GOLDEN * (b_pt - a_pt)
    d_pt = a_pt + _GOLDEN * (b_pt - a_pt)
    fc, fd = objective(c_pt), objective(d_pt)
    iterations = 0
    while (b_pt - a_pt) >= 1e-6 and iterations < 200:
        if fc >= fd:
            b_pt, d_pt, fd = d_pt, c_pt, fc
            c_pt = b_pt - _GOLDEN * (b_pt - a_pt)
            fc = objective(c_pt)
        else:
            a_pt, c_pt, fc = c_pt, d_pt, fd
            d_pt = a_pt + _GOLDEN * (b_pt - a_pt)
            fd = objective(d_pt)
        iterations += 1
    converged = (b_pt - a_pt) < 1e-6
    best_loglam = (a_pt + b_pt) / 2.0
    lam = math.exp(best_loglam)
    beta, sigma2, loglik = _profile_reml(y, X, block_of, n_subjects, lam)
    return LmmFit(
        fixed_effects=dict(zip(names, beta.tolist())),
        sigma2_subject=lam * sigma2,
        sigma2_residual=sigma2,
        reml_loglik=loglik,
        converged=converged,
    )


def per_trial_summary(sessions: list[SessionData]) -> list[dict]:
    """Mean and SEM of pack size and decision time per (condition, trial).

    Flagged sessions are excluded first. A cell with a single session gets
    SEM = NaN rather than a fake zero.
    """
    if not sessions:
        raise ValueError("no sessions")
    groups = sorted({s.condition for s in sessions})
    keep = [s for s in sessions if not quality_flags(s).any()]
    for g in groups:
        if not any(s.condition == g for s in keep):
            raise ValueError(f"no unflagged sessions left in group {g!r}")
    rows: list[dict] = []
    for g in groups:
        members = [s for s in keep if s.condition == g]
        for t in range(1, TRIALS_PER_SESSION + 1):
            packs = np.asarray([s.pack_after[t - 1] for s in members], dtype=np.float64)
            times = np.asarray([s.decision_time_ms[t - 1] for s in members], dtype=np.float64)

            def sem(v: np.ndarray) -> float:
                if len(v) < 2:
                    return float("nan")
                return float(v.std(ddof=1) / math.sqrt(len(v)))

            rows.append(
                {
                    "condition": g,
                    "trial": t,
                    "n": len(members),
                    "pack_mean": float(packs.mean()),
                    "pack_sem": sem(packs),
                    "time_mean": float(times.mean()),
                    "time_sem": sem(times),
                }
            )
    return rows
