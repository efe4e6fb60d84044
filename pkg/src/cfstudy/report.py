"""Analysis pipeline over exported CSVs: quality report, tests, figures.

This is the offline half of the study: it consumes the long-format and
survey exports (files, not live service state), recomputes quality flags
from scratch, and writes everything a results section needs into one
output directory — per-session flags, a plot-ready per-trial summary,
group-comparison tests, the mixed-model fit, and the learning-curve
figures rendered from the same summary rows.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import survey as survey_mod
from .game import TRIALS_PER_SESSION
from .stats import (
    LmmError,
    SessionData,
    fit_lmm_random_intercept,
    mann_whitney_u,
    match_score,
    per_trial_summary,
    quality_flags,
    welch_t,
)

QUALITY_CSV = "quality.csv"
SUMMARY_CSV = "per_trial_summary.csv"
TESTS_TXT = "tests.txt"
LMM_TXT = "lmm.txt"
PACK_FIGURE = "pack_by_trial.png"
TIME_FIGURE = "decision_time_by_trial.png"

QUALITY_HEADER = [
    "session_id",
    "condition",
    "speeder",
    "inattentive",
    "straightliner_game",
    "straightliner_survey",
    "flagged",
    "relevant_match",
    "irrelevant_match",
]

SUMMARY_HEADER = ["condition", "trial", "n", "pack_mean", "pack_sem", "time_mean", "time_sem"]


def _parse_selection(row: dict, prefix: str) -> frozenset[int] | str:
    if row[f"{prefix}_dk"] == "1":
        return survey_mod.DONT_KNOW
    short = "rel" if prefix == "relevant" else "irrel"
    return frozenset(p for p in survey_mod.PLANT_IDS if row[f"{short}_p{p}"] == "1")


def _parse_likert(value: str) -> int | str:
    if value == survey_mod.PREFER_NOT_TO_ANSWER:
        return value
    return int(value)


def load_sessions(long_csv: str | Path, survey_csv: str | Path) -> tuple[list[SessionData], int]:
    """Join the two exports back into per-session records.

    Only sessions with all trials and a survey row are analyzable; the
    second return value counts the ones dropped for being incomplete.
    Stored flag columns are ignored — flags are always recomputed.
    """
    surveys: dict[str, dict] = {}
    with open(survey_csv, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            surveys[row["session_id"]] = row

    trials: dict[str, list[dict]] = {}
    order: list[str] = []
    with open(long_csv, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            sid = row["session_id"]
            if sid not in trials:
                trials[sid] = []
                order.append(sid)
            trials[sid].append(row)

    sessions: list[SessionData] = []
    dropped = 0
    for sid in order:
        rows = sorted(trials[sid], key=lambda r: int(r["trial"]))
        srow = surveys.get(sid)
        if len(rows) != TRIALS_PER_SESSION or srow is None:
            dropped += 1
            continue
        pass_count = int(rows[0]["attention_pass_count"])
        sessions.append(
            SessionData(
                session_id=sid,
                condition=rows[0]["condition"],
                experiment=int(rows[0]["experiment"]),
                choices=[tuple(int(r[f"p{i}"]) for i in range(1, 6)) for r in rows],
                pack_after=[int(r["pack_size"]) for r in rows],
                decision_time_ms=[int(r["decision_time_ms"]) for r in rows],
                growth=[float(r["growth"]) for r in rows],
                delta=[int(r["delta"]) for r in rows],
                # The export keeps only the pass count; the filters only
                # ever look at how many were correct, so any ordering with
                # the right count reproduces them.
                attention_correct=[i < pass_count for i in range(2)],
                likert={i: _parse_likert(srow[f"likert_{i}"]) for i in survey_mod.LIKERT_ITEMS},
                relevant_plants=_parse_selection(srow, "relevant"),
                irrelevant_plants=_parse_selection(srow, "irrelevant"),
                age_band=srow["age_band"] or None,
                gender=srow["gender"] or None,
            )
        )
    return sessions, dropped


def quality_table(sessions: list[SessionData]) -> list[dict]:
    rows = []
    for s in sessions:
        qf = quality_flags(s)
        rows.append(
            {
                "session_id": s.session_id,
                "condition": s.condition,
                "speeder": int(qf.speeder),
                "inattentive": int(qf.inattentive),
                "straightliner_game": int(qf.straightliner_game),
                "straightliner_survey": int(qf.straightliner_survey),
                "flagged": int(qf.any()),
                "relevant_match": match_score(s.relevant_plants, "relevant", s.experiment),
                "irrelevant_match": match_score(s.irrelevant_plants, "irrelevant", s.experiment),
            }
        )
    return rows


def _unflagged(sessions: list[SessionData]) -> list[SessionData]:
    return [s for s in sessions if not quality_flags(s).any()]


def _split_groups(sessions: list[SessionData]) -> tuple[list[SessionData], list[SessionData]]:
    cfe = [s for s in sessions if s.condition == "cfe"]
    control = [s for s in sessions if s.condition == "control"]
    return cfe, control


def _format_test(label: str, result) -> str:
    return (
        f"{label}\n"
        f"  {result.statistic_kind} = {result.statistic:.4g}, "
        f"p = {result.p_value:.4g} ({result.method}), "
        f"{result.effect_kind} = {result.effect_size:.4g}\n"
    )


def tests_report(sessions: list[SessionData], dropped: int = 0) -> str:
    """Group comparisons on the unflagged sessions, as readable text."""
    keep = _unflagged(sessions)
    cfe, control = _split_groups(keep)
    lines = [
        f"sessions: {len(sessions)} complete, {dropped} dropped incomplete, "
        f"{len(sessions) - len(keep)} flagged, {len(keep)} analyzed "
        f"(cfe {len(cfe)}, control {len(control)})",
        "",
    ]
    if not cfe or not control:
        lines.append("group comparisons skipped: need unflagged sessions in both groups")
        return "\n".join(lines) + "\n"

    comparisons = [
        ("final pack size (trial 12), cfe vs control", lambda s: float(s.pack_after[-1])),
        ("mean pack size over trials, cfe vs control", lambda s: sum(s.pack_after) / len(s.pack_after)),
        ("mean decision time ms, cfe vs control", lambda s: sum(s.decision_time_ms) / len(s.decision_time_ms)),
        ("relevant-plant match score, cfe vs control", lambda s: float(match_score(s.relevant_plants, "relevant", s.experiment))),
        ("irrelevant-plant match score, cfe vs control", lambda s: float(match_score(s.irrelevant_plants, "irrelevant", s.experiment))),
    ]
    for label, metric in comparisons:
        a = [metric(s) for s in cfe]
        b = [metric(s) for s in control]
        lines.append(_format_test(f"mann-whitney: {label}", mann_whitney_u(a, b)))
        try:
            lines.append(_format_test(f"welch-t: {label}", welch_t(a, b)))
        except ValueError as exc:
            lines.append(f"welch-t: {label}\n  skipped: {exc}\n")
    return "\n".join(lines)


def lmm_report(sessions: list[SessionData]) -> str:
    """Random-intercept fit of pack size on group x trial, as readable text."""
    keep = _unflagged(sessions)
    rows = [
        (s.session_id, s.condition, t, float(s.pack_after[t - 1]))
        for s in keep
        for t in range(1, TRIALS_PER_SESSION + 1)
    ]
    try:
        fit = fit_lmm_random_intercept(rows)
    except (LmmError, ValueError) as exc:
        return f"mixed model not fitted: {exc}\n"
    lines = [
        "random-intercept mixed model: pack_size ~ group * trial + (1 | session)",
        f"  subjects: {len(keep)}, observations: {len(rows)}",
        f"  sigma2_subject  = {fit.sigma2_subject:.6g}",
        f"  sigma2_residual = {fit.sigma2_residual:.6g}",
        f"  REML loglik     = {fit.reml_loglik:.6g}",
        f"  converged       = {fit.converged}",
        "  fixed effects:",
    ]
    for term, est in fit.fixed_effects.items():
        lines.append(f"    {term:<24s} {est:+.6g}")
    return "\n".join(lines) + "\n"


def render_figures(summary_rows: list[dict], out_dir: str | Path) -> list[Path]:
    """Learning-curve figures from the per-trial summary rows."""
    out_dir = Path(out_dir)
    conditions = sorted({r["condition"] for r in summary_rows})
    written = []
    for metric, sem_key, ylabel, fname in [
        ("pack_mean", "pack_sem", "mean pack size", PACK_FIGURE),
        ("time_mean", "time_sem", "mean decision time (ms)", TIME_FIGURE),
    ]:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for cond in conditions:
            rows = sorted((r for r in summary_rows if r["condition"] == cond), key=lambda r: r["trial"])
            xs = [r["trial"] for r in rows]
            ys = [r[metric] for r in rows]
            errs = [0.0 if math.isnan(r[sem_key]) else r[sem_key] for r in rows]
            ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=cond)
        ax.set_xlabel("trial")
        ax.set_ylabel(ylabel)
        ax.set_xticks(range(1, TRIALS_PER_SESSION + 1))
        ax.legend(title="group")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out_dir / fname
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def analyze(long_csv: str | Path, survey_csv: str | Path, out_dir: str | Path) -> dict[str, Path]:
    """Run the whole pipeline; returns the paths written, keyed by role."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sessions, dropped = load_sessions(long_csv, survey_csv)
    if not sessions:
        raise ValueError("no complete sessions in the export")

    written: dict[str, Path] = {}

    quality_path = out_dir / QUALITY_CSV
    with open(quality_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=QUALITY_HEADER)
        w.writeheader()
        w.writerows(quality_table(sessions))
    written["quality"] = quality_path

    summary_rows = per_trial_summary(sessions)
    summary_path = out_dir / SUMMARY_CSV
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_HEADER)
        w.writeheader()
        for row in summary_rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    written["summary"] = summary_path

    tests_path = out_dir / TESTS_TXT
    tests_path.write_text(tests_report(sessions, dropped), encoding="utf-8")
    written["tests"] = tests_path

    lmm_path = out_dir / LMM_TXT
    lmm_path.write_text(lmm_report(sessions), encoding="utf-8")
    written["lmm"] = lmm_path

    for path in render_figures(summary_rows, out_dir):
        written[path.stem] = path
    return written
