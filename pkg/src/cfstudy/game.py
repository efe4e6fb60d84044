"""Session state machine: trials, pack dynamics, feedback blocks, attention checks.

A session walks instructions -> 12 choice trials -> survey -> done. Feedback
interrupts after every even trial (blocks of two), attention checks after
trials 3 and 7. The 3-second progress scene never holds the state machine:
it is emitted as a wrapper on the next scene descriptor after feedings and
attention answers, which is when the paddock recomputes.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import survey as survey_mod
from .cfe import CfeConfig, Counterfactual, compute_cfe
from .datagen import GROWTH_MAX, GROWTH_MIN, validate_plant_vector
from .tree import GrowthModel, predict

TRIALS_PER_SESSION = 12
ATTENTION_TRIALS = (3, 7)
START_PACK = 20
PACK_FLOOR = 2
DELTA_STEP = 0.09
DELTA_MAX = 10


class Condition(str, Enum):
    CONTROL = "control"
    CFE = "cfe"


class Phase(str, Enum):
    INSTRUCTIONS = "instructions"
    CHOICE = "choice"
    PROGRESS = "progress"  # transient display state; the machine never rests here
    FEEDBACK = "feedback"
    ATTENTION = "attention"
    SURVEY = "survey"
    DONE = "done"


class ProtocolError(RuntimeError):
    """Request arrived in the wrong phase or violates the session protocol."""


class ValidationError(ValueError):
    """Request payload is malformed."""


@dataclass
class Timings:
    start_delay_s: int = 20
    continue_delay_s: int = 10
    progress_s: int = 3


@dataclass
class GameConfig:
    experiment: int
    model: GrowthModel
    cfe: CfeConfig = CfeConfig()
    trials: int = TRIALS_PER_SESSION
    timings: Timings = field(default_factory=Timings)

    def __post_init__(self) -> None:
        if self.experiment not in (1, 2):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.trials < 2 or self.trials % 2 != 0:
            raise ValueError("trials must be an even count >= 2")


@dataclass
class TrialRecord:
    trial: int
    choice: tuple[int, ...]
    growth: float
    delta: int
    pack_before: int
    pack_after: int
    decision_time_ms: int
    cfe_shown: Counterfactual | None = None
    near_optimal: bool | None = None  # set at feedback time, CFE arm only


@dataclass
class AttentionRecord:
    after_trial: int
    answer: int
    correct: bool


@dataclass
class Session:
    id: str
    condition: Condition
    experiment: int
    seed: int
    plant_display_order: list[int]  # plant ids 1..5 in on-screen order
    pack_size: int = START_PACK
    trial_index: int = 1
    phase: Phase = Phase.INSTRUCTIONS
    trials: list[TrialRecord] = field(default_factory=list)
    attention: list[AttentionRecord] = field(default_factory=list)
    survey: survey_mod.SurveyResponse | None = None
    progress_pending: bool = False


def create_session(config: GameConfig, condition: Condition, seed: int, session_id: str | None = None) -> Session:
    """Fresh session in the instructions phase with a seeded display order."""
    condition = Condition(condition)
    order = list(survey_mod.PLANT_IDS)
    random.Random(seed).shuffle(order)
    return Session(
        id=session_id if session_id is not None else f"s{seed:08x}",
        condition=condition,
        experiment=config.experiment,
        seed=seed,
        plant_display_order=order,
    )


def growth_to_delta(growth: float) -> int:
    """Map a growth rate in [0.1, 1.9] to a whole-shub pack change in [-10, 10].

    Rounds half away from zero so the mapping is symmetric around the
    neutral rate 1.0.
    """
    if not (GROWTH_MIN - 1e-9 <= growth <= GROWTH_MAX + 1e-9):
        raise ValueError(f"growth {growth} outside [{GROWTH_MIN}, {GROWTH_MAX}]")
    x = (growth - 1.0) / DELTA_STEP
    delta = int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))
    return max(-DELTA_MAX, min(DELTA_MAX, delta))


def _require_phase(session: Session, phase: Phase, what: str) -> None:
    if session.phase != phase:
        raise ProtocolError(f"{what} not allowed in phase {session.phase.value!r}")


def submit_feeding(config: GameConfig, session: Session, choice: Sequence[int], decision_time_ms: int) -> TrialRecord:
    """Score one feeding, update the pack, and move the phase machine along."""
    _require_phase(session, Phase.CHOICE, "feeding")
    try:
        choice = validate_plant_vector(choice)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    if not isinstance(decision_time_ms, int) or isinstance(decision_time_ms, bool) or decision_time_ms < 0:
        raise ValidationError(f"decision_time_ms must be a nonnegative integer, got {decision_time_ms!r}")

    growth = predict(config.model, np.asarray(choice, dtype=np.float64))
    delta = growth_to_delta(growth)
    pack_before = session.pack_size
    pack_after = max(PACK_FLOOR, pack_before + delta)
    record = TrialRecord(
        trial=session.trial_index,
        choice=choice,
        growth=growth,
        delta=delta,
        pack_before=pack_before,
        pack_after=pack_after,
        decision_time_ms=decision_time_ms,
    )
    session.trials.append(record)
    session.pack_size = pack_after

    t = session.trial_index
    if t % 2 == 0:
        if session.condition is Condition.CFE:
            for rec in session.trials[-2:]:
                cf = compute_cfe(config.model, rec.choice, config.cfe)
                rec.cfe_shown = cf
                rec.near_optimal = cf is None
        session.phase = Phase.FEEDBACK
        session.progress_pending = True
    elif t in ATTENTION_TRIALS:
        session.phase = Phase.ATTENTION
        session.progress_pending = False  # the check comes first, progress after
    else:
        session.trial_index = t + 1
        session.phase = Phase.CHOICE
        session.progress_pending = True
    return record


def feedback_payload(config: GameConfig, session: Session) -> dict:
    """End-of-block overview: the block's two trials, plus suggestions in the CFE arm."""
    _require_phase(session, Phase.FEEDBACK, "feedback")
    block_trials = session.trials[-2:]
    entries = []
    for rec in block_trials:
        entry = {
            "trial": rec.trial,
            "choice": list(rec.choice),
            "pack_before": rec.pack_before,
            "pack_after": rec.pack_after,
            "delta": rec.delta,
        }
        if session.condition is Condition.CFE:
            if rec.cfe_shown is None:
                entry["cfe"] = None
                entry["near_optimal"] = True
            else:
                entry["cfe"] = {
                    "suggestion": list(rec.cfe_shown.suggestion),
                    "predicted_growth": rec.cfe_shown.predicted_growth,
                    "distance": rec.cfe_shown.distance,
                }
                entry["near_optimal"] = False
        entries.append(entry)
    return {
        "block": session.trial_index // 2,
        "entries": entries,
        "continue_delay_s": config.timings.continue_delay_s,
    }


def submit_attention(config: GameConfig, session: Session, answer: int) -> AttentionRecord:
    """Record a pack-size check; correctness feedback is immediate."""
    _require_phase(session, Phase.ATTENTION, "attention answer")
    if not isinstance(answer, int) or isinstance(answer, bool):
        raise ValidationError(f"attention answer must be an integer, got {answer!r}")
    record = AttentionRecord(
        after_trial=session.trial_index,
        answer=answer,
        correct=answer == session.pack_size,
    )
    session.attention.append(record)
    session.trial_index += 1
    session.phase = Phase.CHOICE
    session.progress_pending = True  # the deferred progress scene runs now
    return record


def submit_survey(config: GameConfig, session: Session, response: survey_mod.SurveyResponse) -> None:
    _require_phase(session, Phase.SURVEY, "survey")
    problems = survey_mod.validate_response(response)
    if problems:
        raise ValidationError("missing or malformed survey items: " + ", ".join(problems))
    session.survey = response
    session.phase = Phase.DONE


def advance(config: GameConfig, session: Session) -> None:
    """Leave a passive scene: instructions -> first trial, feedback -> next trial or survey."""
    if session.phase is Phase.INSTRUCTIONS:
        session.phase = Phase.CHOICE
        session.progress_pending = False
    elif session.phase is Phase.FEEDBACK:
        if session.trial_index >= config.trials:
            session.phase = Phase.SURVEY
        else:
            session.trial_index += 1
            session.phase = Phase.CHOICE
        session.progress_pending = False
    else:
        raise ProtocolError(f"nothing to advance in phase {session.phase.value!r}")


def scene_descriptor(config: GameConfig, session: Session) -> dict:
    """Declarative description of what the client should render next.

    After feedings and attention answers the descriptor is wrapped in a
    3-second progress scene; the client shows the wrapper, then `next`.
    """
    t = config.timings
    if session.phase is Phase.INSTRUCTIONS:
        scene: dict = {
            "kind": "instructions",
            "start_delay_s": t.start_delay_s,
            "pack_size": session.pack_size,
            "trials_total": config.trials,
            "plant_display_order": list(session.plant_display_order),
        }
    elif session.phase is Phase.CHOICE:
        previous = None
        if session.trials:
            last = session.trials[-1]
            previous = {
                "trial": last.trial,
                "choice": list(last.choice),
                "pack_before": last.pack_before,
                "pack_after": last.pack_after,
                "delta": last.delta,
            }
        scene = {
            "kind": "choice",
            "trial": session.trial_index,
            "trials_total": config.trials,
            "pack_size": session.pack_size,
            "plant_display_order": list(session.plant_display_order),
            "previous": previous,
        }
    elif session.phase is Phase.FEEDBACK:
        scene = {
            "kind": "feedback",
            "block": session.trial_index // 2,
            "trials": [session.trial_index - 1, session.trial_index],
            "pack_size": session.pack_size,
            "continue_delay_s": t.continue_delay_s,
        }
    elif session.phase is Phase.ATTENTION:
        # Deliberately no pack size here: the scene asks for it.
        scene = {"kind": "attention", "after_trial": session.trial_index}
    elif session.phase is Phase.SURVEY:
        scene = {"kind": "survey", "items": survey_mod.instrument(session.condition.value)}
    else:
        scene = {"kind": "payout"}
    if session.progress_pending and scene["kind"] != "attention":
        return {"kind": "progress", "duration_s": t.progress_s, "next": scene}
    return scene


def session_to_dict(session: Session) -> dict:
    """Stable plain-dict form used for snapshots, exports, and replay checks."""

    def cf_dict(cf: Counterfactual | None) -> dict | None:
        if cf is None:
            return None
        return {
            "suggestion": list(cf.suggestion),
            "predicted_growth": cf.predicted_growth,
            "distance": cf.distance,
            "factual": list(cf.factual),
        }

    return {
        "id": session.id,
        "condition": session.condition.value,
        "experiment": session.experiment,
        "seed": session.seed,
        "plant_display_order": list(session.plant_display_order),
        "pack_size": session.pack_size,
        "trial_index": session.trial_index,
        "phase": session.phase.value,
        "progress_pending": session.progress_pending,
        "trials": [
            {
                "trial": r.trial,
                "choice": list(r.choice),
                "growth": r.growth,
                "delta": r.delta,
                "pack_before": r.pack_before,
                "pack_after": r.pack_after,
                "decision_time_ms": r.decision_time_ms,
                "cfe_shown": cf_dict(r.cfe_shown),
                "near_optimal": r.near_optimal,
            }
            for r in session.trials
        ],
        "attention": [
            {"after_trial": a.after_trial, "answer": a.answer, "correct": a.correct}
            for a in session.attention
        ],
        "survey": None if session.survey is None else survey_mod.response_to_dict(session.survey),
    }


def session_from_dict(d: dict) -> Session:
    def cf_from(raw: dict | None) -> Counterfactual | None:
        if raw is None:
            return None
        return Counterfactual(
            suggestion=tuple(raw["suggestion"]),
            predicted_growth=raw["predicted_growth"],
            distance=raw["distance"],
            factual=tuple(raw["factual"]),
        )

    session = Session(
        id=d["id"],
        condition=Condition(d["condition"]),
        experiment=d["experiment"],
        seed=d["seed"],
        plant_display_order=list(d["plant_display_order"]),
        pack_size=d["pack_size"],
        trial_index=d["trial_index"],
        phase=Phase(d["phase"]),
        progress_pending=d["progress_pending"],
    )
    for r in d["trials"]:
        session.trials.append(
            TrialRecord(
                trial=r["trial"],
                choice=tuple(r["choice"]),
                growth=r["growth"],
                delta=r["delta"],
                pack_before=r["pack_before"],
                pack_after=r["pack_after"],
                decision_time_ms=r["decision_time_ms"],
                cfe_shown=cf_from(r["cfe_shown"]),
                near_optimal=r["near_optimal"],
            )
        )
    for a in d["attention"]:
        session.attention.append(
            AttentionRecord(after_trial=a["after_trial"], answer=a["answer"], correct=a["correct"])
        )
    if d["survey"] is not None:
        session.survey = survey_mod.response_from_dict(d["survey"])
    return session


def replay_trials(config: GameConfig, records: list[TrialRecord]) -> int:
    """Recompute the pack trajectory from recorded choices; returns the final pack."""
    pack = START_PACK
    for rec in records:
        growth = predict(config.model, np.asarray(rec.choice, dtype=np.float64))
        pack = max(PACK_FLOOR, pack + growth_to_delta(growth))
    return pack
