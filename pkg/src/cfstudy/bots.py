"""Simulated participants for pipeline and trend checks.

Each policy plays the full session protocol directly against the game core:
instructions, twelve feedings, attention checks, and a templated survey.
Everything is seeded, so a cohort with the same seed reproduces identical
trial logs.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from . import survey as survey_mod
from .datagen import LEAF_MAX, LEAF_MIN, N_PLANTS, RELEVANT_PLANTS
from .game import (
    Condition,
    GameConfig,
    Phase,
    Session,
    advance,
    create_session,
    feedback_payload,
    submit_attention,
    submit_feeding,
    submit_survey,
)

POLICY_KINDS = ("random", "cfe-follower", "greedy", "straight-liner", "speeder")

NORMAL_TIME_RANGE_MS = (2500, 8000)
SPEEDER_TIME_RANGE_MS = (500, 1900)


class BotConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BotPolicy:
    """What a simulated participant does.

    `attention_correct` and `survey_template` exist so cohorts can be built
    that trip exactly one quality filter; the defaults describe a clean,
    attentive participant. `time_range_ms` overrides the decision-time
    sampler (speeders default to sub-2s times).
    """

    kind: str
    attention_correct: bool = True
    survey_template: str = "mixed"  # "mixed" | "positive" | "negative" | "pna"
    fixed_choice: tuple[int, ...] = (0, 0, 0, 0, 0)
    time_range_ms: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise BotConfigError(f"unknown policy kind {self.kind!r}, expected one of {POLICY_KINDS}")
        if self.survey_template not in ("mixed", "positive", "negative", "pna"):
            raise BotConfigError(f"unknown survey template {self.survey_template!r}")

    def times(self) -> tuple[int, int]:
        if self.time_range_ms is not None:
            return self.time_range_ms
        return SPEEDER_TIME_RANGE_MS if self.kind == "speeder" else NORMAL_TIME_RANGE_MS


def _random_choice(rng: random.Random) -> tuple[int, ...]:
    return tuple(rng.randint(LEAF_MIN, LEAF_MAX) for _ in range(N_PLANTS))


class _BotState:
    """Per-session mutable policy state."""

    def __init__(self, policy: BotPolicy, rng: random.Random):
        self.policy = policy
        self.rng = rng
        self.last_suggestion: tuple[int, ...] | None = None
        # greedy bookkeeping
        self.best: tuple[int, ...] | None = None
        self.proposal: tuple[int, ...] | None = None


def next_choice(state: _BotState, session: Session) -> tuple[int, ...]:
    """The policy's plant choice for the upcoming trial."""
    policy, rng = state.policy, state.rng
    if policy.kind == "straight-liner":
        return policy.fixed_choice
    if policy.kind in ("random", "speeder"):
        return _random_choice(rng)
    if policy.kind == "cfe-follower":
        if state.last_suggestion is not None:
            return state.last_suggestion
        return _random_choice(rng)
    # greedy coordinate hill-climb: nudge one plant by one leaf, keep improvements.
    # The climb starts from the untouched counters (all zeros), not a random
    # vector — a random draw is already a winning choice often enough to drag
    # the cohort mean around, which is not "learning" in any sense.
    if state.best is None:
        state.best = (0,) * N_PLANTS
        state.proposal = state.best
        return state.best
    base = list(state.best)
    i = rng.randrange(N_PLANTS)
    step = rng.choice((-1, 1))
    base[i] = min(LEAF_MAX, max(LEAF_MIN, base[i] + step))
    state.proposal = tuple(base)
    return state.proposal


def observe_outcome(state: _BotState, delta: int) -> None:
    """Give the greedy climber its accept/revert signal."""
    if state.policy.kind != "greedy" or state.proposal is None:
        return
    if delta > 0:
        state.best = state.proposal


def observe_feedback(state: _BotState, payload: dict) -> None:
    """Remember the newest suggestion out of an end-of-block overview."""
    if state.policy.kind != "cfe-follower":
        return
    for entry in payload["entries"]:
        cf = entry.get("cfe")
        if cf is not None:
            state.last_suggestion = tuple(cf["suggestion"])


def _survey_response(policy: BotPolicy, rng: random.Random, experiment: int) -> survey_mod.SurveyResponse:
    template = policy.survey_template
    if template == "mixed":
        values = {3: 4, 4: 2, 5: 4, 6: 2, 8: 2, 9: 4, 10: 4}
    elif template == "positive":
        values = {i: rng.choice((4, 5)) for i in survey_mod.VALENCE_ITEMS}
    elif template == "negative":
        values = {i: rng.choice((1, 2)) for i in survey_mod.VALENCE_ITEMS}
    else:
        values = {i: survey_mod.PREFER_NOT_TO_ANSWER for i in survey_mod.VALENCE_ITEMS}
    likert: dict[int, int | str] = dict(values)
    likert[survey_mod.CATCH_ITEM] = survey_mod.PREFER_NOT_TO_ANSWER
    relevant = RELEVANT_PLANTS[experiment]
    return survey_mod.SurveyResponse(
        relevant_plants=frozenset(relevant),
        irrelevant_plants=frozenset(survey_mod.PLANT_IDS) - relevant,
        likert=likert,
        age_band=rng.choice(survey_mod.AGE_BANDS),
        gender=rng.choice(survey_mod.GENDER_OPTIONS),
    )


def run_session(
    policy: BotPolicy,
    config: GameConfig,
    condition: Condition,
    seed: int,
    session_id: str | None = None,
) -> Session:
    """Play one full session (game plus survey) and return it."""
    condition = Condition(condition)
    if policy.kind == "cfe-follower" and condition is not Condition.CFE:
        raise BotConfigError("cfe-follower needs the CFE condition; control sessions get no suggestions")
    rng = random.Random(seed)
    session = create_session(config, condition, seed, session_id=session_id)
    state = _BotState(policy, rng)
    lo_ms, hi_ms = policy.times()

    guard = 0
    while session.phase is not Phase.DONE:
        guard += 1
        if guard > 200:
            raise RuntimeError("bot session did not terminate")
        if session.phase is Phase.INSTRUCTIONS:
            advance(config, session)
        elif session.phase is Phase.CHOICE:
            choice = next_choice(state, session)
            record = submit_feeding(config, session, choice, rng.randint(lo_ms, hi_ms))
            observe_outcome(state, record.delta)
        elif session.phase is Phase.FEEDBACK:
            observe_feedback(state, feedback_payload(config, session))
            advance(config, session)
        elif session.phase is Phase.ATTENTION:
            answer = session.pack_size if policy.attention_correct else session.pack_size + 7
            submit_attention(config, session, answer)
        elif session.phase is Phase.SURVEY:
            submit_survey(config, session, _survey_response(policy, rng, config.experiment))
        else:  # pragma: no cover - DONE handled by the loop condition
            break
    return session


def run_cohort(
    policy: BotPolicy,
    n: int,
    config: GameConfig,
    condition: Condition,
    seed: int,
) -> list[Session]:
    """Play `n` sessions with per-session seeds derived from `seed`."""
    if n < 1:
        raise ValueError("n must be >= 1")
    master = random.Random(seed)
    sessions = []
    for i in range(n):
        session_seed = master.randrange(2**31)
        sessions.append(
            run_session(policy, config, condition, session_seed, session_id=f"bot-{policy.kind}-{i:03d}")
        )
    return sessions
