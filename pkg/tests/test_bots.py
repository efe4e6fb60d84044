"""Simulated participants: policies, trajectories, and the filters they trip."""
import pytest

from cfstudy import bots, stats
from cfstudy.game import Condition, Phase, session_to_dict


def test_policy_validation():
    with pytest.raises(bots.BotConfigError):
        bots.BotPolicy(kind="psychic")
    with pytest.raises(bots.BotConfigError):
        bots.BotPolicy(kind="random", survey_template="all-of-the-above")
    assert bots.BotPolicy(kind="speeder").times() == bots.SPEEDER_TIME_RANGE_MS
    assert bots.BotPolicy(kind="random").times() == bots.NORMAL_TIME_RANGE_MS
    assert bots.BotPolicy(kind="random", time_range_ms=(100, 200)).times() == (100, 200)


def test_cfe_follower_requires_cfe_condition(exp1_game_config):
    with pytest.raises(bots.BotConfigError):
        bots.run_session(bots.BotPolicy(kind="cfe-follower"), exp1_game_config, Condition.CONTROL, seed=1)


def test_sessions_run_to_completion(exp1_game_config):
    for kind in bots.POLICY_KINDS:
        condition = Condition.CFE if kind == "cfe-follower" else Condition.CONTROL
        session = bots.run_session(bots.BotPolicy(kind=kind), exp1_game_config, condition, seed=3)
        assert session.phase is Phase.DONE
        assert len(session.trials) == 12
        assert len(session.attention) == 2
        assert session.survey is not None


def test_straight_liner_repeats_fixed_choice(exp1_game_config):
    policy = bots.BotPolicy(kind="straight-liner", fixed_choice=(1, 2, 3, 4, 5))
    session = bots.run_session(policy, exp1_game_config, Condition.CONTROL, seed=4)
    assert all(rec.choice == (1, 2, 3, 4, 5) for rec in session.trials)


def test_floor_locked_straight_liner_is_flagged(exp1_game_config):
    policy = bots.BotPolicy(kind="straight-liner")  # default choice earns nothing
    session = bots.run_session(policy, exp1_game_config, Condition.CONTROL, seed=5)
    assert session.pack_size == 2
    flags = stats.quality_flags(stats.SessionData.from_session(session))
    assert flags.straightliner_game
    assert not flags.speeder


def test_speeder_times_and_flag(exp1_game_config):
    session = bots.run_session(bots.BotPolicy(kind="speeder"), exp1_game_config, Condition.CONTROL, seed=6)
    assert all(rec.decision_time_ms < 2000 for rec in session.trials)
    flags = stats.quality_flags(stats.SessionData.from_session(session))
    assert flags.speeder


def test_attention_failures_are_flagged(exp1_game_config):
    policy = bots.BotPolicy(kind="random", attention_correct=False)
    session = bots.run_session(policy, exp1_game_config, Condition.CONTROL, seed=7)
    assert not any(a.correct for a in session.attention)
    flags = stats.quality_flags(stats.SessionData.from_session(session))
    assert flags.inattentive


def test_clean_follower_has_no_flags(exp1_game_config):
    session = bots.run_session(bots.BotPolicy(kind="cfe-follower"), exp1_game_config, Condition.CFE, seed=8)
    assert not stats.quality_flags(stats.SessionData.from_session(session)).any()


def test_follower_adopts_suggestions(exp1_game_config):
    session = bots.run_session(bots.BotPolicy(kind="cfe-follower"), exp1_game_config, Condition.CFE, seed=9)
    # after the first feedback the bot plays the newest suggestion it has seen
    shown = None
    for rec in session.trials:
        if rec.trial > 2 and shown is not None:
            assert rec.choice == shown
        if rec.cfe_shown is not None:
            shown = rec.cfe_shown.suggestion
    assert session.pack_size >= 60  # two random trials, then +10 a trial


def test_follower_beats_greedy_on_average(exp1_game_config):
    followers = bots.run_cohort(bots.BotPolicy(kind="cfe-follower"), 5, exp1_game_config, Condition.CFE, seed=10)
    greedy = bots.run_cohort(bots.BotPolicy(kind="greedy"), 5, exp1_game_config, Condition.CONTROL, seed=10)
    f_mean = sum(s.pack_size for s in followers) / 5
    g_mean = sum(s.pack_size for s in greedy) / 5
    assert f_mean > g_mean


def test_survey_templates(exp1_game_config):
    pna = bots.run_session(
        bots.BotPolicy(kind="random", survey_template="pna"), exp1_game_config, Condition.CONTROL, seed=11
    )
    assert stats.flag_straightliner_survey(stats.SessionData.from_session(pna))
    positive = bots.run_session(
        bots.BotPolicy(kind="random", survey_template="positive"), exp1_game_config, Condition.CONTROL, seed=11
    )
    answers = [v for k, v in positive.survey.likert.items() if k != 7]
    assert all(v in (4, 5) for v in answers)
    mixed = bots.run_session(bots.BotPolicy(kind="random"), exp1_game_config, Condition.CONTROL, seed=11)
    assert not stats.flag_straightliner_survey(stats.SessionData.from_session(mixed))


def test_cohort_is_deterministic(exp2_game_config):
    a = bots.run_cohort(bots.BotPolicy(kind="random"), 3, exp2_game_config, Condition.CONTROL, seed=12)
    b = bots.run_cohort(bots.BotPolicy(kind="random"), 3, exp2_game_config, Condition.CONTROL, seed=12)
    assert [session_to_dict(s) for s in a] == [session_to_dict(s) for s in b]
    assert [s.id for s in a] == ["bot-random-000", "bot-random-001", "bot-random-002"]
    with pytest.raises(ValueError):
        bots.run_cohort(bots.BotPolicy(kind="random"), 0, exp2_game_config, Condition.CONTROL, seed=12)
