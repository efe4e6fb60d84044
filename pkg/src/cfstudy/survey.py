"""Post-game questionnaire: item wording per condition, options, validation.

Items 1 and 2 ask which plants mattered (multi-select with an explicit
"I do not know" escape), items 3..10 are 5-point agreement ratings with a
"prefer not to answer" option. Item 7 is a catch question whose only
correct response is "prefer not to answer". Wording of the rating items
differs between the two study arms only in how the end-of-block screen is
referred to.
"""
from __future__ import annotations

from dataclasses import dataclass, field

PLANT_IDS = (1, 2, 3, 4, 5)
LIKERT_ITEMS = (3, 4, 5, 6, 7, 8, 9, 10)
CATCH_ITEM = 7
VALENCE_ITEMS = (3, 4, 5, 6, 8, 9, 10)  # catch item excluded
LIKERT_MIN, LIKERT_MAX = 1, 5

PREFER_NOT_TO_ANSWER = "PNA"
DONT_KNOW = "DK"

AGE_BANDS = ("18-24y", "25-34y", "35-44y", "45-54y", "55-64y", "65y+")
GENDER_OPTIONS = (
    "female",
    "male",
    "transgender female",
    "transgender male",
    "non-binary",
    "not listed",
    "prefer not to answer",
)

LIKERT_SCALE = {
    1: "strongly disagree",
    2: "disagree",
    3: "neither agree nor disagree",
    4: "agree",
    5: "strongly agree",
}

# How each arm's end-of-block screen is described inside the rating items.
_FEEDBACK_NOUN = {
    "control": "the overview of my past choices",
    "cfe": "the feedback on what choice would have led to a better result",
}

_SELECTION_TEXT = {
    1: "Which plants are relevant for growing your pack of shubs?",
    2: "Which plants are irrelevant for growing your pack of shubs?",
}

_LIKERT_TEMPLATES = {
    3: "I understood {noun}.",
    4: "I needed support to understand {noun}.",
    5: "I found that {noun} helped me to grow my pack of shubs.",
    6: "I was able to use {noun} to grow my pack of shubs.",
    7: "Are you still paying attention? If so, please select 'I prefer not to answer' for this question.",
    8: "I found inconsistencies in {noun}.",
    9: "I think most people would learn to work with {noun} very quickly.",
    10: "I received {noun} in a timely and efficient manner.",
}


def likert_item_text(item: int, condition: str) -> str:
    if item not in LIKERT_ITEMS:
        raise ValueError(f"unknown rating item {item}")
    if condition not in _FEEDBACK_NOUN:
        raise ValueError(f"unknown condition {condition!r}")
    return _LIKERT_TEMPLATES[item].format(noun=_FEEDBACK_NOUN[condition])


def instrument(condition: str) -> list[dict]:
    """Declarative item list for rendering the survey form."""
    items: list[dict] = []
    for item_id, text in _SELECTION_TEXT.items():
        items.append(
            {
                "id": item_id,
                "kind": "plant-selection",
                "text": text,
                "plants": list(PLANT_IDS),
                "dont_know": DONT_KNOW,
            }
        )
    for item_id in LIKERT_ITEMS:
        items.append(
            {
                "id": item_id,
                "kind": "likert",
                "text": likert_item_text(item_id, condition),
                "scale": {str(k): v for k, v in LIKERT_SCALE.items()},
                "prefer_not_to_answer": PREFER_NOT_TO_ANSWER,
            }
        )
    items.append({"id": "age", "kind": "single-choice", "text": "How old are you?", "options": list(AGE_BANDS)})
    items.append(
        {
            "id": "gender",
            "kind": "single-choice",
            "text": "How do you describe your gender?",
            "options": list(GENDER_OPTIONS),
        }
    )
    return items


@dataclass
class SurveyResponse:
    """Raw response slots; None means the item was never answered.

    Plant selections are frozensets of plant ids or the DONT_KNOW marker.
    Rating answers are 1..5 or PREFER_NOT_TO_ANSWER, keyed by item id.
    """

    relevant_plants: frozenset[int] | str | None = None
    irrelevant_plants: frozenset[int] | str | None = None
    likert: dict[int, int | str] = field(default_factory=dict)
    age_band: str | None = None
    gender: str | None = None


def validate_response(response: SurveyResponse) -> list[str]:
    """Item ids that are missing or malformed; empty list means complete."""
    problems: list[str] = []
    for item_id, sel in ((1, response.relevant_plants), (2, response.irrelevant_plants)):
        if sel is None:
            problems.append(f"item{item_id}")
        elif isinstance(sel, str):
            if sel != DONT_KNOW:
                problems.append(f"item{item_id}")
        elif not all(p in PLANT_IDS for p in sel):
            problems.append(f"item{item_id}")
    for item_id in LIKERT_ITEMS:
        v = response.likert.get(item_id)
        ok = v == PREFER_NOT_TO_ANSWER or (isinstance(v, int) and LIKERT_MIN <= v <= LIKERT_MAX)
        if not ok:
            problems.append(f"item{item_id}")
    if response.age_band not in AGE_BANDS:
        problems.append("age")
    if response.gender not in GENDER_OPTIONS:
        problems.append("gender")
    return problems


def response_from_payload(payload: object) -> SurveyResponse:
    """Parse a JSON-ish body into response slots (validation happens later).

    Selections come as lists of plant ids or the string "DK"; rating answers
    as a mapping of item id to 1..5 or "PNA".
    """
    if not isinstance(payload, dict):
        raise ValueError("survey payload must be an object")

    def selection(raw: object) -> frozenset[int] | str | None:
        if raw is None:
            return None
        if raw == DONT_KNOW:
            return DONT_KNOW
        if isinstance(raw, (list, tuple)) and all(isinstance(p, int) and not isinstance(p, bool) for p in raw):
            return frozenset(raw)
        return "?"  # malformed; fails validation with the right item id

    likert: dict[int, int | str] = {}
    raw_likert = payload.get("likert")
    if isinstance(raw_likert, dict):
        for key, v in raw_likert.items():
            try:
                item_id = int(key)
            except (TypeError, ValueError):
                continue
            if v == PREFER_NOT_TO_ANSWER or (isinstance(v, int) and not isinstance(v, bool)):
                likert[item_id] = v

    age = payload.get("age_band")
    gender = payload.get("gender")
    return SurveyResponse(
        relevant_plants=selection(payload.get("relevant_plants")),
        irrelevant_plants=selection(payload.get("irrelevant_plants")),
        likert=likert,
        age_band=age if isinstance(age, str) else None,
        gender=gender if isinstance(gender, str) else None,
    )


def response_to_dict(response: SurveyResponse) -> dict:
    def selection(sel: frozenset[int] | str | None) -> object:
        if isinstance(sel, frozenset):
            return sorted(sel)
        return sel

    return {
        "relevant_plants": selection(response.relevant_plants),
        "irrelevant_plants": selection(response.irrelevant_plants),
        "likert": {str(k): v for k, v in sorted(response.likert.items())},
        "age_band": response.age_band,
        "gender": response.gender,
    }


def response_from_dict(d: dict) -> SurveyResponse:
    def selection(raw: object) -> frozenset[int] | str | None:
        if isinstance(raw, list):
            return frozenset(raw)
        return raw  # type: ignore[return-value]

    return SurveyResponse(
        relevant_plants=selection(d.get("relevant_plants")),
        irrelevant_plants=selection(d.get("irrelevant_plants")),
        likert={int(k): v for k, v in d.get("likert", {}).items()},
        age_band=d.get("age_band"),
        gender=d.get("gender"),
    )
