// Shared test fixtures: a survey instrument with the server's wire shape.
import type { SurveyItem } from "../src/protocol";

const SCALE = {
  "1": "strongly disagree",
  "2": "disagree",
  "3": "neither agree nor disagree",
  "4": "agree",
  "5": "strongly agree",
};

export const AGE_BANDS = ["18-24y", "25-34y", "35-44y", "45-54y", "55-64y", "65y+"];
export const GENDER_OPTIONS = [
  "female",
  "male",
  "transgender female",
  "transgender male",
  "non-binary",
  "not listed",
  "prefer not to answer",
];

export function makeInstrument(): SurveyItem[] {
  const items: SurveyItem[] = [
    {
      id: 1,
      kind: "plant-selection",
      text: "Which plants are relevant for growing your pack?",
      plants: [1, 2, 3, 4, 5],
      dont_know: "DK",
    },
    {
      id: 2,
      kind: "plant-selection",
      text: "Which plants are irrelevant for growing your pack?",
      plants: [1, 2, 3, 4, 5],
      dont_know: "DK",
    },
  ];
  for (let id = 3; id <= 10; id++) {
    items.push({
      id,
      kind: "likert",
      text: `Statement ${id} about the feedback.`,
      scale: SCALE,
      prefer_not_to_answer: "PNA",
    });
  }
  items.push({ id: "age", kind: "single-choice", text: "How old are you?", options: AGE_BANDS });
  items.push({
    id: "gender",
    kind: "single-choice",
    text: "How do you describe your gender?",
    options: GENDER_OPTIONS,
  });
  return items;
}
