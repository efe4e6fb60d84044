import { describe, expect, it } from "vitest";
import {
  SurveyForm,
  emptyForm,
  surveyPayload,
  togglePlant,
  validateSurvey,
} from "../src/survey";
import { makeInstrument } from "./fixtures";

const items = makeInstrument();

function filledForm(): SurveyForm {
  const form = emptyForm();
  form.relevant = new Set([2, 5]);
  form.irrelevant = "DK";
  for (let id = 3; id <= 10; id++) form.likert.set(id, 3);
  form.ageBand = "25-34y";
  form.gender = "non-binary";
  return form;
}

describe("validateSurvey", () => {
  it("flags everything on an untouched form, in instrument order", () => {
    expect(validateSurvey(emptyForm(), items)).toEqual([
      "item1",
      "item2",
      "item3",
      "item4",
      "item5",
      "item6",
      "item7",
      "item8",
      "item9",
      "item10",
      "age",
      "gender",
    ]);
  });

  it("accepts a fully answered form", () => {
    expect(validateSurvey(filledForm(), items)).toEqual([]);
  });

  it("treats an empty plant selection as a deliberate answer", () => {
    const form = filledForm();
    form.relevant = new Set();
    expect(validateSurvey(form, items)).toEqual([]);
  });

  it("rejects unknown plants and strings other than the instrument's DK", () => {
    const form = filledForm();
    form.relevant = new Set([0, 3]);
    expect(validateSurvey(form, items)).toEqual(["item1"]);
    form.relevant = "dunno";
    expect(validateSurvey(form, items)).toEqual(["item1"]);
    form.relevant = "DK";
    expect(validateSurvey(form, items)).toEqual([]);
  });

  it("accepts likert answers from the scale or the PNA token, nothing else", () => {
    const form = filledForm();
    form.likert.set(7, "PNA");
    expect(validateSurvey(form, items)).toEqual([]);
    form.likert.set(7, 0);
    expect(validateSurvey(form, items)).toEqual(["item7"]);
    form.likert.set(7, 6);
    expect(validateSurvey(form, items)).toEqual(["item7"]);
  });

  it("only allows listed age bands and gender options", () => {
    const form = filledForm();
    form.ageBand = "seventeen";
    form.gender = "none";
    expect(validateSurvey(form, items)).toEqual(["age", "gender"]);
  });
});

describe("togglePlant", () => {
  it("builds up a set and cancels a prior don't-know", () => {
    let sel = togglePlant("DK", 4);
    expect(sel).toEqual(new Set([4]));
    sel = togglePlant(sel, 2);
    expect(sel).toEqual(new Set([2, 4]));
    sel = togglePlant(sel, 4);
    expect(sel).toEqual(new Set([2]));
  });
});

describe("surveyPayload", () => {
  it("serialises sets as sorted arrays and likert keys as strings", () => {
    const form = filledForm();
    form.relevant = new Set([5, 1, 3]);
    form.likert.set(3, "PNA");
    const payload = surveyPayload(form);
    expect(payload.relevant_plants).toEqual([1, 3, 5]);
    expect(payload.irrelevant_plants).toBe("DK");
    expect(payload.likert["3"]).toBe("PNA");
    expect(payload.likert["4"]).toBe(3);
    expect(Object.keys(payload.likert)).toHaveLength(8);
    expect(payload.age_band).toBe("25-34y");
    expect(payload.gender).toBe("non-binary");
  });
});
