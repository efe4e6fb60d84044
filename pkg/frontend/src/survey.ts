// Survey form model and the client-side twin of the server's validation.
// Valid answers are derived from the instrument the server sends, so the two
// sides can only disagree if the instrument itself changes shape.
import type { SurveyItem, SurveyPayload } from "./protocol";

export type Selection = Set<number> | string | null;

export interface SurveyForm {
  relevant: Selection;
  irrelevant: Selection;
  likert: Map<number, number | string>;
  ageBand: string | null;
  gender: string | null;
}

export function emptyForm(): SurveyForm {
  return { relevant: null, irrelevant: null, likert: new Map(), ageBand: null, gender: null };
}

export function togglePlant(selection: Selection, plant: number): Selection {
  // picking a concrete plant cancels an earlier "don't know"
  const current = selection instanceof Set ? new Set(selection) : new Set<number>();
  if (current.has(plant)) {
    current.delete(plant);
  } else {
    current.add(plant);
  }
  return current;
}

function selectionProblem(sel: Selection, item: SurveyItem & { kind: "plant-selection" }): boolean {
  if (sel === null) return true;
  if (typeof sel === "string") return sel !== item.dont_know;
  for (const p of sel) {
    if (!item.plants.includes(p)) return true;
  }
  return false; // empty set is a deliberate "none of them" and passes
}

/**
 * Problem ids in instrument order ("item1".."item10", "age", "gender");
 * an empty list means the form may be submitted.
 */
export function validateSurvey(form: SurveyForm, items: SurveyItem[]): string[] {
  const problems: string[] = [];
  for (const item of items) {
    if (item.kind === "plant-selection") {
      const sel = item.id === 1 ? form.relevant : form.irrelevant;
      if (selectionProblem(sel, item)) problems.push(`item${item.id}`);
    } else if (item.kind === "likert") {
      const v = form.likert.get(item.id);
      const scaleValues = Object.keys(item.scale).map(Number);
      const ok =
        v === item.prefer_not_to_answer ||
        (typeof v === "number" && scaleValues.includes(v));
      if (!ok) problems.push(`item${item.id}`);
    } else {
      const v = item.id === "age" ? form.ageBand : form.gender;
      if (v === null || !item.options.includes(v)) problems.push(item.id);
    }
  }
  return problems;
}

/** Canonical request body; call only after validateSurvey returns []. */
export function surveyPayload(form: SurveyForm): SurveyPayload {
  const selection = (sel: Selection): number[] | string =>
    sel instanceof Set ? [...sel].sort((a, b) => a - b) : (sel ?? "");
  const likert: Record<string, number | string> = {};
  for (const [id, value] of form.likert) {
    likert[String(id)] = value;
  }
  return {
    relevant_plants: selection(form.relevant),
    irrelevant_plants: selection(form.irrelevant),
    likert,
    age_band: form.ageBand ?? "",
    gender: form.gender ?? "",
  };
}
