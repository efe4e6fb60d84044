// Wire types for the study service JSON API. Everything the server sends is
// parsed through these schemas, so a contract drift fails loudly instead of
// rendering garbage.
import { z } from "zod";

const plantVector = z.array(z.number().int()).length(5);

export const trialSummarySchema = z.object({
  trial: z.number().int(),
  choice: plantVector,
  pack_before: z.number().int(),
  pack_after: z.number().int(),
  delta: z.number().int(),
});

export const instructionsSceneSchema = z.object({
  kind: z.literal("instructions"),
  start_delay_s: z.number(),
  pack_size: z.number().int(),
  trials_total: z.number().int(),
  plant_display_order: z.array(z.number().int()).length(5),
});

export const choiceSceneSchema = z.object({
  kind: z.literal("choice"),
  trial: z.number().int(),
  trials_total: z.number().int(),
  pack_size: z.number().int(),
  plant_display_order: z.array(z.number().int()).length(5),
  previous: trialSummarySchema.nullable(),
});

export const feedbackSceneSchema = z.object({
  kind: z.literal("feedback"),
  block: z.number().int(),
  trials: z.array(z.number().int()).length(2),
  pack_size: z.number().int(),
  continue_delay_s: z.number(),
});

export const attentionSceneSchema = z.object({
  kind: z.literal("attention"),
  after_trial: z.number().int(),
});

export const surveyItemSchema = z.union([
  z.object({
    kind: z.literal("plant-selection"),
    id: z.number().int(),
    text: z.string(),
    plants: z.array(z.number().int()),
    dont_know: z.string(),
  }),
  z.object({
    kind: z.literal("likert"),
    id: z.number().int(),
    text: z.string(),
    scale: z.record(z.string(), z.string()),
    prefer_not_to_answer: z.string(),
  }),
  z.object({
    kind: z.literal("single-choice"),
    id: z.string(),
    text: z.string(),
    options: z.array(z.string()),
  }),
]);

export const surveySceneSchema = z.object({
  kind: z.literal("survey"),
  items: z.array(surveyItemSchema),
});

export const payoutSceneSchema = z.object({
  kind: z.literal("payout"),
});

const plainSceneSchema = z.discriminatedUnion("kind", [
  instructionsSceneSchema,
  choiceSceneSchema,
  feedbackSceneSchema,
  attentionSceneSchema,
  surveySceneSchema,
  payoutSceneSchema,
]);

export const progressSceneSchema = z.object({
  kind: z.literal("progress"),
  duration_s: z.number(),
  next: plainSceneSchema,
});

export const sceneSchema = z.union([plainSceneSchema, progressSceneSchema]);

export type TrialSummary = z.infer<typeof trialSummarySchema>;
export type InstructionsScene = z.infer<typeof instructionsSceneSchema>;
export type ChoiceScene = z.infer<typeof choiceSceneSchema>;
export type FeedbackScene = z.infer<typeof feedbackSceneSchema>;
export type AttentionScene = z.infer<typeof attentionSceneSchema>;
export type SurveyItem = z.infer<typeof surveyItemSchema>;
export type SurveyScene = z.infer<typeof surveySceneSchema>;
export type ProgressScene = z.infer<typeof progressSceneSchema>;
export type PlainScene = z.infer<typeof plainSceneSchema>;
export type Scene = z.infer<typeof sceneSchema>;

export const feedbackEntrySchema = trialSummarySchema.extend({
  cfe: z
    .object({
      suggestion: plantVector,
      predicted_growth: z.number(),
      distance: z.number().int(),
    })
    .nullable()
    .optional(),
  near_optimal: z.boolean().optional(),
});

export const feedbackPayloadSchema = z.object({
  block: z.number().int(),
  entries: z.array(feedbackEntrySchema),
  continue_delay_s: z.number(),
});

export type FeedbackEntry = z.infer<typeof feedbackEntrySchema>;
export type FeedbackPayload = z.infer<typeof feedbackPayloadSchema>;

export const createSessionResponseSchema = z.object({
  session_id: z.string(),
  scene: sceneSchema,
});

export const sceneResponseSchema = z.object({ scene: sceneSchema });

export const feedResponseSchema = z.object({
  trial: z.number().int(),
  delta: z.number().int(),
  pack_size: z.number().int(),
  scene: sceneSchema,
});

export const attentionResponseSchema = z.object({
  correct: z.boolean(),
  scene: sceneSchema,
});

export const paymentResponseSchema = z.object({ code: z.string() });

// Canonical request body for the survey POST; plant order never leaks in here.
export interface SurveyPayload {
  relevant_plants: number[] | string;
  irrelevant_plants: number[] | string;
  likert: Record<string, number | string>;
  age_band: string;
  gender: string;
}
