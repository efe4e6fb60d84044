// Thin typed client for the study service. One session per tab, and every
// call is funnelled through a promise chain so requests can never overlap.
import {
  attentionResponseSchema,
  createSessionResponseSchema,
  feedResponseSchema,
  feedbackPayloadSchema,
  paymentResponseSchema,
  sceneResponseSchema,
  sceneSchema,
  type FeedbackPayload,
  type Scene,
  type SurveyPayload,
} from "./protocol";

export class ApiHttpError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiHttpError";
  }
}

export class NetworkError extends Error {
  constructor(cause: unknown) {
    super("network request failed");
    this.name = "NetworkError";
    this.cause = cause;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class StudyApi {
  private queue: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private enqueue<T>(work: () => Promise<T>): Promise<T> {
    const next = this.queue.then(work, work);
    // keep the chain alive whether or not the caller handles the rejection
    this.queue = next.then(
      () => undefined,
      () => undefined,
    );
    return next;
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new NetworkError(cause);
    }
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      // non-JSON body; detail stays generic
    }
    if (!response.ok) {
      const detail =
        payload !== null && typeof payload === "object" && "detail" in payload
          ? String((payload as { detail: unknown }).detail)
          : response.statusText;
      throw new ApiHttpError(response.status, detail);
    }
    return payload;
  }

  createSession(): Promise<{ session_id: string; scene: Scene }> {
    return this.enqueue(async () =>
      createSessionResponseSchema.parse(
        await this.request("POST", "/api/session", { consent: true }),
      ),
    );
  }

  getScene(sessionId: string): Promise<Scene> {
    return this.enqueue(async () =>
      sceneSchema.parse(await this.request("GET", `/api/session/${sessionId}/scene`)),
    );
  }

  advance(sessionId: string): Promise<Scene> {
    return this.enqueue(async () =>
      sceneResponseSchema.parse(
        await this.request("POST", `/api/session/${sessionId}/advance`),
      ).scene,
    );
  }

  feed(
    sessionId: string,
    leaves: number[],
    decisionTimeMs: number,
  ): Promise<{ trial: number; delta: number; pack_size: number; scene: Scene }> {
    return this.enqueue(async () =>
      feedResponseSchema.parse(
        await this.request("POST", `/api/session/${sessionId}/feed`, {
          leaves,
          decision_time_ms: decisionTimeMs,
        }),
      ),
    );
  }

  getFeedback(sessionId: string): Promise<FeedbackPayload> {
    return this.enqueue(async () =>
      feedbackPayloadSchema.parse(
        await this.request("GET", `/api/session/${sessionId}/feedback`),
      ),
    );
  }

  submitAttention(sessionId: string, answer: number): Promise<{ correct: boolean; scene: Scene }> {
    return this.enqueue(async () =>
      attentionResponseSchema.parse(
        await this.request("POST", `/api/session/${sessionId}/attention`, { answer }),
      ),
    );
  }

  submitSurvey(sessionId: string, payload: SurveyPayload): Promise<Scene> {
    return this.enqueue(async () =>
      sceneResponseSchema.parse(
        await this.request("POST", `/api/session/${sessionId}/survey`, payload),
      ).scene,
    );
  }

  paymentCode(sessionId: string): Promise<string> {
    return this.enqueue(async () =>
      paymentResponseSchema.parse(
        await this.request("GET", `/api/session/${sessionId}/payment-code`),
      ).code,
    );
  }
}
