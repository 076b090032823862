/** Typed client for the avatar-engine /v1 HTTP API. All profile text the UI
 * ever shows comes out of these responses; nothing is composed locally. */

export interface Specialty {
  id: string;
  display_name: string;
}

export interface TraitCategory {
  id: string;
  name: string;
  traits: string[];
}

export interface ProfilePreview {
  profile_text: string;
  segments: (string | null)[];
}

export interface CreatedSession {
  session_id: string;
  profile_text: string;
  introduction: string;
}

export interface TurnView {
  index: number;
  role: "profile" | "user" | "assistant";
  content: string;
  token_estimate: number;
  regeneration_history: string[];
  created_at: string;
}

export interface FeedbackView {
  turn_index: number;
  rating: "positive" | "negative";
  comment: string | null;
  created_at: string;
}

export interface SessionView {
  session_id: string;
  state: "Created" | "Active" | "Closed";
  specialty_id: string;
  trait_category_ids: string[];
  profile_text: string;
  budget: { window_limit: number; reply_reserve: number };
  improvement_source: string | null;
  turns: TurnView[];
  feedback: FeedbackView[];
}

export interface ImprovedProfileView {
  source_session_id: string;
  memory_text: string;
  token_delta: number;
  truncated: boolean;
  rendered_text: string;
}

export interface CreateSessionBody {
  specialty_id?: string;
  trait_category_ids?: string[];
  improved_profile_id?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let code = "HttpError";
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep defaults
  }
  throw new ApiError(response.status, code, message);
}

export class AvatarApi {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  listSpecialties(): Promise<Specialty[]> {
    return this.request("GET", "/v1/specialties");
  }

  listTraitCategories(): Promise<TraitCategory[]> {
    return this.request("GET", "/v1/trait-categories");
  }

  previewProfile(specialtyId: string, traitCategoryIds: string[]): Promise<ProfilePreview> {
    return this.request("POST", "/v1/profiles/preview", {
      specialty_id: specialtyId,
      trait_category_ids: traitCategoryIds,
    });
  }

  createSession(body: CreateSessionBody): Promise<CreatedSession> {
    return this.request("POST", "/v1/sessions", body);
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/v1/sessions/${sessionId}`);
  }

  sendMessage(sessionId: string, text: string): Promise<TurnView> {
    return this.request("POST", `/v1/sessions/${sessionId}/messages`, { text });
  }

  regenerate(sessionId: string): Promise<TurnView> {
    return this.request("POST", `/v1/sessions/${sessionId}/regenerate`);
  }

  sendFeedback(
    sessionId: string,
    turnIndex: number,
    rating: "positive" | "negative",
    comment?: string,
  ): Promise<FeedbackView> {
    return this.request("POST", `/v1/sessions/${sessionId}/feedback`, {
      turn_index: turnIndex,
      rating,
      comment: comment ?? null,
    });
  }

  closeSession(sessionId: string): Promise<{ session_id: string; turn_count: number }> {
    return this.request("POST", `/v1/sessions/${sessionId}/close`);
  }

  improve(sessionId: string): Promise<ImprovedProfileView> {
    return this.request("POST", `/v1/sessions/${sessionId}/improve`);
  }
}
