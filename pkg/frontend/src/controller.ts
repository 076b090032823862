/** Orchestration between the API client and the view state. No prompt text
 * is ever assembled here: the preview pane and the avatar card display the
 * server's strings verbatim. */

import { ApiError, AvatarApi } from "./api.js";
import type { Specialty, TraitCategory } from "./api.js";
import {
  PickerState,
  UiSessionView,
  avatarLabel,
  buildSessionView,
  emptyPicker,
  toggleCategory,
} from "./state.js";

export class PickerController {
  state: PickerState = emptyPicker();

  constructor(private readonly api: AvatarApi) {}

  async load(): Promise<void> {
    const [specialties, categories] = await Promise.all([
      this.api.listSpecialties(),
      this.api.listTraitCategories(),
    ]);
    this.state = { ...this.state, specialties, categories, notice: null };
  }

  selectSpecialty(specialtyId: string): void {
    this.state = { ...this.state, selectedSpecialty: specialtyId, previewText: null };
  }

  toggleCategory(categoryId: string): void {
    this.state = toggleCategory(this.state, categoryId);
  }

  /** Fetch the exact profile text the server would use for this selection. */
  async preview(): Promise<string> {
    if (!this.state.selectedSpecialty) {
      throw new Error("select a specialty first");
    }
    const preview = await this.api.previewProfile(
      this.state.selectedSpecialty,
      this.state.selectedCategories,
    );
    this.state = { ...this.state, previewText: preview.profile_text };
    return preview.profile_text;
  }

  async start(): Promise<ChatController> {
    if (!this.state.selectedSpecialty) {
      throw new Error("select a specialty first");
    }
    const created = await this.api.createSession({
      specialty_id: this.state.selectedSpecialty,
      trait_category_ids: this.state.selectedCategories,
    });
    const chat = new ChatController(this.api, created.session_id, this.state.specialties, this.state.categories);
    await chat.refresh();
    return chat;
  }

  noteStaleSession(message: string): void {
    this.state = { ...this.state, notice: message };
  }
}

export class ChatController {
  view: UiSessionView | null = null;
  private inFlight = false;

  constructor(
    private readonly api: AvatarApi,
    readonly sessionId: string,
    private readonly specialties: Specialty[],
    private readonly categories: TraitCategory[],
  ) {}

  private label(specialtyId: string, traitCategoryIds: string[]): string {
    return avatarLabel(this.specialties, this.categories, specialtyId, traitCategoryIds);
  }

  async refresh(pending = false): Promise<UiSessionView> {
    const session = await this.api.getSession(this.sessionId);
    this.view = buildSessionView(
      session,
      this.label(session.specialty_id, session.trait_category_ids),
      pending,
    );
    return this.view;
  }

  /** One in-flight message per session, enforced client-side. */
  async send(text: string): Promise<UiSessionView> {
    if (this.inFlight) {
      throw new Error("a message is already pending");
    }
    this.inFlight = true;
    if (this.view) {
      this.view = { ...this.view, pending: true };
    }
    try {
      await this.api.sendMessage(this.sessionId, text);
    } finally {
      this.inFlight = false;
    }
    return this.refresh();
  }

  async regenerate(): Promise<UiSessionView> {
    if (this.inFlight) {
      throw new Error("a message is already pending");
    }
    this.inFlight = true;
    try {
      await this.api.regenerate(this.sessionId);
    } finally {
      this.inFlight = false;
    }
    return this.refresh();
  }

  async feedback(
    turnIndex: number,
    rating: "positive" | "negative",
    comment?: string,
  ): Promise<UiSessionView> {
    await this.api.sendFeedback(this.sessionId, turnIndex, rating, comment);
    return this.refresh();
  }

  async close(): Promise<UiSessionView> {
    await this.api.closeSession(this.sessionId);
    return this.refresh();
  }

  /** Close-time affordance: distill this session and seed the next one. */
  async startImproved(): Promise<ChatController> {
    await this.api.improve(this.sessionId);
    const created = await this.api.createSession({ improved_profile_id: this.sessionId });
    const next = new ChatController(this.api, created.session_id, this.specialties, this.categories);
    await next.refresh();
    return next;
  }
}

export function isStaleSessionError(error: unknown): boolean {
  return error instanceof ApiError && error.status === 404;
}
