/** Pure view-state derivation. The transcript view is a function of the
 * fetched session state and nothing else, so it can be snapshot-tested. */

import type { SessionView, Specialty, TraitCategory, TurnView } from "./api.js";

export interface AvatarCard {
  label: string;
  profileText: string;
}

export interface ChatBubble {
  turnIndex: number;
  role: "user" | "assistant";
  content: string;
  history: string[];
  feedback: { rating: "positive" | "negative"; comment: string | null }[];
}

export interface UiSessionView {
  sessionId: string;
  card: AvatarCard;
  messages: ChatBubble[];
  pending: boolean;
  closed: boolean;
  improvementAvailable: boolean;
}

export function avatarLabel(
  specialties: Specialty[],
  categories: TraitCategory[],
  specialtyId: string,
  traitCategoryIds: string[],
): string {
  const specialty = specialties.find((s) => s.id === specialtyId);
  const name = specialty ? specialty.display_name : specialtyId;
  const traitNames = traitCategoryIds.map((id) => {
    const category = categories.find((c) => c.id === id);
    return category ? category.name : id;
  });
  return traitNames.length ? `${name} — ${traitNames.join(", ")}` : name;
}

/** Map the server transcript onto the chat view. The profile turn becomes
 * the collapsible avatar card, never a chat bubble; bubble order mirrors
 * the server transcript exactly. */
export function buildSessionView(
  session: SessionView,
  label: string,
  pending = false,
): UiSessionView {
  const messages: ChatBubble[] = [];
  for (const turn of session.turns) {
    if (turn.role === "profile") continue;
    messages.push({
      turnIndex: turn.index,
      role: turn.role,
      content: turn.content,
      history: [...turn.regeneration_history],
      feedback: session.feedback
        .filter((f) => f.turn_index === turn.index)
        .map((f) => ({ rating: f.rating, comment: f.comment })),
    });
  }
  const closed = session.state === "Closed";
  return {
    sessionId: session.session_id,
    card: { label, profileText: session.profile_text },
    messages,
    pending,
    closed,
    improvementAvailable: closed && session.turns.some((t: TurnView) => t.role === "user"),
  };
}

export interface PickerState {
  specialties: Specialty[];
  categories: TraitCategory[];
  selectedSpecialty: string | null;
  selectedCategories: string[];
  previewText: string | null;
  notice: string | null;
}

export function emptyPicker(): PickerState {
  return {
    specialties: [],
    categories: [],
    selectedSpecialty: null,
    selectedCategories: [],
    previewText: null,
    notice: null,
  };
}

export function toggleCategory(state: PickerState, categoryId: string): PickerState {
  const selected = state.selectedCategories.includes(categoryId)
    ? state.selectedCategories.filter((c) => c !== categoryId)
    : [...state.selectedCategories, categoryId];
  return { ...state, selectedCategories: selected, previewText: null };
}
