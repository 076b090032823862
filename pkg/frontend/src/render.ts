/** Pure state -> HTML string renderers (snapshot-tested). */

import type { PickerState, UiSessionView, ChatBubble } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderAvatarCard(view: UiSessionView): string {
  return [
    `<details class="avatar-card" data-session="${escapeHtml(view.sessionId)}">`,
    `<summary>🩺 ${escapeHtml(view.card.label)}</summary>`,
    `<pre class="profile-text">${escapeHtml(view.card.profileText)}</pre>`,
    `</details>`,
  ].join("");
}

function renderFeedbackBadges(bubble: ChatBubble): string {
  return bubble.feedback
    .map((f) => {
      const icon = f.rating === "positive" ? "👍" : "👎";
      const comment = f.comment ? ` <em>${escapeHtml(f.comment)}</em>` : "";
      return `<span class="feedback-badge">${icon}${comment}</span>`;
    })
    .join("");
}

export function renderBubble(bubble: ChatBubble, interactive: boolean): string {
  const parts: string[] = [
    `<div class="bubble ${bubble.role}" data-turn="${bubble.turnIndex}">`,
    `<p>${escapeHtml(bubble.content)}</p>`,
  ];
  if (bubble.history.length) {
    parts.push(
      `<details class="history"><summary>previous versions (${bubble.history.length})</summary>`,
      ...bubble.history.map((h) => `<pre>${escapeHtml(h)}</pre>`),
      `</details>`,
    );
  }
  if (bubble.role === "assistant") {
    parts.push(renderFeedbackBadges(bubble));
    if (interactive) {
      parts.push(
        `<span class="actions">`,
        `<button data-action="regenerate" data-turn="${bubble.turnIndex}">↻ regenerate</button>`,
        `<button data-action="thumbs-up" data-turn="${bubble.turnIndex}">👍</button>`,
        `<button data-action="thumbs-down" data-turn="${bubble.turnIndex}">👎</button>`,
        `</span>`,
      );
    }
  }
  parts.push(`</div>`);
  return parts.join("");
}

export function renderChat(view: UiSessionView): string {
  const bubbles = view.messages
    .map((bubble, i) => {
      // Only the last assistant bubble of a live session is actionable.
      const isLast = i === view.messages.length - 1;
      return renderBubble(bubble, !view.closed && isLast && bubble.role === "assistant");
    })
    .join("\n");
  const composer = view.closed
    ? [
        `<div class="session-done">`,
        `<span>session closed</span>`,
        view.improvementAvailable
          ? `<button data-action="start-improved">Start improved session</button>`
          : ``,
        `</div>`,
      ].join("")
    : [
        `<form class="composer" data-pending="${view.pending}">`,
        `<input name="message" placeholder="Describe your concern..." ${view.pending ? "disabled" : ""}/>`,
        `<button type="submit" ${view.pending ? "disabled" : ""}>Send</button>`,
        `<button type="button" data-action="close">Close session</button>`,
        `</form>`,
      ].join("");
  return [renderAvatarCard(view), `<div class="transcript">`, bubbles, `</div>`, composer].join(
    "\n",
  );
}

export function renderPicker(state: PickerState): string {
  const notice = state.notice ? `<p class="notice">${escapeHtml(state.notice)}</p>` : "";
  const specialties = state.specialties
    .map((s) => {
      const selected = s.id === state.selectedSpecialty ? " selected" : "";
      return `<option value="${escapeHtml(s.id)}"${selected}>${escapeHtml(s.display_name)}</option>`;
    })
    .join("");
  const categories = state.categories
    .map((c) => {
      const checked = state.selectedCategories.includes(c.id) ? " checked" : "";
      return [
        `<label class="trait-category">`,
        `<input type="checkbox" value="${escapeHtml(c.id)}"${checked}/>`,
        `${escapeHtml(c.name)} <small>${escapeHtml(c.traits.join(", "))}</small>`,
        `</label>`,
      ].join("");
    })
    .join("\n");
  const preview =
    state.previewText === null
      ? ""
      : `<pre class="profile-preview">${escapeHtml(state.previewText)}</pre>`;
  return [
    notice,
    `<select name="specialty">${specialties}</select>`,
    `<fieldset class="traits">`,
    categories,
    `</fieldset>`,
    preview,
    `<button data-action="start-session">Start session</button>`,
  ].join("\n");
}
