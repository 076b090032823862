import { describe, expect, it } from "vitest";

import { escapeHtml, renderChat, renderPicker } from "../src/render.js";
import type { PickerState, UiSessionView } from "../src/state.js";

const VIEW: UiSessionView = {
  sessionId: "s42",
  card: {
    label: "General practice — Ethical traits",
    profileText: "In this dialogue session with me, you are a doctor <with> a specialty...",
  },
  messages: [
    {
      turnIndex: 1,
      role: "assistant",
      content: "Hello! I'm glad to be your doctor for this session.",
      history: [],
      feedback: [],
    },
    { turnIndex: 2, role: "user", content: "I have a cough.", history: [], feedback: [] },
    {
      turnIndex: 3,
      role: "assistant",
      content: "Let us look into that together.",
      history: ["A weaker first attempt."],
      feedback: [{ rating: "negative", comment: "too vague" }],
    },
  ],
  pending: false,
  closed: false,
  improvementAvailable: false,
};

describe("renderChat", () => {
  it("is a pure function of the view state (snapshot)", () => {
    expect(renderChat(VIEW)).toMatchSnapshot();
    expect(renderChat(VIEW)).toBe(renderChat(VIEW));
  });

  it("renders the profile as a collapsible card, not a bubble", () => {
    const html = renderChat(VIEW);
    expect(html).toContain('<details class="avatar-card"');
    expect(html).not.toContain('<div class="bubble profile"');
  });

  it("escapes markup in server text", () => {
    const html = renderChat(VIEW);
    expect(html).toContain("&lt;with&gt;");
    expect(html).not.toContain("doctor <with>");
  });

  it("disables the composer while pending", () => {
    const pending = renderChat({ ...VIEW, pending: true });
    expect(pending).toContain('data-pending="true"');
    expect(pending).toMatch(/<input[^>]*disabled/);
  });

  it("puts regenerate and feedback affordances on the last assistant bubble", () => {
    const html = renderChat(VIEW);
    expect(html).toContain('data-action="regenerate" data-turn="3"');
    expect(html).toContain('data-action="thumbs-down" data-turn="3"');
    expect(html).not.toContain('data-action="regenerate" data-turn="1"');
  });

  it("shows the regeneration history popover", () => {
    const html = renderChat(VIEW);
    expect(html).toContain("previous versions (1)");
    expect(html).toContain("A weaker first attempt.");
  });

  it("offers an improved session only after close", () => {
    const closed = renderChat({ ...VIEW, closed: true, improvementAvailable: true });
    expect(closed).toContain('data-action="start-improved"');
    expect(closed).not.toContain("form class=\"composer\"");
    expect(renderChat(VIEW)).not.toContain('data-action="start-improved"');
  });
});

const PICKER: PickerState = {
  specialties: [
    { id: "general_practice", display_name: "General practice" },
    { id: "allergy", display_name: "Allergy" },
  ],
  categories: [
    { id: "ethical", name: "Ethical traits", traits: ["virtuous", "fair", "trustworthy"] },
  ],
  selectedSpecialty: "general_practice",
  selectedCategories: ["ethical"],
  previewText: "SERVER PREVIEW TEXT",
  notice: null,
};

describe("renderPicker", () => {
  it("is a pure function of the picker state (snapshot)", () => {
    expect(renderPicker(PICKER)).toMatchSnapshot();
  });

  it("shows the server-provided preview verbatim", () => {
    expect(renderPicker(PICKER)).toContain("SERVER PREVIEW TEXT");
  });

  it("shows a notice when present", () => {
    const html = renderPicker({ ...PICKER, notice: "session expired" });
    expect(html).toContain("session expired");
  });
});

describe("escapeHtml", () => {
  it("escapes the four reserved characters", () => {
    expect(escapeHtml('<a href="x">&</a>')).toBe("&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;");
  });
});
