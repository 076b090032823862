/** End-to-end: the UI controllers drive the real avatar service (scripted
 * backend) through pick -> preview -> chat -> regenerate -> feedback ->
 * close -> start improved session. */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { AvatarApi } from "../src/api.js";
import { ChatController, PickerController } from "../src/controller.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const MEMORY_PREAMBLE = "You also remember the following from our previous conversation:";

const INTRO_1 =
  "Hello! I'm glad to be your doctor for this session. As a general practitioner " +
  "I focus on comprehensive patient care and management, and I will listen to your " +
  "concerns carefully, explain my reasoning in plain language, and be honest with " +
  "you about what we know and what still needs investigation. Please tell me what " +
  "brings you in today, when it started, and how it affects your daily life, and " +
  "we will work through it together step by step.";
const REPLY_1 =
  "Thank you for telling me. I recommend resting the leg for a few days while we watch it.";
const REPLY_1_REGENERATED =
  "Thank you for telling me. I suggest a proper examination; the diagnosis may be a running overuse injury.";
const REPLY_2 =
  "Good question. I recommend supportive shoes and a gradual return to training over two weeks.";
const INTRO_2 =
  "Welcome back! I remember what we discussed last time and I am ready to continue your care.";

const SCRIPT = [INTRO_1, REPLY_1, REPLY_1_REGENERATED, REPLY_2, INTRO_2];

const USER_MSG_1 = "I have a sore left knee after my long weekend runs.";
const USER_MSG_2 = "I also have some stiffness in the same knee every morning.";

let server: ChildProcess;
let serverLog = "";
const requestBodies: string[] = [];

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/v1/specialties`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error(`avatar service did not come up on ${BASE}\n${serverLog}`);
}

beforeAll(async () => {
  const workDir = mkdtempSync(join(tmpdir(), "avatar-ui-e2e-"));
  const scriptPath = join(workDir, "script.json");
  writeFileSync(scriptPath, JSON.stringify(SCRIPT));

  server = spawn(
    "python3",
    [
      "-m",
      "avatar_engine.cli",
      "serve",
      "--bind",
      `127.0.0.1:${PORT}`,
      "--backend",
      "mock",
      "--script",
      scriptPath,
      "--store",
      join(workDir, "sessions"),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk: Buffer) => (serverLog += chunk.toString()));
  server.stderr?.on("data", (chunk: Buffer) => (serverLog += chunk.toString()));
  await waitForServer();

  // Intercept every outgoing request so we can prove the UI never ships
  // locally composed prompt text to the server.
  const realFetch = globalThis.fetch;
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    if (init?.body && typeof init.body === "string") {
      requestBodies.push(init.body);
    }
    return realFetch(input, init);
  }) as typeof fetch;
}, 40_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("full chat flow against the live service", () => {
  let picker: PickerController;
  let chat: ChatController;
  let previewText: string;

  it("picker preview equals the server profile text", async () => {
    const api = new AvatarApi(BASE);
    picker = new PickerController(api);
    await picker.load();
    expect(picker.state.specialties[0]).toEqual({
      id: "general_practice",
      display_name: "General practice",
    });
    expect(picker.state.categories.map((c) => c.id)).toContain("ethical");

    picker.selectSpecialty("general_practice");
    picker.toggleCategory("ethical");
    previewText = await picker.preview();
    expect(previewText.startsWith("In this dialogue session with me, ")).toBe(true);

    chat = await picker.start();
    expect(chat.view?.card.profileText).toBe(previewText);
    expect(chat.view?.messages[0]?.content).toBe(INTRO_1);
  }, 30_000);

  it("chats, regenerates, and records a thumbs-down with comment", async () => {
    let view = await chat.send(USER_MSG_1);
    expect(view.messages.at(-1)?.content).toBe(REPLY_1);

    view = await chat.regenerate();
    const last = view.messages.at(-1);
    expect(last?.content).toBe(REPLY_1_REGENERATED);
    expect(last?.history).toEqual([REPLY_1]);

    view = await chat.feedback(last!.turnIndex, "negative", "please be more specific");
    expect(view.messages.at(-1)?.feedback).toEqual([
      { rating: "negative", comment: "please be more specific" },
    ]);

    view = await chat.send(USER_MSG_2);
    expect(view.messages.at(-1)?.content).toBe(REPLY_2);
  }, 30_000);

  it("closes and starts an improved session whose card carries the memory", async () => {
    const view = await chat.close();
    expect(view.closed).toBe(true);
    expect(view.improvementAvailable).toBe(true);

    const improved = await chat.startImproved();
    expect(improved.view?.messages[0]?.content).toBe(INTRO_2);
    const card = improved.view?.card.profileText ?? "";
    expect(card.startsWith(previewText)).toBe(true);
    expect(card).toContain(MEMORY_PREAMBLE);
    expect(card).toContain("sore left knee");
  }, 30_000);

  it("never sent locally composed profile text to the server", () => {
    expect(requestBodies.length).toBeGreaterThan(0);
    for (const body of requestBodies) {
      expect(body).not.toContain("In this dialogue session");
      expect(body).not.toContain(MEMORY_PREAMBLE);
    }
  });
});
