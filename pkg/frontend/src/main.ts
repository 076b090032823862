/** Browser bootstrap: wires the controllers to the DOM. */

import { AvatarApi } from "./api.js";
import { ChatController, PickerController, isStaleSessionError } from "./controller.js";
import { renderChat, renderPicker } from "./render.js";

const api = new AvatarApi("");
const root = document.getElementById("app") as HTMLElement;

let picker: PickerController | null = null;
let chat: ChatController | null = null;

function showPicker(): void {
  if (!picker) return;
  root.innerHTML = renderPicker(picker.state);

  const select = root.querySelector<HTMLSelectElement>("select[name=specialty]");
  select?.addEventListener("change", async () => {
    picker!.selectSpecialty(select.value);
    await picker!.preview().catch(() => undefined);
    showPicker();
  });

  for (const checkbox of root.querySelectorAll<HTMLInputElement>(".traits input[type=checkbox]")) {
    checkbox.addEventListener("change", async () => {
      picker!.toggleCategory(checkbox.value);
      if (picker!.state.selectedSpecialty) {
        await picker!.preview().catch(() => undefined);
      }
      showPicker();
    });
  }

  root.querySelector("[data-action=start-session]")?.addEventListener("click", async () => {
    try {
      chat = await picker!.start();
      showChat();
    } catch (error) {
      picker!.noteStaleSession(String(error));
      showPicker();
    }
  });
}

function showChat(): void {
  if (!chat?.view) return;
  root.innerHTML = renderChat(chat.view);

  const form = root.querySelector<HTMLFormElement>("form.composer");
  form?.addEventListener("submit", async (event) => {
    event.preventDefault();
    const input = form.querySelector<HTMLInputElement>("input[name=message]");
    const text = input?.value.trim();
    if (!text) return;
    await chat!.refresh(true);
    showChat();
    try {
      await chat!.send(text);
    } catch (error) {
      if (isStaleSessionError(error)) {
        picker?.noteStaleSession("session expired on the server; pick a new avatar");
        showPicker();
        return;
      }
    }
    showChat();
  });

  root.querySelector("[data-action=close]")?.addEventListener("click", async () => {
    await chat!.close();
    showChat();
  });

  root.querySelector("[data-action=start-improved]")?.addEventListener("click", async () => {
    chat = await chat!.startImproved();
    showChat();
  });

  for (const button of root.querySelectorAll<HTMLButtonElement>("[data-action=regenerate]")) {
    button.addEventListener("click", async () => {
      await chat!.regenerate();
      showChat();
    });
  }
  for (const button of root.querySelectorAll<HTMLButtonElement>("[data-action=thumbs-up]")) {
    button.addEventListener("click", async () => {
      await chat!.feedback(Number(button.dataset.turn), "positive");
      showChat();
    });
  }
  for (const button of root.querySelectorAll<HTMLButtonElement>("[data-action=thumbs-down]")) {
    button.addEventListener("click", async () => {
      const comment = window.prompt("What was wrong with this reply?") ?? undefined;
      await chat!.feedback(Number(button.dataset.turn), "negative", comment);
      showChat();
    });
  }
}

async function start(): Promise<void> {
  picker = new PickerController(api);
  try {
    await picker.load();
  } catch (error) {
    root.innerHTML = `<p class="notice">cannot reach the avatar service: ${String(error)}</p>`;
    return;
  }
  showPicker();
}

void start();
