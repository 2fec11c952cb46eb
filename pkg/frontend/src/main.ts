/** Browser entry point: session picker, deep links (/s/{id}), and the chat
 * loop. The Vega stack arrives via CDN script tags in index.html. */

import { ApiClient } from "./api.js";
import { vegaEmbedRenderer } from "./charts.js";
import { errorBubble, renderChat, systemBubble, userBubble } from "./render.js";
import { ChatController } from "./state.js";

const api = new ApiClient("");

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

async function showPicker(): Promise<void> {
  const picker = byId<HTMLDivElement>("picker");
  const chat = byId<HTMLDivElement>("chat-root");
  picker.hidden = false;
  chat.hidden = true;

  const list = byId<HTMLUListElement>("session-list");
  list.textContent = "";
  const { sessions } = await api.listSessions();
  for (const session of sessions) {
    const item = document.createElement("li");
    const link = document.createElement("a");
    link.href = `/s/${session.id}`;
    link.textContent = `${session.id} — ${session.dataset_ref} (${session.turns} turns)`;
    link.addEventListener("click", (event) => {
      event.preventDefault();
      history.pushState({}, "", `/s/${session.id}`);
      void openSession(session.id);
    });
    item.appendChild(link);
    list.appendChild(item);
  }

  byId<HTMLButtonElement>("create-session").onclick = async () => {
    const table = byId<HTMLInputElement>("table-name").value.trim();
    if (!table) {
      return;
    }
    try {
      const created = await api.createSession(table);
      history.pushState({}, "", `/s/${created.id}`);
      await openSession(created.id);
    } catch (error) {
      byId<HTMLParagraphElement>("picker-error").textContent =
        `could not create session: ${(error as { message?: string }).message ?? error}`;
    }
  };
}

async function openSession(sessionId: string): Promise<void> {
  const picker = byId<HTMLDivElement>("picker");
  const chatRoot = byId<HTMLDivElement>("chat-root");
  picker.hidden = true;
  chatRoot.hidden = false;

  const log = byId<HTMLDivElement>("log");
  const input = byId<HTMLInputElement>("query");
  const send = byId<HTMLButtonElement>("send");
  const controller = new ChatController(api, sessionId);

  await controller.refresh();
  await renderChat(document, log, {
    id: sessionId,
    dataset_ref: "",
    turns: controller.turns,
  }, vegaEmbedRenderer);

  const setBusy = (busy: boolean) => {
    input.disabled = busy;
    send.disabled = busy;
  };

  const submit = async () => {
    const text = input.value;
    if (!controller.canSubmit || !text.trim()) {
      return;
    }
    setBusy(true);
    log.appendChild(userBubble(document, text));
    input.value = "";
    const outcome = await controller.submit(text);
    if (outcome === null) {
      setBusy(false);
      return;
    }
    if (outcome.ok && outcome.turn) {
      log.appendChild(await systemBubble(document, outcome.turn, vegaEmbedRenderer));
    } else {
      log.appendChild(errorBubble(document, outcome.errorMessage ?? "failed"));
    }
    setBusy(false);
    log.scrollTop = log.scrollHeight;
  };

  send.onclick = () => void submit();
  input.onkeydown = (event) => {
    if (event.key === "Enter") {
      event.preventDefault();
      void submit();
    }
  };
}

/** Deep links: /s/{id} opens that session directly. */
export function sessionIdFromPath(pathname: string): string | null {
  const match = pathname.match(/^\/s\/([^/]+)$/);
  return match ? decodeURIComponent(match[1]) : null;
}

export async function boot(): Promise<void> {
  const sessionId = sessionIdFromPath(location.pathname);
  if (sessionId !== null) {
    await openSession(sessionId);
  } else {
    await showPicker();
  }
}

if (typeof document !== "undefined" && document.getElementById("picker")) {
  void boot();
}
