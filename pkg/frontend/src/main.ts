/**
 * Entry point: a minimal bootstrap form (service URL + annotator token),
 * then the annotation loop.  Settings persist in localStorage.
 */

import { ApiClient } from "./api.js";
import { AnnotationSession } from "./session.js";
import { mountUi } from "./ui.js";

const STORAGE_KEY = "pairrank-ui-config";

interface StoredConfig {
  baseUrl: string;
  token: string;
}

function loadConfig(): StoredConfig | null {
  try {
    const raw = localStorage.getItem(STORAGE_KEY);
    return raw ? (JSON.parse(raw) as StoredConfig) : null;
  } catch {
    return null;
  }
}

function bootstrapForm(root: HTMLElement, onSubmit: (config: StoredConfig) => void): void {
  root.replaceChildren();
  const form = document.createElement("form");
  form.className = "bootstrap";
  form.innerHTML = `
    <h1>pairrank annotation</h1>
    <label>Service URL
      <input name="baseUrl" type="url" required
             value="${loadConfig()?.baseUrl ?? "http://127.0.0.1:8100"}">
    </label>
    <label>Annotator token
      <input name="token" type="password" required
             value="${loadConfig()?.token ?? ""}">
    </label>
    <button type="submit">Start annotating</button>
    <p class="error" hidden></p>
  `;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    onSubmit({
      baseUrl: String(data.get("baseUrl")).replace(/\/+$/, ""),
      token: String(data.get("token")),
    });
  });
  root.appendChild(form);
}

async function startSession(root: HTMLElement, config: StoredConfig): Promise<void> {
  const api = new ApiClient(config.baseUrl, config.token);
  let info;
  try {
    info = await api.bootstrap();
  } catch {
    bootstrapForm(root, (next) => void startSession(root, next));
    const error = root.querySelector<HTMLParagraphElement>(".error");
    if (error) {
      error.hidden = false;
      error.textContent = "Could not reach the service; check the URL.";
    }
    return;
  }
  localStorage.setItem(STORAGE_KEY, JSON.stringify(config));

  const session = new AnnotationSession(api);
  const ui = mountUi(root, session, info.prompt);
  session.events = {
    onPair: (view) => {
      ui.setProgress(session.progress);
      ui.showPair(view);
    },
    onNoWork: () => ui.showNoWork(),
    onConflict: (message) => ui.toast(`Pair expired: ${message}`),
    onOffline: (queued) => ui.toast(`Offline; ${queued} submission(s) queued`),
  };
  await session.start();
}

const root = document.getElementById("app");
if (root) {
  const saved = loadConfig();
  if (saved && saved.token) {
    void startSession(root, saved);
  } else {
    bootstrapForm(root, (config) => void startSession(root, config));
  }
}
