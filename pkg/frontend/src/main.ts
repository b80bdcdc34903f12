// Dashboard bootstrap: snapshot first, then live frames; composer and
// approval actions are the only mutations.

import { ApiClient, ApiError, ApprovalGuard } from "./api.js";
import {
  addOptimisticDirective,
  applyFrame,
  emptyModel,
  fromSnapshot,
  SchemaMismatchError,
} from "./model.js";
import { renderErrorBanner, renderState } from "./render.js";
import type { DashboardModel } from "./types.js";
import { validateDirective } from "./validate.js";

const POLL_FALLBACK_MS = 2000;

const root = document.getElementById("dashboard")!;
const token = new URLSearchParams(location.search).get("token");
const api = new ApiClient("", token);
const guard = new ApprovalGuard();

let model: DashboardModel = emptyModel();
let stream: { close(): void } | null = null;
let pollTimer: number | null = null;

function paint(): void {
  root.innerHTML = renderState(model);
}

async function resync(): Promise<void> {
  try {
    model = fromSnapshot(await api.getState());
    paint();
    follow();
  } catch (err) {
    if (err instanceof SchemaMismatchError) {
      root.innerHTML = renderErrorBanner(err.message);
    } else {
      root.innerHTML = renderErrorBanner(String(err));
      window.setTimeout(resync, POLL_FALLBACK_MS);
    }
  }
}

function follow(): void {
  stream?.close();
  stream = api.openStream(
    model.cursor,
    (frame) => {
      applyFrame(model, frame);
      paint();
    },
    () => {
      // stream died: poll snapshots until it comes back
      if (pollTimer === null) {
        pollTimer = window.setInterval(async () => {
          try {
            model = fromSnapshot(await api.getState());
            paint();
            window.clearInterval(pollTimer!);
            pollTimer = null;
            follow();
          } catch {
            // keep polling
          }
        }, POLL_FALLBACK_MS);
      }
    },
  );
}

root.addEventListener("click", async (ev) => {
  const target = ev.target as HTMLElement;
  const recId = target.dataset.recId;
  if (!recId) {
    return;
  }
  const id = Number(recId);
  if (target.classList.contains("approve")) {
    (target as HTMLButtonElement).disabled = true;
    await guard.run(id, (r) => api.approveRecommendation(r)).catch(() => undefined);
  } else if (target.classList.contains("dismiss")) {
    (target as HTMLButtonElement).disabled = true;
    await api.dismissRecommendation(id).catch(() => undefined);
  }
});

const form = document.getElementById("composer") as HTMLFormElement | null;
form?.addEventListener("submit", async (ev) => {
  ev.preventDefault();
  const errorBox = document.getElementById("composer-error")!;
  errorBox.textContent = "";
  const level = Number((document.getElementById("composer-level") as HTMLInputElement).value);
  const threat = (document.getElementById("composer-threat") as HTMLInputElement).value;
  const actionsRaw = (document.getElementById("composer-actions") as HTMLTextAreaElement).value;
  let actions: unknown;
  try {
    actions = JSON.parse(actionsRaw);
  } catch {
    errorBox.textContent = "actions must be valid JSON";
    return;
  }
  const draft = { cpcon_level: level, threat, actions };
  const problem = validateDirective(draft);
  if (problem !== null) {
    errorBox.textContent = problem;
    return; // invalid drafts never reach the network
  }
  try {
    const { directive_id } = await api.submitDirective(draft);
    addOptimisticDirective(model, directive_id, level, threat);
    paint();
  } catch (err) {
    errorBox.textContent = err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
  }
});

resync();
