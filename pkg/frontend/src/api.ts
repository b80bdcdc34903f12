// Thin client over the orchestrator's control API.

import type { AuditFrame, Snapshot } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export interface StreamHandle {
  close(): void;
}

export class ApiClient {
  constructor(private base: string = "", private token: string | null = null) {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "content-type": "application/json" };
    if (this.token) {
      h["x-auth-token"] = this.token;
    }
    return h;
  }

  private async request(path: string, init?: RequestInit): Promise<any> {
    const resp = await fetch(this.base + path, { ...init, headers: this.headers() });
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(resp.status, body.error ?? resp.statusText);
    }
    return body;
  }

  getState(): Promise<Snapshot> {
    return this.request("/api/state");
  }

  submitDirective(doc: unknown): Promise<{ directive_id: number }> {
    return this.request("/api/directives", { method: "POST", body: JSON.stringify(doc) });
  }

  approveRecommendation(recId: number): Promise<{ directive_id: number }> {
    return this.request(`/api/recommendations/${recId}/approve`, { method: "POST" });
  }

  dismissRecommendation(recId: number): Promise<void> {
    return this.request(`/api/recommendations/${recId}/dismiss`, { method: "POST" });
  }

  /**
   * Follow the audit stream from a cursor. Uses server-sent events and falls
   * back to 2 s polling of /api/state-driven replay when EventSource dies.
   */
  openStream(
    since: number,
    onFrame: (frame: AuditFrame) => void,
    onFallback: () => void,
  ): StreamHandle {
    const params = new URLSearchParams({ since: String(since) });
    if (this.token) {
      params.set("token", this.token);
    }
    const source = new EventSource(`${this.base}/api/stream?${params}`);
    const handler = (msg: MessageEvent) => {
      onFrame(JSON.parse(msg.data) as AuditFrame);
    };
    // the server types frames by category; subscribe to each
    for (const category of ["event", "record-transition", "recommendation", "enforcement", "host"]) {
      source.addEventListener(category, handler);
    }
    source.onerror = () => {
      source.close();
      onFallback();
    };
    return { close: () => source.close() };
  }
}

/** Serialize approval clicks: the first wins, repeats are no-ops. */
export class ApprovalGuard {
  private inFlight = new Set<number>();

  async run(recId: number, action: (recId: number) => Promise<unknown>): Promise<boolean> {
    if (this.inFlight.has(recId)) {
      return false;
    }
    this.inFlight.add(recId);
    try {
      await action(recId);
      return true;
    } finally {
      // keep the id claimed; a resolved recommendation never re-arms
    }
  }
}
