// REST client for the session service.

import type { MetricsInfo, Snapshot, TeachFormModel } from "./types.js";

export class ApiError extends Error {
  code: string;
  status: number;

  constructor(status: number, code: string, detail: string) {
    super(detail || code);
    this.status = status;
    this.code = code;
  }
}

export type UtteranceResult = {
  kind: "pending" | "executed" | "clarification" | "error" | "done";
  text: string;
  plan: string | null;
};

export type PreviewResult = {
  outcome: "plan" | "clarification" | "done";
  plan: string | null;
  message: string;
};

async function toJson(response: Response): Promise<any> {
  if (!response.ok) {
    let code = `HTTP${response.status}`;
    let detail = "";
    try {
      const body = await response.json();
      code = body.error ?? code;
      detail = body.detail ?? "";
    } catch {
      // non-JSON error body
    }
    throw new ApiError(response.status, code, detail);
  }
  return response.json();
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private post(path: string, body?: unknown): Promise<any> {
    return fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body ?? {}),
    }).then(toJson);
  }

  createSession(options: {
    mode?: string;
    proactive?: boolean;
    context?: unknown;
    auto_confirm_user_plans?: boolean;
  } = {}): Promise<{ session_id: string }> {
    return this.post("/sessions", { mode: "meta-prompting", ...options });
  }

  getSession(id: string): Promise<Snapshot> {
    return fetch(this.url(`/sessions/${id}`)).then(toJson);
  }

  utterance(id: string, text: string): Promise<UtteranceResult> {
    return this.post(`/sessions/${id}/utterance`, { text });
  }

  confirm(id: string): Promise<{ kind: string; plan: string }> {
    return this.post(`/sessions/${id}/confirm`);
  }

  reject(id: string): Promise<{ kind: string }> {
    return this.post(`/sessions/${id}/reject`);
  }

  setGoal(id: string, text: string): Promise<unknown> {
    return fetch(this.url(`/sessions/${id}/goal`), {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    }).then(toJson);
  }

  teachForm(id: string, form: TeachFormModel): Promise<{ kind: string; name: string }> {
    return this.post(`/sessions/${id}/teach`, { form: formPayload(form) });
  }

  editFunction(id: string, name: string, form: TeachFormModel): Promise<unknown> {
    return fetch(this.url(`/sessions/${id}/functions/${name}`), {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(formPayload(form)),
    }).then(toJson);
  }

  deleteFunction(id: string, name: string): Promise<unknown> {
    return fetch(this.url(`/sessions/${id}/functions/${name}`), {
      method: "DELETE",
    }).then(toJson);
  }

  testUtterance(id: string, text: string): Promise<PreviewResult> {
    return this.post(`/sessions/${id}/test-utterance`, { text });
  }

  toLive(id: string): Promise<unknown> {
    return this.post(`/sessions/${id}/mode`, { mode: "live" });
  }

  metrics(id: string): Promise<MetricsInfo> {
    return fetch(this.url(`/sessions/${id}/metrics`)).then(toJson);
  }

  exportContext(id: string): Promise<string> {
    return fetch(this.url(`/sessions/${id}/export`)).then(async (r) => {
      if (!r.ok) throw new ApiError(r.status, `HTTP${r.status}`, "");
      return r.text();
    });
  }

  eventsUrl(id: string, limit?: number): string {
    const suffix = limit !== undefined ? `?limit=${limit}` : "";
    return this.url(`/sessions/${id}/events${suffix}`);
  }
}

export function formPayload(form: TeachFormModel) {
  return {
    name: form.name,
    behavior_description: form.behavior,
    params: form.params,
    steps: form.steps.map((s) => ({ function: s.function, args: s.args })),
  };
}
