// Thin client over the session-service JSON/SSE API.

import type { ConsoleEvent, PolicyInfo } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function jsonOrThrow(response: Response): Promise<any> {
  if (response.ok) return response.json();
  let code = "error";
  let message = response.statusText;
  try {
    const body = await response.json();
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, code, message);
}

export async function listPolicies(base = ""): Promise<PolicyInfo[]> {
  return jsonOrThrow(await fetch(`${base}/v1/policies`));
}

export async function createSession(body: object, base = ""): Promise<any> {
  return jsonOrThrow(
    await fetch(`${base}/v1/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }),
  );
}

export async function applyContext(
  sessionId: string,
  description: string,
  base = "",
): Promise<any> {
  return jsonOrThrow(
    await fetch(`${base}/v1/sessions/${sessionId}/context`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ description }),
    }),
  );
}

export async function control(sessionId: string, verb: string, base = ""): Promise<any> {
  return jsonOrThrow(
    await fetch(`${base}/v1/sessions/${sessionId}/control`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ verb }),
    }),
  );
}

export interface StreamHandle {
  close(): void;
}

/**
 * Subscribe to a session's event stream with automatic resubscribe on
 * drop; duplicate suppression is the reducer's job (dedupe by t).
 */
export function subscribe(
  sessionId: string,
  onEvent: (event: ConsoleEvent) => void,
  onStatus: (status: "live" | "reconnecting") => void,
  base = "",
): StreamHandle {
  let source: EventSource | null = null;
  let closed = false;

  const open = () => {
    if (closed) return;
    source = new EventSource(`${base}/v1/sessions/${sessionId}/events`);
    source.onopen = () => onStatus("live");
    source.onmessage = (message: MessageEvent) => {
      onEvent(JSON.parse(message.data));
    };
    source.onerror = () => {
      onStatus("reconnecting");
      source?.close();
      if (!closed) setTimeout(open, 500);
    };
  };
  open();
  return {
    close() {
      closed = true;
      source?.close();
    },
  };
}
