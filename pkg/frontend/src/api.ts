/**
 * Typed client for the session service.  The fetch implementation is
 * injectable so tests can stub the transport or point at a live server.
 */

import type { Action, ScriptDoc, SessionDoc } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class StaleRevisionError extends ApiError {
  constructor(
    readonly expected: number,
    readonly got: number,
    message: string,
  ) {
    super(409, "stale_revision", message);
  }
}

export interface CodeDoc {
  session_id: string;
  revision: number;
  opt_level: number;
  code: string;
}

export interface DagDoc {
  session_id: string;
  revision: number;
  opt_level: number;
  dag: unknown;
  schedule: { levels: number[][] };
  pass_reports: unknown[];
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function raiseFor(response: Response): Promise<never> {
  let code = "error";
  let message = `${response.status}`;
  let expected = 0;
  let got = 0;
  try {
    const body = (await response.json()) as {
      error?: { code?: string; message?: string; expected?: number; got?: number };
    };
    code = body.error?.code ?? code;
    message = body.error?.message ?? message;
    expected = body.error?.expected ?? 0;
    got = body.error?.got ?? 0;
  } catch {
    // non-JSON error body; keep the status text
  }
  if (response.status === 409) {
    throw new StaleRevisionError(expected, got, message);
  }
  throw new ApiError(response.status, code, message);
}

export class SessionClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      await raiseFor(response);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  create(optLevel = 0): Promise<SessionDoc & { code: string }> {
    return this.request("/api/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ opt_level: optLevel }),
    });
  }

  state(id: string): Promise<SessionDoc> {
    return this.request(`/api/sessions/${id}/state`);
  }

  apply(
    id: string,
    revision: number,
    action: Action,
  ): Promise<SessionDoc & { code: string }> {
    return this.request(`/api/sessions/${id}/actions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ revision, action }),
    });
  }

  code(id: string, optLevel?: number): Promise<CodeDoc> {
    const query = optLevel === undefined ? "" : `?opt_level=${optLevel}`;
    return this.request(`/api/sessions/${id}/code${query}`);
  }

  dag(id: string, optLevel?: number): Promise<DagDoc> {
    const query = optLevel === undefined ? "" : `?opt_level=${optLevel}`;
    return this.request(`/api/sessions/${id}/dag${query}`);
  }

  script(id: string): Promise<{ session_id: string; revision: number; script: ScriptDoc }> {
    return this.request(`/api/sessions/${id}/script`);
  }

  remove(id: string): Promise<void> {
    return this.request(`/api/sessions/${id}`, { method: "DELETE" });
  }
}
