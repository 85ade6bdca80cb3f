import type { SessionDoc } from "../src/api.js";
import type { TagMapDoc } from "../src/geometry.js";

export const PLUTCHIK: TagMapDoc = {
  id: "plutchik",
  sector_count: 8,
  sector_offset_deg: 0,
  band_boundaries: [1 / 3, 2 / 3],
  labels: [
    ["ecstasy", "joy", "serenity"],
    ["admiration", "trust", "acceptance"],
    ["terror", "fear", "apprehension"],
    ["amazement", "surprise", "distraction"],
    ["grief", "sadness", "pensiveness"],
    ["loathing", "disgust", "boredom"],
    ["rage", "anger", "annoyance"],
    ["vigilance", "anticipation", "interest"],
  ],
};

export function sessionDoc(overrides: Partial<SessionDoc> = {}): SessionDoc {
  return {
    session_token: "s-token",
    participant_id: "part-1",
    experiment_id: "exp-1",
    mode: "CURATED",
    cursor: 0,
    handedness: "RIGHT",
    created_at: "2026-03-01T12:00:00Z",
    tag_map: PLUTCHIK,
    labels: PLUTCHIK.labels,
    locale: null,
    ...overrides,
  };
}

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export interface RecordedRequest {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

/** Scripted fetch: route handlers by "METHOD path-prefix", recording everything. */
export function scriptedFetch(routes: Record<string, (req: RecordedRequest) => Response | Promise<Response>>) {
  const calls: RecordedRequest[] = [];
  const impl = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const request: RecordedRequest = {
      url: input,
      method,
      headers: (init?.headers as Record<string, string>) ?? {},
      body: typeof init?.body === "string" ? JSON.parse(init.body) : init?.body,
    };
    calls.push(request);
    for (const [key, handler] of Object.entries(routes)) {
      const [routeMethod, prefix] = key.split(" ", 2);
      if (method === routeMethod && input.split("?")[0].startsWith(prefix)) {
        return handler(request);
      }
    }
    throw new Error(`no scripted route for ${method} ${input}`);
  };
  return { impl, calls };
}
