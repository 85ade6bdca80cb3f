// API client plumbing: idempotent retries and machine-readable error mapping.

import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { jsonResponse } from "./fixtures.js";

describe("mutation retries", () => {
  it("retries a network failure with the same idempotency key", async () => {
    const keys: (string | undefined)[] = [];
    let attempts = 0;
    const impl = async (_input: string, init?: RequestInit) => {
      keys.push((init?.headers as Record<string, string>)["Idempotency-Key"]);
      attempts += 1;
      if (attempts < 3) {
        throw new TypeError("network down");
      }
      return jsonResponse(201, { event_id: "evt-1", classification: { label: "joy" } });
    };
    const api = new ApiClient("", impl);
    const event = await api.submitTag({ picture_id: "pic", x: 0, y: 0.5 });
    expect(event.event_id).toBe("evt-1");
    expect(attempts).toBe(3);
    expect(new Set(keys).size).toBe(1);
    expect(keys[0]).toBeTruthy();
  });

  it("does not retry once the server has answered", async () => {
    let attempts = 0;
    const impl = async () => {
      attempts += 1;
      return jsonResponse(422, { error: { code: "center_ambiguous", message: "too close" } });
    };
    const api = new ApiClient("", impl);
    try {
      await api.submitTag({ picture_id: "pic", x: 0, y: 0.001 });
      expect.unreachable();
    } catch (error) {
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).code).toBe("center_ambiguous");
      expect((error as ApiError).status).toBe(422);
    }
    expect(attempts).toBe(1);
  });

  it("gives up after exhausting retries", async () => {
    const impl = async () => {
      throw new TypeError("still down");
    };
    const api = new ApiClient("", impl);
    await expect(api.submitTag({ picture_id: "pic", x: 0, y: 0.5 })).rejects.toThrow("still down");
  });
});

describe("session tokens", () => {
  it("uses the session bearer token after opening a session", async () => {
    const seen: Record<string, string>[] = [];
    const impl = async (input: string, init?: RequestInit) => {
      seen.push((init?.headers as Record<string, string>) ?? {});
      if (input.endsWith("/api/session")) {
        return jsonResponse(200, { session_token: "s-secret" });
      }
      return jsonResponse(200, { done: true });
    };
    const api = new ApiClient("", impl);
    await api.openSessionWithToken("invite-token");
    await api.nextPicture();
    expect(seen[1].Authorization).toBe("Bearer s-secret");
  });
});
