import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { errorHint } from "../src/errors.js";
import { ChatController } from "../src/state.js";

function clientWith(fetchImpl: (input: string, init?: RequestInit) => Promise<Response>) {
  return new ApiClient("", fetchImpl);
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("ChatController", () => {
  it("submits once and appends the turn", async () => {
    const calls: string[] = [];
    const api = clientWith(async (input, init) => {
      calls.push(input);
      expect(init?.method).toBe("POST");
      return jsonResponse({ modality: "text", text: "hi" });
    });
    const controller = new ChatController(api, "s1");
    const outcome = await controller.submit("hello");
    expect(outcome?.ok).toBe(true);
    expect(controller.turns).toHaveLength(1);
    expect(calls).toEqual(["/sessions/s1/messages"]);
  });

  it("blocks a second submit while one is in flight", async () => {
    let release: (value: Response) => void = () => {};
    const gate = new Promise<Response>((resolve) => {
      release = resolve;
    });
    let requests = 0;
    const api = clientWith(async () => {
      requests += 1;
      return gate;
    });
    const controller = new ChatController(api, "s1");

    const first = controller.submit("one");
    expect(controller.canSubmit).toBe(false);
    const second = await controller.submit("two"); // racing double-submit
    expect(second).toBeNull();
    expect(requests).toBe(1);

    release(jsonResponse({ modality: "text", text: "done" }));
    const outcome = await first;
    expect(outcome?.ok).toBe(true);
    expect(controller.canSubmit).toBe(true);
  });

  it("ignores empty input", async () => {
    const api = clientWith(async () => {
      throw new Error("should not be called");
    });
    const controller = new ChatController(api, "s1");
    expect(await controller.submit("   ")).toBeNull();
  });

  it("maps service error codes to hints", async () => {
    const api = clientWith(async () =>
      jsonResponse(
        { detail: { code: "NO_DATA_SOURCE", message: "no prior data" } },
        500,
      ),
    );
    const controller = new ChatController(api, "s1");
    const outcome = await controller.submit("chart please");
    expect(outcome?.ok).toBe(false);
    expect(outcome?.errorMessage).toContain("ask a data question first");
    expect(outcome?.retriable).toBe(false);
    expect(controller.canSubmit).toBe(true); // session continues
  });

  it("marks network failures retriable", async () => {
    const api = clientWith(async () => {
      throw new TypeError("fetch failed");
    });
    const controller = new ChatController(api, "s1");
    const outcome = await controller.submit("hello");
    expect(outcome?.ok).toBe(false);
    expect(outcome?.retriable).toBe(true);
  });

  it("refresh rebuilds state from the transcript endpoint alone", async () => {
    const api = clientWith(async (input) => {
      expect(input).toBe("/sessions/s9");
      return jsonResponse({
        id: "s9",
        dataset_ref: "t",
        turns: [{ query: "q", modality: "text", text: "a" }],
      });
    });
    const controller = new ChatController(api, "s9");
    await controller.refresh();
    expect(controller.turns).toHaveLength(1);
  });
});

describe("errorHint", () => {
  it("falls back to code and message for unknown codes", () => {
    expect(errorHint("WEIRD", "boom")).toBe("WEIRD: boom");
    expect(errorHint("WEIRD")).toBe("WEIRD");
  });
});

describe("ApiClient", () => {
  it("creates sessions and surfaces structured errors", async () => {
    const api = clientWith(async (input, init) => {
      if (init?.method === "POST") {
        const body = JSON.parse(String(init.body));
        if (body.table === "nope") {
          return jsonResponse(
            { detail: { code: "UNKNOWN_TABLE", message: "no table" } },
            404,
          );
        }
        return jsonResponse({ id: "s1", dataset_ref: body.table }, 201);
      }
      return jsonResponse({ sessions: [] });
    });
    const created = await api.createSession("products");
    expect(created.id).toBe("s1");
    await expect(api.createSession("nope")).rejects.toMatchObject({
      status: 404,
      code: "UNKNOWN_TABLE",
    });
  });
});

describe("sessionIdFromPath", () => {
  it("extracts ids from deep links and rejects other paths", async () => {
    const { sessionIdFromPath } = await import("../src/main.js");
    expect(sessionIdFromPath("/s/session-000001")).toBe("session-000001");
    expect(sessionIdFromPath("/s/with%20space")).toBe("with space");
    expect(sessionIdFromPath("/")).toBeNull();
    expect(sessionIdFromPath("/sessions")).toBeNull();
    expect(sessionIdFromPath("/s/a/b")).toBeNull();
  });
});
