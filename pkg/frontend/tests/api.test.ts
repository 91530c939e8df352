import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, SteerClient } from "../src/api.js";
import { startMockService, type MockHandle } from "./mockService.js";

let svc: MockHandle;
let client: SteerClient;

beforeAll(async () => {
  svc = await startMockService({ grid: 2 });
  client = new SteerClient(svc.url + "/"); // trailing slash must not double up
});

afterAll(async () => {
  await svc.close();
});

describe("SteerClient", () => {
  it("creates a session, mapping frameRate to the wire name", async () => {
    const info = await client.createSession({ seed: 7, frameRate: 50 });
    expect(info.seed).toBe(7);
    expect(info.grid).toBe(2);
    expect(info.id).not.toBe("");
    expect(svc.calls.lastCreateBody).toEqual({ seed: 7, frame_rate: 50 });
  });

  it("returns the decoded field grid for a prompt", async () => {
    const info = await client.createSession({ seed: 1 });
    const field = await client.applyPrompt(info.id, "form a cluster");
    expect(field.grid).toBe(2);
    expect(field.vectors).toHaveLength(2);
    expect(field.vectors[0]).toHaveLength(2);
    expect(field.vectors[0][0]).toHaveLength(2);
    expect(svc.calls.lastPromptText).toBe("form a cluster");
  });

  it("raises ApiError with the service error code and status", async () => {
    const err = await client.applyPrompt("missing", "x").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).code).toBe("SessionNotFound");
    expect((err as ApiError).status).toBe(404);
  });

  it("rejects an empty prompt with the service's InvalidPrompt code", async () => {
    const info = await client.createSession({});
    const err = await client.applyPrompt(info.id, "").catch((e: unknown) => e);
    expect((err as ApiError).code).toBe("InvalidPrompt");
    expect((err as ApiError).status).toBe(400);
  });

  it("URL-encodes the score prompt", async () => {
    const info = await client.createSession({});
    const result = await client.score(info.id, "form a cluster & huddle");
    expect(result).toEqual({ score: 0.42, description: null, source: "surrogate" });
    expect(svc.calls.lastScorePrompt).toBe("form a cluster & huddle");
  });

  it("deletes a session and later calls 404", async () => {
    const info = await client.createSession({});
    expect(await client.deleteSession(info.id)).toEqual({ deleted: info.id });
    const err = await client.reset(info.id).catch((e: unknown) => e);
    expect((err as ApiError).code).toBe("SessionNotFound");
  });
});
