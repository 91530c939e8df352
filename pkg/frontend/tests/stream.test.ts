import { createServer, type Server } from "node:http";

import { describe, expect, it } from "vitest";

import type { Frame } from "../src/api.js";
import { FrameStream, type StreamStatus } from "../src/stream.js";
import { waitFor } from "./helpers.js";

/** Bare NDJSON endpoint emitting frames from startStep upward. */
function frameServer(port: number, startStep: number): Promise<Server> {
  let step = startStep;
  const server = createServer((_req, res) => {
    res.writeHead(200, { "Content-Type": "application/x-ndjson" });
    const timer = setInterval(() => {
      res.write(JSON.stringify({ step: step++, positions: [[1, 2]] }) + "\n");
    }, 5);
    res.on("close", () => clearInterval(timer));
  });
  return new Promise((resolve) => server.listen(port, "127.0.0.1", () => resolve(server)));
}

function closeServer(server: Server): Promise<void> {
  server.closeAllConnections();
  return new Promise((resolve) => server.close(() => resolve()));
}

interface Capture {
  frames: Frame[];
  statuses: StreamStatus[];
}

function capture(): Capture & { callbacks: { onFrame(f: Frame): void; onStatus(s: StreamStatus): void } } {
  const frames: Frame[] = [];
  const statuses: StreamStatus[] = [];
  return {
    frames,
    statuses,
    callbacks: {
      onFrame: (f) => frames.push(f),
      onStatus: (s) => statuses.push(s),
    },
  };
}

const FAST = { initialDelayMs: 25, maxDelayMs: 100 };

describe("FrameStream", () => {
  it("delivers parsed frames and reports connecting then live", async () => {
    const server = await frameServer(0, 10);
    const addr = server.address();
    const port = typeof addr === "object" && addr !== null ? addr.port : 0;
    const cap = capture();
    const stream = new FrameStream(`http://127.0.0.1:${port}/`, cap.callbacks, FAST);
    const done = stream.run();
    await waitFor(() => cap.frames.length >= 3);
    expect(cap.frames[0]).toEqual({ step: 10, positions: [[1, 2]] });
    expect(cap.statuses.slice(0, 2)).toEqual(["connecting", "live"]);
    stream.stop();
    await done;
    expect(cap.statuses.at(-1)).toBe("stopped");
    await closeServer(server);
  });

  it("reconnects after the server drops and resumes frames", async () => {
    const first = await frameServer(0, 0);
    const addr = first.address();
    const port = typeof addr === "object" && addr !== null ? addr.port : 0;
    const cap = capture();
    const stream = new FrameStream(`http://127.0.0.1:${port}/`, cap.callbacks, FAST);
    const done = stream.run();
    await waitFor(() => cap.frames.length >= 2);

    await closeServer(first);
    await waitFor(() => cap.statuses.includes("reconnecting"));

    const second = await frameServer(port, 1000);
    await waitFor(() => (cap.frames.at(-1)?.step ?? 0) >= 1000, 3000);
    expect(cap.statuses.filter((s) => s === "live")).toHaveLength(2);

    stream.stop();
    await done;
    await closeServer(second);
  });

  it("backs off with growing, capped delays while the service is down", async () => {
    const attempts: number[] = [];
    const failingFetch: typeof fetch = async () => {
      attempts.push(Date.now());
      throw new Error("down");
    };
    const cap = capture();
    const stream = new FrameStream(
      "http://127.0.0.1:1/",
      cap.callbacks,
      { initialDelayMs: 30, maxDelayMs: 120 },
      failingFetch,
    );
    const done = stream.run();
    await waitFor(() => attempts.length >= 5, 3000);
    stream.stop();
    await done;

    const gaps = attempts.slice(1).map((t, i) => t - attempts[i]);
    // delays follow 30, 60, 120, 120: non-decreasing and capped
    for (let i = 1; i < gaps.length; i++) {
      expect(gaps[i]).toBeGreaterThanOrEqual(gaps[i - 1] - 10);
    }
    expect(Math.max(...gaps)).toBeLessThan(400);
    expect(cap.statuses).toContain("reconnecting");
    expect(cap.statuses).not.toContain("live");
  });

  it("stop during a backoff wait returns promptly", async () => {
    const cap = capture();
    const stream = new FrameStream(
      "http://127.0.0.1:1/",
      cap.callbacks,
      { initialDelayMs: 60_000, maxDelayMs: 60_000 },
      async () => {
        throw new Error("down");
      },
    );
    const done = stream.run();
    await waitFor(() => cap.statuses.includes("reconnecting"));
    const t0 = Date.now();
    stream.stop();
    await done;
    expect(Date.now() - t0).toBeLessThan(1000);
  });
});
