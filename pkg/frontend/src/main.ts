/** Browser bootstrap: wires the DOM console to a steering service. The
 * service URL and display scale come from the injected window.STEER
 * config, overridable per tab with ?api= &arena= &radius= &seed=. */

import { canSubmit, SteerConsole } from "./console.js";
import { CanvasPainter } from "./painter.js";

interface InjectedConfig {
  url?: string;
  arena?: number;
  radius?: number;
}

function readConfig(): { url: string; arena: number; radius: number; seed?: number } {
  const injected = (window as { STEER?: InjectedConfig }).STEER ?? {};
  const params = new URLSearchParams(window.location.search);
  const url = params.get("api") ?? injected.url ?? window.location.origin;
  const arena = Number(params.get("arena") ?? injected.arena ?? 500);
  const radius = Number(params.get("radius") ?? injected.radius ?? 5);
  const seedParam = params.get("seed");
  const config: { url: string; arena: number; radius: number; seed?: number } = {
    url,
    arena,
    radius,
  };
  if (seedParam !== null) config.seed = Number(seedParam);
  return config;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const config = readConfig();
  const canvas = el<HTMLCanvasElement>("arena");
  const ctx = canvas.getContext("2d");
  if (ctx === null) throw new Error("canvas 2d context unavailable");
  const painter = new CanvasPainter(ctx);

  const form = el<HTMLFormElement>("prompt-form");
  const input = el<HTMLInputElement>("prompt-input");
  const send = el<HTMLButtonElement>("prompt-send");
  const history = el<HTMLUListElement>("history");
  const statusLine = el<HTMLElement>("status");

  const con = new SteerConsole(config);
  statusLine.textContent = `connecting to ${config.url}`;
  try {
    await con.connect();
  } catch (err) {
    statusLine.textContent = `cannot reach service at ${config.url}: ${String(err)}`;
    return;
  }
  statusLine.textContent = `session ${con.view.sessionId} (arena ${config.arena})`;

  send.disabled = true;
  input.addEventListener("input", () => {
    send.disabled = !canSubmit(input.value);
  });

  const report = (err: unknown) => {
    statusLine.textContent = String(err);
  };

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value;
    if (!canSubmit(text)) return;
    con
      .submitPrompt(text)
      .then(() => {
        const item = document.createElement("li");
        item.textContent = `${new Date().toLocaleTimeString()}  ${text}`;
        history.prepend(item);
        input.value = "";
        send.disabled = true;
      })
      .catch(report);
  });

  el<HTMLButtonElement>("btn-pause").addEventListener("click", () => {
    con.pause().catch(report);
  });
  el<HTMLButtonElement>("btn-resume").addEventListener("click", () => {
    con.resume().catch(report);
  });
  el<HTMLButtonElement>("btn-reset").addEventListener("click", () => {
    con.reset().catch(report);
  });
  el<HTMLButtonElement>("btn-overlay").addEventListener("click", () => {
    const on = con.toggleOverlay();
    el("btn-overlay").textContent = on ? "overlay: on" : "overlay: off";
  });
  el<HTMLButtonElement>("btn-score").addEventListener("click", () => {
    const last = con.view.promptHistory.at(-1);
    const prompt = canSubmit(input.value) ? input.value : last?.text;
    if (prompt === undefined) {
      statusLine.textContent = "submit a prompt before scoring";
      return;
    }
    con.requestScore(prompt).catch(report);
  });

  window.addEventListener("beforeunload", () => {
    void con.dispose();
  });

  const tick = () => {
    con.paint(painter, canvas.width);
    requestAnimationFrame(tick);
  };
  requestAnimationFrame(tick);
}

void boot();
