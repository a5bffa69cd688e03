// Browser wiring: WebSocket transport with visible reconnect, keyboard and
// gamepad sampling on the 20 Hz command cadence (the only timer), rendering,
// and the HUD.

import { reconnectDelayMs, TeleopClient, Transport } from "./client.js";
import { combineAxes, gamepadAxes, inputToCmd, KeyboardState } from "./input.js";
import { hudLines } from "./hud.js";
import { renderFrame } from "./render.js";

const CMD_PERIOD_MS = 50; // 20 Hz

const canvasEl = document.getElementById("view") as HTMLCanvasElement | null;
if (!canvasEl) throw new Error("canvas #view not found");
const canvas: HTMLCanvasElement = canvasEl;
const context = canvas.getContext("2d");
if (!context) throw new Error("2d context unavailable");
const ctx: CanvasRenderingContext2D = context;
const hudEl = document.getElementById("hud") as HTMLDivElement;
const statusEl = document.getElementById("status") as HTMLDivElement;

const keyboard = new KeyboardState();
const client = new TeleopClient("teleop", (view) => {
  statusEl.textContent = view.status + (view.lastError ? ` (${view.lastError.reason})` : "");
});

class WsTransport implements Transport {
  constructor(private readonly ws: WebSocket) {}
  send(line: string): void {
    if (this.ws.readyState === WebSocket.OPEN) this.ws.send(line);
  }
  close(): void {
    this.ws.close();
  }
}

let attempt = 0;

function connect(): void {
  const url = `ws://${location.host}/ws`;
  const ws = new WebSocket(url);
  ws.onopen = () => {
    attempt = 0;
    client.attach(new WsTransport(ws));
  };
  ws.onmessage = (event) => {
    if (typeof event.data === "string") client.handleLine(event.data);
  };
  ws.onclose = () => {
    client.detach("reconnecting");
    const delay = reconnectDelayMs(attempt);
    attempt += 1;
    statusEl.textContent = `reconnecting (retry in ${(delay / 1000).toFixed(1)} s)`;
    setTimeout(connect, delay);
  };
  ws.onerror = () => ws.close();
}

window.addEventListener("keydown", (event) => {
  keyboard.press(event.code);
  if (
    ["KeyW", "KeyA", "KeyS", "KeyD", "ArrowUp", "ArrowDown", "ArrowLeft", "ArrowRight"].includes(event.code)
  ) {
    event.preventDefault();
  }
});
window.addEventListener("keyup", (event) => keyboard.release(event.code));
window.addEventListener("blur", () => {
  // zero-on-blur: drop all inputs and emit the stop immediately
  keyboard.clear();
  client.sendCmd(0, 0);
});

// The 20 Hz command cadence: sample inputs, scale by the active robot's
// limits, and always send (an explicit (0,0) keeps the dead-man fed).
setInterval(() => {
  const spec = client.view.episode?.robot_spec;
  if (!spec) return;
  const pads = navigator.getGamepads ? navigator.getGamepads() : [];
  const axes = combineAxes(keyboard.axes(), gamepadAxes(pads && pads[0] ? pads[0] : null));
  const cmd = inputToCmd(axes, spec);
  client.sendCmd(cmd.v, cmd.w);
}, CMD_PERIOD_MS);

function resizeCanvas(): void {
  canvas.width = canvas.clientWidth * devicePixelRatio;
  canvas.height = canvas.clientHeight * devicePixelRatio;
}
window.addEventListener("resize", resizeCanvas);
resizeCanvas();

function frame(): void {
  client.tickFrame();
  renderFrame(ctx, client.view, canvas.width, canvas.height);
  hudEl.textContent = hudLines(client.view).join("\n");
  requestAnimationFrame(frame);
}

connect();
requestAnimationFrame(frame);
