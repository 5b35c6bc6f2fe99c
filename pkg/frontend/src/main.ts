import { ApiError, VerifyClient, type Verdict } from "./api.js";
import {
  StrokeRecorder,
  longEnough,
  toPayload,
  type StrokePoint,
} from "./capture.js";
import { drawGauge, drawStripChart } from "./chart.js";
import { respaceUniform } from "./replay.js";
import { velocityProfile } from "./velocity.js";

const serverUrl =
  new URLSearchParams(location.search).get("server") ?? "http://127.0.0.1:8000";
const client = new VerifyClient(serverUrl);
const recorder = new StrokeRecorder();

const pad = document.getElementById("pad") as HTMLCanvasElement;
const gauge = document.getElementById("gauge") as HTMLCanvasElement;
const chart = document.getElementById("chart") as HTMLCanvasElement;
const message = document.getElementById("message") as HTMLElement;
const verdictLive = document.getElementById("verdict-live") as HTMLElement;
const verdictReplay = document.getElementById("verdict-replay") as HTMLElement;
const submitBtn = document.getElementById("submit") as HTMLButtonElement;
const replayBtn = document.getElementById("replay") as HTMLButtonElement;
const retryBtn = document.getElementById("retry") as HTMLButtonElement;

const ctx = pad.getContext("2d")!;
ctx.lineWidth = 2;
ctx.lineCap = "round";
ctx.strokeStyle = "#1a202c";

let stroke: StrokePoint[] = [];

function showMessage(text: string): void {
  message.textContent = text;
}

function setBusy(busy: boolean): void {
  submitBtn.disabled = busy;
  replayBtn.disabled = busy || stroke.length === 0;
}

function renderVerdict(slot: HTMLElement, verdict: Verdict, tag: string): void {
  const pass = verdict.verdict === "human";
  slot.className = pass ? "verdict pass" : "verdict fail";
  slot.textContent =
    `${tag}: ${pass ? "pass (human)" : "fail (synthetic)"}, ` +
    `p = ${verdict.probability.toFixed(4)} [${verdict.model_id}]`;
}

async function submit(
  points: StrokePoint[],
  slot: HTMLElement,
  tag: string,
): Promise<void> {
  if (!longEnough(points)) {
    showMessage("draw a longer stroke");
    return;
  }
  showMessage("");
  setBusy(true);
  try {
    const verdict = await client.verify(toPayload(points));
    renderVerdict(slot, verdict, tag);
    drawGauge(gauge, verdict.probability);
  } catch (err) {
    const detail = err instanceof ApiError ? err.message : String(err);
    showMessage(`${detail} (retry when the server is reachable)`);
  } finally {
    setBusy(false);
  }
}

function resetAll(): void {
  recorder.clear();
  stroke = [];
  ctx.clearRect(0, 0, pad.width, pad.height);
  drawStripChart(chart, []);
  gauge.getContext("2d")?.clearRect(0, 0, gauge.width, gauge.height);
  verdictLive.textContent = "";
  verdictLive.className = "verdict";
  verdictReplay.textContent = "";
  verdictReplay.className = "verdict";
  showMessage("");
  replayBtn.disabled = true;
  submitBtn.disabled = false;
}

pad.addEventListener("pointerdown", (e) => {
  pad.setPointerCapture(e.pointerId);
  recorder.begin(e.offsetX, e.offsetY, e.timeStamp);
  ctx.clearRect(0, 0, pad.width, pad.height);
  ctx.beginPath();
  ctx.moveTo(e.offsetX, e.offsetY);
});

pad.addEventListener("pointermove", (e) => {
  if (!recorder.isDrawing) return;
  const coalesced =
    typeof e.getCoalescedEvents === "function" ? e.getCoalescedEvents() : [];
  for (const ev of coalesced.length ? coalesced : [e]) {
    recorder.extend(ev.offsetX, ev.offsetY, ev.timeStamp);
  }
  ctx.lineTo(e.offsetX, e.offsetY);
  ctx.stroke();
});

pad.addEventListener("pointerup", () => {
  stroke = recorder.finish();
  drawStripChart(chart, velocityProfile(stroke));
  replayBtn.disabled = true;
  verdictReplay.textContent = "";
  verdictReplay.className = "verdict";
});

submitBtn.addEventListener("click", async () => {
  await submit(stroke, verdictLive, "drawn");
  if (verdictLive.textContent) replayBtn.disabled = false;
});

replayBtn.addEventListener("click", () => {
  void submit(respaceUniform(stroke), verdictReplay, "replayed");
});

retryBtn.addEventListener("click", resetAll);

showMessage(`server: ${serverUrl}`);
