/** DOM wiring for the session page. Rendering only; numbers come from
 * the service untouched apart from decimal formatting.
 */

import { ApiClient, ApiError, SessionState } from "./api.js";
import { SessionController } from "./session.js";

function must<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const serviceInput = must<HTMLInputElement>("service-url");
const kInput = must<HTMLInputElement>("opt-k");
const mInput = must<HTMLInputElement>("opt-m");
const alphaInput = must<HTMLInputElement>("opt-alpha");
const gammaInput = must<HTMLInputElement>("opt-gamma");
const startButton = must<HTMLButtonElement>("start");
const positiveButton = must<HTMLButtonElement>("positive");
const negativeButton = must<HTMLButtonElement>("negative");
const statusLine = must<HTMLParagraphElement>("status");
const errorLine = must<HTMLParagraphElement>("error");
const cells = {
  n: must<HTMLTableCellElement>("cell-n"),
  s: must<HTMLTableCellElement>("cell-s"),
  xbar: must<HTMLTableCellElement>("cell-xbar"),
  p_hat: must<HTMLTableCellElement>("cell-phat"),
  threshold: must<HTMLTableCellElement>("cell-threshold"),
};

let controller: SessionController | null = null;

function optionalNumber(input: HTMLInputElement): number | undefined {
  return input.value.trim() === "" ? undefined : Number(input.value);
}

function fmt(value: number | null, digits: number): string {
  return value === null ? "—" : value.toFixed(digits);
}

function render(state: SessionState): void {
  cells.n.textContent = String(state.n);
  cells.s.textContent = String(state.s);
  cells.xbar.textContent = fmt(state.xbar, 4);
  cells.p_hat.textContent = fmt(state.p_hat, 4);
  cells.threshold.textContent = fmt(state.threshold, 2);
  statusLine.textContent = state.stopped
    ? `stopped at n ${state.n}: final estimate ${fmt(state.p_hat, 4)}`
    : `collecting (n ${state.n}); enter the next pool result`;
  positiveButton.disabled = state.stopped;
  negativeButton.disabled = state.stopped;
}

function showError(err: unknown): void {
  errorLine.textContent =
    err instanceof ApiError ? `service error ${err.status}: ${err.message}` : String(err);
}

async function start(): Promise<void> {
  errorLine.textContent = "";
  try {
    controller = new SessionController(new ApiClient(serviceInput.value.replace(/\/$/, "")));
    render(
      await controller.start({
        k: optionalNumber(kInput),
        m: optionalNumber(mInput),
        alpha: optionalNumber(alphaInput),
        gamma: optionalNumber(gammaInput),
      }),
    );
  } catch (err) {
    controller = null;
    showError(err);
  }
}

async function record(positive: boolean): Promise<void> {
  if (!controller) return;
  errorLine.textContent = "";
  try {
    render(await controller.record(positive));
  } catch (err) {
    showError(err);
  }
}

startButton.addEventListener("click", () => void start());
positiveButton.addEventListener("click", () => void record(true));
negativeButton.addEventListener("click", () => void record(false));
