/** Thin DOM renderers over the pure trial cores. All experiment logic
 * lives in the imported modules; this file only draws and listens. */

import type { ChoiceTrialPayload, MagnitudeTrialPayload } from "./api.js";
import { Calibration, lineScreenLengthPx, logicalToScreen } from "./calibration.js";
import {
  Choice,
  KeyMap,
  laterLabel,
  nowLabel,
} from "./choiceTrial.js";
import {
  MagnitudeResponsePayload,
  MagnitudeTrialState,
  confirmPayload,
  formatInterval,
  isTimedOut,
  moveCursor,
  startMagnitudeTrial,
  timeoutPayload,
} from "./magnitudeTrial.js";

export interface Strings {
  [key: string]: string;
}

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function clear(root: HTMLElement): void {
  while (root.firstChild) root.removeChild(root.firstChild);
}

export function showMessage(root: HTMLElement, text: string, detail?: string): void {
  clear(root);
  const box = el("div", "message");
  box.appendChild(el("p", "message-main", text));
  if (detail) box.appendChild(el("p", "message-detail", detail));
  root.appendChild(box);
}

export function showButton(root: HTMLElement, label: string): Promise<void> {
  return new Promise((resolve) => {
    const button = el("button", "continue", label);
    button.addEventListener("click", () => resolve(), { once: true });
    root.appendChild(button);
  });
}

/** Draw the response line and resolve with the posted payload: a click
 * confirms the cursor position, the 10 s clock expiring posts a timeout. */
export function renderMagnitudeTrial(
  root: HTMLElement,
  trial: MagnitudeTrialPayload,
  trialToken: string,
  cal: Calibration,
  strings: Strings,
): Promise<MagnitudeResponsePayload> {
  clear(root);
  const prompt = el("p", "prompt", strings.trial_prompt);
  const intervalText = el(
    "p",
    "interval",
    formatInterval(strings.interval_format ?? "{n} months", trial.interval),
  );
  if (trial.is_training) {
    root.appendChild(el("p", "training-badge", strings.training_notice ?? "practice"));
  }
  root.appendChild(prompt);
  root.appendChild(intervalText);

  const screenLength = lineScreenLengthPx(cal);
  const lineWrap = el("div", "line-wrap");
  lineWrap.style.width = `${screenLength}px`;
  const line = el("div", "line");
  line.style.width = `${screenLength}px`;
  const cursor = el("div", "cursor");
  const left = el("span", "line-label left", strings.label_left);
  const right = el("span", "line-label right", strings.label_right);
  const clock = el("p", "countdown");
  lineWrap.append(left, line, cursor, right);
  root.append(lineWrap, clock);

  let state: MagnitudeTrialState = startMagnitudeTrial(trial, trialToken, performance.now());

  const drawCursor = () => {
    cursor.style.left = `${logicalToScreen(
      state.cursorLogical,
      screenLength,
      trial.line_px_max,
    )}px`;
  };
  drawCursor();

  return new Promise((resolve) => {
    const tick = window.setInterval(() => {
      const now = performance.now();
      clock.textContent = (Math.max(state.deadlineMs - now, 0) / 1000).toFixed(1);
      if (isTimedOut(state, now)) {
        finish(timeoutPayload(state));
      }
    }, 100);

    const onMove = (event: PointerEvent) => {
      const rect = line.getBoundingClientRect();
      state = moveCursor(state, event.clientX - rect.left, screenLength);
      drawCursor();
    };
    const onClick = (event: PointerEvent) => {
      if (event.button !== 0) return; // left button confirms
      finish(confirmPayload(state, performance.now()));
    };

    function finish(payload: MagnitudeResponsePayload) {
      window.clearInterval(tick);
      lineWrap.removeEventListener("pointermove", onMove);
      lineWrap.removeEventListener("pointerdown", onClick);
      state = { ...state, settled: true };
      resolve(payload);
    }

    lineWrap.addEventListener("pointermove", onMove);
    lineWrap.addEventListener("pointerdown", onClick);
  });
}

/** Show the two options and resolve with the keyed choice; no timeout. */
export function renderChoiceTrial(
  root: HTMLElement,
  trial: ChoiceTrialPayload,
  strings: Strings,
  keyMap: KeyMap,
): Promise<{ choice: Choice; startedAtMs: number }> {
  clear(root);
  const startedAtMs = performance.now();
  const options = el("div", "options");
  options.appendChild(el("div", "option now", nowLabel(strings.now_option, trial)));
  options.appendChild(el("div", "option later", laterLabel(strings.later_option, trial)));
  root.appendChild(options);
  root.appendChild(
    el("p", "keys-hint", `${keyMap.now} / ${keyMap.later}`),
  );

  return new Promise((resolve) => {
    const onKey = (event: KeyboardEvent) => {
      const choice =
        event.key === keyMap.now ? "now" : event.key === keyMap.later ? "later" : null;
      if (!choice) return;
      window.removeEventListener("keydown", onKey);
      resolve({ choice, startedAtMs });
    };
    window.addEventListener("keydown", onKey);
  });
}

/** Calibration screen: drag the slider until the box matches a bank card. */
export function renderCalibration(root: HTMLElement): Promise<number> {
  clear(root);
  root.appendChild(
    el(
      "p",
      "prompt",
      "Hold a bank card against the box and drag the slider until the widths match.",
    ),
  );
  const box = el("div", "card-box");
  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = "120";
  slider.max = "640";
  slider.value = "320";
  box.style.width = `${slider.value}px`;
  slider.addEventListener("input", () => {
    box.style.width = `${slider.value}px`;
  });
  root.append(box, slider);
  return showButton(root, "The widths match").then(() => Number(slider.value));
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => window.setTimeout(resolve, ms));
}
