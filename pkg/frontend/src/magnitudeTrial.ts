/** Pure state for one magnitude trial: cursor position on the logical
 * line, the response countdown, and the payload posted back. The DOM
 * layer feeds pointer/clock events in and renders the state out. */

import type { MagnitudeTrialPayload } from "./api.js";
import { screenToLogical } from "./calibration.js";

export interface MagnitudeTrialState {
  trial: MagnitudeTrialPayload;
  trialToken: string;
  /** logical cursor position in [0, line_px_max]; starts at the center */
  cursorLogical: number;
  startedAtMs: number;
  deadlineMs: number;
  settled: boolean;
}

export function startMagnitudeTrial(
  trial: MagnitudeTrialPayload,
  trialToken: string,
  nowMs: number,
): MagnitudeTrialState {
  return {
    trial,
    trialToken,
    cursorLogical: Math.round(trial.line_px_max / 2),
    startedAtMs: nowMs,
    deadlineMs: nowMs + trial.response_window_s * 1000,
    settled: false,
  };
}

export function moveCursor(
  state: MagnitudeTrialState,
  offsetPx: number,
  screenLengthPx: number,
): MagnitudeTrialState {
  if (state.settled) return state;
  return {
    ...state,
    cursorLogical: screenToLogical(offsetPx, screenLengthPx, state.trial.line_px_max),
  };
}

export function remainingMs(state: MagnitudeTrialState, nowMs: number): number {
  return Math.max(state.deadlineMs - nowMs, 0);
}

export function isTimedOut(state: MagnitudeTrialState, nowMs: number): boolean {
  return nowMs >= state.deadlineMs;
}

export interface MagnitudeResponsePayload {
  trial_token: string;
  line_px?: number;
  timeout?: boolean;
  response_time: number;
}

/** Payload for a left-click confirmation at the current cursor position. */
export function confirmPayload(
  state: MagnitudeTrialState,
  nowMs: number,
): MagnitudeResponsePayload {
  return {
    trial_token: state.trialToken,
    line_px: state.cursorLogical,
    response_time: (nowMs - state.startedAtMs) / 1000,
  };
}

/** Payload for a 10-second timeout; the server stores it as missing. */
export function timeoutPayload(state: MagnitudeTrialState): MagnitudeResponsePayload {
  return {
    trial_token: state.trialToken,
    timeout: true,
    response_time: state.trial.response_window_s,
  };
}

export function formatInterval(template: string, months: number): string {
  return template.replace("{n}", String(months));
}
