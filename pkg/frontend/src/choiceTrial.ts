/** Pure logic for the intertemporal choice screen: key mapping, option
 * labels, the one-second inter-trial blank and the break every 30 trials.
 * Amounts are rendered exactly as the server sent them; the UI does no
 * arithmetic on them beyond fixed-point formatting. */

import type { ChoiceTrialPayload } from "./api.js";

export type Choice = "now" | "later";

export interface KeyMap {
  now: string;
  later: string;
}

export const DEFAULT_KEY_MAP: KeyMap = { now: "ArrowLeft", later: "ArrowRight" };

export const INTER_TRIAL_MS = 1000;
export const BREAK_EVERY_N_TRIALS = 30;
export const BREAK_DURATION_MS = 10_000;

export function choiceForKey(key: string, map: KeyMap = DEFAULT_KEY_MAP): Choice | null {
  if (key === map.now) return "now";
  if (key === map.later) return "later";
  return null;
}

/** Currency with exactly two decimals, matching the engine's display
 * rounding; any mismatch against later_amount_display is a defect. */
export function formatAmount(amount: number): string {
  return amount.toFixed(2);
}

export function nowLabel(template: string, trial: ChoiceTrialPayload): string {
  return template.replace("{amount}", formatAmount(trial.now_amount));
}

export function laterLabel(template: string, trial: ChoiceTrialPayload): string {
  return template
    .replace("{amount}", formatAmount(trial.later_amount_display))
    .replace("{n}", String(trial.interval));
}

/** A break screen precedes the trial after every 30th answered trial. */
export function isBreakDue(answeredCount: number): boolean {
  return answeredCount > 0 && answeredCount % BREAK_EVERY_N_TRIALS === 0;
}

export interface ChoiceResponsePayload {
  trial_token: string;
  choice: Choice;
  response_time: number;
}

export function choicePayload(
  trialToken: string,
  choice: Choice,
  startedAtMs: number,
  nowMs: number,
): ChoiceResponsePayload {
  return {
    trial_token: trialToken,
    choice,
    response_time: (nowMs - startedAtMs) / 1000,
  };
}
