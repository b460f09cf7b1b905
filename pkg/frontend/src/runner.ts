/** Trial loop shared by the interactive UI and scripted clients.
 *
 * The loop owns no schedule or amounts: it fetches one trial, hands the
 * payload to a responder, posts exactly what the responder returns and
 * repeats until the server reports completion. A 409 on post means the
 * outstanding trial changed under us (for example after a reconnect), so
 * the loop refetches and asks again.
 */

import {
  ApiError,
  ChoiceTrialPayload,
  MagnitudeTrialPayload,
  SessionApi,
} from "./api.js";
import type { ChoiceResponsePayload } from "./choiceTrial.js";
import type { MagnitudeResponsePayload } from "./magnitudeTrial.js";

export interface RunnerHooks {
  onTrialStart?: (index: number) => void;
  onTrialAnswered?: (answeredCount: number) => Promise<void> | void;
}

export type MagnitudeResponder = (
  trial: MagnitudeTrialPayload,
  trialToken: string,
) => Promise<MagnitudeResponsePayload>;

export type ChoiceResponder = (
  trial: ChoiceTrialPayload,
  trialToken: string,
) => Promise<ChoiceResponsePayload>;

async function runLoop<T>(
  api: SessionApi,
  sessionId: string,
  respond: (trial: T, token: string) => Promise<Record<string, unknown>>,
  hooks: RunnerHooks,
): Promise<number> {
  let answered = 0;
  for (;;) {
    const envelope = await api.nextTrial<T>(sessionId);
    if (envelope.complete) return answered;
    hooks.onTrialStart?.(answered + 1);
    const payload = await respond(envelope.trial, envelope.trial_token);
    try {
      await api.postResponse(sessionId, payload);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) continue;
      throw err;
    }
    answered += 1;
    await hooks.onTrialAnswered?.(answered);
  }
}

export function runMagnitudeSession(
  api: SessionApi,
  sessionId: string,
  respond: MagnitudeResponder,
  hooks: RunnerHooks = {},
): Promise<number> {
  return runLoop<MagnitudeTrialPayload>(
    api,
    sessionId,
    (trial, token) =>
      respond(trial, token) as unknown as Promise<Record<string, unknown>>,
    hooks,
  );
}

export function runChoiceSession(
  api: SessionApi,
  sessionId: string,
  respond: ChoiceResponder,
  hooks: RunnerHooks = {},
): Promise<number> {
  return runLoop<ChoiceTrialPayload>(
    api,
    sessionId,
    (trial, token) =>
      respond(trial, token) as unknown as Promise<Record<string, unknown>>,
    hooks,
  );
}
