/** Task-phase state machine shared by both tasks.
 *
 * instructions -> calibration (magnitude only) -> training/main -> break
 * -> done. Exactly one trial is outstanding at any time; the phase for a
 * served trial is derived from its payload, never guessed locally.
 */

export type Phase =
  | "instructions"
  | "calibration"
  | "training"
  | "main"
  | "break"
  | "done";

export interface UiSessionState {
  sessionId: string;
  task: "choice" | "magnitude";
  phase: Phase;
  answeredCount: number;
}

export function initialState(
  sessionId: string,
  task: "choice" | "magnitude",
): UiSessionState {
  return { sessionId, task, phase: "instructions", answeredCount: 0 };
}

export function startTask(state: UiSessionState): UiSessionState {
  if (state.phase !== "instructions") {
    throw new Error(`cannot start from phase ${state.phase}`);
  }
  return {
    ...state,
    phase: state.task === "magnitude" ? "calibration" : "main",
  };
}

export function calibrated(state: UiSessionState): UiSessionState {
  if (state.phase !== "calibration") {
    throw new Error(`cannot finish calibration from phase ${state.phase}`);
  }
  return { ...state, phase: "main" };
}

/** Phase while presenting a served trial. */
export function phaseForTrial(state: UiSessionState, isTraining: boolean): UiSessionState {
  return { ...state, phase: isTraining ? "training" : "main" };
}

export function trialAnswered(state: UiSessionState): UiSessionState {
  return { ...state, answeredCount: state.answeredCount + 1 };
}

export function enterBreak(state: UiSessionState): UiSessionState {
  return { ...state, phase: "break" };
}

export function leaveBreak(state: UiSessionState): UiSessionState {
  if (state.phase !== "break") throw new Error("not in a break");
  return { ...state, phase: "main" };
}

export function sessionComplete(state: UiSessionState): UiSessionState {
  return { ...state, phase: "done" };
}
