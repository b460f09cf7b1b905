/** Entry point: wires the session API, the state machine and the DOM
 * renderers into the participant-facing flow for one task.
 *
 * URL parameters: task=magnitude|choice, subject=<id>, lang=tr|en,
 * server=<base url> (defaults to the page origin).
 */

import { SessionApi } from "./api.js";
import { calibrationFromCardWidth, Calibration } from "./calibration.js";
import {
  BREAK_DURATION_MS,
  BREAK_EVERY_N_TRIALS,
  DEFAULT_KEY_MAP,
  INTER_TRIAL_MS,
  choicePayload,
  isBreakDue,
} from "./choiceTrial.js";
import {
  clear,
  renderCalibration,
  renderChoiceTrial,
  renderMagnitudeTrial,
  showButton,
  showMessage,
  sleep,
} from "./dom.js";
import { runChoiceSession, runMagnitudeSession } from "./runner.js";
import {
  calibrated,
  initialState,
  sessionComplete,
  startTask,
} from "./stateMachine.js";

async function run(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const params = new URLSearchParams(window.location.search);
  const task = (params.get("task") ?? "magnitude") as "magnitude" | "choice";
  const lang = params.get("lang") ?? "tr";
  const subject = params.get("subject") ?? undefined;
  const server = params.get("server") ?? "";

  const api = new SessionApi(server);
  const allStrings = await api.instructions();
  const strings = allStrings[task][lang] ?? allStrings[task].en;

  // resuming matters: reuse the session id stashed for this subject/task
  // so a page refresh continues at the same outstanding trial
  const storageKey = `timepref:${subject ?? "anon"}:${task}`;
  let sessionId = window.sessionStorage.getItem(storageKey);
  if (!sessionId) {
    const info = await api.createSession(task, subject);
    sessionId = info.session_id;
    window.sessionStorage.setItem(storageKey, sessionId);
  }

  let state = initialState(sessionId, task);
  showMessage(root, strings.welcome);
  await showButton(root, "→");
  state = startTask(state);

  if (task === "magnitude") {
    let cal: Calibration = { pxPerMm: 3.8 };
    const measured = await renderCalibration(root);
    cal = calibrationFromCardWidth(measured);
    state = calibrated(state);

    await runMagnitudeSession(api, sessionId, (trial, token) =>
      renderMagnitudeTrial(root, trial, token, cal, strings),
    );
  } else {
    await runChoiceSession(
      api,
      sessionId,
      async (trial, token) => {
        const { choice, startedAtMs } = await renderChoiceTrial(
          root,
          trial,
          strings,
          DEFAULT_KEY_MAP,
        );
        return choicePayload(token, choice, startedAtMs, performance.now());
      },
      {
        onTrialAnswered: async (answered) => {
          clear(root);
          await sleep(INTER_TRIAL_MS);
          if (isBreakDue(answered)) {
            showMessage(
              root,
              strings.break_notice,
              `${answered} / ${BREAK_EVERY_N_TRIALS}`,
            );
            await sleep(BREAK_DURATION_MS);
          }
        },
      },
    );
  }

  state = sessionComplete(state);
  window.sessionStorage.removeItem(storageKey);
  showMessage(root, strings.done);
}

run().catch((err) => {
  const root = document.getElementById("app");
  if (root) showMessage(root, "Something went wrong.", String(err));
  console.error(err);
});
