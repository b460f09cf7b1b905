import { describe, expect, it } from "vitest";

import type { ChoiceTrialPayload } from "../src/api.js";
import {
  DEFAULT_KEY_MAP,
  choiceForKey,
  choicePayload,
  formatAmount,
  isBreakDue,
  laterLabel,
  nowLabel,
} from "../src/choiceTrial.js";

const TRIAL: ChoiceTrialPayload = {
  interval: 9,
  now_amount: 100,
  later_amount: 163.35000000000002,
  later_amount_display: 163.35,
  index_global: 4,
  index_within: 4,
};

describe("key mapping", () => {
  it("maps the configured keys to choices", () => {
    expect(choiceForKey("ArrowLeft")).toBe("now");
    expect(choiceForKey("ArrowRight")).toBe("later");
    expect(choiceForKey("x")).toBeNull();
  });

  it("supports custom maps", () => {
    const map = { now: "f", later: "j" };
    expect(choiceForKey("f", map)).toBe("now");
    expect(choiceForKey("j", map)).toBe("later");
    expect(choiceForKey("ArrowLeft", map)).toBeNull();
  });
});

describe("labels", () => {
  it("renders the server's display amount with two decimals", () => {
    expect(laterLabel("{amount} TL in {n} months", TRIAL)).toBe(
      "163.35 TL in 9 months",
    );
    expect(nowLabel("{amount} TL now", TRIAL)).toBe("100.00 TL now");
  });

  it("formats amounts exactly like the engine's display rounding", () => {
    expect(formatAmount(163.35)).toBe("163.35");
    expect(formatAmount(109.35000000000001)).toBe("109.35");
    expect(formatAmount(100)).toBe("100.00");
  });
});

describe("break schedule", () => {
  it("inserts a break after every 30th answered trial", () => {
    expect(isBreakDue(0)).toBe(false);
    expect(isBreakDue(29)).toBe(false);
    expect(isBreakDue(30)).toBe(true);
    expect(isBreakDue(31)).toBe(false);
    expect(isBreakDue(60)).toBe(true);
  });
});

describe("payload", () => {
  it("carries the token, the choice and the latency in seconds", () => {
    const payload = choicePayload("4", "later", 1000, 3250);
    expect(payload).toEqual({
      trial_token: "4",
      choice: "later",
      response_time: 2.25,
    });
  });

  it("uses the default key map constants", () => {
    expect(DEFAULT_KEY_MAP.now).toBe("ArrowLeft");
    expect(DEFAULT_KEY_MAP.later).toBe("ArrowRight");
  });
});
