/** Physical-size calibration.
 *
 * The response line must be 180 mm on whatever monitor the participant
 * uses, which a browser cannot know by itself. A one-time calibration
 * screen asks the participant to match an on-screen box to a standard
 * bank card (ISO ID-1, 85.60 mm wide); the resulting px-per-mm scale
 * converts the 180 mm line into screen pixels. Responses themselves stay
 * in logical units [0, linePxMax] so the server sees the same range on
 * every display.
 */

export const CARD_WIDTH_MM = 85.6;
export const LINE_LENGTH_MM = 180;

export interface Calibration {
  pxPerMm: number;
}

export function calibrationFromCardWidth(measuredPx: number): Calibration {
  if (!Number.isFinite(measuredPx) || measuredPx <= 0) {
    throw new Error(`measured card width must be positive, got ${measuredPx}`);
  }
  return { pxPerMm: measuredPx / CARD_WIDTH_MM };
}

export function lineScreenLengthPx(cal: Calibration): number {
  return LINE_LENGTH_MM * cal.pxPerMm;
}

/** Screen x-offset along the line -> logical response units. */
export function screenToLogical(
  offsetPx: number,
  screenLengthPx: number,
  logicalMax: number,
): number {
  if (screenLengthPx <= 0) throw new Error("screen length must be positive");
  const fraction = Math.min(Math.max(offsetPx / screenLengthPx, 0), 1);
  return Math.round(fraction * logicalMax);
}

/** Logical units -> screen x-offset, for drawing the cursor. */
export function logicalToScreen(
  logical: number,
  screenLengthPx: number,
  logicalMax: number,
): number {
  const clamped = Math.min(Math.max(logical, 0), logicalMax);
  return (clamped / logicalMax) * screenLengthPx;
}
