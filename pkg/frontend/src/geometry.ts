/**
 * Wheel geometry on the client.
 *
 * Disc coordinates mirror the server contract: (x, y) on the unit disc,
 * +y up, angles in degrees clockwise from the top. Pixel coordinates are
 * viewport CSS pixels, +y down. The server's classification is always
 * authoritative; the client only needs enough geometry to render the wheel,
 * convert gestures, and pick tap-mode cell centroids.
 */

export interface TagMapDoc {
  id: string;
  sector_count: number;
  sector_offset_deg: number;
  band_boundaries: number[];
  labels: string[][];
}

export interface DiscPoint {
  x: number;
  y: number;
}

export interface PixelPoint {
  x: number;
  y: number;
}

export interface WheelLayout {
  centerX: number;
  centerY: number;
  radius: number;
}

export type WheelSide = "LEFT" | "RIGHT";

/** Placements closer to the center have no defined direction (server rule). */
export const CENTER_DEAD_ZONE = 0.02;

/** Fraction of the wheel pane the wheel fills. */
const WHEEL_FILL = 0.9;

/** Submission precision: matches the 6-decimal precision of server exports. */
export function roundCoord(value: number): number {
  return Number(value.toFixed(6));
}

/**
 * Lay out the wheel inside a half-screen pane of a landscape viewport.
 * The side depends on handedness: right-handed participants get the wheel
 * on the left and the picture on the right; left-handed get the inverse.
 */
export function layoutWheel(viewW: number, viewH: number, side: WheelSide): WheelLayout {
  const paneW = viewW / 2;
  const radius = (WHEEL_FILL / 2) * Math.min(paneW, viewH);
  const centerX = side === "LEFT" ? paneW / 2 : viewW - paneW / 2;
  return { centerX, centerY: viewH / 2, radius };
}

export function pixelToDisc(layout: WheelLayout, px: number, py: number): DiscPoint {
  return {
    x: (px - layout.centerX) / layout.radius,
    y: (layout.centerY - py) / layout.radius,
  };
}

export function discToPixel(layout: WheelLayout, p: DiscPoint): PixelPoint {
  return {
    x: layout.centerX + p.x * layout.radius,
    y: layout.centerY - p.y * layout.radius,
  };
}

export function discRadius(p: DiscPoint): number {
  return Math.hypot(p.x, p.y);
}

/** Clockwise-from-top angle in [0, 360). */
export function angleFromTopDeg(p: DiscPoint): number {
  const deg = ((Math.atan2(p.x, p.y) * 180) / Math.PI + 360) % 360;
  return deg >= 360 ? 0 : deg;
}

export function sectorWidthDeg(map: TagMapDoc): number {
  return 360 / map.sector_count;
}

/** Sector owning an angle; the counterclockwise edge belongs to the sector. */
export function sectorOfAngle(map: TagMapDoc, angleDeg: number): number {
  const width = sectorWidthDeg(map);
  const shifted = (((angleDeg - map.sector_offset_deg + width / 2) % 360) + 360) % 360;
  return Math.min(Math.floor(shifted / width), map.sector_count - 1);
}

/** Smallest band whose outer boundary is at or beyond the radius. */
export function bandOfRadius(map: TagMapDoc, radius: number): number {
  for (let b = 0; b < map.band_boundaries.length; b++) {
    if (radius <= map.band_boundaries[b]) {
      return b;
    }
  }
  return map.band_boundaries.length;
}

export function bandCount(map: TagMapDoc): number {
  return map.band_boundaries.length + 1;
}

/** Radial interval (lo, hi] of a band. */
export function bandInterval(map: TagMapDoc, band: number): [number, number] {
  const lo = band > 0 ? map.band_boundaries[band - 1] : 0;
  const hi = band < map.band_boundaries.length ? map.band_boundaries[band] : 1;
  return [lo, hi];
}

/** Disc point at the middle of a cell: sector center axis, band mid-radius. */
export function cellCentroid(map: TagMapDoc, sector: number, band: number): DiscPoint {
  const angle = ((map.sector_offset_deg + sector * sectorWidthDeg(map)) * Math.PI) / 180;
  const [lo, hi] = bandInterval(map, band);
  const r = (lo + hi) / 2;
  return { x: r * Math.sin(angle), y: r * Math.cos(angle) };
}

export interface Cell {
  sector: number;
  band: number;
}

/** Cell containing a disc point, or null outside the tappable annulus. */
export function cellFromDisc(map: TagMapDoc, p: DiscPoint): Cell | null {
  const r = discRadius(p);
  if (r < CENTER_DEAD_ZONE || r > 1) {
    return null;
  }
  return {
    sector: sectorOfAngle(map, angleFromTopDeg(p)),
    band: bandOfRadius(map, r),
  };
}
