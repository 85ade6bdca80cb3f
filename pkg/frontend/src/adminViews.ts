/**
 * Researcher dashboard views: per-user placements (thumbnails on the wheel),
 * per-picture placements with the circular summary, and the emotion-map grid.
 * These are pure render functions over API documents, so they are directly
 * testable against fixtures.
 */

import type { MapDoc, PictureResultsDoc, SummaryDoc, UserResultsDoc } from "./api.js";
import { discToPixel, type TagMapDoc, type WheelLayout } from "./geometry.js";
import { renderWheel, sectorColor } from "./wheelRender.js";

/** Resultant lengths under this are rendered as "no dominant emotion". */
export const NO_DOMINANT_RHO = 1e-9;

export const RESULTS_WHEEL_SIZE = 480;

export function resultsWheelLayout(size: number = RESULTS_WHEEL_SIZE): WheelLayout {
  return { centerX: size / 2, centerY: size / 2, radius: (size / 2) * 0.9 };
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  node.className = className;
  return node;
}

/**
 * One participant's effective evaluations as thumbnails positioned at their
 * stored wheel placements.
 */
export function renderUserResults(
  container: HTMLElement,
  results: UserResultsDoc,
  map: TagMapDoc,
  labels: string[][],
  layout: WheelLayout = resultsWheelLayout(),
): void {
  const doc = container.ownerDocument;
  container.textContent = "";

  const heading = el(doc, "h2", "results-heading");
  heading.textContent = `Placements of participant ${results.participant_id}`;
  container.appendChild(heading);

  const board = el(doc, "div", "wheel-board");
  board.style.width = `${layout.centerX * 2}px`;
  board.style.height = `${layout.centerY * 2}px`;
  renderWheel(board, map, labels);

  for (const entry of results.entries) {
    const pixel = discToPixel(layout, entry.placement);
    const thumb = el(doc, "img", "thumb");
    thumb.src = entry.picture_url ?? "";
    thumb.title = `${entry.picture_id}: ${entry.classification.label}`;
    thumb.dataset.pictureId = entry.picture_id;
    thumb.style.position = "absolute";
    thumb.style.left = `${pixel.x}px`;
    thumb.style.top = `${pixel.y}px`;
    board.appendChild(thumb);
  }
  container.appendChild(board);
}

export function renderSummary(container: HTMLElement, summary: SummaryDoc, map: TagMapDoc, labels: string[][]): void {
  const doc = container.ownerDocument;
  const panel = el(doc, "dl", "summary-panel");

  const rows: [string, string][] = [["Evaluations", String(summary.n)]];
  if (summary.mean_angle_deg === null || summary.resultant_length < NO_DOMINANT_RHO) {
    rows.push(["Dominant emotion", "none (placements cancel out)"]);
  } else {
    const sector = summary.dominant_sector!;
    const midBand = Math.floor((map.band_boundaries.length + 1) / 2);
    rows.push(["Dominant emotion", labels[sector]?.[midBand] ?? `sector ${sector}`]);
    rows.push(["Mean direction", `${summary.mean_angle_deg.toFixed(1)}°`]);
  }
  rows.push(["Agreement (resultant length)", summary.resultant_length.toFixed(3)]);
  rows.push(["Mean intensity radius", summary.mean_radius.toFixed(3)]);

  for (const [term, value] of rows) {
    const dt = el(doc, "dt", "summary-term");
    dt.textContent = term;
    const dd = el(doc, "dd", "summary-value");
    dd.textContent = value;
    panel.append(dt, dd);
  }

  const histogram = el(doc, "div", "sector-histogram");
  const total = Math.max(1, summary.n);
  summary.sector_histogram.forEach((count, sector) => {
    const bar = el(doc, "div", "histogram-bar");
    bar.style.height = `${(100 * count) / total}%`;
    bar.style.background = sectorColor(map, sector);
    bar.title = `${labels[sector]?.[1] ?? sector}: ${count}`;
    bar.dataset.sector = String(sector);
    histogram.appendChild(bar);
  });
  panel.appendChild(histogram);
  container.appendChild(panel);
}

/** All placements of one picture, plus the aggregated summary. */
export function renderPictureResults(
  container: HTMLElement,
  results: PictureResultsDoc,
  map: TagMapDoc,
  labels: string[][],
  layout: WheelLayout = resultsWheelLayout(),
): void {
  const doc = container.ownerDocument;
  container.textContent = "";

  const heading = el(doc, "h2", "results-heading");
  heading.textContent = `Placements for picture ${results.picture_id}`;
  container.appendChild(heading);

  const board = el(doc, "div", "wheel-board");
  board.style.width = `${layout.centerX * 2}px`;
  board.style.height = `${layout.centerY * 2}px`;
  renderWheel(board, map, labels);
  for (const placement of results.placements) {
    const pixel = discToPixel(layout, placement);
    const dot = el(doc, "div", "placement-dot");
    dot.title = placement.participant_id;
    dot.dataset.participantId = placement.participant_id;
    dot.style.position = "absolute";
    dot.style.left = `${pixel.x}px`;
    dot.style.top = `${pixel.y}px`;
    board.appendChild(dot);
  }
  container.appendChild(board);
  renderSummary(container, results.summary, map, labels);
}

/**
 * Emotion-map grid: one cell per aggregated bucket, colored by dominant
 * sector with opacity proportional to agreement; degenerate cells (no
 * dominant direction) are hatched neutral.
 */
export function renderEmotionMap(container: HTMLElement, mapDoc: MapDoc, tagMap: TagMapDoc): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  const grid = el(doc, "div", "map-grid");

  if (mapDoc.cells.length === 0) {
    const empty = el(doc, "p", "map-empty");
    empty.textContent = "No located evaluations yet.";
    container.append(grid, empty);
    return;
  }

  const latIndexes = mapDoc.cells.map((c) => c.cell_lat_index);
  const lonIndexes = mapDoc.cells.map((c) => c.cell_lon_index);
  const minLat = Math.min(...latIndexes);
  const maxLat = Math.max(...latIndexes);
  const minLon = Math.min(...lonIndexes);
  const maxLon = Math.max(...lonIndexes);
  const rows = maxLat - minLat + 1;
  const cols = maxLon - minLon + 1;

  for (const cell of mapDoc.cells) {
    const node = el(doc, "div", "map-cell");
    node.dataset.latIndex = String(cell.cell_lat_index);
    node.dataset.lonIndex = String(cell.cell_lon_index);
    node.dataset.n = String(cell.n);
    // north up: the largest latitude index is the top row
    node.style.left = `${(100 * (cell.cell_lon_index - minLon)) / cols}%`;
    node.style.top = `${(100 * (maxLat - cell.cell_lat_index)) / rows}%`;
    node.style.width = `${100 / cols}%`;
    node.style.height = `${100 / rows}%`;
    if (cell.dominant_sector === null || cell.resultant_length < NO_DOMINANT_RHO) {
      node.classList.add("no-dominant");
      node.title = `n=${cell.n}: no dominant emotion`;
    } else {
      node.style.background = sectorColor(tagMap, cell.dominant_sector);
      node.style.opacity = String(Math.max(0.15, cell.resultant_length));
      node.title = `n=${cell.n}, agreement ${cell.resultant_length.toFixed(2)}`;
    }
    grid.appendChild(node);
  }
  const note = el(doc, "p", "map-note");
  note.textContent = `${mapDoc.cells.length} cells at ${mapDoc.cell_size_deg}°; ${mapDoc.skipped} evaluations without location skipped.`;
  container.append(grid, note);
}
