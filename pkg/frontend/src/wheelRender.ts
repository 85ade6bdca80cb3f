/**
 * SVG rendering of a tag map: one annular-sector path per cell, labeled at
 * its centroid. Cells carry data-sector / data-band attributes so tap mode
 * can resolve the cell without any pixel measurement.
 */

import {
  bandInterval,
  bandCount,
  cellCentroid,
  sectorWidthDeg,
  type TagMapDoc,
} from "./geometry.js";

const SVG_NS = "http://www.w3.org/2000/svg";

/** Hue per sector, yellow at the top like the classic emotion wheel. */
export function sectorColor(map: TagMapDoc, sector: number, lightness = 62): string {
  const hue = (60 + (sector * 360) / map.sector_count) % 360;
  return `hsl(${hue}, 72%, ${lightness}%)`;
}

function polar(angleDeg: number, r: number): [number, number] {
  const a = (angleDeg * Math.PI) / 180;
  // disc +y up, SVG +y down
  return [r * Math.sin(a), -r * Math.cos(a)];
}

function cellPath(map: TagMapDoc, sector: number, band: number): string {
  const width = sectorWidthDeg(map);
  const a0 = map.sector_offset_deg + sector * width - width / 2;
  const a1 = a0 + width;
  const [lo, hi] = bandInterval(map, band);
  const innerR = Math.max(lo, 0.04); // leave a visible hub hole
  const largeArc = width > 180 ? 1 : 0;

  const [x0o, y0o] = polar(a0, hi);
  const [x1o, y1o] = polar(a1, hi);
  const [x0i, y0i] = polar(a0, innerR);
  const [x1i, y1i] = polar(a1, innerR);
  return [
    `M ${x0i} ${y0i}`,
    `L ${x0o} ${y0o}`,
    `A ${hi} ${hi} 0 ${largeArc} 1 ${x1o} ${y1o}`,
    `L ${x1i} ${y1i}`,
    `A ${innerR} ${innerR} 0 ${largeArc} 0 ${x0i} ${y0i}`,
    "Z",
  ].join(" ");
}

export interface WheelHandlers {
  onCellTap?: (sector: number, band: number) => void;
}

/**
 * Render the wheel into a container. The labels matrix is the localized one
 * negotiated by the server; it must have the map's sector x band shape.
 */
export function renderWheel(
  container: HTMLElement,
  map: TagMapDoc,
  labels: string[][],
  handlers: WheelHandlers = {},
): SVGSVGElement {
  const doc = container.ownerDocument;
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", "-1.08 -1.08 2.16 2.16");
  svg.setAttribute("class", "wheel");
  svg.setAttribute("role", "group");

  const bands = bandCount(map);
  for (let sector = 0; sector < map.sector_count; sector++) {
    for (let band = 0; band < bands; band++) {
      const path = doc.createElementNS(SVG_NS, "path");
      path.setAttribute("d", cellPath(map, sector, band));
      path.setAttribute("class", "wheel-cell");
      // inner bands are the intense forms: draw them more saturated
      path.setAttribute("fill", sectorColor(map, sector, 50 + band * 9));
      path.setAttribute("stroke", "#ffffff");
      path.setAttribute("stroke-width", "0.01");
      path.dataset.sector = String(sector);
      path.dataset.band = String(band);
      if (handlers.onCellTap) {
        path.addEventListener("click", () => handlers.onCellTap!(sector, band));
      }
      svg.appendChild(path);

      const centroid = cellCentroid(map, sector, band);
      const text = doc.createElementNS(SVG_NS, "text");
      text.setAttribute("x", String(centroid.x));
      text.setAttribute("y", String(-centroid.y));
      text.setAttribute("class", "wheel-label");
      text.setAttribute("text-anchor", "middle");
      text.setAttribute("dominant-baseline", "middle");
      text.setAttribute("font-size", String(0.3 / bands));
      text.textContent = labels[sector]?.[band] ?? "";
      text.dataset.sector = String(sector);
      text.dataset.band = String(band);
      if (handlers.onCellTap) {
        text.addEventListener("click", () => handlers.onCellTap!(sector, band));
      }
      svg.appendChild(text);
    }
  }
  container.appendChild(svg);
  return svg;
}
