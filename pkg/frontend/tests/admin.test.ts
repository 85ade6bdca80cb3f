// Dashboard render functions over API documents, including the Fig.-3-style
// per-user page: three tags drawn as three positioned thumbnails.

import { describe, expect, it } from "vitest";

import type { MapDoc, PictureResultsDoc, UserResultsDoc } from "../src/api.js";
import { renderEmotionMap, renderPictureResults, renderUserResults, resultsWheelLayout } from "../src/adminViews.js";
import { discToPixel } from "../src/geometry.js";
import { renderQr } from "../src/qr.js";
import { PLUTCHIK } from "./fixtures.js";

const THREE_TAGS: UserResultsDoc = {
  experiment_id: "exp-1",
  participant_id: "part-1",
  entries: [
    {
      picture_id: "pic-a",
      picture_url: "/api/pictures/pic-a/image",
      placement: { x: 0.0, y: 0.5 },
      classification: { sector_index: 0, band_index: 1, label: "joy", angle_deg: 0, radius: 0.5 },
      tagged_at: "2026-03-01T12:00:01Z",
    },
    {
      picture_id: "pic-b",
      picture_url: "/api/pictures/pic-b/image",
      placement: { x: 0.6, y: 0.1 },
      classification: { sector_index: 2, band_index: 1, label: "fear", angle_deg: 80.5, radius: 0.608 },
      tagged_at: "2026-03-01T12:00:02Z",
    },
    {
      picture_id: "pic-c",
      picture_url: "/api/pictures/pic-c/image",
      placement: { x: -0.2, y: -0.7 },
      classification: { sector_index: 4, band_index: 2, label: "pensiveness", angle_deg: 195.9, radius: 0.728 },
      tagged_at: "2026-03-01T12:00:03Z",
    },
  ],
};

describe("per-user results page", () => {
  it("renders a three-tag fixture as three thumbnails at their wheel placements", () => {
    const container = document.createElement("div");
    renderUserResults(container, THREE_TAGS, PLUTCHIK, PLUTCHIK.labels);

    expect(container.querySelector("svg.wheel")).not.toBeNull();
    const thumbs = container.querySelectorAll<HTMLImageElement>("img.thumb");
    expect(thumbs).toHaveLength(3);

    const layout = resultsWheelLayout();
    THREE_TAGS.entries.forEach((entry, i) => {
      const expected = discToPixel(layout, entry.placement);
      expect(thumbs[i].style.left).toBe(`${expected.x}px`);
      expect(thumbs[i].style.top).toBe(`${expected.y}px`);
      expect(thumbs[i].dataset.pictureId).toBe(entry.picture_id);
      expect(thumbs[i].title).toContain(entry.classification.label);
    });

    // joy placement (0, 0.5) sits straight above the center
    const joyThumb = thumbs[0];
    expect(parseFloat(joyThumb.style.left)).toBeCloseTo(layout.centerX, 6);
    expect(parseFloat(joyThumb.style.top)).toBeCloseTo(layout.centerY - 0.5 * layout.radius, 6);
  });
});

describe("per-picture results page", () => {
  it("renders one dot per participant and the circular summary", () => {
    const doc: PictureResultsDoc = {
      experiment_id: "exp-1",
      picture_id: "pic-a",
      summary: {
        n: 2,
        mean_angle_deg: 0,
        resultant_length: 1,
        dominant_sector: 0,
        sector_histogram: [2, 0, 0, 0, 0, 0, 0, 0],
        mean_radius: 0.5,
      },
      placements: [
        { participant_id: "p1", x: 0, y: 0.5 },
        { participant_id: "p2", x: 0, y: 0.5 },
      ],
    };
    const container = document.createElement("div");
    renderPictureResults(container, doc, PLUTCHIK, PLUTCHIK.labels);
    expect(container.querySelectorAll(".placement-dot")).toHaveLength(2);
    const panel = container.querySelector(".summary-panel")!;
    expect(panel.textContent).toContain("joy");
    expect(panel.textContent).toContain("1.000");
    expect(container.querySelectorAll(".histogram-bar")).toHaveLength(8);
  });

  it("marks a canceled-out summary as having no dominant emotion", () => {
    const doc: PictureResultsDoc = {
      experiment_id: "exp-1",
      picture_id: "pic-a",
      summary: {
        n: 2,
        mean_angle_deg: null,
        resultant_length: 0,
        dominant_sector: null,
        sector_histogram: [1, 0, 0, 0, 1, 0, 0, 0],
        mean_radius: 0.5,
      },
      placements: [
        { participant_id: "p1", x: 0, y: 0.5 },
        { participant_id: "p2", x: 0, y: -0.5 },
      ],
    };
    const container = document.createElement("div");
    renderPictureResults(container, doc, PLUTCHIK, PLUTCHIK.labels);
    expect(container.querySelector(".summary-panel")!.textContent).toContain("none");
  });
});

describe("emotion map page", () => {
  const mapDoc: MapDoc = {
    cell_size_deg: 0.01,
    skipped: 1,
    cells: [
      {
        cell_lat_index: 5222,
        cell_lon_index: 2101,
        cell_size_deg: 0.01,
        n: 4,
        mean_angle_deg: 10,
        resultant_length: 0.8,
        dominant_sector: 0,
        sector_histogram: [4, 0, 0, 0, 0, 0, 0, 0],
      },
      {
        cell_lat_index: 5223,
        cell_lon_index: 2102,
        cell_size_deg: 0.01,
        n: 2,
        mean_angle_deg: null,
        resultant_length: 0,
        dominant_sector: null,
        sector_histogram: [1, 0, 0, 0, 1, 0, 0, 0],
      },
    ],
  };

  it("colors cells by dominant sector with agreement as opacity", () => {
    const container = document.createElement("div");
    renderEmotionMap(container, mapDoc, PLUTCHIK);
    const cells = container.querySelectorAll<HTMLElement>(".map-cell");
    expect(cells).toHaveLength(2);

    const dominant = cells[0];
    expect(dominant.style.opacity).toBe("0.8");
    expect(dominant.style.background).not.toBe("");
    expect(dominant.classList.contains("no-dominant")).toBe(false);

    const degenerate = cells[1];
    expect(degenerate.classList.contains("no-dominant")).toBe(true);

    // north up: the higher-latitude cell sits in the top row
    expect(parseFloat(degenerate.style.top)).toBeLessThan(parseFloat(dominant.style.top));
    expect(container.querySelector(".map-note")!.textContent).toContain("1 evaluations without location");
  });

  it("shows an empty notice when nothing is located", () => {
    const container = document.createElement("div");
    renderEmotionMap(container, { cell_size_deg: 0.01, skipped: 0, cells: [] }, PLUTCHIK);
    expect(container.querySelector(".map-empty")).not.toBeNull();
  });
});

describe("invitation QR", () => {
  it("renders a scannable SVG for the invitation URL", () => {
    const container = document.createElement("div");
    renderQr(container, "https://study.example/join/AbCd1234");
    const svg = container.querySelector("svg.invitation-qr");
    expect(svg).not.toBeNull();
    expect(svg!.getAttribute("aria-label")).toBe("https://study.example/join/AbCd1234");
  });
});
