/**
 * Participant tagging screen.
 *
 * Landscape-only, two panes: the wheel on the participant's dominant-hand
 * side (wheel left for right-handed, inverted for left-handed) and the
 * picture on the other. A picture is tagged either by dragging it onto the
 * wheel or by tapping a wheel cell (which submits the cell centroid); both
 * gestures funnel through the same submission path, so equal disc points
 * yield identical requests. After a successful tag the picture leaves the
 * screen and the next one loads. The server's classification is displayed
 * verbatim; nothing is classified locally.
 */

import { ApiClient, ApiError, type NextStep, type SessionDoc } from "./api.js";
import {
  CENTER_DEAD_ZONE,
  cellCentroid,
  discRadius,
  discToPixel,
  layoutWheel,
  pixelToDisc,
  roundCoord,
  type DiscPoint,
  type WheelLayout,
  type WheelSide,
} from "./geometry.js";
import { renderWheel } from "./wheelRender.js";
import { ZoomState } from "./zoom.js";

export type InteractionMode = "DRAG_DROP" | "TAP_SELECT";

/** Smallest viewport the layout supports (roughly a 9-inch tablet, landscape). */
export const MIN_VIEW_WIDTH = 960;
export const MIN_VIEW_HEIGHT = 540;

export interface WindowLike {
  innerWidth: number;
  innerHeight: number;
  addEventListener(type: string, listener: () => void): void;
}

export interface GeoFix {
  lat: number;
  lon: number;
}

export interface TaggingOptions {
  api: ApiClient;
  root: HTMLElement;
  session: SessionDoc;
  win?: WindowLike;
  mode?: InteractionMode;
  locale?: string;
  /** Field mode: supplies the device position attached to uploads and tags. */
  geolocate?: () => Promise<GeoFix>;
  now?: () => string;
}

export class TaggingScreen {
  readonly api: ApiClient;
  readonly root: HTMLElement;
  readonly session: SessionDoc;
  readonly side: WheelSide;
  readonly zoom = new ZoomState();
  mode: InteractionMode;

  private readonly win: WindowLike;
  private readonly locale?: string;
  private readonly geolocate?: () => Promise<GeoFix>;
  private readonly now: () => string;

  private current: NextStep | null = null;
  private fieldPictureId: string | null = null;
  private fieldFix: GeoFix | null = null;

  constructor(options: TaggingOptions) {
    this.api = options.api;
    this.root = options.root;
    this.session = options.session;
    this.win = options.win ?? (window as unknown as WindowLike);
    this.mode = options.mode ?? "TAP_SELECT";
    this.locale = options.locale;
    this.geolocate = options.geolocate;
    this.now = options.now ?? (() => new Date().toISOString());
    this.side = options.session.handedness === "LEFT" ? "RIGHT" : "LEFT";
  }

  layout(): WheelLayout {
    return layoutWheel(this.win.innerWidth, this.win.innerHeight, this.side);
  }

  async start(): Promise<void> {
    this.renderSkeleton();
    this.updateGuards();
    this.win.addEventListener("resize", () => this.updateGuards());
    if (this.session.mode === "CURATED") {
      await this.loadNext();
    } else {
      this.renderFieldCapture();
    }
  }

  // -- DOM skeleton ---------------------------------------------------------

  private el<K extends keyof HTMLElementTagNameMap>(tag: K, className: string): HTMLElementTagNameMap[K] {
    const node = this.root.ownerDocument.createElement(tag);
    node.className = className;
    return node;
  }

  private renderSkeleton(): void {
    this.root.textContent = "";
    const screen = this.el("div", "screen");

    const wheelPane = this.el("div", "pane wheel-pane");
    wheelPane.dataset.side = this.side;
    const hint = this.el("div", "hint hidden");
    hint.setAttribute("role", "alert");
    wheelPane.appendChild(hint);

    const picturePane = this.el("div", "pane picture-pane");
    const viewport = this.el("div", "picture-viewport");
    picturePane.appendChild(viewport);

    const controls = this.el("div", "zoom-controls");
    for (const [label, cls, action] of [
      ["−", "zoom-out", () => this.zoomBy(1 / 1.5)],
      ["+", "zoom-in", () => this.zoomBy(1.5)],
      ["1×", "zoom-reset", () => this.resetZoom()],
    ] as const) {
      const button = this.el("button", `zoom-button ${cls}`);
      button.type = "button";
      button.textContent = label;
      button.addEventListener("click", action);
      controls.appendChild(button);
    }
    picturePane.appendChild(controls);
    picturePane.appendChild(this.el("div", "confirmation"));

    if (this.side === "LEFT") {
      screen.append(wheelPane, picturePane);
    } else {
      screen.append(picturePane, wheelPane);
    }
    this.root.appendChild(screen);

    const rotate = this.el("div", "rotate-prompt overlay hidden");
    rotate.textContent = "Please rotate the device to landscape.";
    const tooSmall = this.el("div", "too-small overlay hidden");
    tooSmall.textContent = "This screen is too small for the tagging task; please use a 9-inch or larger tablet.";
    const done = this.el("div", "done overlay hidden");
    done.textContent = "All pictures are evaluated. Thank you!";
    this.root.append(rotate, tooSmall, done);

    wheelPane.addEventListener("dragover", (event) => event.preventDefault());
    wheelPane.addEventListener("drop", (event) => {
      event.preventDefault();
      if (this.mode === "DRAG_DROP") {
        void this.handleDrop(event.clientX, event.clientY);
      }
    });
  }

  private query<T extends HTMLElement>(selector: string): T {
    const node = this.root.querySelector(selector);
    if (!node) {
      throw new Error(`missing element ${selector}`);
    }
    return node as T;
  }

  // -- guards -----------------------------------------------------------------

  updateGuards(): void {
    const w = this.win.innerWidth;
    const h = this.win.innerHeight;
    const portrait = h > w;
    this.query(".rotate-prompt").classList.toggle("hidden", !portrait);
    const tooSmall = !portrait && (w < MIN_VIEW_WIDTH || h < MIN_VIEW_HEIGHT);
    this.query(".too-small").classList.toggle("hidden", !tooSmall);
  }

  // -- picture flow --------------------------------------------------------------

  async loadNext(): Promise<void> {
    const step = await this.api.nextPicture(this.locale);
    this.current = step;
    if (step.done) {
      this.query(".done").classList.remove("hidden");
      return;
    }
    this.showPicture(this.api.pictureUrl(step.picture_url!), step.picture_id!);
    this.renderWheelFromStep(step);
  }

  private renderWheelFromStep(step: NextStep): void {
    const pane = this.query(".wheel-pane");
    pane.querySelector("svg")?.remove();
    renderWheel(pane, step.tag_map!, step.labels!, {
      onCellTap: (sector, band) => {
        if (this.mode === "TAP_SELECT") {
          void this.handleCellTap(sector, band);
        }
      },
    });
  }

  private showPicture(url: string, pictureId: string): void {
    const viewport = this.query(".picture-viewport");
    viewport.textContent = "";
    this.zoom.reset();
    const img = this.el("img", "current-picture");
    img.src = url;
    img.draggable = this.mode === "DRAG_DROP";
    img.dataset.pictureId = pictureId;
    img.addEventListener("dblclick", (event) => {
      const mouse = event as MouseEvent;
      this.zoom.doubleTap(mouse.offsetX, mouse.offsetY, this.paneWidth(), this.win.innerHeight);
      this.applyZoom();
    });
    viewport.appendChild(img);
    this.applyZoom();
  }

  private paneWidth(): number {
    return this.win.innerWidth / 2;
  }

  private zoomBy(factor: number): void {
    this.zoom.zoomBy(factor, this.paneWidth() / 2, this.win.innerHeight / 2, this.paneWidth(), this.win.innerHeight);
    this.applyZoom();
  }

  private resetZoom(): void {
    this.zoom.reset();
    this.applyZoom();
  }

  private applyZoom(): void {
    const img = this.root.querySelector<HTMLImageElement>(".current-picture");
    if (img) {
      img.style.transform = this.zoom.cssTransform();
    }
  }

  // -- gestures --------------------------------------------------------------------

  /** Drop gesture: viewport pixels resolved against the rendered wheel. */
  async handleDrop(clientX: number, clientY: number): Promise<void> {
    const p = pixelToDisc(this.layout(), clientX, clientY);
    if (discRadius(p) > 1) {
      return; // outside the wheel: not a tagging gesture
    }
    await this.submitPlacement(p);
  }

  /**
   * Tap gesture: the cell's centroid is submitted, not the raw tap point.
   * The centroid goes through the same pixel-to-disc path as a drop on that
   * pixel, so both interaction modes produce identical submissions for
   * gestures resolving to the same point.
   */
  async handleCellTap(sector: number, band: number): Promise<void> {
    const map = this.current?.tag_map ?? this.session.tag_map;
    const pixel = discToPixel(this.layout(), cellCentroid(map, sector, band));
    await this.submitPlacement(pixelToDisc(this.layout(), pixel.x, pixel.y));
  }

  /** Single submission path shared by both interaction modes. */
  async submitPlacement(p: DiscPoint): Promise<void> {
    if (!this.current?.picture_id && !this.fieldPictureId) {
      return;
    }
    const hint = this.query(".hint");
    if (discRadius(p) < CENTER_DEAD_ZONE) {
      this.showHint("Place the picture a little away from the exact center.");
      return;
    }
    const request = {
      picture_id: (this.current?.picture_id ?? this.fieldPictureId)!,
      x: roundCoord(p.x),
      y: roundCoord(p.y),
      client_time: this.now(),
      ...(this.fieldFix ? { lat: this.fieldFix.lat, lon: this.fieldFix.lon } : {}),
    };
    try {
      const event = await this.api.submitTag(request);
      hint.classList.add("hidden");
      this.confirm(event.classification.label);
      this.removeCurrentPicture();
      if (this.session.mode === "CURATED") {
        await this.loadNext();
      } else {
        this.fieldPictureId = null;
        this.renderFieldCapture();
      }
    } catch (error) {
      if (error instanceof ApiError && error.code === "center_ambiguous") {
        this.showHint("Place the picture a little away from the exact center.");
        return;
      }
      this.showHint(error instanceof ApiError ? error.message : "Connection problem; please try again.");
    }
  }

  /** Where a disc point lands on screen; exposed for tests and drag preview. */
  pixelForDisc(p: DiscPoint): { x: number; y: number } {
    return discToPixel(this.layout(), p);
  }

  private confirm(label: string): void {
    const confirmation = this.query(".confirmation");
    confirmation.textContent = label;
    confirmation.classList.add("visible");
  }

  private showHint(message: string): void {
    const hint = this.query(".hint");
    hint.textContent = message;
    hint.classList.remove("hidden");
  }

  /** The evaluated picture leaves the screen: no placed-thumbnail clutter. */
  private removeCurrentPicture(): void {
    this.root.querySelector(".current-picture")?.remove();
  }

  // -- field mode --------------------------------------------------------------------

  private renderFieldCapture(): void {
    const viewport = this.query(".picture-viewport");
    viewport.textContent = "";
    const capture = this.el("label", "field-capture");
    capture.textContent = "Take or choose a picture of this place";
    const input = this.el("input", "field-input");
    input.type = "file";
    input.accept = "image/jpeg,image/png";
    input.addEventListener("change", () => {
      const file = input.files?.[0];
      if (file) {
        void this.uploadFieldPicture(file);
      }
    });
    capture.appendChild(input);
    viewport.appendChild(capture);

    const pane = this.query(".wheel-pane");
    pane.querySelector("svg")?.remove();
  }

  private async uploadFieldPicture(file: Blob): Promise<void> {
    if (!this.geolocate) {
      this.showHint("Location is unavailable; field pictures need coordinates.");
      return;
    }
    try {
      this.fieldFix = await this.geolocate();
      const uploaded = await this.api.uploadFieldPicture(file, this.fieldFix.lat, this.fieldFix.lon, this.now());
      this.fieldPictureId = uploaded.picture_id;
      this.current = null;
      this.showPicture(this.api.pictureUrl(`/api/pictures/${uploaded.picture_id}/image`), uploaded.picture_id);
      this.renderWheelFromStep({ tag_map: this.session.tag_map, labels: this.session.labels });
    } catch (error) {
      this.showHint(error instanceof ApiError ? error.message : "Upload failed; please try again.");
    }
  }
}
