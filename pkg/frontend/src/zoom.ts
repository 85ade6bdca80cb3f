/**
 * Picture zoom state: smooth continuous zoom between 1x and 4x with pan,
 * double-tap to 2x centered on the tap point, and an always-visible reset.
 * Zoom only transforms the picture pane; wheel coordinates never pass
 * through it, so submitted placements are independent of zoom.
 */

export const MIN_ZOOM = 1;
export const MAX_ZOOM = 4;
export const DOUBLE_TAP_ZOOM = 2;

export class ZoomState {
  scale = MIN_ZOOM;
  panX = 0;
  panY = 0;

  /**
   * Zoom to a scale keeping the focus point (in pane coordinates, relative
   * to the pane's top-left corner) stationary on screen.
   */
  zoomTo(scale: number, focusX: number, focusY: number, paneW: number, paneH: number): void {
    const next = Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, scale));
    const ratio = next / this.scale;
    this.panX = focusX - ratio * (focusX - this.panX);
    this.panY = focusY - ratio * (focusY - this.panY);
    this.scale = next;
    this.clamp(paneW, paneH);
  }

  zoomBy(factor: number, focusX: number, focusY: number, paneW: number, paneH: number): void {
    this.zoomTo(this.scale * factor, focusX, focusY, paneW, paneH);
  }

  doubleTap(focusX: number, focusY: number, paneW: number, paneH: number): void {
    this.zoomTo(DOUBLE_TAP_ZOOM, focusX, focusY, paneW, paneH);
  }

  panBy(dx: number, dy: number, paneW: number, paneH: number): void {
    this.panX += dx;
    this.panY += dy;
    this.clamp(paneW, paneH);
  }

  reset(): void {
    this.scale = MIN_ZOOM;
    this.panX = 0;
    this.panY = 0;
  }

  /** Keep the scaled picture covering the pane (no blank gutters). */
  private clamp(paneW: number, paneH: number): void {
    if (this.scale === MIN_ZOOM) {
      this.panX = 0;
      this.panY = 0;
      return;
    }
    const minX = paneW - this.scale * paneW;
    const minY = paneH - this.scale * paneH;
    this.panX = Math.min(0, Math.max(minX, this.panX));
    this.panY = Math.min(0, Math.max(minY, this.panY));
  }

  cssTransform(): string {
    return `translate(${this.panX}px, ${this.panY}px) scale(${this.scale})`;
  }
}
