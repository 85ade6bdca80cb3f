/**
 * Client-side QR rendering of invitation URLs. The server only ever emits
 * the URL payload; turning it into a scannable image happens here.
 */

import qrcode from "qrcode-generator";

export function renderQr(container: HTMLElement, payload: string): void {
  const qr = qrcode(0, "M");
  qr.addData(payload);
  qr.make();
  container.innerHTML = qr.createSvgTag({ scalable: true, margin: 2 });
  const svg = container.querySelector("svg");
  svg?.setAttribute("class", "invitation-qr");
  svg?.setAttribute("aria-label", payload);
}
