/**
 * Participant app entry point.
 *
 * The invitation URL (/join/<token>) or a pasted token opens a session;
 * on first login the participant picks an interaction mode after a
 * one-screen tutorial (tap is the default, being the easier gesture).
 */

import { ApiClient, ApiError } from "./api.js";
import { TaggingScreen, type InteractionMode } from "./tagging.js";

const MODE_STORAGE_PREFIX = "emomap.mode.";

function tokenFromUrl(loc: Location): string | null {
  const match = loc.pathname.match(/\/join\/([^/]+)/);
  if (match) {
    return match[1];
  }
  return new URLSearchParams(loc.search).get("token");
}

function storedMode(participantId: string): InteractionMode | null {
  const value = localStorage.getItem(MODE_STORAGE_PREFIX + participantId);
  return value === "DRAG_DROP" || value === "TAP_SELECT" ? value : null;
}

function chooseMode(root: HTMLElement, participantId: string): Promise<InteractionMode> {
  const saved = storedMode(participantId);
  if (saved) {
    return Promise.resolve(saved);
  }
  return new Promise((resolve) => {
    const tutorial = document.createElement("div");
    tutorial.className = "mode-tutorial overlay";
    tutorial.innerHTML = `
      <h1>How would you like to tag pictures?</h1>
      <p>Each picture shows a place. Mark how it makes you feel by placing it
         on the emotion wheel: nearer the center means a stronger feeling.</p>
      <div class="mode-choices">
        <button type="button" class="mode-choice" data-mode="TAP_SELECT">
          <strong>Tap</strong><span>Tap the emotion on the wheel (recommended)</span>
        </button>
        <button type="button" class="mode-choice" data-mode="DRAG_DROP">
          <strong>Drag</strong><span>Drag the picture onto the wheel</span>
        </button>
      </div>`;
    tutorial.querySelectorAll<HTMLButtonElement>(".mode-choice").forEach((button) => {
      button.addEventListener("click", () => {
        const mode = button.dataset.mode as InteractionMode;
        localStorage.setItem(MODE_STORAGE_PREFIX + participantId, mode);
        tutorial.remove();
        resolve(mode);
      });
    });
    root.appendChild(tutorial);
  });
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const api = new ApiClient("");
  const token = tokenFromUrl(window.location);
  if (!token) {
    root.innerHTML = `<div class="overlay">Open the invitation link you received to start.</div>`;
    return;
  }
  try {
    const session = await api.openSessionWithToken(token);
    const mode = await chooseMode(root, session.participant_id);
    const screen = new TaggingScreen({
      api,
      root,
      session,
      mode,
      geolocate: () =>
        new Promise((resolve, reject) =>
          navigator.geolocation.getCurrentPosition(
            (pos) => resolve({ lat: pos.coords.latitude, lon: pos.coords.longitude }),
            (err) => reject(new Error(err.message)),
          ),
        ),
    });
    await screen.start();
  } catch (error) {
    const message =
      error instanceof ApiError && error.code === "experiment_not_active"
        ? "This study is not running right now. Please try again later."
        : error instanceof ApiError && error.code === "token_expired"
          ? "This invitation has expired; please ask the researcher for a new one."
          : "Could not start the session. Please check the link and try again.";
    root.innerHTML = `<div class="overlay">${message}</div>`;
  }
}

void boot();
