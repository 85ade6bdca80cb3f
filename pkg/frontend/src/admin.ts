/**
 * Researcher dashboard entry point: login, experiment list and detail pages,
 * picture upload, invitation minting (URL + on-screen QR), result views,
 * emotion map, and CSV download. Talks to the service exclusively through
 * the HTTP API.
 */

import { ApiClient, ApiError, type ExperimentDoc } from "./api.js";
import { renderEmotionMap, renderPictureResults, renderUserResults } from "./adminViews.js";
import type { TagMapDoc } from "./geometry.js";
import { renderQr } from "./qr.js";

const CELL_SIZES = [1, 0.1, 0.01, 0.005, 0.001];

class AdminApp {
  readonly api = new ApiClient("");

  constructor(readonly root: HTMLElement) {}

  private el<K extends keyof HTMLElementTagNameMap>(tag: K, className = "", text = ""): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) {
      node.className = className;
    }
    if (text) {
      node.textContent = text;
    }
    return node;
  }

  private fail(error: unknown): void {
    const banner = this.root.querySelector(".error-banner") ?? this.el("div", "error-banner");
    banner.textContent =
      error instanceof ApiError ? `${error.message} (${error.code})` : "Connection problem; please retry.";
    this.root.prepend(banner);
  }

  // -- login ---------------------------------------------------------------

  showLogin(): void {
    this.root.textContent = "";
    const form = this.el("form", "login-form");
    form.innerHTML = `
      <h1>emomap research panel</h1>
      <label>Username <input name="username" autocomplete="username"></label>
      <label>Password <input name="password" type="password" autocomplete="current-password"></label>
      <button type="submit">Log in</button>`;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(form);
      this.api
        .login(String(data.get("username")), String(data.get("password")))
        .then(() => this.showExperiments())
        .catch((error) => this.fail(error));
    });
    this.root.appendChild(form);
  }

  // -- experiment list -------------------------------------------------------

  async showExperiments(): Promise<void> {
    this.root.textContent = "";
    const heading = this.el("h1", "", "Experiments");
    const list = this.el("ul", "experiment-list");
    try {
      for (const experiment of await this.api.listExperiments()) {
        const item = this.el("li", "experiment-item");
        const link = this.el("a", "", `${experiment.id} — ${experiment.mode}, ${experiment.state}`);
        link.href = "#";
        link.addEventListener("click", (event) => {
          event.preventDefault();
          void this.showExperiment(experiment.id);
        });
        item.appendChild(link);
        list.appendChild(item);
      }
    } catch (error) {
      this.fail(error);
      return;
    }
    this.root.append(heading, list, this.createForm());
  }

  private createForm(): HTMLElement {
    const form = this.el("form", "create-form");
    form.innerHTML = `
      <h2>New experiment</h2>
      <label>Mode
        <select name="mode"><option value="CURATED">curated pictures</option>
        <option value="FIELD">participants photograph places</option></select>
      </label>
      <label>Start <input name="start_time" type="datetime-local" required></label>
      <label>Finish <input name="finish_time" type="datetime-local" required></label>
      <label>Ordering
        <select name="ordering"><option value="FIXED">fixed</option>
        <option value="RANDOM_PER_PARTICIPANT">random per participant</option></select>
      </label>
      <button type="submit">Create draft</button>`;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(form);
      this.api
        .createExperiment({
          mode: data.get("mode"),
          start_time: new Date(String(data.get("start_time"))).toISOString(),
          finish_time: new Date(String(data.get("finish_time"))).toISOString(),
          ordering: data.get("ordering"),
        })
        .then((experiment) => this.showExperiment(experiment.id))
        .catch((error) => this.fail(error));
    });
    return form;
  }

  // -- experiment detail --------------------------------------------------------

  async showExperiment(id: string): Promise<void> {
    let experiment: ExperimentDoc;
    let tagMap: TagMapDoc;
    try {
      experiment = await this.api.getExperiment(id);
      tagMap = await this.api.getTagMap(experiment.tag_map_id);
    } catch (error) {
      this.fail(error);
      return;
    }
    this.root.textContent = "";

    const back = this.el("a", "back-link", "← experiments");
    back.href = "#";
    back.addEventListener("click", (event) => {
      event.preventDefault();
      void this.showExperiments();
    });

    const heading = this.el("h1", "", `${experiment.id}`);
    const facts = this.el("p", "experiment-facts",
      `${experiment.mode} · ${experiment.state} · ${experiment.start_time} → ${experiment.finish_time} · ` +
      `${experiment.picture_ids.length} pictures · ${experiment.participant_ids.length} participants`);

    const actions = this.el("div", "experiment-actions");

    // mode is immutable after creation: show it, never offer to change it
    const modeControl = this.el("button", "mode-control", `mode: ${experiment.mode}`);
    modeControl.disabled = true;
    modeControl.title = "The experiment mode is fixed when the experiment is created and can never change.";
    actions.appendChild(modeControl);

    if (experiment.state === "DRAFT") {
      const activate = this.el("button", "", "Activate");
      activate.addEventListener("click", () =>
        this.api.activateExperiment(id).then(() => this.showExperiment(id)).catch((e) => this.fail(e)),
      );
      actions.appendChild(activate);
    }
    if (experiment.state === "ACTIVE") {
      const finish = this.el("button", "", "Finish");
      finish.addEventListener("click", () =>
        this.api.finishExperiment(id).then(() => this.showExperiment(id)).catch((e) => this.fail(e)),
      );
      actions.appendChild(finish);
    }

    const exportButton = this.el("button", "export-link", "Download CSV");
    exportButton.addEventListener("click", () =>
      this.api
        .exportCsv(id)
        .then((blob) => {
          const url = URL.createObjectURL(blob);
          const anchor = this.el("a");
          anchor.href = url;
          anchor.download = `${id}.csv`;
          anchor.click();
          URL.revokeObjectURL(url);
        })
        .catch((error) => this.fail(error)),
    );
    actions.appendChild(exportButton);

    const upload = this.el("label", "upload-control", "Add pictures ");
    const fileInput = this.el("input");
    fileInput.type = "file";
    fileInput.accept = "image/jpeg,image/png";
    fileInput.multiple = true;
    fileInput.addEventListener("change", async () => {
      try {
        for (const file of Array.from(fileInput.files ?? [])) {
          await this.api.addPicture(id, file, file.name);
        }
        void this.showExperiment(id);
      } catch (error) {
        this.fail(error);
      }
    });
    upload.appendChild(fileInput);
    if (experiment.mode === "CURATED" && experiment.state !== "FINISHED") {
      actions.appendChild(upload);
    }

    const invite = this.el("form", "invite-form");
    invite.innerHTML = `
      <h2>Invite a participant</h2>
      <label>Name <input name="display_name" required></label>
      <button type="submit">Create invitation</button>
      <div class="invitation-result"></div>`;
    invite.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(invite);
      const target = invite.querySelector<HTMLElement>(".invitation-result")!;
      this.api
        .createParticipant({ display_name: data.get("display_name") })
        .then((participant) => this.api.mintInvitation(id, participant.id))
        .then((invitation) => {
          target.textContent = "";
          const url = this.el("code", "invitation-url", invitation.url_payload);
          const qrBox = this.el("div", "invitation-qr-box");
          renderQr(qrBox, invitation.url_payload);
          target.append(url, qrBox);
        })
        .catch((error) => this.fail(error));
    });

    const results = this.el("div", "results-section");
    const userForm = this.el("form", "user-results-form");
    userForm.innerHTML = `
      <h2>Results per participant</h2>
      <label>Participant id <input name="participant_id" required></label>
      <button type="submit">Show placements</button>
      <div class="user-results"></div>`;
    userForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const pid = String(new FormData(userForm).get("participant_id"));
      this.api
        .resultsForUser(id, pid)
        .then((doc) =>
          renderUserResults(userForm.querySelector<HTMLElement>(".user-results")!, doc, tagMap, tagMap.labels),
        )
        .catch((error) => this.fail(error));
    });

    const pictureForm = this.el("form", "picture-results-form");
    pictureForm.innerHTML = `
      <h2>Results per picture</h2>
      <label>Picture id <input name="picture_id" required></label>
      <button type="submit">Show placements</button>
      <div class="picture-results"></div>`;
    pictureForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const pic = String(new FormData(pictureForm).get("picture_id"));
      this.api
        .resultsForPicture(id, pic)
        .then((doc) =>
          renderPictureResults(pictureForm.querySelector<HTMLElement>(".picture-results")!, doc, tagMap, tagMap.labels),
        )
        .catch((error) => this.fail(error));
    });

    const mapSection = this.el("div", "map-section");
    const mapControls = this.el("label", "", "Emotion map cell size (degrees) ");
    const sizeSelect = this.el("select");
    for (const size of CELL_SIZES) {
      const option = this.el("option", "", String(size));
      option.value = String(size);
      if (size === 0.01) {
        option.selected = true;
      }
      sizeSelect.appendChild(option);
    }
    const mapBox = this.el("div", "map-box");
    const drawMap = () =>
      this.api
        .emotionMap(id, Number(sizeSelect.value))
        .then((doc) => renderEmotionMap(mapBox, doc, tagMap))
        .catch((error) => this.fail(error));
    sizeSelect.addEventListener("change", drawMap);
    mapControls.appendChild(sizeSelect);
    mapSection.append(this.el("h2", "", "Emotion map"), mapControls, mapBox);
    void drawMap();

    results.append(userForm, pictureForm, mapSection);
    this.root.append(back, heading, facts, actions, invite, results);
  }
}

const rootElement = document.getElementById("admin");
if (rootElement) {
  new AdminApp(rootElement).showLogin();
}

export { AdminApp };
