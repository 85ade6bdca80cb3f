/**
 * Typed client for the emomap HTTP contract. Every error response carries a
 * machine-readable code; mutations are sent with an Idempotency-Key so a
 * network retry can never double-submit.
 */

import type { TagMapDoc } from "./geometry.js";

export interface SessionDoc {
  session_token: string;
  participant_id: string;
  experiment_id: string;
  mode: "CURATED" | "FIELD";
  cursor: number;
  handedness: "RIGHT" | "LEFT";
  created_at: string;
  tag_map: TagMapDoc;
  labels: string[][];
  locale: string | null;
}

export interface NextStep {
  done?: boolean;
  picture_id?: string;
  picture_url?: string;
  tag_map?: TagMapDoc;
  labels?: string[][];
  locale?: string | null;
}

export interface ClassificationDoc {
  sector_index: number;
  band_index: number;
  label: string;
  angle_deg: number;
  radius: number;
}

export interface TagEventDoc {
  event_id: string;
  picture_id: string;
  placement: { x: number; y: number };
  classification: ClassificationDoc;
  tagged_at: string;
  picture_source: string;
}

export interface TagRequest {
  picture_id: string;
  x: number;
  y: number;
  lat?: number;
  lon?: number;
  client_time?: string;
}

export interface ExperimentDoc {
  id: string;
  mode: string;
  state: string;
  start_time: string;
  finish_time: string;
  tag_map_id: string;
  picture_ids: string[];
  ordering: string;
  participant_ids: string[];
  locale_default: string;
}

export interface InvitationDoc {
  token: string;
  experiment_id: string;
  participant_id: string;
  url_payload: string;
  expires_at: string | null;
}

export interface SummaryDoc {
  n: number;
  mean_angle_deg: number | null;
  resultant_length: number;
  dominant_sector: number | null;
  sector_histogram: number[];
  mean_radius: number;
}

export interface UserEntry {
  picture_id: string;
  picture_url: string | null;
  placement: { x: number; y: number };
  classification: ClassificationDoc;
  tagged_at: string;
}

export interface UserResultsDoc {
  experiment_id: string;
  participant_id: string;
  entries: UserEntry[];
}

export interface PictureResultsDoc {
  experiment_id: string;
  picture_id: string;
  summary: SummaryDoc;
  placements: { participant_id: string; x: number; y: number }[];
}

export interface MapCellDoc {
  cell_lat_index: number;
  cell_lon_index: number;
  cell_size_deg: number;
  n: number;
  mean_angle_deg: number | null;
  resultant_length: number;
  dominant_sector: number | null;
  sector_histogram: number[];
}

export interface MapDoc {
  cell_size_deg: number;
  cells: MapCellDoc[];
  skipped: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

const MUTATION_RETRIES = 3;
const RETRY_DELAY_MS = 400;

function randomKey(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return `k-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class ApiClient {
  private researcherToken: string | null = null;
  private sessionToken: string | null = null;

  constructor(
    readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  // -- plumbing -----------------------------------------------------------

  private authHeader(): Record<string, string> {
    const token = this.sessionToken ?? this.researcherToken;
    return token ? { Authorization: `Bearer ${token}` } : {};
  }

  private async request(
    method: string,
    path: string,
    options: { json?: unknown; body?: FormData; retry?: boolean } = {},
  ): Promise<Response> {
    const headers: Record<string, string> = { ...this.authHeader() };
    let body: BodyInit | undefined;
    if (options.json !== undefined) {
      headers["Content-Type"] = "application/json";
      body = JSON.stringify(options.json);
    } else if (options.body) {
      body = options.body;
    }

    const mutating = method !== "GET";
    if (mutating) {
      headers["Idempotency-Key"] = randomKey();
    }
    const attempts = mutating && options.retry !== false ? MUTATION_RETRIES : 1;

    let lastError: unknown;
    for (let attempt = 0; attempt < attempts; attempt++) {
      try {
        const response = await this.fetchImpl(this.baseUrl + path, { method, headers, body });
        if (!response.ok) {
          let code = "http_error";
          let message = `HTTP ${response.status}`;
          try {
            const payload = (await response.json()) as { error?: { code?: string; message?: string } };
            code = payload.error?.code ?? code;
            message = payload.error?.message ?? message;
          } catch {
            // non-JSON error body: keep the generic message
          }
          throw new ApiError(response.status, code, message);
        }
        return response;
      } catch (error) {
        if (error instanceof ApiError) {
          throw error; // the server answered; replaying is the caller's call
        }
        lastError = error; // network failure: retry with the same key
        if (attempt + 1 < attempts) {
          await sleep(RETRY_DELAY_MS * (attempt + 1));
        }
      }
    }
    throw lastError;
  }

  private async json<T>(method: string, path: string, options?: { json?: unknown; body?: FormData }): Promise<T> {
    const response = await this.request(method, path, options ?? {});
    return (await response.json()) as T;
  }

  // -- participant --------------------------------------------------------

  async openSessionWithToken(token: string): Promise<SessionDoc> {
    const doc = await this.json<SessionDoc>("POST", "/api/session", { json: { token } });
    this.sessionToken = doc.session_token;
    return doc;
  }

  async openSessionWithCredentials(experimentId: string, username: string, password: string): Promise<SessionDoc> {
    const doc = await this.json<SessionDoc>("POST", "/api/session", {
      json: { experiment_id: experimentId, username, password },
    });
    this.sessionToken = doc.session_token;
    return doc;
  }

  async nextPicture(locale?: string): Promise<NextStep> {
    const query = locale ? `?locale=${encodeURIComponent(locale)}` : "";
    return this.json<NextStep>("GET", `/api/session/next${query}`);
  }

  async submitTag(tag: TagRequest): Promise<TagEventDoc> {
    return this.json<TagEventDoc>("POST", "/api/tags", { json: tag });
  }

  async uploadFieldPicture(image: Blob, lat: number, lon: number, clientTime?: string): Promise<{ picture_id: string }> {
    const form = new FormData();
    form.append("image", image, "picture.jpg");
    form.append("lat", String(lat));
    form.append("lon", String(lon));
    if (clientTime) {
      form.append("client_time", clientTime);
    }
    return this.json<{ picture_id: string }>("POST", "/api/field-pictures", { body: form });
  }

  pictureUrl(pictureUrl: string): string {
    return this.baseUrl + pictureUrl;
  }

  sessionAuthHeader(): Record<string, string> {
    return this.authHeader();
  }

  // -- researcher ---------------------------------------------------------

  async login(username: string, password: string): Promise<void> {
    const doc = await this.json<{ token: string }>("POST", "/api/login", { json: { username, password } });
    this.researcherToken = doc.token;
  }

  get authenticated(): boolean {
    return this.researcherToken !== null;
  }

  async listExperiments(): Promise<ExperimentDoc[]> {
    return this.json<ExperimentDoc[]>("GET", "/api/experiments");
  }

  async getExperiment(id: string): Promise<ExperimentDoc> {
    return this.json<ExperimentDoc>("GET", `/api/experiments/${id}`);
  }

  async createExperiment(body: Record<string, unknown>): Promise<ExperimentDoc> {
    return this.json<ExperimentDoc>("POST", "/api/experiments", { json: body });
  }

  async patchExperiment(id: string, patch: Record<string, unknown>): Promise<ExperimentDoc> {
    return this.json<ExperimentDoc>("PATCH", `/api/experiments/${id}`, { json: patch });
  }

  async activateExperiment(id: string): Promise<ExperimentDoc> {
    return this.json<ExperimentDoc>("POST", `/api/experiments/${id}/activate`);
  }

  async finishExperiment(id: string): Promise<ExperimentDoc> {
    return this.json<ExperimentDoc>("POST", `/api/experiments/${id}/finish`);
  }

  async addPicture(experimentId: string, image: Blob, filename: string): Promise<{ picture_id: string }> {
    const form = new FormData();
    form.append("image", image, filename);
    return this.json<{ picture_id: string }>("POST", `/api/experiments/${experimentId}/pictures`, { body: form });
  }

  async createParticipant(body: Record<string, unknown>): Promise<{ id: string; display_name: string }> {
    return this.json("POST", "/api/participants", { json: body });
  }

  async mintInvitation(experimentId: string, participantId: string): Promise<InvitationDoc> {
    return this.json<InvitationDoc>("POST", "/api/invitations", {
      json: { experiment_id: experimentId, participant_id: participantId },
    });
  }

  async getTagMap(id: string): Promise<TagMapDoc> {
    return this.json<TagMapDoc>("GET", `/api/tag-maps/${id}`);
  }

  async resultsForUser(experimentId: string, participantId: string): Promise<UserResultsDoc> {
    return this.json<UserResultsDoc>("GET", `/api/experiments/${experimentId}/results/users/${participantId}`);
  }

  async resultsForPicture(experimentId: string, pictureId: string): Promise<PictureResultsDoc> {
    return this.json<PictureResultsDoc>("GET", `/api/experiments/${experimentId}/results/pictures/${pictureId}`);
  }

  async emotionMap(experimentId: string, cellSize: number): Promise<MapDoc> {
    return this.json<MapDoc>("GET", `/api/experiments/${experimentId}/map?cell_size=${cellSize}`);
  }

  exportUrl(experimentId: string): string {
    return `${this.baseUrl}/api/experiments/${experimentId}/export.csv`;
  }

  /** CSV bytes fetched with the bearer header (plain links cannot carry it). */
  async exportCsv(experimentId: string): Promise<Blob> {
    const response = await this.request("GET", `/api/experiments/${experimentId}/export.csv`);
    return response.blob();
  }
}
