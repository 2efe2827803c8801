// Typed client for the kcpipe HTTP API. Every request carries the schema
// version header; mutations carry a fresh Idempotency-Key so a retried
// request can never apply twice.

export const SCHEMA_HEADER = "X-Schema-Version";
export const SCHEMA_VERSION = "1";

export interface ApiConfig {
  baseUrl: string;
  token: string | null;
}

export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`API error ${status}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

export interface TaxonomyEntry {
  name: string;
  category: string;
  specificity_rank: number;
  definition: string;
}

export interface ComponentRow {
  component_id: string;
  doc_id: string;
  source_span: number;
  title: string;
  type_label: string;
  resolved_type: string;
  effective_type: string | null;
  description: string;
  citation: string;
  filename: string;
  paper_title: string;
  per_paper_concept_count: number;
  curation_state: string;
  created_at: string;
  year: number | null;
  subjects: string[];
}

export interface ReuseEvent {
  event_id: string;
  project: string;
  note: string;
  adopted: boolean;
  at: string;
}

export interface ComponentDetail {
  component: ComponentRow;
  reuse_events: ReuseEvent[];
}

export interface ComponentFilters {
  type?: string;
  year?: number | null;
  subject?: string;
  state?: string;
}

export interface ReuseInput {
  project: string;
  note: string;
  adopted: boolean;
}

export interface FrequencyRow {
  bucket: string;
  count: number;
  percent: number | null;
  note: string;
}

export interface TypeFrequencyReport {
  report: "type_frequency";
  rows: FrequencyRow[];
  unlabelled: FrequencyRow;
  not_applicable: FrequencyRow;
  labelled_total: number;
  denominator_mode: string;
  denominator: number;
  other_members: [string, number][];
}

export interface PerPaperReport {
  report: "per_paper";
  document_count: number;
  component_count: number;
  mean: number;
  max_count: number;
  histogram: [number, number][];
}

export interface ReuseMetricsReport {
  report: "reuse_metrics";
  universe_size: number;
  projects_with_reuse: number;
  reuse_rate: number | null;
  completed_sprints: number;
  adopted_sprints: number;
  hit_rate: number | null;
  mean_days_to_solution: number | null;
}

export interface StoredResponse {
  request_hash: string;
  provider_id: string;
  config_hash: string;
  text: string;
  captured_at: string;
}

// Filters map 1:1 onto /components query parameters; unset filters are
// omitted entirely rather than sent as empty strings.
export function componentQuery(filters: ComponentFilters): string {
  const params = new URLSearchParams();
  if (filters.type) params.set("type", filters.type);
  if (filters.year !== undefined && filters.year !== null) {
    params.set("year", String(filters.year));
  }
  if (filters.subject) params.set("subject", filters.subject);
  if (filters.state) params.set("state", filters.state);
  const text = params.toString();
  return text ? `?${text}` : "";
}

function freshIdempotencyKey(): string {
  const crypto = globalThis.crypto;
  if (crypto && typeof crypto.randomUUID === "function") {
    return crypto.randomUUID();
  }
  return `key-${Date.now().toString(16)}-${Math.random().toString(16).slice(2)}`;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly config: ApiConfig;
  private readonly fetchImpl: FetchLike;

  constructor(config: ApiConfig, fetchImpl?: FetchLike) {
    this.config = config;
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    mutation = false
  ): Promise<T> {
    const headers: Record<string, string> = { [SCHEMA_HEADER]: SCHEMA_VERSION };
    if (this.config.token) {
      headers["Authorization"] = `Bearer ${this.config.token}`;
    }
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
    }
    if (mutation) {
      headers["Idempotency-Key"] = freshIdempotencyKey();
    }
    const response = await this.fetchImpl(`${this.config.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = response.statusText || `status ${response.status}`;
      try {
        const data = await response.json();
        if (data && data.detail !== undefined) {
          detail = typeof data.detail === "string" ? data.detail : JSON.stringify(data.detail);
        }
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async listComponents(filters: ComponentFilters = {}): Promise<ComponentRow[]> {
    const data = await this.request<{ components: ComponentRow[] }>(
      "GET",
      `/components${componentQuery(filters)}`
    );
    return data.components;
  }

  async getComponent(componentId: string): Promise<ComponentDetail> {
    return this.request<ComponentDetail>("GET", `/components/${componentId}`);
  }

  async curate(
    componentId: string,
    curationState: string,
    retypeTo: string | null = null,
    actor = "curation-ui"
  ): Promise<ComponentRow> {
    const data = await this.request<{ component: ComponentRow }>(
      "PATCH",
      `/components/${componentId}`,
      { curation_state: curationState, retype_to: retypeTo, actor },
      true
    );
    return data.component;
  }

  async addReuse(componentId: string, input: ReuseInput): Promise<ReuseEvent> {
    const data = await this.request<{ event: ReuseEvent }>(
      "POST",
      `/components/${componentId}/reuse`,
      input,
      true
    );
    return data.event;
  }

  async taxonomy(): Promise<TaxonomyEntry[]> {
    const data = await this.request<{ types: TaxonomyEntry[] }>("GET", "/taxonomy");
    return data.types;
  }

  async typeFrequency(denominator?: string): Promise<TypeFrequencyReport> {
    const suffix = denominator ? `?denominator=${encodeURIComponent(denominator)}` : "";
    return this.request<TypeFrequencyReport>("GET", `/reports/type-frequency${suffix}`);
  }

  async perPaper(): Promise<PerPaperReport> {
    return this.request<PerPaperReport>("GET", "/reports/per-paper");
  }

  async reuseMetrics(projects?: string[]): Promise<ReuseMetricsReport> {
    const suffix =
      projects && projects.length
        ? `?projects=${encodeURIComponent(projects.join(","))}`
        : "";
    return this.request<ReuseMetricsReport>("GET", `/reports/reuse-metrics${suffix}`);
  }

  // Raw model response for a document; null when nothing is stored yet.
  async documentResponse(docId: string): Promise<StoredResponse | null> {
    try {
      const data = await this.request<{ response: StoredResponse }>(
        "GET",
        `/documents/${docId}/response`
      );
      return data.response;
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        return null;
      }
      throw error;
    }
  }
}
