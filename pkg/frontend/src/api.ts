import type {
  AgreementView,
  ApiErrorBody,
  BatchView,
  Definition,
  DisagreementsView,
  LabelValue,
  ProgressView,
  RankItem,
} from "./types.js";

/** A non-2xx JSON response from the service ({code, message, details}). */
export class ApiHttpError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(`${body.code}: ${body.message}`);
    this.name = "ApiHttpError";
  }
}

/** One observed exchange, recorded for end-of-round reconciliation and
 * the independence audit (what the server actually sent this session). */
export interface TrafficEntry {
  method: string;
  path: string;
  status: number;
  response: unknown;
}

export interface ApiClientOptions {
  fetchImpl?: typeof fetch;
  onTraffic?: (entry: TrafficEntry) => void;
}

/** Thin typed wrapper over the service's HTTP JSON API. */
export class ApiClient {
  private readonly fetchImpl: typeof fetch;
  private readonly onTraffic?: (entry: TrafficEntry) => void;

  constructor(
    readonly baseUrl: string,
    options: ApiClientOptions = {},
  ) {
    this.fetchImpl = options.fetchImpl ?? fetch;
    this.onTraffic = options.onTraffic;
  }

  private async request<T>(
    method: string,
    path: string,
    payload?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (payload !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(payload);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body: unknown = await response.json();
    this.onTraffic?.({ method, path, status: response.status, response: body });
    if (!response.ok) {
      throw new ApiHttpError(response.status, body as ApiErrorBody);
    }
    return body as T;
  }

  getBatch(annotator: string): Promise<BatchView> {
    return this.request("GET", `/api/batch?annotator=${encodeURIComponent(annotator)}`);
  }

  postLabel(
    annotator: string,
    commentId: string,
    label: LabelValue,
  ): Promise<{ status: string; recorded_at: number }> {
    return this.request("POST", "/api/labels", {
      comment_id: commentId,
      label,
      annotator,
    });
  }

  getProgress(): Promise<ProgressView> {
    return this.request("GET", "/api/progress");
  }

  getAgreement(): Promise<AgreementView> {
    return this.request("GET", "/api/agreement");
  }

  getDisagreements(): Promise<DisagreementsView> {
    return this.request("GET", "/api/disagreements");
  }

  adjudicate(
    commentId: string,
    resolvedLabel: "positive" | "negative",
    note = "",
  ): Promise<{ status: string }> {
    return this.request("POST", "/api/adjudicate", {
      comment_id: commentId,
      resolved_label: resolvedLabel,
      note,
    });
  }

  getRank(top = 100): Promise<{ items: RankItem[] }> {
    return this.request("GET", `/api/rank?top=${top}`);
  }

  getDefinition(): Promise<Definition> {
    return this.request("GET", "/api/definition");
  }
}
