/**
 * Thin fetch wrapper over the gateway's JSON surface.
 *
 * Every failed call throws an ApiError carrying the gateway's
 * machine-readable code; network failures surface as code "transport".
 * The console holds no state of its own: whatever these calls return is
 * rendered as-is.
 */

export class ApiError extends Error {
  readonly code: string;
  readonly details: unknown;

  constructor(code: string, message: string, details?: unknown) {
    super(message);
    this.name = "ApiError";
    this.code = code;
    this.details = details;
  }
}

export type HttpMethod = "GET" | "POST" | "DELETE";

/**
 * The routes the console touches. Kept as data so tests can pin the
 * console's capabilities to a strict subset of the gateway's surface.
 */
export const GATEWAY_ROUTES: ReadonlyArray<readonly [HttpMethod, string]> = [
  ["POST", "/auth/login"],
  ["GET", "/collections"],
  ["GET", "/collections/{collection_id}"],
  ["GET", "/collections/{collection_id}/files"],
  ["GET", "/files/search"],
  ["GET", "/files/{file_id}/download-url"],
  ["POST", "/access-requests"],
  ["GET", "/access-requests"],
  ["POST", "/access-requests/{request_id}/decision"],
  ["DELETE", "/visas/{visa_id}/grants/{user_id}"],
];

export interface SessionUser {
  id: string;
  email: string;
  login: string;
  role: string;
  created_at: string;
}

export interface LoginResponse {
  token: string;
  user_id: string;
  issued_at: string;
  expires_at: string;
  user: SessionUser;
}

export interface Collection {
  id: string;
  name: string;
  storage_type: string;
  bucket: string;
  owner_id: string;
  visa_id: string;
  created_at: string;
}

export interface VisaEvent {
  user_id: string;
  action: string;
  at: string;
}

export interface Visa {
  visa_id: string;
  collection_id: string;
  issuer_id: string;
  grants: VisaEvent[];
  active: string[];
}

/** Collection as the owner sees it: access flag always, visa when owned. */
export interface CollectionDetail extends Collection {
  has_access: boolean;
  visa?: Visa;
}

export interface FileRecord {
  id: string;
  collection_id: string;
  file_name: string;
  file_category: string;
  bucket: string;
  version: number;
  version_origin: string;
  storage_path: string;
  status: string;
  size_bytes: number | null;
  checksum: string | null;
  uploaded_by: string;
  requested_at: string;
  committed_at: string | null;
}

export interface AccessRequest {
  request_id: string;
  requester_id: string;
  collection_id: string;
  status: string;
  created_at: string;
  message: string | null;
  decided_by: string | null;
  decided_at: string | null;
}

export interface DownloadGrant {
  url: string;
  file_id: string;
  expires_at: string;
}

export interface GatewayApi {
  login(loginOrEmail: string, password: string): Promise<LoginResponse>;
  listCollections(token: string): Promise<Collection[]>;
  getCollection(token: string, collectionId: string): Promise<CollectionDetail>;
  listFiles(token: string, collectionId: string): Promise<FileRecord[]>;
  searchFiles(token: string, keyword: string): Promise<FileRecord[]>;
  downloadUrl(token: string, fileId: string): Promise<DownloadGrant>;
  submitAccessRequest(token: string, collectionId: string, message?: string): Promise<AccessRequest>;
  listAccessRequests(token: string, collectionId: string): Promise<AccessRequest[]>;
  /** The caller's own requests, any collection. */
  listMyRequests(token: string): Promise<AccessRequest[]>;
  decideAccessRequest(token: string, requestId: string, decision: "granted" | "denied"): Promise<AccessRequest>;
  revokeGrant(token: string, visaId: string, userId: string): Promise<Visa>;
}

interface RequestOptions {
  token?: string;
  query?: Record<string, string>;
  body?: unknown;
}

/**
 * Create a gateway client bound to one base URL.
 *
 * @param baseUrl - Gateway origin, e.g. "http://localhost:8000".
 * @param fetchImpl - Fetch implementation; defaults to the global one.
 */
export function createGatewayApi(baseUrl: string, fetchImpl: typeof fetch = fetch): GatewayApi {
  const origin = baseUrl.replace(/\/+$/, "");

  async function request<T>(method: HttpMethod, path: string, options: RequestOptions = {}): Promise<T> {
    const query = options.query ? `?${new URLSearchParams(options.query)}` : "";
    const headers: Record<string, string> = {};
    if (options.token) headers["Authorization"] = `Bearer ${options.token}`;
    if (options.body !== undefined) headers["Content-Type"] = "application/json";

    let response: Response;
    try {
      response = await fetchImpl(`${origin}${path}${query}`, {
        method,
        headers,
        body: options.body === undefined ? undefined : JSON.stringify(options.body),
      });
    } catch (cause) {
      throw new ApiError("transport", `gateway unreachable: ${String(cause)}`);
    }
    if (!response.ok) {
      let envelope: { code?: string; message?: string; details?: unknown } = {};
      try {
        envelope = (await response.json()).error ?? {};
      } catch {
        // non-JSON failure body; fall through to the generic error
      }
      throw new ApiError(
        envelope.code ?? "internal",
        envelope.message ?? `gateway returned HTTP ${response.status}`,
        envelope.details,
      );
    }
    return (await response.json()) as T;
  }

  return {
    login: (loginOrEmail, password) =>
      request("POST", "/auth/login", { body: { login_or_email: loginOrEmail, password } }),
    listCollections: (token) => request("GET", "/collections", { token }),
    getCollection: (token, collectionId) =>
      request("GET", `/collections/${encodeURIComponent(collectionId)}`, { token }),
    listFiles: (token, collectionId) =>
      request("GET", `/collections/${encodeURIComponent(collectionId)}/files`, { token }),
    searchFiles: (token, keyword) => request("GET", "/files/search", { token, query: { keyword } }),
    downloadUrl: (token, fileId) =>
      request("GET", `/files/${encodeURIComponent(fileId)}/download-url`, { token }),
    submitAccessRequest: (token, collectionId, message) =>
      request("POST", "/access-requests", {
        token,
        body: message === undefined ? { collection_id: collectionId } : { collection_id: collectionId, message },
      }),
    listAccessRequests: (token, collectionId) =>
      request("GET", "/access-requests", { token, query: { collection: collectionId } }),
    listMyRequests: (token) => request("GET", "/access-requests", { token }),
    decideAccessRequest: (token, requestId, decision) =>
      request("POST", `/access-requests/${encodeURIComponent(requestId)}/decision`, {
        token,
        body: { decision },
      }),
    revokeGrant: (token, visaId, userId) =>
      request("DELETE", `/visas/${encodeURIComponent(visaId)}/grants/${encodeURIComponent(userId)}`, {
        token,
      }),
  };
}
