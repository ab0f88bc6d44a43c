/**
 * One logged-in console session. The bearer token lives in memory only;
 * logging out (or dropping the object) is enough to forget it. Nothing
 * is written to localStorage, cookies, or anywhere else.
 */

import { ApiError } from "./api.js";
import type {
  AccessRequest,
  Collection,
  CollectionDetail,
  DownloadGrant,
  FileRecord,
  GatewayApi,
  SessionUser,
  Visa,
} from "./api.js";

export class ConsoleSession {
  private token: string | null = null;
  private user: SessionUser | null = null;

  constructor(private readonly api: GatewayApi) {}

  get authenticated(): boolean {
    return this.token !== null;
  }

  get currentUser(): SessionUser | null {
    return this.user;
  }

  async login(loginOrEmail: string, password: string): Promise<SessionUser> {
    const response = await this.api.login(loginOrEmail, password);
    this.token = response.token;
    this.user = response.user;
    return response.user;
  }

  logout(): void {
    this.token = null;
    this.user = null;
  }

  /** Token for the next call; logged-out use rejects before any HTTP. */
  private need(): string {
    if (this.token === null) {
      throw new ApiError("authentication", "not logged in");
    }
    return this.token;
  }

  async listCollections(): Promise<Collection[]> {
    return this.api.listCollections(this.need());
  }

  async getCollection(collectionId: string): Promise<CollectionDetail> {
    return this.api.getCollection(this.need(), collectionId);
  }

  async listFiles(collectionId: string): Promise<FileRecord[]> {
    return this.api.listFiles(this.need(), collectionId);
  }

  async searchFiles(keyword: string): Promise<FileRecord[]> {
    return this.api.searchFiles(this.need(), keyword);
  }

  async downloadUrl(fileId: string): Promise<DownloadGrant> {
    return this.api.downloadUrl(this.need(), fileId);
  }

  async submitAccessRequest(collectionId: string, message?: string): Promise<AccessRequest> {
    return this.api.submitAccessRequest(this.need(), collectionId, message);
  }

  async listAccessRequests(collectionId: string): Promise<AccessRequest[]> {
    return this.api.listAccessRequests(this.need(), collectionId);
  }

  async listMyRequests(): Promise<AccessRequest[]> {
    return this.api.listMyRequests(this.need());
  }

  async decideAccessRequest(requestId: string, decision: "granted" | "denied"): Promise<AccessRequest> {
    return this.api.decideAccessRequest(this.need(), requestId, decision);
  }

  async revokeGrant(visaId: string, userId: string): Promise<Visa> {
    return this.api.revokeGrant(this.need(), visaId, userId);
  }
}
