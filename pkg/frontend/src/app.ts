/**
 * Browser glue: a hash router over the pure views. Every navigation and
 * every mutation fetches fresh data from the gateway before rendering,
 * so the DOM never holds state the server does not. Gateway failures
 * re-render the current view with the error inline.
 */

import { ApiError, createGatewayApi } from "./api.js";
import { ConsoleSession } from "./session.js";
import {
  catalogueView,
  collectionDetailView,
  inboxView,
  loginView,
  visaPanelView,
} from "./views.js";

function gatewayBaseUrl(): string {
  const meta = document.querySelector('meta[name="gateway-base-url"]');
  const configured = meta?.getAttribute("content");
  return configured || window.location.origin;
}

const session = new ConsoleSession(createGatewayApi(gatewayBaseUrl()));
const root = document.getElementById("app");

function render(html: string): void {
  if (root) root.innerHTML = html;
}

function asError(failure: unknown): ApiError {
  return failure instanceof ApiError ? failure : new ApiError("internal", String(failure));
}

async function showCatalogue(keyword = "", error: ApiError | null = null): Promise<void> {
  const viewer = session.currentUser;
  if (!viewer) return showLogin();
  const collections = await session.listCollections();
  const results = keyword ? await session.searchFiles(keyword) : null;
  render(catalogueView(viewer, collections, keyword, results, error));
}

async function showCollection(collectionId: string, error: ApiError | null = null): Promise<void> {
  const viewer = session.currentUser;
  if (!viewer) return showLogin();
  const detail = await session.getCollection(collectionId);
  const files = await session.listFiles(collectionId);
  // A non-owner may only list their own requests; scope them client side.
  const mine =
    detail.owner_id === viewer.id
      ? []
      : (await session.listMyRequests()).filter((r) => r.collection_id === collectionId);
  render(collectionDetailView(viewer, detail, files, mine, error));
}

async function showInbox(collectionId: string, error: ApiError | null = null): Promise<void> {
  const viewer = session.currentUser;
  if (!viewer) return showLogin();
  const detail = await session.getCollection(collectionId);
  const requests = await session.listAccessRequests(collectionId);
  render(inboxView(viewer, detail, requests, error));
}

async function showVisaPanel(collectionId: string, error: ApiError | null = null): Promise<void> {
  const viewer = session.currentUser;
  if (!viewer) return showLogin();
  const detail = await session.getCollection(collectionId);
  if (!detail.visa) {
    render(collectionDetailView(viewer, detail, await session.listFiles(collectionId), [], "only the owner sees the visa panel"));
    return;
  }
  render(visaPanelView(viewer, detail, detail.visa, error));
}

function showLogin(error: ApiError | null = null): void {
  render(loginView(error));
}

async function route(error: ApiError | null = null): Promise<void> {
  if (!session.authenticated) return showLogin(error);
  const hash = window.location.hash || "#/catalogue";
  const inbox = hash.match(/^#\/collections\/([^/]+)\/inbox$/);
  const visa = hash.match(/^#\/collections\/([^/]+)\/visa$/);
  const detail = hash.match(/^#\/collections\/([^/]+)$/);
  try {
    if (inbox) return await showInbox(decodeURIComponent(inbox[1]), error);
    if (visa) return await showVisaPanel(decodeURIComponent(visa[1]), error);
    if (detail) return await showCollection(decodeURIComponent(detail[1]), error);
    return await showCatalogue("", error);
  } catch (failure) {
    // The view itself failed to load; fall back to the catalogue.
    if (hash !== "#/catalogue") {
      window.location.hash = "#/catalogue";
      return;
    }
    render(catalogueView(session.currentUser!, [], "", null, asError(failure)));
  }
}

async function handleSubmit(event: SubmitEvent): Promise<void> {
  const form = event.target as HTMLFormElement;
  const action = form.dataset["action"];
  if (!action) return;
  event.preventDefault();
  const fields = new FormData(form);
  try {
    if (action === "login") {
      await session.login(String(fields.get("login_or_email")), String(fields.get("password")));
      window.location.hash = "#/catalogue";
      await route();
    } else if (action === "search") {
      await showCatalogue(String(fields.get("keyword")));
    } else if (action === "request-access") {
      const message = String(fields.get("message") ?? "").trim();
      await session.submitAccessRequest(
        form.dataset["collectionId"] ?? "",
        message === "" ? undefined : message,
      );
      await route();
    }
  } catch (failure) {
    if (action === "login") showLogin(asError(failure));
    else await route(asError(failure));
  }
}

async function handleClick(event: MouseEvent): Promise<void> {
  const target = (event.target as HTMLElement).closest("button[data-action]");
  if (!(target instanceof HTMLButtonElement)) return;
  const action = target.dataset["action"];
  try {
    if (action === "logout") {
      session.logout();
      window.location.hash = "";
      showLogin();
    } else if (action === "download") {
      const grant = await session.downloadUrl(target.dataset["fileId"] ?? "");
      window.open(grant.url, "_blank");
    } else if (action === "decide") {
      await session.decideAccessRequest(
        target.dataset["requestId"] ?? "",
        target.dataset["decision"] === "granted" ? "granted" : "denied",
      );
      await route();
    } else if (action === "revoke") {
      await session.revokeGrant(target.dataset["visaId"] ?? "", target.dataset["userId"] ?? "");
      await route();
    }
  } catch (failure) {
    await route(asError(failure));
  }
}

document.addEventListener("submit", (event) => void handleSubmit(event));
document.addEventListener("click", (event) => void handleClick(event));
window.addEventListener("hashchange", () => void route());
void route();
