/**
 * Pure renderers: data in, HTML string out. No fetching, no DOM access,
 * no state. The router fetches fresh data from the gateway and feeds it
 * here after every mutation, so the screen always reflects server truth.
 */

import { ApiError } from "./api.js";
import type {
  AccessRequest,
  Collection,
  CollectionDetail,
  FileRecord,
  SessionUser,
  Visa,
} from "./api.js";

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

/** Inline failure notice; every view embeds one instead of going blank. */
export function errorBanner(error: ApiError | string | null): string {
  if (error === null) return "";
  const message = typeof error === "string" ? error : `${error.code}: ${error.message}`;
  return `<p class="error-banner" role="alert">${escapeHtml(message)}</p>`;
}

export function loginView(error: ApiError | string | null = null): string {
  return `
<section class="login">
  <h1>Lakehouse console</h1>
  ${errorBanner(error)}
  <form data-action="login">
    <label>Login or email <input name="login_or_email" autocomplete="username" required></label>
    <label>Password <input name="password" type="password" autocomplete="current-password" required></label>
    <button type="submit">Sign in</button>
  </form>
</section>`;
}

function userBar(viewer: SessionUser): string {
  return `
<nav class="user-bar">
  <span>${escapeHtml(viewer.login)} (${escapeHtml(viewer.role)})</span>
  <a href="#/catalogue">Catalogue</a>
  <button data-action="logout">Log out</button>
</nav>`;
}

function fileRow(record: FileRecord): string {
  const size = record.size_bytes === null ? "-" : String(record.size_bytes);
  return `
  <tr data-file-id="${escapeHtml(record.id)}">
    <td>${escapeHtml(record.file_name)}</td>
    <td>v${record.version}</td>
    <td>${escapeHtml(record.file_category)}</td>
    <td>${size}</td>
    <td><button data-action="download" data-file-id="${escapeHtml(record.id)}">Get link</button></td>
  </tr>`;
}

/** Collection listing plus keyword search over committed files. */
export function catalogueView(
  viewer: SessionUser,
  collections: Collection[],
  keyword: string = "",
  results: FileRecord[] | null = null,
  error: ApiError | string | null = null,
): string {
  const rows = collections
    .map(
      (c) => `
  <tr>
    <td><a href="#/collections/${escapeHtml(c.id)}">${escapeHtml(c.name)}</a></td>
    <td>${escapeHtml(c.storage_type)}</td>
    <td>${escapeHtml(c.bucket)}</td>
  </tr>`,
    )
    .join("");
  const resultRows = results === null ? "" : results.map(fileRow).join("");
  const resultsBlock =
    results === null
      ? ""
      : `<table class="search-results"><tbody>${resultRows || '<tr><td colspan="5">No matches</td></tr>'}</tbody></table>`;
  return `
<section class="catalogue">
  ${userBar(viewer)}
  ${errorBanner(error)}
  <h1>Collections</h1>
  <table><tbody>${rows}</tbody></table>
  <form data-action="search">
    <input name="keyword" value="${escapeHtml(keyword)}" placeholder="file name contains..." required>
    <button type="submit">Search files</button>
  </form>
  ${resultsBlock}
</section>`;
}

/**
 * One collection: its files with versions, and the viewer's standing.
 * Owners get links to the inbox and visa panel; everyone else gets a
 * request-access button while they lack a visa.
 */
export function collectionDetailView(
  viewer: SessionUser,
  detail: CollectionDetail,
  files: FileRecord[],
  myRequests: AccessRequest[] = [],
  error: ApiError | string | null = null,
): string {
  const isOwner = detail.owner_id === viewer.id;
  const pending = myRequests.some((r) => r.status === "pending");
  let standing: string;
  if (isOwner) {
    standing = `
  <p>You own this collection.</p>
  <p>
    <a href="#/collections/${escapeHtml(detail.id)}/inbox">Requests inbox</a>
    <a href="#/collections/${escapeHtml(detail.id)}/visa">Visa panel</a>
  </p>`;
  } else if (detail.has_access) {
    standing = `<p class="access-state">You can download these files.</p>`;
  } else if (pending) {
    standing = `<p class="access-state">Access request pending.</p>`;
  } else {
    standing = `
  <form data-action="request-access" data-collection-id="${escapeHtml(detail.id)}">
    <input name="message" placeholder="why you need access (optional)">
    <button type="submit">Request access</button>
  </form>`;
  }
  const rows = files.map(fileRow).join("");
  return `
<section class="collection-detail" data-collection-id="${escapeHtml(detail.id)}">
  ${userBar(viewer)}
  ${errorBanner(error)}
  <h1>${escapeHtml(detail.name)}</h1>
  <p>${escapeHtml(detail.storage_type)} bucket ${escapeHtml(detail.bucket)}</p>
  ${standing}
  <table><tbody>${rows || '<tr><td colspan="5">No committed files</td></tr>'}</tbody></table>
</section>`;
}

/** Owner's inbox for one collection; decisions act then re-render. */
export function inboxView(
  viewer: SessionUser,
  collection: Collection,
  requests: AccessRequest[],
  error: ApiError | string | null = null,
): string {
  const rows = requests
    .map((r) => {
      const actions =
        r.status === "pending"
          ? `
      <button data-action="decide" data-request-id="${escapeHtml(r.request_id)}" data-decision="granted">Grant</button>
      <button data-action="decide" data-request-id="${escapeHtml(r.request_id)}" data-decision="denied">Deny</button>`
          : escapeHtml(r.status);
      return `
  <tr data-request-id="${escapeHtml(r.request_id)}">
    <td>${escapeHtml(r.requester_id)}</td>
    <td>${escapeHtml(r.message ?? "")}</td>
    <td>${escapeHtml(r.created_at)}</td>
    <td>${actions}</td>
  </tr>`;
    })
    .join("");
  return `
<section class="inbox" data-collection-id="${escapeHtml(collection.id)}">
  ${userBar(viewer)}
  ${errorBanner(error)}
  <h1>Access requests for ${escapeHtml(collection.name)}</h1>
  <table><tbody>${rows || '<tr><td colspan="4">No requests</td></tr>'}</tbody></table>
</section>`;
}

/** Active grants on a collection's visa; the owner's own entry is fixed. */
export function visaPanelView(
  viewer: SessionUser,
  collection: Collection,
  visa: Visa,
  error: ApiError | string | null = null,
): string {
  const rows = visa.active
    .map((userId) => {
      const revoke =
        userId === visa.issuer_id
          ? "owner"
          : `<button data-action="revoke" data-visa-id="${escapeHtml(visa.visa_id)}" data-user-id="${escapeHtml(userId)}">Revoke</button>`;
      return `
  <tr data-user-id="${escapeHtml(userId)}">
    <td>${escapeHtml(userId)}</td>
    <td>${revoke}</td>
  </tr>`;
    })
    .join("");
  return `
<section class="visa-panel" data-visa-id="${escapeHtml(visa.visa_id)}">
  ${userBar(viewer)}
  ${errorBanner(error)}
  <h1>Visa for ${escapeHtml(collection.name)}</h1>
  <table><tbody>${rows}</tbody></table>
</section>`;
}
