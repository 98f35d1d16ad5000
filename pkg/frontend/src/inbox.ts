/**
 * Approval inbox: the PENDING inclusion records waiting for the signed-in
 * person's side, with enough context (module/program/category titles) to
 * decide.  Acknowledge and revoke call the workflow endpoints; a race that
 * resolved the record elsewhere surfaces as INVALID_STATE and the row is
 * dropped on refresh.
 */

import { ApiClient, ApiError } from './api.js';
import type { InclusionRecord } from './types.js';

export interface InboxRow {
  recordId: string;
  moduleId: string;
  moduleTitle: string;
  programId: string;
  programTitle: string;
  categoryTitle: string;
  openSide: 'module' | 'program';
}

export interface InboxState {
  personId: string;
  rows: InboxRow[];
  notice: string | null;
}

async function titleOf(
  client: ApiClient,
  kind: 'module' | 'program' | 'category',
  id: string,
  cache: Map<string, string>,
): Promise<string> {
  const key = `${kind}:${id}`;
  const hit = cache.get(key);
  if (hit !== undefined) return hit;
  let title = id;
  try {
    const record = await client.getEntity(kind, id);
    title = String(record.data['title'] ?? id);
  } catch {
    /* deleted meanwhile: fall back to the id */
  }
  cache.set(key, title);
  return title;
}

export function openSideOf(record: InclusionRecord): 'module' | 'program' {
  return record.lecturer_ack ? 'program' : 'module';
}

export async function loadInbox(client: ApiClient, personId: string): Promise<InboxState> {
  const pending = await client.listInclusions({ awaiting: personId });
  const cache = new Map<string, string>();
  const rows: InboxRow[] = [];
  for (const record of pending.items) {
    rows.push({
      recordId: record.id,
      moduleId: record.module_id,
      moduleTitle: await titleOf(client, 'module', record.module_id, cache),
      programId: record.program_id,
      programTitle: await titleOf(client, 'program', record.program_id, cache),
      categoryTitle: await titleOf(client, 'category', record.category_id, cache),
      openSide: openSideOf(record),
    });
  }
  return { personId, rows, notice: null };
}

export type InboxAction = 'acknowledge' | 'revoke';

/** Run an inbox action, then refresh; raced records leave a notice. */
export async function actOnInbox(
  client: ApiClient,
  state: InboxState,
  recordId: string,
  action: InboxAction,
): Promise<InboxState> {
  let notice: string | null = null;
  try {
    if (action === 'acknowledge') {
      await client.acknowledgeInclusion(recordId);
    } else {
      await client.revokeInclusion(recordId);
    }
  } catch (error) {
    if (error instanceof ApiError && error.code === 'INVALID_STATE') {
      notice = 'This request was already decided elsewhere.';
    } else if (error instanceof ApiError && error.code === 'FORBIDDEN') {
      notice = `Not permitted: ${error.message}`;
    } else {
      throw error;
    }
  }
  const refreshed = await loadInbox(client, state.personId);
  return { ...refreshed, notice };
}
