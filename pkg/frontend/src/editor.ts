/**
 * Entity editor state machine.
 *
 * Every loaded entity carries the server version it was fetched at; saves
 * submit that version and the state transitions on the answer: a lost race
 * (STALE_VERSION) becomes a reload-and-merge banner instead of a silent
 * overwrite, FORBIDDEN surfaces the server's rule id, validation problems
 * keep the draft so nothing typed is lost.
 */

import { ApiClient, ApiError } from './api.js';
import type { EntityKind } from './types.js';

export type EditorNotice =
  | { kind: 'none' }
  | { kind: 'saved'; version: number }
  | { kind: 'stale'; message: string }
  | { kind: 'forbidden'; reason: string }
  | { kind: 'frozen'; reason: string }
  | { kind: 'validation'; message: string }
  | { kind: 'error'; message: string };

export interface EditorState {
  kind: EntityKind;
  id: string;
  version: number;
  data: Record<string, unknown>;
  draft: Record<string, unknown>;
  readOnly: boolean;
  notice: EditorNotice;
}

export async function loadEditor(
  client: ApiClient,
  kind: EntityKind,
  id: string,
): Promise<EditorState> {
  const record = await client.getEntity(kind, id);
  return {
    kind,
    id,
    version: record.version,
    data: record.data,
    draft: {},
    readOnly: false,
    notice: { kind: 'none' },
  };
}

export function editField(state: EditorState, field: string, value: unknown): EditorState {
  return { ...state, draft: { ...state.draft, [field]: value } };
}

/** Submit the draft with the version token the entity was fetched at. */
export async function saveEditor(client: ApiClient, state: EditorState): Promise<EditorState> {
  if (Object.keys(state.draft).length === 0) return state;
  try {
    const result = await client.updateEntity(state.kind, state.id, state.version, state.draft);
    return {
      ...state,
      version: result.version,
      data: { ...state.data, ...state.draft },
      draft: {},
      notice: { kind: 'saved', version: result.version },
    };
  } catch (error) {
    if (!(error instanceof ApiError)) throw error;
    if (error.code === 'STALE_VERSION') {
      // keep the draft: the user decides whether to reload and merge
      return {
        ...state,
        notice: {
          kind: 'stale',
          message: 'Someone else changed this entry. Reload to merge; your input is kept.',
        },
      };
    }
    if (error.code === 'FORBIDDEN') {
      return { ...state, readOnly: true, notice: { kind: 'forbidden', reason: error.message } };
    }
    if (error.code === 'FORBIDDEN_FROZEN') {
      return { ...state, notice: { kind: 'frozen', reason: error.message } };
    }
    if (error.code === 'VALIDATION_FAILED' || error.code === 'DANGLING_REFERENCE') {
      return { ...state, notice: { kind: 'validation', message: error.message } };
    }
    return { ...state, notice: { kind: 'error', message: `${error.code}: ${error.message}` } };
  }
}

/** Refetch the server state after a lost race, keeping the local draft. */
export async function reloadEditor(client: ApiClient, state: EditorState): Promise<EditorState> {
  const record = await client.getEntity(state.kind, state.id);
  return {
    ...state,
    version: record.version,
    data: record.data,
    notice: { kind: 'none' },
  };
}

/** Fields of the draft that now collide with the reloaded server state. */
export function draftConflicts(state: EditorState): string[] {
  return Object.keys(state.draft).filter(
    (field) => field in state.data && state.data[field] !== state.draft[field],
  );
}
