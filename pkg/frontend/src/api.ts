/**
 * Typed client for the handbook HTTP API.
 *
 * The client is a thin transport: it attaches the bearer token, decodes the
 * service's error envelope into ApiError and leaves all policy to the
 * server.  Works both in the browser and under vitest (node fetch).
 */

import type {
  ConflictReport,
  EffectiveModules,
  EntityKind,
  EntityList,
  EntityRecord,
  ErrorCode,
  Grant,
  InclusionRecord,
  LectureDate,
  PersonTimetable,
  ProgramCatalog,
  SessionInfo,
  SessionToken,
} from './types.js';
import { KIND_PATHS } from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly code: ErrorCode,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

interface RequestOptions {
  method?: string;
  body?: unknown;
  query?: Record<string, string | undefined>;
}

export class ApiClient {
  private token: string | null = null;

  constructor(private readonly baseUrl: string = '') {}

  setToken(token: string | null): void {
    this.token = token;
  }

  get authenticated(): boolean {
    return this.token !== null;
  }

  private async request<T>(path: string, options: RequestOptions = {}): Promise<T> {
    const url = new URL(this.baseUrl + path, this.baseUrl || 'http://localhost');
    for (const [key, value] of Object.entries(options.query ?? {})) {
      if (value !== undefined) url.searchParams.set(key, value);
    }
    const headers: Record<string, string> = {};
    if (this.token) headers['Authorization'] = `Bearer ${this.token}`;
    if (options.body !== undefined) headers['Content-Type'] = 'application/json';
    const target = this.baseUrl ? url.toString() : url.pathname + url.search;
    const response = await fetch(target, {
      method: options.method ?? 'GET',
      headers,
      body: options.body !== undefined ? JSON.stringify(options.body) : undefined,
    });
    const text = await response.text();
    if (!response.ok) {
      let code: ErrorCode = 'INTERNAL';
      let message = text || response.statusText;
      try {
        const parsed = JSON.parse(text);
        if (parsed?.error?.code) {
          code = parsed.error.code;
          message = parsed.error.message ?? code;
        } else if (parsed?.detail) {
          code = 'VALIDATION_FAILED';
          message = JSON.stringify(parsed.detail);
        }
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(code, message, response.status);
    }
    return (text ? JSON.parse(text) : {}) as T;
  }

  // -- session --

  async login(loginName: string, credential: string): Promise<SessionToken> {
    const session = await this.request<SessionToken>('/session', {
      method: 'POST',
      body: { login_name: loginName, credential },
    });
    this.token = session.token;
    return session;
  }

  async logout(): Promise<void> {
    if (!this.token) return;
    await this.request('/session', { method: 'DELETE' });
    this.token = null;
  }

  sessionInfo(): Promise<SessionInfo> {
    return this.request<SessionInfo>('/session');
  }

  // -- entities --

  listEntities<T = Record<string, unknown>>(kind: EntityKind): Promise<EntityList<T>> {
    return this.request(`/${KIND_PATHS[kind]}`);
  }

  getEntity<T = Record<string, unknown>>(kind: EntityKind, id: string): Promise<EntityRecord<T>> {
    return this.request(`/${KIND_PATHS[kind]}/${encodeURIComponent(id)}`);
  }

  createEntity(kind: EntityKind, fields: Record<string, unknown>): Promise<{ id: string; version: number }> {
    return this.request(`/${KIND_PATHS[kind]}`, { method: 'POST', body: fields });
  }

  updateEntity(
    kind: EntityKind,
    id: string,
    expectedVersion: number,
    patch: Record<string, unknown>,
  ): Promise<{ id: string; version: number }> {
    return this.request(`/${KIND_PATHS[kind]}/${encodeURIComponent(id)}`, {
      method: 'PATCH',
      body: { expected_version: expectedVersion, patch },
    });
  }

  deleteEntity(kind: EntityKind, id: string, expectedVersion: number): Promise<{ deleted: boolean }> {
    return this.request(`/${KIND_PATHS[kind]}/${encodeURIComponent(id)}`, {
      method: 'DELETE',
      query: { expected_version: String(expectedVersion) },
    });
  }

  // -- grants --

  listGrants(): Promise<{ snapshot: number; items: Grant[] }> {
    return this.request('/grants');
  }

  grantRole(granteeId: string, role: Grant['role'], scopeId: string): Promise<Grant> {
    return this.request('/grants', {
      method: 'POST',
      body: { grantee_id: granteeId, role, scope_id: scopeId },
    });
  }

  revokeRole(grantId: string): Promise<{ revoked: boolean }> {
    return this.request(`/grants/${encodeURIComponent(grantId)}`, { method: 'DELETE' });
  }

  // -- inclusion workflow --

  proposeInclusion(moduleId: string, programId: string, categoryId: string): Promise<InclusionRecord> {
    return this.request('/inclusions', {
      method: 'POST',
      body: { module_id: moduleId, program_id: programId, category_id: categoryId },
    });
  }

  listInclusions(filter: {
    awaiting?: string;
    state?: string;
    program?: string;
    module?: string;
  } = {}): Promise<{ snapshot: number; items: InclusionRecord[] }> {
    return this.request('/inclusions', { query: filter });
  }

  acknowledgeInclusion(recordId: string): Promise<InclusionRecord> {
    return this.request(`/inclusions/${encodeURIComponent(recordId)}/ack`, { method: 'POST' });
  }

  revokeInclusion(recordId: string): Promise<InclusionRecord> {
    return this.request(`/inclusions/${encodeURIComponent(recordId)}/revoke`, { method: 'POST' });
  }

  effectiveModules(programId: string): Promise<EffectiveModules> {
    return this.request(`/programs/${encodeURIComponent(programId)}/effective-modules`);
  }

  // -- schedule --

  setLectureDates(
    lectureId: string,
    expectedVersion: number,
    dates: LectureDate[],
  ): Promise<{ id: string; version: number }> {
    return this.request(`/lectures/${encodeURIComponent(lectureId)}/dates`, {
      method: 'PUT',
      body: { expected_version: expectedVersion, dates },
    });
  }

  conflicts(term: string, filter: { program?: string; room?: string } = {}): Promise<ConflictReport> {
    return this.request('/conflicts', { query: { term, ...filter } });
  }

  // -- generated documents (world-readable) --

  programCatalog(programId: string, term: string): Promise<ProgramCatalog> {
    return this.request(`/catalogs/program/${encodeURIComponent(programId)}`, {
      query: { term },
    });
  }

  personTimetable(personId: string, term: string): Promise<PersonTimetable> {
    return this.request(`/timetables/person/${encodeURIComponent(personId)}`, {
      query: { term },
    });
  }
}
