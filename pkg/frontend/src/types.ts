/** API resource shapes, mirroring the service's JSON bodies. */

export type EntityKind =
  | 'institution'
  | 'person'
  | 'program'
  | 'category'
  | 'module'
  | 'topic'
  | 'lecture'
  | 'term';

/** URL path segment for each entity kind. */
export const KIND_PATHS: Record<EntityKind, string> = {
  institution: 'institutions',
  person: 'persons',
  program: 'programs',
  category: 'categories',
  module: 'modules',
  topic: 'topics',
  lecture: 'lectures',
  term: 'terms',
};

export interface SessionToken {
  token: string;
  person_id: string;
  expires_at: number;
}

export interface Grant {
  id: string;
  grantee_id: string;
  role: 'INSTITUTION_EDITOR' | 'TIMETABLE_PERSON' | 'PROGRAM_RESPONSIBLE';
  scope_id: string;
  granter_id: string;
  granted_at: string;
}

export interface SessionInfo {
  snapshot: number;
  person_id: string;
  display_name: string;
  login_name: string;
  is_admin: boolean;
  grants: Grant[];
}

export interface EntityRecord<T = Record<string, unknown>> {
  snapshot?: number;
  id: string;
  version: number;
  data: T;
}

export interface EntityList<T = Record<string, unknown>> {
  snapshot: number;
  items: EntityRecord<T>[];
}

export interface LectureDate {
  day: string;
  start: string;
  end: string;
  room: string;
}

export type InclusionState = 'PENDING' | 'ACKNOWLEDGED' | 'REVOKED';

export interface InclusionRecord {
  id: string;
  version?: number;
  module_id: string;
  program_id: string;
  category_id: string;
  lecturer_ack: boolean;
  dean_ack: boolean;
  state: InclusionState;
  history: { actor: string; action: string; at: string }[];
}

export interface EffectiveModules {
  snapshot: number;
  program_id: string;
  categories: { id: string; title: string; modules: { id: string; title: string }[] }[];
}

export interface PersonBrief {
  id: string;
  display_name: string;
}

export interface CatalogLecture {
  id: string;
  title: string;
  institution_id: string;
  term: string;
  lecturers: PersonBrief[];
  dates: LectureDate[];
  flags: string[];
}

export interface CatalogModule {
  id: string;
  title: string;
  description: string;
  institution_id: string;
  responsible: PersonBrief;
  lecturers: PersonBrief[];
  attributes: Record<string, string>;
  lectures: CatalogLecture[];
}

export interface ProgramCatalog {
  document: 'program-catalog';
  generated_at: string;
  snapshot: number;
  term: string;
  program: { id: string; title: string; kind: string; dean: PersonBrief };
  categories?: { id: string; title: string; modules: CatalogModule[] }[];
  lectures?: CatalogLecture[];
}

export interface TimetableEntry {
  lecture: { id: string; title: string };
  day: string;
  start: string;
  end: string;
  room: string;
}

export interface PersonTimetable {
  document: 'personal-timetable';
  snapshot: number;
  term: string;
  person: PersonBrief;
  entries: TimetableEntry[];
}

export interface ConflictEndpoint {
  lecture_id: string;
  day: string;
  start: string;
  end: string;
  room: string;
}

export interface Conflict {
  kind: 'ROOM_OVERLAP' | 'PROGRAM_OVERLAP';
  context: string;
  first: ConflictEndpoint;
  second: ConflictEndpoint;
}

export interface ConflictReport {
  snapshot: number;
  conflicts: Conflict[];
}

export type ErrorCode =
  | 'VALIDATION_FAILED'
  | 'DANGLING_REFERENCE'
  | 'NOT_FOUND'
  | 'STALE_VERSION'
  | 'FORBIDDEN'
  | 'FORBIDDEN_FROZEN'
  | 'DUPLICATE'
  | 'KIND_MISMATCH'
  | 'INVALID_STATE'
  | 'REFERENCED'
  | 'AUTH_FAILED'
  | 'UNKNOWN_KIND'
  | string;
