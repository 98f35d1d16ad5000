/**
 * Application shell: hash routing, session handling and the page views.
 *
 * The UI never decides permissions itself; it only hides affordances the
 * session's grants cannot use and renders whatever the server answers,
 * including FORBIDDEN reasons and STALE_VERSION banners.
 */

import { ApiClient, ApiError } from './api.js';
import { draftConflicts, editField, loadEditor, reloadEditor, saveEditor, EditorState } from './editor.js';
import { actOnInbox, loadInbox, InboxState } from './inbox.js';
import { el, renderConflicts, renderProgramCatalog, renderTimetable } from './render.js';
import type { EntityKind, SessionInfo } from './types.js';

declare global {
  interface Window {
    HANDBOOK_API_BASE?: string;
  }
}

const client = new ApiClient(window.HANDBOOK_API_BASE ?? '');
let session: SessionInfo | null = null;

const TOKEN_KEY = 'handbook.session';

function rememberToken(token: string | null): void {
  // tab-scoped: a new tab is a new login
  if (token) sessionStorage.setItem(TOKEN_KEY, token);
  else sessionStorage.removeItem(TOKEN_KEY);
}

function app(): HTMLElement {
  return document.getElementById('app')!;
}

function setView(...nodes: (Node | string)[]): void {
  const root = app();
  root.replaceChildren();
  root.append(...nodes);
}

function navBar(): HTMLElement {
  const nav = el('nav', { class: 'topnav' });
  nav.append(el('a', { href: '#/catalogs' }, ['Catalogs']));
  nav.append(el('a', { href: '#/conflicts' }, ['Conflicts']));
  if (session) {
    nav.append(el('a', { href: '#/entities/module' }, ['Modules']));
    nav.append(el('a', { href: '#/entities/lecture' }, ['Lectures']));
    nav.append(el('a', { href: '#/inbox' }, ['Inbox']));
    nav.append(el('a', { href: '#/timetable' }, ['My timetable']));
    const who = el('span', { class: 'who' }, [session.display_name]);
    const out = el('button', { class: 'linkish' }, ['Log out']);
    out.addEventListener('click', async () => {
      await client.logout().catch(() => undefined);
      rememberToken(null);
      session = null;
      location.hash = '#/login';
    });
    nav.append(who, out);
  } else {
    nav.append(el('a', { href: '#/login' }, ['Log in']));
  }
  return nav;
}

function notice(kind: string, text: string): HTMLElement {
  return el('div', { class: `notice ${kind}` }, [text]);
}

// -- views ---------------------------------------------------------------

function loginView(message?: string): void {
  const form = el('form', { class: 'login' });
  const login = el('input', { name: 'login', placeholder: 'login name' });
  const password = el('input', { name: 'credential', type: 'password', placeholder: 'credential' });
  const submit = el('button', { type: 'submit' }, ['Log in']);
  const errorBox = el('div', { class: 'notice error', hidden: '' });
  form.append(login, password, submit, errorBox);
  form.addEventListener('submit', async (event) => {
    event.preventDefault();
    try {
      const token = await client.login(login.value, password.value);
      rememberToken(token.token);
      session = await client.sessionInfo();
      location.hash = '#/inbox';
    } catch (error) {
      errorBox.hidden = false;
      errorBox.textContent = error instanceof ApiError && error.code === 'AUTH_FAILED'
        ? 'Login failed: wrong name or credential.'
        : String(error);
    }
  });
  setView(navBar(), el('h1', {}, ['Module handbook']),
          message ? notice('info', message) : '', form);
}

async function entityListView(kind: EntityKind): Promise<void> {
  if (!requireSession()) return;
  const listing = await client.listEntities(kind);
  const list = el('ul', { class: 'entities' });
  for (const item of listing.items) {
    const label = String(item.data['title'] ?? item.data['name'] ?? item.data['display_name'] ?? item.id);
    list.append(el('li', {}, [
      el('a', { href: `#/edit/${kind}/${item.id}` }, [label]),
      el('span', { class: 'version' }, [` v${item.version}`]),
    ]));
  }
  setView(navBar(), el('h1', {}, [`${kind}s`]),
          el('p', { class: 'meta' }, [`snapshot ${listing.snapshot}`]), list);
}

const EDITABLE_TEXT_FIELDS: Partial<Record<EntityKind, string[]>> = {
  module: ['title', 'description'],
  lecture: ['title', 'description'],
  program: ['title'],
  category: ['title'],
  person: ['display_name'],
  institution: ['name'],
};

async function editorView(kind: EntityKind, id: string): Promise<void> {
  if (!requireSession()) return;
  let state: EditorState;
  try {
    state = await loadEditor(client, kind, id);
  } catch (error) {
    setView(navBar(), notice('error', String(error)));
    return;
  }
  renderEditor(state);
}

function renderEditor(state: EditorState): void {
  const fields = EDITABLE_TEXT_FIELDS[state.kind] ?? ['title'];
  const form = el('form', { class: 'editor' });
  const header = el('h1', {}, [`Edit ${state.kind}`]);
  const versionBadge = el('span', { class: 'version' }, [`v${state.version}`]);
  const inputs = new Map<string, HTMLInputElement>();
  for (const field of fields) {
    const input = el('input', { name: field, value: String(state.draft[field] ?? state.data[field] ?? '') });
    if (state.readOnly) input.setAttribute('disabled', '');
    inputs.set(field, input);
    form.append(el('label', {}, [field, input]));
  }
  const save = el('button', { type: 'submit' }, ['Save']);
  if (state.readOnly) save.setAttribute('disabled', '');
  form.append(save);

  let banner: HTMLElement | string = '';
  switch (state.notice.kind) {
    case 'saved':
      banner = notice('ok', `Saved as v${state.notice.version}.`);
      break;
    case 'stale': {
      banner = notice('warn', state.notice.message);
      const reload = el('button', { type: 'button' }, ['Reload and merge']);
      reload.addEventListener('click', async () => {
        const reloaded = await reloadEditor(client, state);
        const clashes = draftConflicts(reloaded);
        const next = clashes.length
          ? { ...reloaded, notice: { kind: 'validation' as const, message: `Check merged fields: ${clashes.join(', ')}` } }
          : reloaded;
        renderEditor(next);
      });
      banner.append(' ', reload);
      break;
    }
    case 'forbidden':
      banner = notice('error', `Not permitted: ${state.notice.reason}. This view is read-only.`);
      break;
    case 'frozen':
      banner = notice('error', 'The schedule is frozen for this term; only the timetable person may change dates.');
      break;
    case 'validation':
      banner = notice('warn', state.notice.message);
      break;
    case 'error':
      banner = notice('error', state.notice.message);
      break;
  }

  form.addEventListener('submit', async (event) => {
    event.preventDefault();
    let next = state;
    for (const [field, input] of inputs) {
      if (input.value !== String(state.data[field] ?? '')) {
        next = editField(next, field, input.value);
      }
    }
    renderEditor(await saveEditor(client, next));
  });
  setView(navBar(), header, versionBadge, banner, form);
}

async function inboxView(): Promise<void> {
  if (!requireSession()) return;
  const state = await loadInbox(client, session!.person_id);
  renderInbox(state);
}

function renderInbox(state: InboxState): void {
  const heading = el('h1', {}, ['Approval inbox']);
  const table = el('table', { class: 'inbox' });
  table.append(el('tr', {}, [
    el('th', {}, ['Module']), el('th', {}, ['Program']), el('th', {}, ['Category']),
    el('th', {}, ['Waiting for']), el('th', {}, ['']),
  ]));
  for (const row of state.rows) {
    const actions = el('td');
    const ack = el('button', {}, ['Acknowledge']);
    ack.addEventListener('click', async () => {
      renderInbox(await actOnInbox(client, state, row.recordId, 'acknowledge'));
    });
    const revoke = el('button', { class: 'danger' }, ['Revoke']);
    revoke.addEventListener('click', async () => {
      renderInbox(await actOnInbox(client, state, row.recordId, 'revoke'));
    });
    actions.append(ack, ' ', revoke);
    table.append(el('tr', {}, [
      el('td', {}, [row.moduleTitle]),
      el('td', {}, [row.programTitle]),
      el('td', {}, [row.categoryTitle]),
      el('td', {}, [row.openSide === 'module' ? 'module side' : 'program side']),
      actions,
    ]));
  }
  const body: (Node | string)[] = [navBar(), heading];
  if (state.notice) body.push(notice('warn', state.notice));
  if (state.rows.length === 0) {
    body.push(el('p', { class: 'empty' }, ['Nothing waits for your acknowledgment.']));
  } else {
    body.push(table);
  }
  setView(...body);
}

async function catalogsView(programId?: string, term?: string): Promise<void> {
  // world-readable: no session required
  const picker = el('form', { class: 'picker' });
  const programInput = el('input', { name: 'program', placeholder: 'program id', value: programId ?? '' });
  const termInput = el('input', { name: 'term', placeholder: 'term (e.g. 2008S)', value: term ?? '' });
  picker.append(programInput, termInput, el('button', { type: 'submit' }, ['Show']));
  picker.addEventListener('submit', (event) => {
    event.preventDefault();
    location.hash = `#/catalogs/${encodeURIComponent(programInput.value)}/${encodeURIComponent(termInput.value)}`;
  });
  const body: (Node | string)[] = [navBar(), el('h1', {}, ['Program catalogs']), picker];
  if (programId && term) {
    try {
      const doc = await client.programCatalog(programId, term);
      body.push(renderProgramCatalog(doc, (id) => `#/edit/lecture/${id}`));
      body.push(el('p', { class: 'meta' }, [`snapshot ${doc.snapshot}, generated ${doc.generated_at}`]));
    } catch (error) {
      body.push(error instanceof ApiError && error.code === 'NOT_FOUND'
        ? notice('info', 'No such program or term.')
        : notice('error', String(error)));
    }
  }
  setView(...body);
}

async function conflictsView(term?: string): Promise<void> {
  const picker = el('form', { class: 'picker' });
  const termInput = el('input', { name: 'term', placeholder: 'term (e.g. 2008S)', value: term ?? '' });
  picker.append(termInput, el('button', { type: 'submit' }, ['Check']));
  picker.addEventListener('submit', (event) => {
    event.preventDefault();
    location.hash = `#/conflicts/${encodeURIComponent(termInput.value)}`;
  });
  const body: (Node | string)[] = [navBar(), el('h1', {}, ['Timetable conflicts']), picker];
  if (term) {
    try {
      const report = await client.conflicts(term);
      body.push(renderConflicts(report.conflicts, (id) => `#/edit/lecture/${id}`));
    } catch (error) {
      body.push(error instanceof ApiError && error.code === 'NOT_FOUND'
        ? notice('info', 'No such term.')
        : notice('error', String(error)));
    }
  }
  setView(...body);
}

async function timetableView(): Promise<void> {
  if (!requireSession()) return;
  const term = prompt('Term (e.g. 2008S)?') ?? '';
  if (!term) {
    location.hash = '#/inbox';
    return;
  }
  try {
    const doc = await client.personTimetable(session!.person_id, term);
    setView(navBar(), renderTimetable(doc));
  } catch (error) {
    setView(navBar(), notice('error', String(error)));
  }
}

function requireSession(): boolean {
  if (session) return true;
  loginView('Please log in first.');
  return false;
}

// -- router ----------------------------------------------------------------

async function route(): Promise<void> {
  const parts = location.hash.replace(/^#\/?/, '').split('/').map(decodeURIComponent);
  try {
    switch (parts[0] || 'catalogs') {
      case 'login':
        loginView();
        return;
      case 'entities':
        await entityListView((parts[1] ?? 'module') as EntityKind);
        return;
      case 'edit':
        await editorView(parts[1] as EntityKind, parts[2] ?? '');
        return;
      case 'inbox':
        await inboxView();
        return;
      case 'catalogs':
        await catalogsView(parts[1], parts[2]);
        return;
      case 'conflicts':
        await conflictsView(parts[1]);
        return;
      case 'timetable':
        await timetableView();
        return;
      default:
        await catalogsView();
    }
  } catch (error) {
    if (error instanceof ApiError && error.code === 'AUTH_FAILED') {
      // expired session: back to login without losing the target route
      rememberToken(null);
      session = null;
      loginView('Your session expired; log in again.');
      return;
    }
    setView(navBar(), notice('error', String(error)));
  }
}

async function boot(): Promise<void> {
  const saved = sessionStorage.getItem(TOKEN_KEY);
  if (saved) {
    client.setToken(saved);
    try {
      session = await client.sessionInfo();
    } catch {
      client.setToken(null);
      rememberToken(null);
    }
  }
  window.addEventListener('hashchange', () => void route());
  await route();
}

void boot();
