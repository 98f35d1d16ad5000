/** Tiny DOM helpers: element builder and catalog/timetable rendering. */

import type { CatalogLecture, Conflict, ProgramCatalog, PersonTimetable, LectureDate } from './types.js';

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === 'class') node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return node;
}

export function formatDate(d: LectureDate): string {
  return `${d.day} ${d.start}-${d.end} @${d.room}`;
}

export function renderProgramCatalog(doc: ProgramCatalog, onLectureLink?: (id: string) => string): HTMLElement {
  const root = el('div', { class: 'catalog' });
  root.append(el('h2', {}, [`${doc.program.title} — ${doc.term}`]));
  root.append(el('p', { class: 'meta' }, [`Dean: ${doc.program.dean.display_name}`]));
  const renderLecture = (lecture: CatalogLecture) => {
    const item = el('li', { class: 'lecture' });
    if (onLectureLink) {
      item.append(el('a', { href: onLectureLink(lecture.id) }, [lecture.title]));
    } else {
      item.append(el('span', {}, [lecture.title]));
    }
    const dates = lecture.dates.map(formatDate).join('; ') || '(not scheduled)';
    item.append(el('span', { class: 'dates' }, [` ${dates}`]));
    return item;
  };
  if (doc.lectures) {
    const list = el('ul');
    for (const lecture of doc.lectures) list.append(renderLecture(lecture));
    root.append(list);
  }
  for (const category of doc.categories ?? []) {
    root.append(el('h3', {}, [category.title]));
    if (category.modules.length === 0) {
      root.append(el('p', { class: 'empty' }, ['No acknowledged modules.']));
      continue;
    }
    for (const module of category.modules) {
      const box = el('div', { class: 'module' });
      box.append(el('h4', {}, [module.title]));
      box.append(el('p', {}, [module.description]));
      box.append(el('p', { class: 'meta' }, [`Responsible: ${module.responsible.display_name}`]));
      const list = el('ul');
      for (const lecture of module.lectures) list.append(renderLecture(lecture));
      box.append(list);
      root.append(box);
    }
  }
  return root;
}

export function renderTimetable(doc: PersonTimetable): HTMLElement {
  const root = el('div', { class: 'timetable' });
  root.append(el('h2', {}, [`${doc.person.display_name} — ${doc.term}`]));
  if (doc.entries.length === 0) {
    root.append(el('p', { class: 'empty' }, ['Nothing scheduled this term.']));
    return root;
  }
  const list = el('ol');
  for (const entry of doc.entries) {
    list.append(el('li', {}, [
      `${entry.day} ${entry.start}-${entry.end} @${entry.room}: ${entry.lecture.title}`,
    ]));
  }
  root.append(list);
  return root;
}

export function renderConflicts(conflicts: Conflict[], lectureLink: (id: string) => string): HTMLElement {
  const root = el('div', { class: 'conflicts' });
  if (conflicts.length === 0) {
    root.append(el('p', { class: 'empty' }, ['No conflicts found.']));
    return root;
  }
  const list = el('ul');
  for (const conflict of conflicts) {
    const item = el('li', { class: conflict.kind.toLowerCase() });
    item.append(el('strong', {}, [`${conflict.kind} (${conflict.context}): `]));
    for (const side of [conflict.first, conflict.second]) {
      item.append(el('a', { href: lectureLink(side.lecture_id) }, [side.lecture_id]));
      item.append(` ${side.day} ${side.start}-${side.end} @${side.room}  `);
    }
    list.append(item);
  }
  root.append(list);
  return root;
}
