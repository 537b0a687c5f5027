// DOM builders for effect cards and the code panel. Source text goes in via
// textContent, never innerHTML, so lines render verbatim.

import type {
  Annotation,
  ContextPayload,
  ItemPayload,
  KindPayload,
  LocationPayload,
} from "./types.js";
import { kindLabel, locationLabel } from "./types.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function kindBadge(kind: KindPayload): HTMLElement {
  const badge = el("span", `badge kind-${kind.name}`, kindLabel(kind));
  badge.title = kind.pattern ? `call into ${kind.pattern.prefix}` : kind.name;
  return badge;
}

export function annotationBadge(annotation: Annotation | null): HTMLElement {
  const label = annotation ?? "unannotated";
  return el("span", `state state-${label}`, label);
}

/** Chain of hops from the base effect to this call site, in order. */
export function originTrailView(trail: ItemPayload[]): HTMLElement {
  const list = el("ol", "origin-trail");
  for (const step of trail) {
    const row = el("li", "trail-step");
    row.append(
      el("span", "trail-fn", step.containing_fn),
      el("span", "trail-loc", locationLabel(step.location)),
    );
    list.append(row);
  }
  return list;
}

export function effectCard(item: ItemPayload, trail: ItemPayload[]): HTMLElement {
  const card = el("article", `card origin-${item.origin}`);
  card.dataset.itemId = item.id;
  const head = el("header", "card-head");
  head.append(
    kindBadge(item.kind),
    el("span", "card-fn", item.containing_fn),
    annotationBadge(item.annotation),
  );
  card.append(head, el("div", "card-loc", locationLabel(item.location)));
  if (trail.length > 1) card.append(originTrailView(trail));
  return card;
}

/**
 * Numbered source listing for one function span. When a highlight location
 * falls inside the span, that line gets the line-hit class.
 */
export function codeExcerpt(ctx: ContextPayload, highlight?: LocationPayload): HTMLElement {
  const pre = el("pre", "excerpt");
  pre.dataset.file = ctx.file;
  ctx.lines.forEach((text, i) => {
    const lineNo = ctx.start_line + i;
    const row = el("div", "line");
    if (highlight && highlight.file === ctx.file && highlight.line === lineNo) {
      row.classList.add("line-hit");
    }
    row.append(el("span", "line-no", String(lineNo)), el("span", "line-text", text));
    pre.append(row);
  });
  return pre;
}

export function emptyState(message: string): HTMLElement {
  return el("p", "empty", message);
}
