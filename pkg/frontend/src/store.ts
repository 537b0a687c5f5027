// Session state assembled from service responses. Nothing in here survives a
// page reload on purpose: a fresh store pointed at the same service must come
// back identical, so the service stays the single source of truth.

import type { ApiClient } from "./api.js";
import type {
  AnnotateResponse,
  Annotation,
  ItemPayload,
  MetaPayload,
  ProgressPayload,
} from "./types.js";
import { kindLabel } from "./types.js";

export interface ItemFilter {
  kind: string | null;  // kind name or full label
  state: string | null; // annotation name or "unannotated"
}

export const NO_FILTER: ItemFilter = { kind: null, state: null };

/** Client-side filtering over the list as served; order is preserved. */
export function applyFilter(items: ItemPayload[], filter: ItemFilter): ItemPayload[] {
  return items.filter((item) => {
    if (
      filter.kind !== null &&
      filter.kind !== item.kind.name &&
      filter.kind !== kindLabel(item.kind)
    ) {
      return false;
    }
    if (filter.state !== null) {
      const want = filter.state === "unannotated" ? null : filter.state;
      if (item.annotation !== want) return false;
    }
    return true;
  });
}

export class SessionStore {
  meta: MetaPayload | null = null;
  items: ItemPayload[] = [];
  progress: ProgressPayload | null = null;

  constructor(readonly api: ApiClient) {}

  /** Pull the whole session snapshot; the only way state gets in. */
  async refresh(): Promise<void> {
    this.meta = await this.api.meta();
    this.items = await this.api.items();
    this.progress = await this.api.progress();
  }

  byId(): Map<string, ItemPayload> {
    return new Map(this.items.map((item) => [item.id, item]));
  }

  /**
   * Parent chain for a propagated item, base effect first and the item
   * itself last. Base effects get a one-entry trail.
   */
  originTrail(item: ItemPayload): ItemPayload[] {
    const index = this.byId();
    const trail: ItemPayload[] = [item];
    let cursor = item;
    const seen = new Set<string>([item.id]);
    while (cursor.parent !== null) {
      const parent = index.get(cursor.parent);
      if (!parent || seen.has(parent.id)) break;
      trail.push(parent);
      seen.add(parent.id);
      cursor = parent;
    }
    trail.reverse();
    return trail;
  }

  /**
   * Post one judgment and re-pull the item list. The response already says
   * what spawned, but the list is re-fetched rather than patched so the view
   * never drifts from what the service would serve a fresh client.
   */
  async annotate(id: string, annotation: Annotation): Promise<AnnotateResponse> {
    const res = await this.api.annotate(id, annotation);
    this.items = await this.api.items();
    this.progress = res.progress;
    if (this.meta) this.meta = { ...this.meta, status: res.progress.status, exported_cc: res.exported_cc };
    return res;
  }
}
