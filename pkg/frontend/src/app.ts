// Page controller for one audit session: effect list on the left, code
// context and annotation actions on the right. Every render reads from the
// store, and the store only holds what the service last said.

import { ApiClient, ApiError, ConflictError } from "./api.js";
import {
  annotationBadge,
  codeExcerpt,
  effectCard,
  el,
  emptyState,
} from "./cards.js";
import { applyFilter, SessionStore } from "./store.js";
import type { ItemFilter } from "./store.js";
import type { Annotation, ItemPayload, LocationPayload } from "./types.js";
import { ANNOTATIONS, kindLabel, locationLabel } from "./types.js";

export class AuditApp {
  readonly store: SessionStore;
  filter: ItemFilter = { kind: null, state: null };
  selected: string | null = null;

  private readonly headerEl: HTMLElement;
  private readonly progressEl: HTMLElement;
  private readonly bannerEl: HTMLElement;
  private readonly kindSelect: HTMLSelectElement;
  private readonly stateSelect: HTMLSelectElement;
  private readonly listEl: HTMLElement;
  private readonly detailEl: HTMLElement;

  constructor(api: ApiClient, root: HTMLElement) {
    this.store = new SessionStore(api);

    this.headerEl = el("div", "session-head");
    this.progressEl = el("div", "progress");
    this.bannerEl = el("div", "banner");
    this.bannerEl.hidden = true;

    this.kindSelect = document.createElement("select");
    this.kindSelect.className = "filter-kind";
    this.stateSelect = document.createElement("select");
    this.stateSelect.className = "filter-state";
    for (const state of ["all", "unannotated", ...ANNOTATIONS]) {
      this.stateSelect.append(new Option(state, state));
    }
    this.kindSelect.addEventListener("change", () => {
      this.filter = {
        ...this.filter,
        kind: this.kindSelect.value === "all" ? null : this.kindSelect.value,
      };
      this.renderList();
    });
    this.stateSelect.addEventListener("change", () => {
      this.filter = {
        ...this.filter,
        state: this.stateSelect.value === "all" ? null : this.stateSelect.value,
      };
      this.renderList();
    });

    const controls = el("div", "controls");
    controls.append(this.kindSelect, this.stateSelect);

    this.listEl = el("section", "items");
    this.detailEl = el("aside", "detail");
    const split = el("main", "split");
    split.append(this.listEl, this.detailEl);

    root.replaceChildren(this.headerEl, this.bannerEl, this.progressEl, controls, split);
  }

  async start(): Promise<void> {
    try {
      await this.store.refresh();
    } catch (err) {
      this.showBanner(
        `cannot reach the session service: ${err instanceof Error ? err.message : String(err)}`,
        false,
      );
      return;
    }
    this.hideBanner();
    this.renderHeader();
    this.renderProgress();
    this.renderKindOptions();
    this.renderList();
  }

  // ----- rendering

  private renderHeader(): void {
    const meta = this.store.meta;
    this.headerEl.replaceChildren();
    if (!meta) return;
    this.headerEl.append(
      el("span", "pkg-name", meta.package),
      el("span", `status status-${meta.status}`, meta.status),
    );
  }

  renderProgress(): void {
    const p = this.store.progress;
    this.progressEl.textContent = p
      ? `${p.annotated} / ${p.total} annotated, ${p.remaining} remaining`
      : "";
  }

  private renderKindOptions(): void {
    const labels = new Set<string>();
    for (const item of this.store.items) labels.add(kindLabel(item.kind));
    const current = this.kindSelect.value || "all";
    this.kindSelect.replaceChildren(new Option("all", "all"));
    for (const label of [...labels].sort()) {
      this.kindSelect.append(new Option(label, label));
    }
    this.kindSelect.value = [...labels, "all"].includes(current) ? current : "all";
  }

  renderList(): void {
    const visible = applyFilter(this.store.items, this.filter);
    this.listEl.replaceChildren();
    if (visible.length === 0) {
      this.listEl.append(
        emptyState(
          this.store.items.length === 0
            ? "no effects in this audit"
            : "no effects match the current filter",
        ),
      );
      return;
    }
    for (const item of visible) {
      const card = effectCard(item, this.store.originTrail(item));
      card.addEventListener("click", () => void this.select(item.id));
      this.listEl.append(card);
    }
  }

  // ----- detail panel

  async select(id: string): Promise<void> {
    this.selected = id;
    let ctx;
    try {
      ctx = await this.store.api.itemContext(id);
    } catch (err) {
      this.reportError(err);
      return;
    }
    const item = ctx.item;
    this.detailEl.replaceChildren(
      el("h2", "detail-fn", ctx.function),
      annotationBadge(item.annotation),
      el("div", "detail-loc", locationLabel(item.location)),
      codeExcerpt(ctx, item.location),
      this.annotateButtons(item),
      el("div", "action-note"),
    );
    await this.renderCallers(item.containing_fn, this.detailEl);
  }

  private annotateButtons(item: ItemPayload): HTMLElement {
    const bar = el("div", "annotate-bar");
    for (const choice of ANNOTATIONS) {
      const btn = el("button", `annotate choice-${choice}`, choice);
      btn.dataset.choice = choice;
      btn.addEventListener("click", () => void this.annotate(item.id, choice));
      bar.append(btn);
    }
    return bar;
  }

  /**
   * Post a judgment. On success the list and progress re-render from the
   * service; a CallerChecked judgment's spawned call-site items show up as
   * new cards. A 409 means this page is stale: prompt to reload.
   */
  async annotate(id: string, choice: Annotation): Promise<void> {
    let res;
    try {
      res = await this.store.annotate(id, choice);
    } catch (err) {
      this.reportError(err);
      return;
    }
    this.hideBanner();
    this.renderHeader();
    this.renderProgress();
    this.renderKindOptions();
    this.renderList();
    if (this.selected === id) await this.select(id);
    const note = this.detailEl.querySelector(".action-note");
    if (note) {
      note.textContent =
        res.spawned.length > 0
          ? `marked ${choice}; spawned ${res.spawned.length} call-site item(s)`
          : `marked ${choice}`;
    }
  }

  // ----- call-stack navigation

  private async renderCallers(fn: string, into: HTMLElement): Promise<void> {
    let payload;
    try {
      payload = await this.store.api.callers(fn);
    } catch (err) {
      this.reportError(err);
      return;
    }
    const section = el("div", "callers");
    section.append(el("h3", "callers-head", `callers of ${fn}`));
    if (payload.callers.length === 0) {
      section.append(emptyState("no callers in this package"));
    } else {
      for (const row of payload.callers) {
        const btn = el(
          "button",
          "caller-row",
          `${row.caller} at ${locationLabel(row.site)} [${row.dispatch}]`,
        );
        btn.addEventListener("click", () => void this.jumpToFunction(row.caller, row.site));
        section.append(btn);
      }
    }
    const old = into.querySelector(".callers");
    if (old) old.remove();
    into.append(section);
  }

  /** Load a function's source into the panel, highlighting a call site. */
  async jumpToFunction(fn: string, site?: LocationPayload): Promise<void> {
    let ctx;
    try {
      ctx = await this.store.api.functionContext(fn);
    } catch (err) {
      this.reportError(err);
      return;
    }
    this.selected = null;
    this.detailEl.replaceChildren(
      el("h2", "detail-fn", ctx.function),
      codeExcerpt(ctx, site),
    );
    await this.renderCallers(fn, this.detailEl);
  }

  // ----- error surfaces

  private reportError(err: unknown): void {
    if (err instanceof ConflictError) {
      this.showBanner(`the audit changed outside this page (${err.message}); reload to continue`, true);
    } else if (err instanceof ApiError && err.status === 0) {
      this.showBanner(err.message, false);
    } else {
      this.showBanner(err instanceof Error ? err.message : String(err), false);
    }
  }

  private showBanner(message: string, offerReload: boolean): void {
    this.bannerEl.replaceChildren(el("span", "banner-text", message));
    if (offerReload) {
      const btn = el("button", "reload", "reload");
      btn.addEventListener("click", () => window.location.reload());
      this.bannerEl.append(btn);
    }
    this.bannerEl.hidden = false;
  }

  private hideBanner(): void {
    this.bannerEl.hidden = true;
    this.bannerEl.replaceChildren();
  }
}
