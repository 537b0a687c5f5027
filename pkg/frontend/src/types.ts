// Payload shapes served by the audit session API. These mirror the JSON the
// service emits; nothing here is invented client-side.

export type Annotation = "Safe" | "Unsafe" | "CallerChecked";

export const ANNOTATIONS: readonly Annotation[] = ["Safe", "Unsafe", "CallerChecked"];

export interface SinkPatternPayload {
  prefix: string;
  origin: "builtin" | { imported: string };
}

export interface KindPayload {
  name: string;
  pattern?: SinkPatternPayload; // present iff name === "SinkCall"
}

export interface LocationPayload {
  file: string;
  line: number; // 1-based
  col: number;  // 1-based
}

export interface ItemPayload {
  id: string;
  root: string;          // id of the base effect this item descends from
  parent: string | null; // null for base effects
  origin: "base" | "propagated";
  kind: KindPayload;
  location: LocationPayload;
  containing_fn: string;
  annotation: Annotation | null;
}

export interface MetaPayload {
  package: string;
  fingerprint: string;
  status: string;
  total_loc: number;
  exported_cc: string[];
}

export interface ProgressPayload {
  total: number;
  annotated: number;
  remaining: number;
  by_annotation: Record<Annotation, number>;
  status: string;
}

export interface ContextPayload {
  function: string;
  file: string;
  start_line: number;
  end_line: number;
  lines: string[];
}

export interface ItemContextPayload extends ContextPayload {
  item: ItemPayload;
}

export type DispatchKind = "direct" | "static-trait" | "dynamic-trait" | "external";

export interface CallerRow {
  caller: string;
  site: LocationPayload;
  dispatch: DispatchKind;
}

export interface CallersPayload {
  fn: string;
  callers: CallerRow[];
}

export interface AnnotateResponse {
  item: ItemPayload;
  spawned: ItemPayload[]; // call-site items a CallerChecked judgment created
  exported_cc: string[];
  progress: ProgressPayload;
}

/** Display label for a kind; SinkCall shows which registry prefix matched. */
export function kindLabel(kind: KindPayload): string {
  return kind.pattern ? `SinkCall(${kind.pattern.prefix})` : kind.name;
}

export function locationLabel(loc: LocationPayload): string {
  return `${loc.file}:${loc.line}:${loc.col}`;
}
