import type { ComponentRow, TaxonomyEntry } from "../src/api";

// Mirror of the server vocabulary: name, category, specificity rank.
const VOCABULARY: [string, string, number][] = [
  ["Template", "representational_tool", 1],
  ["Checklist", "methodological_approach", 2],
  ["Scorecard", "representational_tool", 3],
  ["Model", "representational_tool", 4],
  ["Format", "representational_tool", 5],
  ["Heuristic", "methodological_approach", 6],
  ["Scientific hypothesis", "epistemological_category", 7],
  ["Hypothesis", "epistemological_category", 8],
  ["Best practice", "epistemological_category", 9],
  ["Pattern", "epistemological_category", 10],
  ["Toolkit", "methodological_approach", 11],
  ["Scientific theory", "epistemological_category", 12],
  ["Theory", "epistemological_category", 13],
  ["Framework", "methodological_approach", 14],
  ["Pattern language", "methodological_approach", 15],
  ["Meta-pattern", "meta_conceptual", 16],
  ["Principle", "epistemological_category", 17],
  ["Paradigm", "epistemological_category", 18],
];

export const TAXONOMY: TaxonomyEntry[] = VOCABULARY.map(([name, category, rank]) => ({
  name,
  category,
  specificity_rank: rank,
  definition: `${name} - definition text.`,
}));

let counter = 0;

export function component(overrides: Partial<ComponentRow> = {}): ComponentRow {
  counter += 1;
  const id = overrides.component_id ?? `c${String(counter).padStart(15, "0")}`;
  return {
    component_id: id,
    doc_id: "d000000000000001",
    source_span: counter,
    title: `Component ${counter}`,
    type_label: "Model",
    resolved_type: "canonical:Model",
    effective_type: "Model",
    description: "A reusable idea with enough description text to render.",
    citation: "Author (2021). Paper.",
    filename: "paper.txt",
    paper_title: "Paper Title",
    per_paper_concept_count: 3,
    curation_state: "unreviewed",
    created_at: "2026-01-01T00:00:00+00:00",
    year: 2021,
    subjects: ["Energy & Power Systems"],
    ...overrides,
  };
}

export interface RecordedCall {
  method: string;
  url: string;
  headers: Record<string, string>;
  body: unknown;
}

export type RouteHandler = (call: RecordedCall) => [number, unknown] | undefined;

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

// Scripted fetch: records every call, answers from the handler, and fails
// loudly on anything unscripted so tests can't silently hit a wrong URL.
export function scriptedFetch(handler: RouteHandler) {
  const calls: RecordedCall[] = [];
  const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
    const call: RecordedCall = {
      method: init?.method ?? "GET",
      url,
      headers: (init?.headers as Record<string, string>) ?? {},
      body: typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
    };
    calls.push(call);
    const outcome = handler(call);
    if (!outcome) {
      throw new Error(`unscripted request: ${call.method} ${url}`);
    }
    return jsonResponse(outcome[0], outcome[1]);
  };
  return { calls, fetchImpl };
}

export function pathOf(url: string): string {
  return url.replace(/^https?:\/\/[^/]+/, "").split("?")[0];
}

export function paramsOf(url: string): URLSearchParams {
  const index = url.indexOf("?");
  return new URLSearchParams(index === -1 ? "" : url.slice(index + 1));
}
