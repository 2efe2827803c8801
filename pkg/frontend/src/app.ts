// The curation app: a review queue for extracted components, faceted
// browsing with a reuse form, and a dashboard that renders the analytics
// reports. Every number on screen comes straight from the API; the client
// computes nothing itself.

import {
  ApiClient,
  ApiError,
  type ComponentFilters,
  type ComponentRow,
  type ReuseInput,
  type TaxonomyEntry,
} from "./api";
import { groupForPicker } from "./picker";
import { ReviewQueue, type Decision } from "./queue";

export type TabName = "review" | "browse" | "dashboard";

const DESCRIPTION_EXCERPT_LENGTH = 180;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = []
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function excerpt(text: string): string {
  if (text.length <= DESCRIPTION_EXCERPT_LENGTH) {
    return text;
  }
  return `${text.slice(0, DESCRIPTION_EXCERPT_LENGTH)}…`;
}

function messageOf(error: unknown): string {
  if (error instanceof ApiError) {
    return error.detail;
  }
  if (error instanceof Error) {
    return error.message;
  }
  return String(error);
}

export class App {
  readonly element: HTMLElement;

  private readonly client: ApiClient;
  private taxonomy: TaxonomyEntry[] = [];
  private queue = new ReviewQueue([]);

  private readonly status: HTMLElement;
  private readonly credentialPrompt: HTMLElement;
  private readonly queueCount: HTMLElement;
  private readonly queueList: HTMLElement;
  private readonly filterForm: HTMLFormElement;
  private readonly results: HTMLElement;
  private readonly detail: HTMLElement;
  private readonly dashboard: HTMLElement;
  private readonly sections: Record<TabName, HTMLElement>;

  constructor(root: HTMLElement, client: ApiClient) {
    this.client = client;

    this.status = el("div", { class: "kc-status", "data-role": "status" });
    this.credentialPrompt = el(
      "div",
      { class: "kc-credential-prompt", "data-role": "credential-prompt", hidden: "" },
      [
        "The API rejected the configured credentials. ",
        "Set a valid bearer token and reload.",
      ]
    );
    this.queueCount = el("div", { "data-role": "queue-count" });
    this.queueList = el("ul", { class: "kc-queue", "data-role": "queue" });
    this.filterForm = this.buildFilterForm();
    this.results = el("div", { "data-role": "results" });
    this.detail = el("div", { "data-role": "detail" });
    this.dashboard = el("div", { "data-role": "dashboard" });

    this.sections = {
      review: el("section", { "data-tab": "review" }, [
        this.credentialPrompt,
        this.queueCount,
        this.queueList,
      ]),
      browse: el("section", { "data-tab": "browse", hidden: "" }, [
        this.filterForm,
        this.results,
        this.detail,
      ]),
      dashboard: el("section", { "data-tab": "dashboard", hidden: "" }, [this.dashboard]),
    };

    const nav = el("nav", { class: "kc-tabs" });
    for (const name of ["review", "browse", "dashboard"] as TabName[]) {
      const button = el("button", { type: "button", "data-tab-button": name }, [name]);
      button.addEventListener("click", () => this.showTab(name));
      nav.append(button);
    }

    this.element = el("div", { class: "kc-app" }, [
      el("header", {}, [el("h1", {}, ["Component curation"]), nav, this.status]),
      this.sections.review,
      this.sections.browse,
      this.sections.dashboard,
    ]);
    root.append(this.element);
  }

  showTab(name: TabName): void {
    for (const [tab, section] of Object.entries(this.sections)) {
      section.hidden = tab !== name;
    }
  }

  private setStatus(text: string, isError = false): void {
    this.status.textContent = text;
    this.status.classList.toggle("kc-error", isError);
  }

  // -- review queue ----------------------------------------------------------

  async loadQueue(): Promise<void> {
    try {
      if (!this.taxonomy.length) {
        this.taxonomy = await this.client.taxonomy();
      }
      const pending = await this.client.listComponents({ state: "unreviewed" });
      this.queue = new ReviewQueue(pending);
      this.renderQueue();
      this.setStatus(`${pending.length} component(s) awaiting review`);
    } catch (error) {
      this.handleApiFailure(error, "loading the review queue");
    }
  }

  async decide(componentId: string, decision: Decision): Promise<void> {
    const item = this.queue.begin(componentId);
    if (!item) {
      return;
    }
    this.renderQueue();
    try {
      if (decision.kind === "retyped") {
        await this.client.curate(componentId, "retyped", decision.retypeTo);
      } else {
        await this.client.curate(componentId, decision.kind);
      }
      this.queue.confirm(componentId);
      this.renderQueue();
      this.setStatus(`${item.component.title}: ${decision.kind}`);
    } catch (error) {
      this.queue.fail(componentId, messageOf(error));
      this.renderQueue();
      this.handleApiFailure(error, "saving the decision");
    }
  }

  private handleApiFailure(error: unknown, doing: string): void {
    this.setStatus(`Error while ${doing}: ${messageOf(error)}`, true);
    if (error instanceof ApiError && error.status === 401) {
      this.credentialPrompt.hidden = false;
    }
    console.error(`kcpipe UI: failed while ${doing}`, error);
  }

  private renderQueue(): void {
    this.queueCount.textContent = `${this.queue.size} in queue`;
    this.queueList.replaceChildren(
      ...this.queue.list().map((item) => this.renderQueueItem(item))
    );
    if (this.queue.size === 0 && this.queueList.childElementCount === 0) {
      this.queueList.append(
        el("li", { class: "kc-empty", "data-role": "queue-empty" }, ["Review queue is empty."])
      );
    }
  }

  private renderQueueItem(item: {
    component: ComponentRow;
    phase: string;
    error: string | null;
  }): HTMLElement {
    const c = item.component;
    const saving = item.phase === "saving";

    const picker = this.buildRetypeSelect();
    const approve = el("button", { type: "button", "data-action": "approve" }, ["Approve"]);
    const reject = el("button", { type: "button", "data-action": "reject" }, ["Reject"]);
    const retype = el("button", { type: "button", "data-action": "retype" }, ["Retype"]);
    for (const button of [approve, reject, retype]) {
      if (saving) {
        button.disabled = true;
      }
    }
    if (saving) {
      picker.disabled = true;
    }

    approve.addEventListener("click", () => {
      void this.decide(c.component_id, { kind: "approved" });
    });
    reject.addEventListener("click", () => {
      void this.decide(c.component_id, { kind: "rejected" });
    });
    retype.addEventListener("click", () => {
      if (!picker.value) {
        this.queue.fail(c.component_id, "pick a replacement type first");
        this.renderQueue();
        return;
      }
      void this.decide(c.component_id, { kind: "retyped", retypeTo: picker.value });
    });

    const meta = `${c.paper_title} · ${c.year ?? "year unknown"} · ${
      c.subjects.length ? c.subjects.join(", ") : "no subject tags"
    }`;
    const children: (Node | string)[] = [
      el("strong", { class: "kc-title" }, [c.title]),
      el("span", { class: "kc-type" }, [`${c.type_label} → ${c.resolved_type}`]),
      el("p", { class: "kc-description" }, [excerpt(c.description)]),
      el("span", { class: "kc-meta" }, [meta]),
      el("span", { class: "kc-phase", "data-role": "phase" }, [saving ? "saving…" : ""]),
      el("div", { class: "kc-actions" }, [approve, reject, picker, retype]),
    ];
    if (item.error) {
      children.push(el("div", { class: "kc-error", "data-role": "item-error" }, [item.error]));
    }
    return el("li", { class: "kc-queue-item", "data-component-id": c.component_id }, children);
  }

  private buildRetypeSelect(): HTMLSelectElement {
    const select = el("select", { "data-role": "retype-select" });
    select.append(el("option", { value: "", disabled: "", selected: "" }, ["Retype to…"]));
    for (const group of groupForPicker(this.taxonomy)) {
      const optgroup = el("optgroup", { label: group.label });
      for (const entry of group.options) {
        optgroup.append(el("option", { value: entry.name }, [entry.name]));
      }
      select.append(optgroup);
    }
    return select;
  }

  // -- browsing and reuse ------------------------------------------------------

  private buildFilterForm(): HTMLFormElement {
    const form = el("form", { class: "kc-filters", "data-role": "filters" });
    form.append(
      el("input", { name: "type", placeholder: "type" }),
      el("input", { name: "year", placeholder: "year", inputmode: "numeric" }),
      el("input", { name: "subject", placeholder: "subject" }),
      el("input", { name: "state", placeholder: "curation state" }),
      el("button", { type: "submit" }, ["Apply"])
    );
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.applyFilters(this.readFilters());
    });
    return form;
  }

  readFilters(): ComponentFilters {
    const data = new FormData(this.filterForm);
    const filters: ComponentFilters = {};
    const type = String(data.get("type") ?? "").trim();
    const year = String(data.get("year") ?? "").trim();
    const subject = String(data.get("subject") ?? "").trim();
    const state = String(data.get("state") ?? "").trim();
    if (type) filters.type = type;
    if (year) filters.year = Number(year);
    if (subject) filters.subject = subject;
    if (state) filters.state = state;
    return filters;
  }

  async applyFilters(filters: ComponentFilters): Promise<void> {
    try {
      const rows = await this.client.listComponents(filters);
      this.renderResults(rows);
      this.setStatus(`${rows.length} component(s) match`);
    } catch (error) {
      this.handleApiFailure(error, "browsing components");
    }
  }

  private renderResults(rows: ComponentRow[]): void {
    if (!rows.length) {
      this.results.replaceChildren(
        el("div", { class: "kc-empty", "data-role": "results-empty" }, [
          "No components match the current filters.",
        ])
      );
      return;
    }
    const table = el("table", { class: "kc-results" });
    const head = el("tr", {});
    for (const column of ["Title", "Type", "State", "Paper", "Year", "Subjects"]) {
      head.append(el("th", {}, [column]));
    }
    table.append(head);
    for (const row of rows) {
      const tr = el("tr", { "data-component-id": row.component_id }, [
        el("td", {}, [row.title]),
        el("td", {}, [row.effective_type ?? row.type_label]),
        el("td", {}, [row.curation_state]),
        el("td", {}, [row.paper_title]),
        el("td", {}, [row.year === null ? "—" : String(row.year)]),
        el("td", {}, [row.subjects.join(", ")]),
      ]);
      tr.addEventListener("click", () => {
        void this.openDetail(row.component_id);
      });
      table.append(tr);
    }
    this.results.replaceChildren(table);
  }

  async openDetail(componentId: string): Promise<void> {
    try {
      const { component, reuse_events } = await this.client.getComponent(componentId);
      const provenance = await this.client.documentResponse(component.doc_id);
      this.renderDetail(component, reuse_events, provenance?.text ?? null);
    } catch (error) {
      this.handleApiFailure(error, "loading the component detail");
    }
  }

  private renderDetail(
    component: ComponentRow,
    events: { event_id: string; project: string; note: string; adopted: boolean }[],
    rawResponse: string | null
  ): void {
    const eventList = el("ul", { "data-role": "reuse-events" });
    for (const event of events) {
      eventList.append(
        el("li", {}, [
          `${event.event_id}: ${event.project} — ${event.note}` +
            (event.adopted ? " (adopted)" : ""),
        ])
      );
    }
    if (!events.length) {
      eventList.append(el("li", { class: "kc-empty" }, ["No reuse recorded yet."]));
    }

    const form = el("form", { class: "kc-reuse-form", "data-role": "reuse-form" });
    form.append(
      el("input", { name: "project", placeholder: "project", required: "" }),
      el("input", { name: "note", placeholder: "how it was applied", required: "" }),
      el("label", {}, [el("input", { name: "adopted", type: "checkbox" }), "adopted"]),
      el("button", { type: "submit" }, ["Record reuse"])
    );
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(form);
      void this.submitReuse(component.component_id, {
        project: String(data.get("project") ?? ""),
        note: String(data.get("note") ?? ""),
        adopted: data.get("adopted") !== null,
      });
    });

    const children: (Node | string)[] = [
      el("h2", {}, [component.title]),
      el("p", { "data-role": "detail-type" }, [
        `${component.type_label} → ${component.curation_state}`,
      ]),
      el("p", {}, [component.description]),
      el("p", { class: "kc-meta" }, [`${component.citation} (${component.filename})`]),
      el("h3", {}, ["Reuse"]),
      eventList,
      form,
    ];
    if (rawResponse !== null) {
      children.push(
        el("details", { "data-role": "provenance" }, [
          el("summary", {}, ["Raw model response"]),
          el("pre", {}, [rawResponse]),
        ])
      );
    }
    this.detail.replaceChildren(el("div", { class: "kc-detail" }, children));
  }

  async submitReuse(componentId: string, input: ReuseInput): Promise<void> {
    try {
      const event = await this.client.addReuse(componentId, input);
      this.setStatus(`recorded ${event.event_id} for ${input.project}`);
      await this.openDetail(componentId);
    } catch (error) {
      this.handleApiFailure(error, "recording the reuse event");
    }
  }

  // -- dashboard ------------------------------------------------------------------

  async loadDashboard(): Promise<void> {
    try {
      const frequency = await this.client.typeFrequency();
      const perPaper = await this.client.perPaper();

      const table = el("table", { class: "kc-frequency", "data-role": "frequency-table" });
      const head = el("tr", {});
      for (const column of ["Component type", "Count", "Percentage", "Notes"]) {
        head.append(el("th", {}, [column]));
      }
      table.append(head);
      const rows = [...frequency.rows, frequency.unlabelled, frequency.not_applicable];
      for (const row of rows) {
        table.append(
          el("tr", { "data-bucket": row.bucket }, [
            el("td", {}, [row.bucket]),
            el("td", { "data-role": "count" }, [String(row.count)]),
            el("td", { "data-role": "percent" }, [
              row.percent === null ? "—" : `${row.percent.toFixed(1)}%`,
            ]),
            el("td", {}, [row.note]),
          ])
        );
      }

      const footer = el("p", { "data-role": "frequency-footer" }, [
        `Labelled components: ${frequency.labelled_total} ` +
          `(denominator ${frequency.denominator}, ${frequency.denominator_mode})`,
      ]);
      const perPaperSummary = el("p", { "data-role": "per-paper" }, [
        `${perPaper.document_count} documents · ${perPaper.component_count} components · ` +
          `mean ${perPaper.mean} · max ${perPaper.max_count}`,
      ]);
      this.dashboard.replaceChildren(table, footer, perPaperSummary);
    } catch (error) {
      this.handleApiFailure(error, "loading the dashboard");
    }
  }
}

export function createApp(root: HTMLElement, client: ApiClient): App {
  return new App(root, client);
}
