// Review queue state. Items keep the order the repository returned them in
// (document, then source span); an item leaves the queue only once the API
// has confirmed the decision, and a failed decision restores the item with
// its error attached so nothing is lost silently.

import type { ComponentRow } from "./api";

export type QueuePhase = "idle" | "saving";

export interface QueueItem {
  component: ComponentRow;
  phase: QueuePhase;
  error: string | null;
}

export type Decision =
  | { kind: "approved" }
  | { kind: "rejected" }
  | { kind: "retyped"; retypeTo: string };

export class ReviewQueue {
  private items: QueueItem[];

  constructor(components: ComponentRow[]) {
    this.items = components.map((component) => ({
      component,
      phase: "idle",
      error: null,
    }));
  }

  list(): readonly QueueItem[] {
    return this.items;
  }

  get size(): number {
    return this.items.length;
  }

  find(componentId: string): QueueItem | undefined {
    return this.items.find((item) => item.component.component_id === componentId);
  }

  // Claim an item for a decision. Returns null when the item is unknown or
  // already mid-flight, so a double click can never issue a second PATCH.
  begin(componentId: string): QueueItem | null {
    const item = this.find(componentId);
    if (!item || item.phase === "saving") {
      return null;
    }
    item.phase = "saving";
    item.error = null;
    return item;
  }

  confirm(componentId: string): void {
    this.items = this.items.filter(
      (item) => item.component.component_id !== componentId
    );
  }

  fail(componentId: string, message: string): void {
    const item = this.find(componentId);
    if (item) {
      item.phase = "idle";
      item.error = message;
    }
  }
}
