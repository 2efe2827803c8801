// Retype picker layout: the 18 canonical types grouped under their category
// headers. Groups appear in the order their most specific member holds in
// the overall specificity ranking, and options inside a group stay in rank
// order, so the picker always reads from most concrete to most encompassing.

import type { TaxonomyEntry } from "./api";

export interface PickerGroup {
  category: string;
  label: string;
  options: TaxonomyEntry[];
}

export function categoryLabel(category: string): string {
  const text = category.replace(/_/g, " ");
  return text.charAt(0).toUpperCase() + text.slice(1);
}

export function groupForPicker(entries: TaxonomyEntry[]): PickerGroup[] {
  const ranked = [...entries].sort((a, b) => a.specificity_rank - b.specificity_rank);
  const groups: PickerGroup[] = [];
  const byCategory = new Map<string, PickerGroup>();
  for (const entry of ranked) {
    let group = byCategory.get(entry.category);
    if (!group) {
      group = { category: entry.category, label: categoryLabel(entry.category), options: [] };
      byCategory.set(entry.category, group);
      groups.push(group);
    }
    group.options.push(entry);
  }
  return groups;
}
