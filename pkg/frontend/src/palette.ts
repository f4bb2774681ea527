/** Fixed categorical palette for relationship groups.
 *
 * Colors are keyed by a hash of the group label text, not by the order in
 * which labels are discovered, so a group keeps its color across sessions,
 * reloads, and reports that happen to list labels differently.
 */

const PALETTE = [
  "#4e79a7",
  "#f28e2c",
  "#e15759",
  "#76b7b2",
  "#59a14f",
  "#edc949",
  "#af7aa1",
  "#ff9da7",
  "#9c755f",
  "#bab0ab",
  "#1170aa",
  "#c85200",
];

/** FNV-1a over UTF-16 code units, reduced to an unsigned 32-bit value. */
export function labelHash(label: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < label.length; i++) {
    h ^= label.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

export function colorFor(label: string): string {
  return PALETTE[labelHash(label) % PALETTE.length];
}

export function colorMap(labels: Iterable<string>): Map<string, string> {
  const out = new Map<string, string>();
  for (const label of labels) out.set(label, colorFor(label));
  return out;
}
