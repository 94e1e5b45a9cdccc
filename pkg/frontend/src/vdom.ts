/**
 * Minimal element tree. The whole UI renders to these plain nodes, which
 * keeps rendering a pure function testable in Node; the browser entry
 * point materializes them into real DOM.
 */

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  children: (VNode | string)[];
}

export function h(
  tag: string,
  attrs: Record<string, string | number | boolean | undefined> = {},
  ...children: (VNode | string | null | undefined | (VNode | string | null)[])[]
): VNode {
  const clean: Record<string, string> = {};
  for (const [k, v] of Object.entries(attrs)) {
    if (v === undefined || v === false) continue;
    clean[k] = v === true ? "" : String(v);
  }
  const flat: (VNode | string)[] = [];
  for (const child of children) {
    if (child === null || child === undefined) continue;
    if (Array.isArray(child)) {
      for (const c of child) if (c !== null && c !== undefined) flat.push(c);
    } else {
      flat.push(child);
    }
  }
  return { tag, attrs: clean, children: flat };
}

const escapeText = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

const escapeAttr = (s: string) => escapeText(s).replace(/"/g, "&quot;");

/** Deterministic serialization: attributes in sorted order. */
export function renderToString(node: VNode | string): string {
  if (typeof node === "string") return escapeText(node);
  const attrs = Object.keys(node.attrs)
    .sort()
    .map((k) => ` ${k}="${escapeAttr(node.attrs[k])}"`)
    .join("");
  const inner = node.children.map(renderToString).join("");
  return `<${node.tag}${attrs}>${inner}</${node.tag}>`;
}

const SVG_NS = "http://www.w3.org/2000/svg";
const SVG_TAGS = new Set([
  "svg", "g", "circle", "rect", "path", "line", "polygon", "text", "title",
]);

/** Browser-side materialization (not used by the Node tests). */
export function toDom(node: VNode | string, doc: Document): Node {
  if (typeof node === "string") return doc.createTextNode(node);
  const el = SVG_TAGS.has(node.tag)
    ? doc.createElementNS(SVG_NS, node.tag)
    : doc.createElement(node.tag);
  for (const [k, v] of Object.entries(node.attrs)) el.setAttribute(k, v);
  for (const child of node.children) el.appendChild(toDom(child, doc));
  return el;
}
