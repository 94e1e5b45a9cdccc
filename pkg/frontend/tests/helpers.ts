import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { VNode } from "../src/vdom.js";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

/** Depth-first search over the element tree. */
export function findAll(node: VNode | string,
                        pred: (n: VNode) => boolean): VNode[] {
  if (typeof node === "string") return [];
  const hits: VNode[] = [];
  if (pred(node)) hits.push(node);
  for (const child of node.children) hits.push(...findAll(child, pred));
  return hits;
}

export const byClass = (cls: string) => (n: VNode) =>
  (n.attrs.class ?? "").split(" ").includes(cls);
