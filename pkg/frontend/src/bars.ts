/**
 * Robustness Analyzer: natural vs robust accuracy as a two-bar chart per
 * model; the robust bar follows the committed epsilon.
 */

import { h, VNode } from "./vdom.js";

export const BAR_AREA = 100; // pixel height representing accuracy 1.0

export function renderAnalyzer(model: string, natural: number,
                               robust: number, epsilon: number): VNode {
  const naturalPx = natural * BAR_AREA;
  const robustPx = robust * BAR_AREA;
  return h(
    "svg",
    { class: "analyzer", "data-model": model, width: 120, height: 130 },
    h("rect", {
      class: "bar natural",
      x: 20, width: 30,
      y: (BAR_AREA - naturalPx + 10).toFixed(2),
      height: naturalPx.toFixed(2),
      "data-value": String(natural),
      fill: "#6baed6",
    }),
    h("rect", {
      class: "bar robust",
      x: 70, width: 30,
      y: (BAR_AREA - robustPx + 10).toFixed(2),
      height: robustPx.toFixed(2),
      "data-value": String(robust),
      "data-epsilon": String(epsilon),
      fill: "#fd8d3c",
    }),
    h("text", { x: 20, y: 125, class: "bar-label" }, "natural"),
    h("text", { x: 70, y: 125, class: "bar-label" }, "robust"),
  );
}
