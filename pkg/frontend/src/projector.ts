/**
 * Data Projector: one zoomable scatterplot of half/half discs over an
 * optional hexbin density layer. Left half encodes the ground-truth class
 * color, right half the current prediction.
 */

import type { FramePoint } from "./animate.js";
import type { ClassInfo, DensityBin } from "./types.js";
import { h, VNode } from "./vdom.js";
import type { Viewport } from "./state.js";

export const PLOT_SIZE = 360;
export const POINT_RADIUS = 5;
export const PIN_SCALE = 1.8;
const GRAY = "#cccccc";

function hexagonPoints(cx: number, cy: number, r: number): string {
  const pts: string[] = [];
  for (let k = 0; k < 6; k++) {
    const a = (Math.PI / 3) * k + Math.PI / 6;
    pts.push(`${(cx + r * Math.cos(a)).toFixed(2)},${(cy + r * Math.sin(a)).toFixed(2)}`);
  }
  return pts.join(" ");
}

export function halfDiscPaths(cx: number, cy: number, r: number,
                              leftColor: string, rightColor: string,
                              opacity: number): VNode[] {
  const top = `${cx} ${cy - r}`;
  const bottom = `${cx} ${cy + r}`;
  return [
    h("path", {
      class: "half left",
      d: `M ${top} A ${r} ${r} 0 0 0 ${bottom} Z`,
      fill: leftColor,
      opacity: opacity.toFixed(3),
    }),
    h("path", {
      class: "half right",
      d: `M ${top} A ${r} ${r} 0 0 1 ${bottom} Z`,
      fill: rightColor,
      opacity: opacity.toFixed(3),
    }),
  ];
}

export interface ProjectorProps {
  side: 0 | 1;
  model: string;
  epsilon: number;
  points: FramePoint[];
  density: DensityBin[];
  level: number;
  viewport: Viewport;
  classes: ClassInfo[];
  selection: number[];
  hexbin: boolean;
  pinned: number | null;
  mode: string;
}

export function renderProjector(props: ProjectorProps): VNode {
  const { viewport } = props;
  const sx = (x: number) => ((x - viewport.x0) / (viewport.x1 - viewport.x0)) * PLOT_SIZE;
  const sy = (y: number) => ((y - viewport.y0) / (viewport.y1 - viewport.y0)) * PLOT_SIZE;
  const selected = new Set(props.selection);
  const grid = 10 * (props.level + 1);
  const binPixels = PLOT_SIZE / (grid * (viewport.x1 - viewport.x0));

  const hexLayer = props.hexbin
    ? h(
        "g",
        { class: "hexbin-layer" },
        props.density.map((b) =>
          h("polygon", {
            class: "hexbin",
            points: hexagonPoints(sx(b.cx), sy(b.cy), (binPixels / 2) * b.radius_hint),
            "data-count": b.count,
            fill: "#9ecae1",
            opacity: "0.35",
          }),
        ),
      )
    : null;

  const dots = props.points.map((p) => {
    const dimmed = props.selection.length > 0 && !selected.has(p.id);
    const left = dimmed ? GRAY : props.classes[p.true_label].color;
    const right = dimmed ? GRAY : props.classes[p.colorClass].color;
    const r = p.id === props.pinned ? POINT_RADIUS * PIN_SCALE : POINT_RADIUS;
    const opacity = dimmed ? Math.min(0.35, p.opacity) : p.opacity;
    return h(
      "g",
      {
        class: `pt${p.id === props.pinned ? " pinned" : ""}${dimmed ? " dimmed" : ""}`,
        "data-id": p.id,
        "data-true": p.true_label,
        "data-pred": p.prediction,
        "data-action": "pick-instance",
      },
      ...halfDiscPaths(sx(p.x), sy(p.y), r, left, right, opacity),
    );
  });

  return h(
    "svg",
    {
      class: "projector",
      "data-side": props.side,
      "data-model": props.model,
      "data-epsilon": props.epsilon,
      "data-level": props.level,
      "data-mode": props.mode,
      width: PLOT_SIZE,
      height: PLOT_SIZE,
      viewBox: `0 0 ${PLOT_SIZE} ${PLOT_SIZE}`,
    },
    hexLayer,
    h("g", { class: "points" }, ...dots),
  );
}
