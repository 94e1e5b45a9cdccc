/**
 * Whole-interface render: a pure function of (ViewState, fetched data).
 * Replaying the same state against the same payloads yields an identical
 * tree, which the replay tests serialize and compare.
 */

import { FramePoint } from "./animate.js";
import { renderAnalyzer } from "./bars.js";
import { renderExplainer } from "./explainer.js";
import { renderProjector } from "./projector.js";
import type { ViewState } from "./state.js";
import type {
  AccuracyPayload, InstancePayload, Manifest, ViewPayload,
} from "./types.js";
import { h, VNode } from "./vdom.js";

export interface AppData {
  manifest: Manifest;
  accuracy: [AccuracyPayload, AccuracyPayload];
  views: [ViewPayload, ViewPayload];
  /** overrides view points while an attack animation is in flight */
  frames?: [FramePoint[], FramePoint[]];
  barHeights?: [number, number];
  instance: InstancePayload | null;
}

export function asFrame(points: ViewPayload["points"]): FramePoint[] {
  return points.map((p) => ({ ...p, opacity: 1, colorClass: p.prediction }));
}

export function renderApp(state: ViewState, data: AppData): VNode {
  const epsilon = state.epsilons[state.epsilonIndex];
  const classes = data.manifest.classes;

  const analyzers = ([0, 1] as const).map((side) => {
    const acc = data.accuracy[side];
    const robust = data.barHeights ? data.barHeights[side]
      : acc.robust[state.epsilonIndex];
    return renderAnalyzer(state.models[side], acc.natural, robust, epsilon);
  });

  const projectors = ([0, 1] as const).map((side) =>
    renderProjector({
      side,
      model: state.models[side],
      epsilon,
      points: data.frames ? data.frames[side] : asFrame(data.views[side].points),
      density: data.views[side].density,
      level: data.views[side].level,
      viewport: state.projectors[side].viewport,
      classes,
      selection: state.selection,
      hexbin: state.hexbin,
      pinned: state.pinned,
      mode: state.mode,
    }),
  );

  const slider = h(
    "section",
    { class: "adjuster" },
    h("input", {
      type: "range", id: "eps-slider", min: 0,
      max: state.epsilons.length - 1, step: 1, value: state.sliderIndex,
      "data-action": "slide-epsilon",
    }),
    h("span", { class: "eps-value" },
      `ε = ${state.epsilons[state.sliderIndex]}`),
    h("button", { id: "attack-btn", "data-action": "trigger-attack" }, "attack"),
  );

  const toolbar = h(
    "section",
    { class: "toolbar" },
    h("span", { class: "attack-name", "data-attack": state.attack },
      `attack: ${state.attack}`),
    h("span", { class: "current-eps", "data-epsilon": String(epsilon) },
      `showing ε = ${epsilon}`),
    h("button", {
      "data-action": "set-mode", "data-mode": "inspect",
      class: state.mode === "inspect" ? "active" : "",
    }, "inspect"),
    h("button", {
      "data-action": "set-mode", "data-mode": "select",
      class: state.mode === "select" ? "active" : "",
    }, "select"),
    h("button", {
      "data-action": "toggle-hexbin",
      class: state.hexbin ? "active" : "",
    }, "hexbin"),
  );

  return h(
    "main",
    { class: "advx", "data-epsilon-index": state.epsilonIndex },
    h("section", { class: "analyzers" }, ...analyzers),
    slider,
    toolbar,
    h("section", { class: "projectors" }, ...projectors),
    renderExplainer({
      instance: data.instance,
      classes,
      stepsCompleted: state.steps.completed,
      stepPlaying: state.steps.playing,
      useSelected: state.steps.useSelected,
    }),
    h("footer", { class: "info" },
      h("p", {}, "Evasion attacks perturb inputs at inference time so a ",
        "trained classifier mislabels them. Slide ε and press attack to ",
        "watch embeddings, predictions, and accuracy respond.")),
  );
}
