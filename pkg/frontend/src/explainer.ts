/**
 * Instance-level Attack Explainer: general view triptych with a looping
 * composition animation (CSS-driven), side-by-side inspection, grouped
 * pre/post confidence bars with hover deltas, and the gated step-by-step
 * execution view.
 */

import type { ClassInfo, InstancePayload } from "./types.js";
import { h, VNode } from "./vdom.js";

/** Exact difference shown on hover, in percent with two decimals. */
export function hoverDeltaPercent(pre: number, post: number): number {
  return Math.round(Math.abs(post - pre) * 100 * 100) / 100;
}

export interface StepScript {
  title: string;
  body: string;
}

export const STEP_SCRIPTS: Record<string, StepScript[]> = {
  fgsm: [
    { title: "1. Query the model", body: "The input image is fed through the classifier to obtain its loss against the true label." },
    { title: "2. Take the loss gradient", body: "Backpropagation computes how each pixel influences the loss; only the sign of each pixel's gradient is kept." },
    { title: "3. Step every pixel", body: "Each pixel moves by the perturbation size in its sign direction, maximizing loss in one step." },
    { title: "4. Clip and attack", body: "Values are clipped back into the valid range; the perturbed image is re-classified, often as a different class." },
  ],
  zoo: [
    { title: "1. Probe the model", body: "The attack only sees output confidences. It nudges one pixel up and down and watches the scores change." },
    { title: "2. Estimate gradients", body: "Finite differences over sampled pixels approximate the gradient of a misclassification objective, no internals needed." },
    { title: "3. Descend coordinates", body: "Sampled pixels step against the estimated gradient, trading off image similarity and attack success." },
    { title: "4. Project and repeat", body: "Each iterate is projected back into the allowed perturbation ball until the predicted class flips." },
  ],
};

export interface ExplainerProps {
  instance: InstancePayload | null;
  classes: ClassInfo[];
  stepsCompleted: number;
  stepPlaying: number | null;
  useSelected: boolean;
}

function img(cls: string, b64: string, label: string): VNode {
  return h(
    "figure",
    { class: `panel ${cls}` },
    h("img", { class: cls, src: `data:image/png;base64,${b64}`, alt: label }),
    h("figcaption", {}, label),
  );
}

function confidenceView(inst: InstancePayload, classes: ClassInfo[]): VNode {
  const rows = classes.map((c, k) => {
    const pre = inst.clean_confidences[k];
    const post = inst.adv_confidences[k];
    const delta = hoverDeltaPercent(pre, post);
    return h(
      "g",
      {
        class: "conf-pair",
        "data-class": k,
        "data-delta": delta.toFixed(2),
      },
      h("title", {}, `Δ ${delta.toFixed(2)}%`),
      h("rect", {
        class: "conf pre", x: k * 34, width: 14,
        y: (100 - pre * 100).toFixed(2), height: (pre * 100).toFixed(2),
        fill: "#9e9e9e", "data-value": String(pre),
      }),
      h("rect", {
        class: "conf post", x: k * 34 + 15, width: 14,
        y: (100 - post * 100).toFixed(2), height: (post * 100).toFixed(2),
        fill: c.color, "data-value": String(post),
      }),
    );
  });
  return h("svg", { class: "confidence-view", width: classes.length * 34, height: 110 },
    ...rows);
}

function stepView(props: ExplainerProps): VNode {
  const inst = props.instance;
  const scripts = STEP_SCRIPTS[inst ? inst.attack : "fgsm"] ?? STEP_SCRIPTS.fgsm;
  const visible = scripts.slice(0, Math.min(props.stepsCompleted + 1, scripts.length));
  return h(
    "section",
    { class: "step-view", "data-completed": props.stepsCompleted },
    h("label", { class: "use-selected" },
      h("input", {
        type: "checkbox", "data-action": "toggle-use-selected",
        checked: props.useSelected,
      }),
      "explain my selected instance"),
    ...visible.map((s, k) =>
      h(
        "article",
        {
          class: `step${props.stepPlaying === k ? " playing" : ""}`,
          "data-step": k,
        },
        h("h4", {}, s.title),
        h("p", {}, s.body),
        props.useSelected && inst
          ? h("img", {
              class: "step-instance",
              src: `data:image/png;base64,${inst.original_png}`,
              alt: "selected instance",
            })
          : h("div", { class: "step-default-art" }),
        k === props.stepsCompleted && k < scripts.length
          ? h("button", { "data-action": "play-step", "data-step": k }, "play")
          : null,
      ),
    ),
  );
}

export function renderExplainer(props: ExplainerProps): VNode {
  const inst = props.instance;
  if (!inst) {
    return h("section", { class: "explainer empty" },
      h("p", {}, "Click a circle in a projector to inspect an instance."));
  }
  const classes = props.classes;
  const predName = classes[inst.adv_prediction].name;
  return h(
    "section",
    { class: "explainer", "data-instance": inst.id },
    h("header", {},
      h("span", { class: "meta model" }, `model: ${inst.model}`),
      h("span", { class: "meta true" }, `true: ${inst.true_label_name}`),
      h("span", { class: "meta pred" }, `prediction: ${predName}`),
      h("span", { class: "meta eps" }, `ε = ${inst.epsilon}`)),
    h("div", { class: "triptych compose-loop" },
      img("original", inst.original_png, "original"),
      h("span", { class: "op" }, "+"),
      img("noise", inst.noise_png, "noise"),
      h("span", { class: "op" }, "="),
      img("adversarial", inst.adversarial_png, "adversarial")),
    h("div", { class: "compare" },
      img("compare-left", inst.original_png, "clean (zoom)"),
      img("compare-right", inst.adversarial_png, "adversarial (zoom)")),
    confidenceView(inst, classes),
    stepView(props),
  );
}
