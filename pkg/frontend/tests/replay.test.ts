/**
 * Replay: a scripted interaction rendered twice must produce identical
 * DOM structure, with mirrored selections, one shared epsilon, and bar
 * heights matching the accuracy payload.
 */

import { describe, expect, it } from "vitest";

import { AppData, renderApp } from "../src/app.js";
import {
  finishStep, initialState, pinInstance, playStep, selectRegion, setMode,
  setSlider, triggerAttack, ViewState,
} from "../src/state.js";
import type {
  AccuracyPayload, InstancePayload, Manifest, ViewPayload,
} from "../src/types.js";
import { renderToString } from "../src/vdom.js";
import { byClass, findAll, fixture } from "./helpers.js";

const manifest = fixture<Manifest>("manifest.json");
const accuracy = fixture<AccuracyPayload>("accuracy.json");
const viewEps0 = fixture<ViewPayload>("view_eps0.json");
const viewEps2 = fixture<ViewPayload>("view_eps2.json");
const instance = fixture<InstancePayload>("instance_eps2.json");

function runScript(): { state: ViewState; data: AppData } {
  // the same model on both sides: the fixture bundle carries one model
  let state = initialState([manifest.models[0], manifest.models[0]],
                           "fgsm", accuracy.epsilons);
  let data: AppData = {
    manifest,
    accuracy: [accuracy, accuracy],
    views: [viewEps0, viewEps0],
    instance: null,
  };

  // 1. pick epsilon = 0.02 and trigger the attack
  state = setSlider(state, accuracy.epsilons.indexOf(0.02));
  state = triggerAttack(state);
  data = { ...data, views: [viewEps2, viewEps2] };

  // 2. selection mode: highlight the region around a class cluster
  state = setMode(state, "select");
  const anchor = viewEps2.points[0];
  state = selectRegion(state, {
    x0: anchor.x - 0.15, y0: anchor.y - 0.15,
    x1: anchor.x + 0.15, y1: anchor.y + 0.15,
  }, viewEps2.points);

  // 3. open an instance (pin it)
  state = setMode(state, "inspect");
  state = pinInstance(state, 0, instance.id,
                      { x: anchor.x, y: anchor.y });
  data = { ...data, instance };

  // 4. play the first two step-by-step stages
  state = playStep(state, 0);
  state = finishStep(state, 0);
  state = playStep(state, 1);
  state = finishStep(state, 1);

  return { state, data };
}

describe("scripted replay", () => {
  it("yields a deterministic final DOM snapshot", () => {
    const a = runScript();
    const b = runScript();
    const htmlA = renderToString(renderApp(a.state, a.data));
    const htmlB = renderToString(renderApp(b.state, b.data));
    expect(htmlA).toBe(htmlB);
    expect(htmlA.length).toBeGreaterThan(1000);
  });

  it("shows one epsilon on both projectors", () => {
    const { state, data } = runScript();
    const tree = renderApp(state, data);
    const projectors = findAll(tree, byClass("projector"));
    expect(projectors).toHaveLength(2);
    expect(projectors[0].attrs["data-epsilon"]).toBe("0.02");
    expect(projectors[1].attrs["data-epsilon"]).toBe("0.02");
  });

  it("mirrors the selection across both projectors", () => {
    const { state, data } = runScript();
    expect(state.selection.length).toBeGreaterThan(0);
    const tree = renderApp(state, data);
    const projectors = findAll(tree, byClass("projector"));
    const litIds = projectors.map((svg) =>
      findAll(svg, byClass("pt"))
        .filter((g) => !(g.attrs.class ?? "").includes("dimmed"))
        .map((g) => g.attrs["data-id"])
        .sort());
    expect(litIds[0]).toEqual(litIds[1]);
    expect(litIds[0]).toEqual(state.selection.map(String).sort());
  });

  it("renders bar heights straight from the accuracy payload", () => {
    const { state, data } = runScript();
    const tree = renderApp(state, data);
    const epsIndex = accuracy.epsilons.indexOf(0.02);
    for (const bar of findAll(tree, byClass("robust"))) {
      expect(Number(bar.attrs["data-value"])).toBe(accuracy.robust[epsIndex]);
      expect(bar.attrs.height).toBe((accuracy.robust[epsIndex] * 100).toFixed(2));
    }
    for (const bar of findAll(tree, byClass("natural"))) {
      expect(Number(bar.attrs["data-value"])).toBe(accuracy.natural);
    }
  });

  it("gates steps: exactly the first three are visible after two plays", () => {
    const { state, data } = runScript();
    const tree = renderApp(state, data);
    const steps = findAll(tree, byClass("step"));
    expect(steps).toHaveLength(3); // 0 and 1 done, 2 revealed with its play button
    const buttons = findAll(tree, (n) => n.attrs["data-action"] === "play-step");
    expect(buttons).toHaveLength(1);
    expect(buttons[0].attrs["data-step"]).toBe("2");
  });

  it("correctly classified points get the same color on both halves", () => {
    const { state, data } = runScript();
    // the clean view still contains correctly classified representatives
    const cleared = {
      ...state, selection: [],
      epsilonIndex: accuracy.epsilons.indexOf(0.0),
    };
    const clean: AppData = { ...data, views: [viewEps0, viewEps0] };
    const tree = renderApp(cleared, clean);
    let checked = 0;
    for (const g of findAll(tree, byClass("pt"))) {
      if (g.attrs["data-true"] === g.attrs["data-pred"]) {
        const left = findAll(g, byClass("left"))[0];
        const right = findAll(g, byClass("right"))[0];
        expect(left.attrs.fill).toBe(right.attrs.fill);
        checked += 1;
      }
    }
    expect(checked).toBeGreaterThan(0);
  });

  it("hexbin layer appears only when toggled and mirrors the density payload", () => {
    const base = runScript();
    const without = findAll(renderApp(base.state, base.data), byClass("hexbin"));
    expect(without).toHaveLength(0);
    const toggled = { ...base.state, hexbin: true };
    const withHex = findAll(renderApp(toggled, base.data), byClass("hexbin"));
    expect(withHex).toHaveLength(2 * viewEps2.density.length);
  });
});
