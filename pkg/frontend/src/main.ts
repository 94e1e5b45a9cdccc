/**
 * Browser bootstrap: wires fetched payloads and user events into the pure
 * render, and drives the 400 ms attack transition with rAF frames.
 */

import { interpolateBar, interpolatePoints, TRANSITION_MS } from "./animate.js";
import {
  fetchAccuracy, fetchInstance, fetchManifest, fetchView, LatestWins,
} from "./api.js";
import { AppData, asFrame, renderApp } from "./app.js";
import {
  initialState, pinInstance, playStep, finishStep, selectRegion, setMode,
  setSlider, toggleHexbin, toggleUseSelected, triggerAttack, ViewState,
  zoomToLevel,
} from "./state.js";
import type { Manifest, ViewPayload } from "./types.js";
import { toDom } from "./vdom.js";

const latest = new LatestWins();

async function boot() {
  const mount = document.getElementById("app");
  if (!mount) return;
  const root: HTMLElement = mount;
  const manifest: Manifest = await fetchManifest();
  const models = manifest.models;
  const pair: [string, string] = [models[0], models[1 % models.length]];
  const attack = manifest.artifacts[0].attack;
  const epsilons = manifest.artifacts[0].epsilons;
  let state: ViewState = initialState(pair, attack, epsilons);

  const levelCount = 4;

  async function loadViews(s: ViewState): Promise<[ViewPayload, ViewPayload]> {
    const eps = s.epsilons[s.epsilonIndex];
    const sides = await Promise.all(([0, 1] as const).map((side) =>
      fetchView(s.models[side], s.attack, eps,
                zoomToLevel(s.projectors[side].zoom, levelCount),
                s.projectors[side].viewport)));
    return [sides[0], sides[1]];
  }

  let data: AppData = {
    manifest,
    accuracy: [
      await fetchAccuracy(pair[0], attack),
      await fetchAccuracy(pair[1], attack),
    ],
    views: await loadViews(state),
    instance: null,
  };

  function draw() {
    const tree = renderApp(state, data);
    root.replaceChildren(toDom(tree, document));
  }

  async function refreshViews() {
    const views = await latest.run("views", loadViews(state));
    if (views) {
      data = { ...data, views, frames: undefined };
      draw();
    }
  }

  async function animateTo(newViews: [ViewPayload, ViewPayload],
                           fromIndex: number) {
    const before = data.views;
    const beforeBars = ([0, 1] as const).map(
      (s) => data.accuracy[s].robust[fromIndex]) as [number, number];
    const start = performance.now();
    const step = (now: number) => {
      const t = Math.min(1, (now - start) / TRANSITION_MS);
      data = {
        ...data,
        views: newViews,
        frames: [
          interpolatePoints(before[0].points, newViews[0].points, t),
          interpolatePoints(before[1].points, newViews[1].points, t),
        ],
        barHeights: [
          interpolateBar(beforeBars[0], data.accuracy[0].robust[state.epsilonIndex], t),
          interpolateBar(beforeBars[1], data.accuracy[1].robust[state.epsilonIndex], t),
        ],
      };
      draw();
      if (t < 1) requestAnimationFrame(step);
      else {
        data = { ...data, frames: undefined, barHeights: undefined };
        draw();
      }
    };
    requestAnimationFrame(step);
  }

  root.addEventListener("input", (ev) => {
    const el = ev.target as HTMLElement;
    if (el.dataset.action === "slide-epsilon") {
      state = setSlider(state, Number((el as HTMLInputElement).value));
      draw();
    }
  });

  root.addEventListener("click", async (ev) => {
    const el = (ev.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!el) return;
    const action = el.dataset.action;
    if (action === "trigger-attack") {
      const fromIndex = state.epsilonIndex;
      state = triggerAttack(state);
      const views = await latest.run("views", loadViews(state));
      if (views) animateTo(views, fromIndex);
      if (state.pinned !== null) {
        const inst = await latest.run("instance", fetchInstance(
          state.pinned, state.models[0], state.attack,
          state.epsilons[state.epsilonIndex]));
        if (inst) { data = { ...data, instance: inst }; }
      }
    } else if (action === "set-mode") {
      state = setMode(state, el.dataset.mode as "inspect" | "select");
      draw();
    } else if (action === "toggle-hexbin") {
      state = toggleHexbin(state);
      draw();
    } else if (action === "play-step") {
      const idx = Number(el.dataset.step);
      state = playStep(state, idx);
      draw();
      window.setTimeout(() => {
        state = finishStep(state, idx);
        draw();
      }, 800);
    } else if (action === "toggle-use-selected") {
      state = toggleUseSelected(state);
      draw();
    } else if (action === "pick-instance") {
      const id = Number(el.dataset.id);
      const svg = el.closest<SVGElement>("svg.projector");
      const side = Number(svg?.dataset.side ?? 0) as 0 | 1;
      const view = data.views[side];
      const point = view.points.find((p) => p.id === id);
      if (!point) return;
      if (state.mode === "select") {
        const pad = 0.02;
        state = selectRegion(state, {
          x0: point.x - pad, y0: point.y - pad,
          x1: point.x + pad, y1: point.y + pad,
        }, view.points);
        draw();
        return;
      }
      state = pinInstance(state, side, id, point);
      const inst = await latest.run("instance", fetchInstance(
        id, state.models[side], state.attack, state.epsilons[state.epsilonIndex]));
      if (inst) {
        data = { ...data, instance: inst };
        await refreshViews();
      }
    }
  });

  draw();
}

boot().catch((err) => {
  const root = document.getElementById("app");
  if (root) root.textContent = `failed to load bundle: ${err}`;
});
