/**
 * ViewState and its pure transitions.
 *
 * Structural invariants: the two projectors share one attack and one
 * epsilon index (single fields), and one selection set highlights the same
 * instances in both. All transitions return fresh state objects.
 */

export type Mode = "inspect" | "select";

export interface Viewport {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface ProjectorView {
  zoom: number;
  viewport: Viewport;
}

export interface ViewState {
  models: [string, string];
  attack: string;
  epsilonIndex: number;      // committed level currently displayed
  sliderIndex: number;       // slider position, applied by the attack button
  epsilons: number[];
  mode: Mode;
  selection: number[];       // sorted ids, mirrored across both projectors
  hexbin: boolean;
  pinned: number | null;
  projectors: [ProjectorView, ProjectorView];
  steps: { completed: number; playing: number | null; useSelected: boolean };
}

export const FULL_VIEW: Viewport = { x0: 0, y0: 0, x1: 1, y1: 1 };

export function initialState(
  models: [string, string],
  attack: string,
  epsilons: number[],
): ViewState {
  return {
    models,
    attack,
    epsilonIndex: 0,
    sliderIndex: 0,
    epsilons,
    mode: "inspect",
    selection: [],
    hexbin: false,
    pinned: null,
    projectors: [
      { zoom: 1, viewport: { ...FULL_VIEW } },
      { zoom: 1, viewport: { ...FULL_VIEW } },
    ],
    steps: { completed: 0, playing: null, useSelected: false },
  };
}

/** Zoom scale to cube level: level = clamp(floor(log2(zoom)), 0, levels-1). */
export function zoomToLevel(zoom: number, levelCount: number): number {
  const raw = Math.floor(Math.log2(Math.max(zoom, 1)));
  return Math.max(0, Math.min(levelCount - 1, raw));
}

export function setSlider(state: ViewState, index: number): ViewState {
  const clamped = Math.max(0, Math.min(state.epsilons.length - 1, index));
  return { ...state, sliderIndex: clamped };
}

/** The attack button: commit the slider's epsilon to both projectors. */
export function triggerAttack(state: ViewState): ViewState {
  return { ...state, epsilonIndex: state.sliderIndex };
}

export function setAttack(state: ViewState, attack: string, epsilons: number[]): ViewState {
  return {
    ...state, attack, epsilons,
    epsilonIndex: 0, sliderIndex: 0,
    steps: { ...state.steps, completed: 0, playing: null },
  };
}

export function setMode(state: ViewState, mode: Mode): ViewState {
  return mode === state.mode ? state : { ...state, mode };
}

export function toggleHexbin(state: ViewState): ViewState {
  return { ...state, hexbin: !state.hexbin };
}

/** Region selection: the same id set highlights in both projectors. */
export function selectRegion(
  state: ViewState,
  region: Viewport,
  points: { id: number; x: number; y: number }[],
): ViewState {
  const ids = points
    .filter((p) => p.x >= region.x0 && p.x <= region.x1 && p.y >= region.y0 && p.y <= region.y1)
    .map((p) => p.id)
    .sort((a, b) => a - b);
  return { ...state, selection: ids };
}

export function clearSelection(state: ViewState): ViewState {
  return { ...state, selection: [] };
}

/** Pin an instance: enlarge it and pan that projector to recenter it. */
export function pinInstance(
  state: ViewState,
  side: 0 | 1,
  id: number,
  at: { x: number; y: number },
): ViewState {
  const view = state.projectors[side];
  const w = view.viewport.x1 - view.viewport.x0;
  const hgt = view.viewport.y1 - view.viewport.y0;
  let x0 = at.x - w / 2;
  let y0 = at.y - hgt / 2;
  x0 = Math.max(0, Math.min(1 - w, x0));
  y0 = Math.max(0, Math.min(1 - hgt, y0));
  const projectors: [ProjectorView, ProjectorView] = [
    { ...state.projectors[0] },
    { ...state.projectors[1] },
  ];
  projectors[side] = { zoom: view.zoom, viewport: { x0, y0, x1: x0 + w, y1: y0 + hgt } };
  return { ...state, pinned: id, projectors };
}

export function zoomProjector(state: ViewState, side: 0 | 1, zoom: number,
                              center: { x: number; y: number }): ViewState {
  const z = Math.max(1, zoom);
  const w = 1 / z;
  let x0 = center.x - w / 2;
  let y0 = center.y - w / 2;
  x0 = Math.max(0, Math.min(1 - w, x0));
  y0 = Math.max(0, Math.min(1 - w, y0));
  const projectors: [ProjectorView, ProjectorView] = [
    { ...state.projectors[0] },
    { ...state.projectors[1] },
  ];
  projectors[side] = { zoom: z, viewport: { x0, y0, x1: x0 + w, y1: y0 + w } };
  return { ...state, projectors };
}

/** Step-by-step gating: step k+1 stays hidden until step k has played. */
export function playStep(state: ViewState, step: number): ViewState {
  if (step > state.steps.completed) return state; // locked
  return { ...state, steps: { ...state.steps, playing: step } };
}

export function finishStep(state: ViewState, step: number): ViewState {
  if (step !== state.steps.playing) return state;
  return {
    ...state,
    steps: {
      ...state.steps,
      playing: null,
      completed: Math.max(state.steps.completed, step + 1),
    },
  };
}

export function toggleUseSelected(state: ViewState): ViewState {
  return { ...state, steps: { ...state.steps, useSelected: !state.steps.useSelected } };
}
