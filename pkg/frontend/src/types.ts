/** Shapes of the bundle server's JSON responses. */

export interface ClassInfo {
  name: string;
  color: string;
}

export interface AttackInfo {
  model: string;
  attack: string;
  norm: string;
  epsilons: number[];
}

export interface Manifest {
  format: string;
  version: number;
  seed: number;
  instance_count: number;
  image_shape: number[];
  classes: ClassInfo[];
  true_labels: number[];
  models: string[];
  attacks: string[];
  artifacts: AttackInfo[];
}

export interface ViewPoint {
  id: number;
  x: number;
  y: number;
  true_label: number;
  prediction: number;
}

export interface DensityBin {
  cx: number;
  cy: number;
  count: number;
  radius_hint: number;
}

export interface ViewPayload {
  model: string;
  attack: string;
  epsilon: number;
  level: number;
  points: ViewPoint[];
  density: DensityBin[];
}

export interface AccuracyPayload {
  model: string;
  attack: string;
  natural: number;
  epsilons: number[];
  robust: number[];
}

export interface InstancePayload {
  id: number;
  model: string;
  attack: string;
  epsilon: number;
  true_label: number;
  true_label_name: string;
  clean_prediction: number;
  adv_prediction: number;
  clean_confidences: number[];
  adv_confidences: number[];
  original_png: string;
  adversarial_png: string;
  noise_png: string;
}
