import { DataError } from "./errors.js";

/** Everything needed to reproduce an extraction byte-for-byte. */
export interface ExtractionRecipe {
  /** registered reference-encoder id, e.g. "refnet-4" or "reflm-16" */
  model: string;
  /** named stages whose outputs are globally average-pooled to vectors */
  taps: string[];
  /** square input resolution images are resized to (vision only) */
  inputSize: number;
  /** dropout-rate grid for perplexity subnets, each strictly in (0,1) */
  dropoutRates: number[];
  /** samples processed per chunk; affects memory only, never output */
  batchSize: number;
  /** base seed mixed into every dropout mask */
  seed: number;
}

export const DEFAULT_RECIPE: ExtractionRecipe = {
  model: "refnet-4",
  taps: [],
  inputSize: 16,
  dropoutRates: [],
  batchSize: 32,
  seed: 0,
};

export function validateVisionRecipe(recipe: ExtractionRecipe): void {
  if (recipe.taps.length === 0) {
    throw new DataError("recipe needs at least one tap point");
  }
  if (!Number.isInteger(recipe.inputSize) || recipe.inputSize < 4) {
    throw new DataError(`input size must be an integer >= 4, got ${recipe.inputSize}`);
  }
  if (recipe.batchSize < 1) {
    throw new DataError(`batch size must be >= 1, got ${recipe.batchSize}`);
  }
}

export function validateDropoutGrid(rates: number[]): void {
  if (rates.length === 0) {
    throw new DataError("dropout grid is empty");
  }
  for (const r of rates) {
    if (!(r > 0 && r < 1)) {
      throw new DataError(`dropout rate ${r} outside (0,1)`);
    }
  }
}
