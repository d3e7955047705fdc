import * as fs from "node:fs";

import { DataError } from "./errors.js";
import { readNetpbm, resize, walkImageDataset } from "./images.js";
import { languageEmbedding, languageModel, perplexityUnderDropout,
         visionForward, visionModel } from "./models.js";
import { writePack, LayerOut } from "./pack.js";
import { ExtractionRecipe, validateDropoutGrid,
         validateVisionRecipe } from "./recipe.js";

/** Per-tap pooled embeddings plus folder-derived labels -> pack manifest. */
export function extractVision(recipe: ExtractionRecipe, datasetPath: string,
                              outDir: string): string {
  validateVisionRecipe(recipe);
  const spec = visionModel(recipe.model);
  const files = walkImageDataset(datasetPath);
  const n = files.length;
  const layers = new Map<string, { dim: number; rows: Float32Array[] }>();
  for (let start = 0; start < n; start += recipe.batchSize) {
    for (const file of files.slice(start, start + recipe.batchSize)) {
      const image = resize(readNetpbm(file.path), recipe.inputSize);
      const pooled = visionForward(spec, image, recipe.taps);
      for (const [tap, vec] of pooled) {
        let entry = layers.get(tap);
        if (!entry) {
          entry = { dim: vec.length, rows: [] };
          layers.set(tap, entry);
        }
        entry.rows.push(vec);
      }
    }
  }
  const layerOuts: LayerOut[] = recipe.taps.map((tap) => {
    const entry = layers.get(tap)!;
    const data = new Float32Array(n * entry.dim);
    entry.rows.forEach((row, i) => data.set(row, i * entry.dim));
    return { name: tap, dim: entry.dim, data };
  });
  const labels = Uint32Array.from(files.map((f) => f.label));
  return writePack({ nSamples: n, layers: layerOuts, labels }, outDir);
}

/** One perplexity column per dropout rate, plus a mean-embedding layer. */
export function extractPerplexities(recipe: ExtractionRecipe,
                                    textPath: string, outDir: string): string {
  validateDropoutGrid(recipe.dropoutRates);
  const spec = languageModel(recipe.model);
  let raw: string;
  try {
    raw = fs.readFileSync(textPath, "utf-8");
  } catch {
    throw new DataError(`dataset unreadable: ${textPath}`);
  }
  const samples = raw.split("\n").map((s) => s.trimEnd()).filter((s) => s.length > 0);
  if (samples.length === 0) {
    throw new DataError(`dataset has no text samples: ${textPath}`);
  }
  const n = samples.length;
  const rates = recipe.dropoutRates;
  const pp = new Float32Array(n * rates.length);
  const embedDim = spec.embedDim;
  const embeds = new Float32Array(n * embedDim);
  samples.forEach((text, i) => {
    embeds.set(languageEmbedding(spec, text), i * embedDim);
    rates.forEach((rate, j) => {
      pp[i * rates.length + j] =
        perplexityUnderDropout(spec, text, rate, i, recipe.seed);
    });
  });
  return writePack({
    nSamples: n,
    layers: [{ name: "embed", dim: embedDim, data: embeds }],
    perplexities: { numSubnets: rates.length, data: pp },
  }, outDir);
}
