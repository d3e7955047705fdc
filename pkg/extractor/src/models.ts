/** Reference encoders behind the model-id registry.
 *
 * These are deterministic seeded networks (weights derived from the model
 * id), standing in for pretrained checkpoints so the recipe, format, and
 * determinism contracts are exercised end to end without downloads. A real
 * backend plugs in behind the same stage/tap interface.
 */

import { DataError } from "./errors.js";
import { Image } from "./images.js";
import { dropoutMask, seededWeights } from "./rng.js";

export interface VisionModelSpec {
  id: string;
  /** stage names in forward order with their output channel counts */
  stages: { name: string; channels: number }[];
}

export interface LanguageModelSpec {
  id: string;
  embedDim: number;
  hiddenDim: number;
  vocabSize: number;
  hasDropout: boolean;
}

const VISION_MODELS: Record<string, VisionModelSpec> = {
  "refnet-4": {
    id: "refnet-4",
    stages: [
      { name: "stage1", channels: 4 },
      { name: "stage2", channels: 8 },
      { name: "stage3", channels: 16 },
      { name: "stage4", channels: 32 },
    ],
  },
  "refnet-2": {
    id: "refnet-2",
    stages: [
      { name: "stage1", channels: 6 },
      { name: "stage2", channels: 12 },
    ],
  },
};

const LANGUAGE_MODELS: Record<string, LanguageModelSpec> = {
  "reflm-16": {
    id: "reflm-16", embedDim: 16, hiddenDim: 32, vocabSize: 128,
    hasDropout: true,
  },
  "reflm-frozen": {
    id: "reflm-frozen", embedDim: 16, hiddenDim: 32, vocabSize: 128,
    hasDropout: false,
  },
};

export function visionModel(id: string): VisionModelSpec {
  const spec = VISION_MODELS[id];
  if (!spec) {
    throw new DataError(
      `unknown vision model ${id}; available: ${Object.keys(VISION_MODELS).sort().join(", ")}`);
  }
  return spec;
}

export function languageModel(id: string): LanguageModelSpec {
  const spec = LANGUAGE_MODELS[id];
  if (!spec) {
    throw new DataError(
      `unknown language model ${id}; available: ${Object.keys(LANGUAGE_MODELS).sort().join(", ")}`);
  }
  return spec;
}

interface FeatureMap {
  size: number;
  channels: number;
  /** HWC */
  data: Float32Array;
}

/** 3x3 seeded conv (same padding) + ReLU + 2x2 average pool. */
function runStage(input: FeatureMap, outChannels: number,
                  modelId: string, stageName: string): FeatureMap {
  const { size, channels, data } = input;
  const scale = Math.fround(1 / Math.sqrt(9 * channels));
  const weights = seededWeights(outChannels * channels * 9, scale,
                                modelId, stageName, "conv");
  const conv = new Float32Array(size * size * outChannels);
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      for (let o = 0; o < outChannels; o++) {
        let acc = 0;
        for (let dy = -1; dy <= 1; dy++) {
          const sy = y + dy;
          if (sy < 0 || sy >= size) continue;
          for (let dx = -1; dx <= 1; dx++) {
            const sx = x + dx;
            if (sx < 0 || sx >= size) continue;
            const tap = ((dy + 1) * 3 + dx + 1) * channels;
            const px = (sy * size + sx) * channels;
            for (let c = 0; c < channels; c++) {
              acc += weights[(o * 9 * channels) + tap + c] * data[px + c];
            }
          }
        }
        conv[(y * size + x) * outChannels + o] = Math.fround(Math.max(0, acc));
      }
    }
  }
  const half = Math.max(1, size >> 1);
  const pooled = new Float32Array(half * half * outChannels);
  for (let y = 0; y < half; y++) {
    for (let x = 0; x < half; x++) {
      for (let o = 0; o < outChannels; o++) {
        let acc = 0;
        let cnt = 0;
        for (let dy = 0; dy < 2; dy++) {
          for (let dx = 0; dx < 2; dx++) {
            const sy = y * 2 + dy;
            const sx = x * 2 + dx;
            if (sy >= size || sx >= size) continue;
            acc += conv[(sy * size + sx) * outChannels + o];
            cnt++;
          }
        }
        pooled[(y * half + x) * outChannels + o] = Math.fround(acc / cnt);
      }
    }
  }
  return { size: half, channels: outChannels, data: pooled };
}

function globalAveragePool(fm: FeatureMap): Float32Array {
  const out = new Float32Array(fm.channels);
  const area = fm.size * fm.size;
  for (let i = 0; i < area; i++) {
    for (let c = 0; c < fm.channels; c++) {
      out[c] += fm.data[i * fm.channels + c];
    }
  }
  for (let c = 0; c < fm.channels; c++) {
    out[c] = Math.fround(out[c] / area);
  }
  return out;
}

/** Run the encoder once, returning the pooled vector at each tap point. */
export function visionForward(spec: VisionModelSpec, image: Image,
                              taps: string[]): Map<string, Float32Array> {
  const known = spec.stages.map((s) => s.name);
  for (const tap of taps) {
    if (!known.includes(tap)) {
      throw new DataError(
        `unknown tap point ${tap}; available stages: ${known.join(", ")}`);
    }
  }
  let fm: FeatureMap = {
    size: image.width, channels: image.channels, data: image.pixels,
  };
  const out = new Map<string, Float32Array>();
  for (const stage of spec.stages) {
    fm = runStage(fm, stage.channels, spec.id, stage.name);
    if (taps.includes(stage.name)) {
      out.set(stage.name, globalAveragePool(fm));
    }
  }
  return out;
}

function softmaxLogProb(logits: Float32Array, index: number): number {
  let max = -Infinity;
  for (const v of logits) max = Math.max(max, v);
  let sum = 0;
  for (const v of logits) sum += Math.exp(v - max);
  return logits[index] - max - Math.log(sum);
}

/** Mean character embedding, used as the pack's single feature layer. */
export function languageEmbedding(spec: LanguageModelSpec,
                                  text: string): Float32Array {
  const embed = seededWeights(spec.vocabSize * spec.embedDim, 0.5,
                              spec.id, "embed");
  const out = new Float32Array(spec.embedDim);
  for (let i = 0; i < text.length; i++) {
    const code = text.charCodeAt(i) % spec.vocabSize;
    for (let d = 0; d < spec.embedDim; d++) {
      out[d] += embed[code * spec.embedDim + d];
    }
  }
  for (let d = 0; d < spec.embedDim; d++) {
    out[d] = Math.fround(out[d] / Math.max(1, text.length));
  }
  return out;
}

/** Next-character perplexity of `text` under one dropout subnet.
 *
 * The mask is seeded per (rate, sample) so a rerun of the same recipe is
 * bit-identical: hidden units are dropped with inverted scaling, then a
 * seeded linear head scores the next character.
 */
export function perplexityUnderDropout(spec: LanguageModelSpec, text: string,
                                       rate: number, sampleIndex: number,
                                       baseSeed: number): number {
  if (!spec.hasDropout) {
    throw new DataError(`model ${spec.id} has no dropout layers`);
  }
  if (text.length < 2) {
    throw new DataError("text sample needs at least 2 characters");
  }
  const embed = seededWeights(spec.vocabSize * spec.embedDim, 0.5,
                              spec.id, "embed");
  const w1 = seededWeights(spec.embedDim * spec.hiddenDim,
                           Math.fround(1 / Math.sqrt(spec.embedDim)),
                           spec.id, "w1");
  const w2 = seededWeights(spec.hiddenDim * spec.vocabSize,
                           Math.fround(1 / Math.sqrt(spec.hiddenDim)),
                           spec.id, "w2");
  const mask = dropoutMask(spec.hiddenDim, rate,
                           baseSeed, "rate", rate, "sample", sampleIndex);
  let nll = 0;
  for (let pos = 0; pos + 1 < text.length; pos++) {
    const code = text.charCodeAt(pos) % spec.vocabSize;
    const next = text.charCodeAt(pos + 1) % spec.vocabSize;
    const hidden = new Float32Array(spec.hiddenDim);
    for (let h = 0; h < spec.hiddenDim; h++) {
      let acc = 0;
      for (let d = 0; d < spec.embedDim; d++) {
        acc += embed[code * spec.embedDim + d] * w1[d * spec.hiddenDim + h];
      }
      hidden[h] = Math.fround(Math.max(0, acc) * mask[h]);
    }
    const logits = new Float32Array(spec.vocabSize);
    for (let v = 0; v < spec.vocabSize; v++) {
      let acc = 0;
      for (let h = 0; h < spec.hiddenDim; h++) {
        acc += hidden[h] * w2[h * spec.vocabSize + v];
      }
      logits[v] = Math.fround(acc);
    }
    nll -= softmaxLogProb(logits, next);
  }
  return Math.fround(Math.exp(nll / (text.length - 1)));
}
