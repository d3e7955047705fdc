/** Writer for the consumer toolkit's on-disk pack format.
 *
 * Layout contract: headerless little-endian float32 matrices (row-major),
 * uint32 labels, and a `pack.json` manifest (version 1) carrying all shape
 * metadata. Files are written to a temp name and renamed so a crash never
 * leaves a partial pack behind.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { DataError } from "./errors.js";

export const MANIFEST_VERSION = 1;

export interface LayerOut {
  name: string;
  dim: number;
  /** n_samples * dim values, row-major */
  data: Float32Array;
}

export interface PackOut {
  nSamples: number;
  layers: LayerOut[];
  labels?: Uint32Array;
  perplexities?: { numSubnets: number; data: Float32Array };
  split?: string;
}

function writeAtomic(filePath: string, bytes: Uint8Array | string): void {
  const tmp = `${filePath}.tmp`;
  fs.writeFileSync(tmp, bytes);
  fs.renameSync(tmp, filePath);
}

function toLeBytes(values: Float32Array | Uint32Array): Uint8Array {
  const out = new Uint8Array(values.length * 4);
  const view = new DataView(out.buffer);
  if (values instanceof Float32Array) {
    values.forEach((v, i) => view.setFloat32(i * 4, v, true));
  } else {
    values.forEach((v, i) => view.setUint32(i * 4, v, true));
  }
  return out;
}

/** Write the pack under outDir; returns the manifest path. */
export function writePack(pack: PackOut, outDir: string): string {
  if (pack.layers.length === 0) {
    throw new DataError("pack has no layers");
  }
  for (const layer of pack.layers) {
    if (layer.data.length !== pack.nSamples * layer.dim) {
      throw new DataError(
        `layer ${layer.name}: ${layer.data.length} values, ` +
        `expected ${pack.nSamples}x${layer.dim}`);
    }
  }
  fs.mkdirSync(outDir, { recursive: true });
  const manifest: Record<string, unknown> = {
    version: MANIFEST_VERSION,
    n_samples: pack.nSamples,
    split: pack.split ?? "unsplit",
    layers: [] as Record<string, unknown>[],
  };
  for (const layer of pack.layers) {
    const file = `layer_${layer.name}.f32`;
    writeAtomic(path.join(outDir, file), toLeBytes(layer.data));
    (manifest.layers as Record<string, unknown>[]).push(
      { name: layer.name, dim: layer.dim, file });
  }
  if (pack.labels) {
    if (pack.labels.length !== pack.nSamples) {
      throw new DataError("labels: wrong length");
    }
    writeAtomic(path.join(outDir, "labels.u32"), toLeBytes(pack.labels));
    manifest.labels = { file: "labels.u32" };
  }
  if (pack.perplexities) {
    const { numSubnets, data } = pack.perplexities;
    if (data.length !== pack.nSamples * numSubnets) {
      throw new DataError("perplexities: wrong shape");
    }
    writeAtomic(path.join(outDir, "perplexities.f32"), toLeBytes(data));
    manifest.perplexities = { num_subnets: numSubnets, file: "perplexities.f32" };
  }
  const manifestPath = path.join(outDir, "pack.json");
  writeAtomic(manifestPath, JSON.stringify(manifest, null, 2) + "\n");
  return manifestPath;
}
