/** Minimal PGM/PPM (P5/P6) reader and folder-per-class dataset walker. */

import * as fs from "node:fs";
import * as path from "node:path";

import { DataError } from "./errors.js";

export interface Image {
  width: number;
  height: number;
  channels: number;
  /** HWC order, normalized to [0,1] */
  pixels: Float32Array;
}

export function readNetpbm(filePath: string): Image {
  const bytes = fs.readFileSync(filePath);
  const magic = bytes.subarray(0, 2).toString("ascii");
  if (magic !== "P5" && magic !== "P6") {
    throw new DataError(`${filePath}: unsupported image magic ${magic}`);
  }
  const channels = magic === "P5" ? 1 : 3;
  // header: magic, width, height, maxval — whitespace/comment separated
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < bytes.length && /\s/.test(String.fromCharCode(bytes[pos]))) pos++;
    if (bytes[pos] === 0x23) { // '#' comment to end of line
      while (pos < bytes.length && bytes[pos] !== 0x0a) pos++;
      continue;
    }
    let token = "";
    while (pos < bytes.length && !/\s/.test(String.fromCharCode(bytes[pos]))) {
      token += String.fromCharCode(bytes[pos++]);
    }
    const value = Number(token);
    if (!Number.isInteger(value) || value <= 0) {
      throw new DataError(`${filePath}: bad header token ${token}`);
    }
    fields.push(value);
  }
  pos++; // single whitespace after maxval
  const [width, height, maxval] = fields;
  const count = width * height * channels;
  if (bytes.length - pos < count) {
    throw new DataError(`${filePath}: truncated pixel data`);
  }
  const pixels = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    pixels[i] = Math.fround(bytes[pos + i] / maxval);
  }
  return { width, height, channels, pixels };
}

/** Nearest-neighbor resize to size x size (channels preserved). */
export function resize(img: Image, size: number): Image {
  if (img.width === size && img.height === size) return img;
  const pixels = new Float32Array(size * size * img.channels);
  for (let y = 0; y < size; y++) {
    const sy = Math.min(img.height - 1, Math.floor((y * img.height) / size));
    for (let x = 0; x < size; x++) {
      const sx = Math.min(img.width - 1, Math.floor((x * img.width) / size));
      for (let c = 0; c < img.channels; c++) {
        pixels[(y * size + x) * img.channels + c] =
          img.pixels[(sy * img.width + sx) * img.channels + c];
      }
    }
  }
  return { width: size, height: size, channels: img.channels, pixels };
}

export interface LabeledFile {
  path: string;
  label: number;
  className: string;
}

/** Datasets are root/<class>/<image>; labels follow sorted class names. */
export function walkImageDataset(root: string): LabeledFile[] {
  let entries: fs.Dirent[];
  try {
    entries = fs.readdirSync(root, { withFileTypes: true });
  } catch {
    throw new DataError(`dataset unreadable: ${root}`);
  }
  const classes = entries.filter((e) => e.isDirectory())
    .map((e) => e.name).sort();
  if (classes.length === 0) {
    throw new DataError(`dataset has no class subdirectories: ${root}`);
  }
  const files: LabeledFile[] = [];
  classes.forEach((className, label) => {
    const names = fs.readdirSync(path.join(root, className))
      .filter((n) => /\.(pgm|ppm)$/i.test(n)).sort();
    for (const name of names) {
      files.push({ path: path.join(root, className, name), label, className });
    }
  });
  if (files.length === 0) {
    throw new DataError(`dataset has no .pgm/.ppm images: ${root}`);
  }
  return files;
}
