import { execFileSync } from "node:child_process";
import { createHash } from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

/** Write a tiny deterministic binary PGM (P5) image. */
export function writePgm(filePath: string, width: number, height: number,
                         seedByte: number): void {
  const header = Buffer.from(`P5\n${width} ${height}\n255\n`, "ascii");
  const pixels = Buffer.alloc(width * height);
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = (i * 31 + seedByte * 7) % 256;
  }
  fs.writeFileSync(filePath, Buffer.concat([header, pixels]));
}

/** root/<class>/<img>.pgm fixture with `perClass` images per class. */
export function makeImageDataset(root: string, classes: string[],
                                 perClass: number): void {
  classes.forEach((name, ci) => {
    const dir = path.join(root, name);
    fs.mkdirSync(dir, { recursive: true });
    for (let i = 0; i < perClass; i++) {
      writePgm(path.join(dir, `img${i}.pgm`), 20, 20, ci * 10 + i);
    }
  });
}

export function treeDigest(root: string): string {
  const hash = createHash("sha256");
  const walk = (dir: string) => {
    for (const name of fs.readdirSync(dir).sort()) {
      const full = path.join(dir, name);
      if (fs.statSync(full).isDirectory()) {
        walk(full);
      } else {
        hash.update(path.relative(root, full));
        hash.update(fs.readFileSync(full));
      }
    }
  };
  walk(root);
  return hash.digest("hex");
}

/** Load a manifest through the consumer toolkit and report its shape. */
export function loadThroughConsumer(manifestPath: string): {
  n: number; layers: number; digest: string; numSubnets: number | null;
} {
  const script = [
    "import json, sys",
    "from lcprune import load_pack",
    "p = load_pack(sys.argv[1])",
    "print(json.dumps({'n': p.n_samples, 'layers': p.num_layers,",
    "  'digest': p.digest(),",
    "  'numSubnets': None if p.perplexities is None else p.perplexities.shape[1]}))",
  ].join("\n");
  const out = execFileSync("python3", ["-c", script, manifestPath],
                           { encoding: "utf-8" });
  return JSON.parse(out);
}
