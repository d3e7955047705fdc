#!/usr/bin/env node
/** Command-line entry point mirroring the extraction recipe as flags. */

import * as fs from "node:fs";
import { fileURLToPath } from "node:url";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { extractPerplexities, extractVision } from "./extract.js";
import { DEFAULT_RECIPE, ExtractionRecipe } from "./recipe.js";

function parseRates(text: string): number[] {
  if (text.trim() === "") return [];
  return text.split(",").map((s) => Number(s.trim()));
}

export async function main(argv: string[]): Promise<number> {
  let exitCode = 0;
  const parser = yargs(argv)
    .scriptName("lcprune-extract")
    .command(
      "vision",
      "pooled per-layer embeddings and labels from an image folder",
      (y) => y
        .option("model", { type: "string", default: DEFAULT_RECIPE.model })
        .option("data", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true })
        .option("taps", { type: "string", demandOption: true,
                          describe: "comma-separated stage names" })
        .option("input-size", { type: "number", default: DEFAULT_RECIPE.inputSize })
        .option("batch-size", { type: "number", default: DEFAULT_RECIPE.batchSize }),
      (args) => {
        const recipe: ExtractionRecipe = {
          ...DEFAULT_RECIPE,
          model: args.model,
          taps: args.taps.split(",").map((s) => s.trim()).filter(Boolean),
          inputSize: args["input-size"],
          batchSize: args["batch-size"],
        };
        const manifest = extractVision(recipe, args.data, args.out);
        console.log(manifest);
      })
    .command(
      "perplexity",
      "per-dropout-rate perplexity matrix from a line-per-sample text file",
      (y) => y
        .option("model", { type: "string", default: "reflm-16" })
        .option("data", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true })
        .option("rates", { type: "string", demandOption: true,
                           describe: "comma-separated dropout rates in (0,1)" })
        .option("seed", { type: "number", default: DEFAULT_RECIPE.seed }),
      (args) => {
        const recipe: ExtractionRecipe = {
          ...DEFAULT_RECIPE,
          model: args.model,
          dropoutRates: parseRates(args.rates),
          seed: args.seed,
        };
        const manifest = extractPerplexities(recipe, args.data, args.out);
        console.log(manifest);
      })
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      const error = err as (Error & { exitCode?: number }) | undefined;
      console.error(`error: ${error?.message ?? msg}`);
      exitCode = error?.exitCode ?? 2;
    });
  try {
    await parser.parseAsync();
  } catch (err) {
    if (exitCode === 0) {
      const error = err as Error & { exitCode?: number };
      console.error(`error: ${error.message}`);
      exitCode = error.exitCode ?? 2;
    }
  }
  return exitCode;
}

const entry = process.argv[1];
if (entry && fileURLToPath(import.meta.url) === fs.realpathSync(entry)) {
  main(hideBin(process.argv)).then((code) => process.exit(code));
}
