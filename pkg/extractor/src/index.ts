export { DataError, UsageError } from "./errors.js";
export { extractPerplexities, extractVision } from "./extract.js";
export { readNetpbm, resize, walkImageDataset } from "./images.js";
export { languageModel, visionForward, visionModel } from "./models.js";
export { writePack, MANIFEST_VERSION } from "./pack.js";
export { DEFAULT_RECIPE, validateDropoutGrid,
         validateVisionRecipe } from "./recipe.js";
export type { ExtractionRecipe } from "./recipe.js";
export type { LayerOut, PackOut } from "./pack.js";
