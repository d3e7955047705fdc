/** Error taxonomy mirrored from the consumer toolkit's CLI contract:
 * usage errors exit 2, data/recipe validation errors exit 3. */

export class UsageError extends Error {
  readonly exitCode = 2;
}

export class DataError extends Error {
  readonly exitCode = 3;
}
