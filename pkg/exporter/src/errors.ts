export class ExporterError extends Error {}

/** A weight-file slot had no usable tensor in the checkpoint. */
export class UnmatchedSlotError extends ExporterError {
  readonly missing: string[];

  constructor(missing: string[]) {
    super(`unmatched weight slots: ${missing.join(', ')}`);
    this.missing = missing;
  }
}

/** A matched tensor's shape differs from what the slot requires. */
export class ShapeMismatchError extends ExporterError {
  constructor(slot: string, expected: number[], actual: number[]) {
    super(
      `${slot}: checkpoint tensor has shape [${actual.join('x')}], ` +
        `slot requires [${expected.join('x')}]`,
    );
  }
}

/** Malformed checkpoint, name map, or weight file. */
export class FormatError extends ExporterError {}
