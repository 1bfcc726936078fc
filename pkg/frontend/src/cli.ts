#!/usr/bin/env node
// embexport --in texts.txt --out texts.iemb [--model NAME]
//
// Exit codes mirror the workbench convention: 0 success, 2 usage or
// encoder-configuration error, 3 I/O error.

import { EncoderLoadError } from "./encoders.js";
import { EmptyInputError, exportEmbeddings } from "./export.js";

const USAGE = "usage: embexport --in texts.txt --out texts.iemb [--model NAME]";

interface Args {
  input: string;
  output: string;
  model?: string;
}

function parseArgs(argv: string[]): Args {
  let input: string | undefined;
  let output: string | undefined;
  let model: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--in") {
      input = argv[++i];
    } else if (arg === "--out") {
      output = argv[++i];
    } else if (arg === "--model") {
      model = argv[++i];
    } else if (arg === "--help" || arg === "-h") {
      console.log(USAGE);
      process.exit(0);
    } else {
      throw new Error(`unknown argument ${arg}`);
    }
  }
  if (!input || !output) {
    throw new Error("both --in and --out are required");
  }
  return { input, output, model };
}

async function main(): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(`${(err as Error).message}\n${USAGE}`);
    return 2;
  }
  try {
    const result = await exportEmbeddings(args.input, args.output, args.model);
    console.log(
      `wrote ${result.count} x ${result.dim} embeddings to ${result.outputPath} ` +
        `(+ ${result.sidecarPath})`,
    );
    return 0;
  } catch (err) {
    if (err instanceof EncoderLoadError) {
      console.error(`encoder error: ${err.message}`);
      return 2;
    }
    if (err instanceof EmptyInputError) {
      console.error(`input error: ${err.message}`);
      return 3;
    }
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`I/O error: ${(err as Error).message}`);
      return 3;
    }
    console.error(`error: ${(err as Error).message}`);
    return 3;
  }
}

main().then((code) => {
  process.exitCode = code;
});
