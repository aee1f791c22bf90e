/**
 * Subprocess plumbing: every bound operation round-trips through the
 * toolkit's command-line interface and file formats, so the bindings
 * stay a thin façade and the primary implementation remains the single
 * source of truth. Temp trees are cleaned up unconditionally.
 */

import { execFile } from "node:child_process";
import { mkdtemp, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Override with the MASKFUSE_BIN environment variable when needed. */
export function maskfuseBinary(): string {
  return process.env.MASKFUSE_BIN ?? "maskfuse";
}

export class MaskfuseCliError extends Error {
  constructor(
    readonly exitCode: number,
    readonly args: string[],
    stderr: string,
  ) {
    // surface the primary's own message (stderr carries "error: ...")
    super(stderr.trim() || `maskfuse ${args.join(" ")} exited with code ${exitCode}`);
    this.name = "MaskfuseCliError";
  }
}

export function runCli(args: string[]): Promise<string> {
  return new Promise((resolve, reject) => {
    execFile(
      maskfuseBinary(),
      args,
      { maxBuffer: 256 * 1024 * 1024 },
      (error, stdout, stderr) => {
        if (error) {
          const code = typeof error.code === "number" ? error.code : 1;
          reject(new MaskfuseCliError(code, args, stderr));
        } else {
          resolve(stdout);
        }
      },
    );
  });
}

export async function withTempDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = await mkdtemp(join(tmpdir(), "maskfuse-"));
  try {
    return await fn(dir);
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
}
