// Spawns the real session service on a scratch copy of a fixture package so
// tests exercise the actual HTTP surface, not a mock.

import { type ChildProcess, spawn } from "node:child_process";
import { cpSync, mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const HERE = dirname(fileURLToPath(import.meta.url));
const FIXTURES = join(HERE, "..", "..", "tests", "fixtures", "scan");

export interface LiveService {
  base: string;
  auditFile: string;
  pkgDir: string;
  stop(): void;
}

export async function startService(
  fixture: string,
  opts: { defaultAudit?: boolean } = {},
): Promise<LiveService> {
  const work = mkdtempSync(join(tmpdir(), "effaudit-ui-"));
  const pkgDir = join(work, fixture);
  cpSync(join(FIXTURES, fixture), pkgDir, { recursive: true });
  const auditFile = join(work, "session.audit.json");

  const args = ["serve", pkgDir, "--audit-file", auditFile, "--port", "0"];
  if (opts.defaultAudit) args.push("--default");
  const child: ChildProcess = spawn("effaudit", args, {
    env: { ...process.env, PYTHONUNBUFFERED: "1" },
    stdio: ["ignore", "pipe", "pipe"],
  });

  const base = await new Promise<string>((resolve, reject) => {
    let buf = "";
    const timer = setTimeout(
      () => reject(new Error(`service did not start:\n${buf}`)),
      20000,
    );
    child.stdout?.on("data", (chunk: Buffer) => {
      buf += chunk.toString();
      const m = buf.match(/http:\/\/127\.0\.0\.1:(\d+)\//);
      if (m) {
        clearTimeout(timer);
        resolve(`http://127.0.0.1:${m[1]}`);
      }
    });
    child.stderr?.on("data", (chunk: Buffer) => {
      buf += chunk.toString();
    });
    child.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early (${code}):\n${buf}`));
    });
  });

  return {
    base,
    auditFile,
    pkgDir,
    stop() {
      child.kill("SIGINT");
      rmSync(work, { recursive: true, force: true });
    },
  };
}

export interface AuditFileJson {
  format_version: number;
  package: string;
  fingerprint: string;
  status: string;
  items: Array<{ id: string; annotation: string | null; origin: string }>;
  exported_cc: string[];
}

export function readAuditFile(path: string): AuditFileJson {
  return JSON.parse(readFileSync(path, "utf-8")) as AuditFileJson;
}
