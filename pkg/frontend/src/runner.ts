import { spawnSync } from "node:child_process";

export interface CliResult {
  /** process exit code; null means the process could not be launched */
  status: number | null;
  stdout: string;
  stderr: string;
}

/**
 * Run the omnievent CLI synchronously.
 *
 * `OMNIEVENT_BIN` selects the executable (used verbatim, no fallback);
 * otherwise the `omnievent` console script is tried first and `python3 -m
 * omnievent` second. `OMNIEVENT_SEED` is stripped from the child
 * environment so results depend only on the arguments and config text.
 */
export function runCli(args: string[]): CliResult {
  const env = { ...process.env };
  delete env.OMNIEVENT_SEED;

  const override = env.OMNIEVENT_BIN;
  if (override) {
    return launch(override, args, env);
  }
  const direct = launch("omnievent", args, env);
  if (direct.status === null) {
    return launch("python3", ["-m", "omnievent", ...args], env);
  }
  return direct;
}

function launch(bin: string, args: string[], env: NodeJS.ProcessEnv): CliResult {
  const proc = spawnSync(bin, args, { env, encoding: "utf8" });
  if (proc.error || proc.status === null) {
    return {
      status: null,
      stdout: proc.stdout ?? "",
      stderr: proc.error ? String(proc.error) : (proc.stderr ?? ""),
    };
  }
  return { status: proc.status, stdout: proc.stdout, stderr: proc.stderr };
}
