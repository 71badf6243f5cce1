/** Readers for the engine's documented CSV formats and metadata sidecars. */

import { existsSync, readFileSync } from "fs";
import { basename } from "path";

export const TRAJECTORY_HEADER =
  "n,t,re_g11,im_g11,re_g12,im_g12,re_g21,im_g21,re_g22,im_g22,obs";
export const VARIANCE_HEADER = "n,t,var_dyson,var_btb,ratio";
export const AMPLITUDE_HEADER = "dtau,abs_b";

export class FormatError extends Error {}

export interface Trajectory {
  path: string;
  label: string;
  t: number[];
  obs: number[];
}

export interface VarianceCurves {
  path: string;
  t: number[];
  varDyson: number[];
  varBtb: number[];
  ratio: number[];
}

export interface AmplitudeCurve {
  path: string;
  label: string;
  dtau: number[];
  absB: number[];
}

interface Table {
  header: string;
  rows: number[][];
}

function readTable(path: string, expectedHeader: string, minRows = 2): Table {
  if (!existsSync(path)) {
    throw new FormatError(`${path}: file not found`);
  }
  const lines = readFileSync(path, "utf8").trim().split(/\r?\n/);
  if (lines.length === 0 || lines[0].trim() !== expectedHeader) {
    throw new FormatError(
      `${path}: unexpected header (want "${expectedHeader}")`,
    );
  }
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",").map(Number);
    if (cells.length !== expectedHeader.split(",").length) {
      throw new FormatError(`${path}: row ${i + 2} has ${cells.length} cells`);
    }
    return cells;
  });
  if (rows.length < minRows) {
    throw new FormatError(
      `${path}: only ${rows.length} data rows (need at least ${minRows})`,
    );
  }
  return { header: lines[0], rows };
}

function readMeta(path: string): Record<string, unknown> | null {
  const side = `${path}.meta.json`;
  if (!existsSync(side)) return null;
  try {
    return JSON.parse(readFileSync(side, "utf8"));
  } catch {
    throw new FormatError(`${side}: invalid JSON sidecar`);
  }
}

/** Label preference: explicit sidecar label, then (method, order), then file name. */
function labelFromMeta(path: string): string {
  const meta = readMeta(path);
  if (meta) {
    if (typeof meta.label === "string") return meta.label;
    const config = meta.config as Record<string, unknown> | undefined;
    if (config && typeof config.method === "string") {
      const order = typeof config.mbar === "number" ? `, M=${config.mbar}` : "";
      return `${config.method}${order}`;
    }
  }
  return basename(path).replace(/\.csv$/, "");
}

export function readTrajectory(path: string): Trajectory {
  const { rows } = readTable(path, TRAJECTORY_HEADER);
  return {
    path,
    label: labelFromMeta(path),
    t: rows.map((r) => r[1]),
    obs: rows.map((r) => r[10]),
  };
}

export function readVariance(path: string): VarianceCurves {
  const { rows } = readTable(path, VARIANCE_HEADER);
  return {
    path,
    t: rows.map((r) => r[1]),
    varDyson: rows.map((r) => r[2]),
    varBtb: rows.map((r) => r[3]),
    ratio: rows.map((r) => r[4]),
  };
}

export function readAmplitude(path: string): AmplitudeCurve {
  const { rows } = readTable(path, AMPLITUDE_HEADER);
  return {
    path,
    label: labelFromMeta(path),
    dtau: rows.map((r) => r[0]),
    absB: rows.map((r) => r[1]),
  };
}
