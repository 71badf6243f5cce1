/** The four figure kinds, each a pure CSV-to-SVG-string function. */

import {
  AmplitudeCurve,
  FormatError,
  readAmplitude,
  readTrajectory,
  readVariance,
} from "./csv";
import {
  SvgDoc,
  Panel,
  color,
  extent,
  linearScale,
  logScale,
  padded,
} from "./svg";

export type FigureKind = "trajectory" | "variance" | "ratio" | "b_amplitude";

export const KINDS: FigureKind[] = [
  "trajectory",
  "variance",
  "ratio",
  "b_amplitude",
];

const W = 640;
const H = 420;
const MARGIN = { left: 72, right: 20, top: 36, bottom: 52 };

function panelRect(top: number, height: number): Panel {
  return {
    x: MARGIN.left,
    y: top,
    width: W - MARGIN.left - MARGIN.right,
    height,
  };
}

export function renderTrajectory(paths: string[]): string {
  const curves = paths.map(readTrajectory);
  const doc = new SvgDoc(W, H);
  const panel: Panel = {
    ...panelRect(MARGIN.top, H - MARGIN.top - MARGIN.bottom),
    title: "observable expectation",
    xLabel: "t",
    yLabel: "<O(t)>",
  };
  const xdom = padded(extent(curves.flatMap((c) => c.t)), 0.02);
  const ydom = padded(extent(curves.flatMap((c) => c.obs)));
  const xs = linearScale(xdom[0], xdom[1], panel.x, panel.x + panel.width);
  const ys = linearScale(ydom[0], ydom[1], panel.y + panel.height, panel.y);
  doc.axes(panel, xs, ys);
  curves.forEach((c, i) => doc.line(c.t, c.obs, xs, ys, color(i)));
  doc.legend(
    panel.x + 10,
    panel.y + 18,
    curves.map((c, i) => [c.label, color(i)]),
  );
  return doc.render();
}

function renderVariancePanels(paths: string[], withRatio: boolean): string {
  if (paths.length !== 1) {
    throw new FormatError(
      `variance figures take exactly one harness CSV, got ${paths.length}`,
    );
  }
  const data = readVariance(paths[0]);
  const doc = new SvgDoc(W, withRatio ? 640 : H);

  const varPanel: Panel = {
    ...panelRect(MARGIN.top, withRatio ? 240 : H - MARGIN.top - MARGIN.bottom),
    title: "empirical variance",
    xLabel: withRatio ? undefined : "t",
    yLabel: "Var",
  };
  const xdom = padded(extent(data.t), 0.02);
  const xs = linearScale(xdom[0], xdom[1], varPanel.x, varPanel.x + varPanel.width);
  const positive = data.varDyson
    .concat(data.varBtb)
    .filter((v) => Number.isFinite(v) && v > 0);
  if (positive.length === 0) {
    throw new FormatError(`${data.path}: variance columns have no positive entries`);
  }
  const [vlo, vhi] = extent(positive);
  const ys = logScale(
    Math.max(vlo, vhi * 1e-8),
    vhi,
    varPanel.y + varPanel.height,
    varPanel.y,
  );
  doc.axes(varPanel, xs, ys);
  const clip = (vals: number[]) =>
    vals.map((v) => (v > 0 ? Math.max(v, ys.domain[0]) : NaN));
  doc.line(data.t, clip(data.varDyson), xs, ys, color(0));
  doc.line(data.t, clip(data.varBtb), xs, ys, color(1));
  doc.legend(varPanel.x + 10, varPanel.y + 18, [
    ["dyson-reuse", color(0)],
    ["btb", color(1)],
  ]);

  if (withRatio) {
    const ratioPanel: Panel = {
      ...panelRect(varPanel.y + varPanel.height + 64, 240),
      title: "variance ratio",
      xLabel: "t",
      yLabel: "Var_D / Var_BTB",
    };
    const xs2 = linearScale(
      xdom[0],
      xdom[1],
      ratioPanel.x,
      ratioPanel.x + ratioPanel.width,
    );
    const finite = data.ratio.filter((v) => Number.isFinite(v));
    const rdom = padded(extent(finite.length ? finite : [0, 1]));
    const ys2 = linearScale(
      Math.min(rdom[0], 0),
      rdom[1],
      ratioPanel.y + ratioPanel.height,
      ratioPanel.y,
    );
    doc.axes(ratioPanel, xs2, ys2);
    doc.line(data.t, data.ratio, xs2, ys2, color(2));
  }
  return doc.render();
}

export function renderVariance(paths: string[]): string {
  return renderVariancePanels(paths, true);
}

export function renderRatio(paths: string[]): string {
  if (paths.length !== 1) {
    throw new FormatError(
      `ratio figures take exactly one harness CSV, got ${paths.length}`,
    );
  }
  const data = readVariance(paths[0]);
  const doc = new SvgDoc(W, H);
  const panel: Panel = {
    ...panelRect(MARGIN.top, H - MARGIN.top - MARGIN.bottom),
    title: "variance ratio",
    xLabel: "t",
    yLabel: "Var_D / Var_BTB",
  };
  const xdom = padded(extent(data.t), 0.02);
  const finite = data.ratio.filter((v) => Number.isFinite(v));
  if (finite.length === 0) {
    throw new FormatError(`${data.path}: ratio column has no finite entries`);
  }
  const rdom = padded(extent(finite));
  const xs = linearScale(xdom[0], xdom[1], panel.x, panel.x + panel.width);
  const ys = linearScale(
    Math.min(rdom[0], 0),
    rdom[1],
    panel.y + panel.height,
    panel.y,
  );
  doc.axes(panel, xs, ys);
  doc.line(data.t, data.ratio, xs, ys, color(2));
  return doc.render();
}

export function renderAmplitude(paths: string[]): string {
  const curves: AmplitudeCurve[] = paths.map(readAmplitude);
  const doc = new SvgDoc(W, H);
  const panel: Panel = {
    ...panelRect(MARGIN.top, H - MARGIN.top - MARGIN.bottom),
    title: "bath correlation amplitude",
    xLabel: "dtau",
    yLabel: "|B(dtau)|",
  };
  const xdom = padded(extent(curves.flatMap((c) => c.dtau)), 0.02);
  const ydom = padded(extent(curves.flatMap((c) => c.absB)));
  const xs = linearScale(xdom[0], xdom[1], panel.x, panel.x + panel.width);
  const ys = linearScale(
    Math.min(0, ydom[0]),
    ydom[1],
    panel.y + panel.height,
    panel.y,
  );
  doc.axes(panel, xs, ys);
  curves.forEach((c, i) => doc.line(c.dtau, c.absB, xs, ys, color(i)));
  doc.legend(
    panel.x + 10,
    panel.y + 18,
    curves.map((c, i) => [c.label, color(i)]),
  );
  return doc.render();
}

export function renderFigure(kind: FigureKind, paths: string[]): string {
  if (paths.length === 0) {
    throw new FormatError("no input CSV files given");
  }
  switch (kind) {
    case "trajectory":
      return renderTrajectory(paths);
    case "variance":
      return renderVariance(paths);
    case "ratio":
      return renderRatio(paths);
    case "b_amplitude":
      return renderAmplitude(paths);
  }
}
