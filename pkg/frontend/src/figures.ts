/** Built-in figure specs and their input-file conventions. */

import { PanelSpec, PlotSpec } from "./render.js";

export const GAMMA_VALUES = ["0", "0.001", "0.005", "0.01", "0.02"];

export interface BuiltinFigure {
  spec: PlotSpec;
  /** input key -> expected CSV file name under the input directory */
  inputs: Record<string, string>;
}

function populationPanels(key: string, sub: string): PanelSpec[] {
  return [
    {
      title: `fidelity to the target state (initial ${sub})`,
      series: [{ input: key, column: "F", label: "F" }],
      xLabel: "time (1/g)",
      yLabel: "fidelity",
    },
    {
      title: "collective populations",
      series: ["P00", "P11", "PT", "PS"].map((c) => ({ input: key, column: c, label: c })),
      xLabel: "time (1/g)",
      yLabel: "population",
    },
  ];
}

export function builtinFigure(name: string): BuiltinFigure {
  switch (name) {
    case "fig4a":
      return {
        spec: { panels: populationPanels("fig4a", "|00>") },
        inputs: { fig4a: "fig4a.csv" },
      };
    case "fig4b":
      return {
        spec: { panels: populationPanels("fig4b", "|11>") },
        inputs: { fig4b: "fig4b.csv" },
      };
    case "fig5": {
      const inputs: Record<string, string> = {};
      const series = GAMMA_VALUES.map((g) => {
        const key = `g${g}`;
        inputs[key] = `fig5-gamma_phi-${g}.csv`;
        return { input: key, column: "F", label: `gamma_phi = ${g} g` };
      });
      return {
        spec: {
          panels: [
            {
              title: "fidelity under pure dephasing (initial |00>)",
              series,
              xLabel: "time (1/g)",
              yLabel: "fidelity",
            },
          ],
        },
        inputs,
      };
    }
    default:
      throw new Error(`unknown figure '${name}' (expected fig4a, fig4b or fig5)`);
  }
}
