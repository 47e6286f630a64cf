import { describe, expect, it } from "vitest";

import { layerNodes, layoutSchema } from "../src/layout.js";
import type { SchemaJson } from "../src/types.js";
import { projectFixture } from "./helpers.js";

function schemaOf(nodes: [string, number][],
                  edges: [string, string][]): SchemaJson {
  return {
    name: "s",
    nodes: nodes.map(([label, props]) => ({
      id: `n_${label}`,
      label,
      properties: Array.from({ length: props }, (_, i) => ({
        name: `p${i}`,
        type: "string",
      })),
    })),
    edges: edges.map(([a, b], i) => ({
      id: `e${i}`,
      label: `e${i}`,
      kind: "association" as const,
      endpoints: [
        { node: `n_${a}`, role: "from", min: 0, max: "*" as const },
        { node: `n_${b}`, role: "to", min: 1, max: 1 },
      ],
    })),
    types: [],
    constraints: [],
  };
}

describe("layout", () => {
  it("is deterministic for the same schema document", () => {
    const target = projectFixture.target!;
    const first = layoutSchema(target);
    const second = layoutSchema(target);
    expect([...second.boxes.entries()]).toEqual([...first.boxes.entries()]);
    expect(second.width).toBe(first.width);
    expect(second.height).toBe(first.height);
  });

  it("places edge successors one layer past their source", () => {
    const schema = schemaOf(
      [["A", 1], ["B", 1], ["C", 1]],
      [["A", "B"], ["B", "C"]],
    );
    const layers = layerNodes(schema);
    expect(layers.get("n_A")).toBe(0);
    expect(layers.get("n_B")).toBe(1);
    expect(layers.get("n_C")).toBe(2);

    const { boxes } = layoutSchema(schema);
    expect(boxes.get("n_B")!.x).toBeGreaterThan(boxes.get("n_A")!.x);
    expect(boxes.get("n_C")!.x).toBeGreaterThan(boxes.get("n_B")!.x);
  });

  it("stacks nodes of one layer without overlap", () => {
    const schema = schemaOf(
      [["A", 2], ["B", 3], ["C", 1]],
      [],
    );
    const { boxes } = layoutSchema(schema);
    const a = boxes.get("n_A")!;
    const b = boxes.get("n_B")!;
    const c = boxes.get("n_C")!;
    expect(a.x).toBe(b.x);
    expect(b.x).toBe(c.x);
    expect(b.y).toBeGreaterThanOrEqual(a.y + a.height);
    expect(c.y).toBeGreaterThanOrEqual(b.y + b.height);
  });

  it("terminates on cyclic schemas and still assigns every node", () => {
    const schema = schemaOf(
      [["A", 1], ["B", 1]],
      [["A", "B"], ["B", "A"]],
    );
    const layers = layerNodes(schema);
    expect(layers.size).toBe(2);
    expect([...layers.values()].every(Number.isFinite)).toBe(true);
  });

  it("grows box height with the property count", () => {
    const schema = schemaOf([["A", 1], ["B", 6]], []);
    const { boxes } = layoutSchema(schema);
    expect(boxes.get("n_B")!.height).toBeGreaterThan(boxes.get("n_A")!.height);
  });

  it("handles an empty schema without NaN dimensions", () => {
    const { width, height, boxes } = layoutSchema(schemaOf([], []));
    expect(boxes.size).toBe(0);
    expect(width).toBeGreaterThan(0);
    expect(height).toBeGreaterThan(0);
  });
});
