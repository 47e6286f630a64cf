/** Deterministic layered layout for one schema pane. Seeded entirely by
 * the order nodes and edges appear in the schema document, so the same
 * project always renders the same picture. */

import type { SchemaJson } from "./types.js";

export interface NodeBox {
  id: string;
  label: string;
  x: number;
  y: number;
  width: number;
  height: number;
  layer: number;
}

export interface LayoutResult {
  boxes: Map<string, NodeBox>;
  width: number;
  height: number;
}

export const NODE_WIDTH = 180;
export const HEADER_HEIGHT = 26;
export const ROW_HEIGHT = 18;
export const LAYER_GAP = 70;
export const BOX_GAP = 24;
export const PADDING = 16;

function nodeHeight(propertyCount: number): number {
  return HEADER_HEIGHT + propertyCount * ROW_HEIGHT + 8;
}

/** Assign each node a layer: roots (no incoming first-endpoint edge) sit at
 * layer 0 and successors one deeper, breadth-first, each node assigned once
 * so cycles terminate. Edges point from their first endpoint to the second;
 * ties resolve by declaration order. */
export function layerNodes(schema: SchemaJson): Map<string, number> {
  const order = schema.nodes.map((n) => n.id);
  const successors = new Map<string, string[]>();
  const hasIncoming = new Set<string>();
  for (const id of order) successors.set(id, []);
  for (const edge of schema.edges) {
    const [a, b] = edge.endpoints;
    if (!a || !b || a.node === b.node) continue;
    successors.get(a.node)?.push(b.node);
    hasIncoming.add(b.node);
  }
  const layers = new Map<string, number>();
  const queue: string[] = order.filter((id) => !hasIncoming.has(id));
  if (queue.length === 0 && order.length > 0) queue.push(order[0]!);
  for (const id of queue) layers.set(id, 0);
  while (queue.length > 0) {
    const current = queue.shift()!;
    const depth = layers.get(current)!;
    for (const next of successors.get(current) ?? []) {
      if (!layers.has(next)) {
        layers.set(next, depth + 1);
        queue.push(next);
      }
    }
  }
  for (const id of order) if (!layers.has(id)) layers.set(id, 0);
  return layers;
}

export function layoutSchema(schema: SchemaJson): LayoutResult {
  const layers = layerNodes(schema);
  const byLayer = new Map<number, string[]>();
  for (const node of schema.nodes) {
    const layer = layers.get(node.id) ?? 0;
    if (!byLayer.has(layer)) byLayer.set(layer, []);
    byLayer.get(layer)!.push(node.id);
  }
  const boxes = new Map<string, NodeBox>();
  let width = 0;
  let height = 0;
  const heights = new Map(
    schema.nodes.map((n) => [n.id, nodeHeight(n.properties.length)]));
  const labels = new Map(schema.nodes.map((n) => [n.id, n.label]));
  const sortedLayers = [...byLayer.keys()].sort((a, b) => a - b);
  let x = PADDING;
  for (const layer of sortedLayers) {
    let y = PADDING;
    for (const id of byLayer.get(layer)!) {
      const h = heights.get(id) ?? nodeHeight(0);
      boxes.set(id, {
        id,
        label: labels.get(id) ?? id,
        x,
        y,
        width: NODE_WIDTH,
        height: h,
        layer,
      });
      y += h + BOX_GAP;
    }
    height = Math.max(height, y - BOX_GAP + PADDING);
    x += NODE_WIDTH + LAYER_GAP;
  }
  width = x - LAYER_GAP + PADDING;
  if (schema.nodes.length === 0) {
    width = PADDING * 2;
    height = PADDING * 2;
  }
  return { boxes, width, height };
}
