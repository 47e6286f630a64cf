/** Schema panes: source schemas in the left column, the mediated target on
 * the right, drawn as SVG boxes with one row per property. Cross-links
 * between panes show correspondences color-coded by review status. All
 * geometry is computed here, so rendering stays deterministic. */

import { layoutSchema, type LayoutResult } from "./layout.js";
import type {
  CorrespondenceJson,
  ProjectDoc,
  SchemaJson,
} from "./types.js";
import { fractionToNumber, refKey } from "./types.js";
import type { ViewState } from "./state.js";
import { el, svgEl } from "./dom.js";

export const LIST_FALLBACK_THRESHOLD = 500;
const COLUMN_GAP = 140;
const PANE_GAP = 32;
const PANE_TITLE = 22;

export interface Point {
  x: number;
  y: number;
}

interface Pane {
  schema: SchemaJson;
  role: "source" | "target";
  origin: Point;
  layout: LayoutResult | null; /* null means list fallback */
}

export interface RenderedPanes {
  anchors: Map<string, Point>;
  panes: Pane[];
  width: number;
  height: number;
}

/** Stack source panes down the left column and the target on the right. */
export function planPanes(project: ProjectDoc): Pane[] {
  const panes: Pane[] = [];
  let leftY = 0;
  let leftWidth = 0;
  for (const schema of project.sources) {
    const big = schema.nodes.length > LIST_FALLBACK_THRESHOLD;
    const layout = big ? null : layoutSchema(schema);
    const width = layout ? layout.width : 260;
    const height = layout ? layout.height + PANE_TITLE : 200;
    panes.push({
      schema,
      role: "source",
      origin: { x: 0, y: leftY },
      layout,
    });
    leftY += height + PANE_GAP;
    leftWidth = Math.max(leftWidth, width);
  }
  if (project.target) {
    const big = project.target.nodes.length > LIST_FALLBACK_THRESHOLD;
    const layout = big ? null : layoutSchema(project.target);
    panes.push({
      schema: project.target,
      role: "target",
      origin: { x: leftWidth + COLUMN_GAP, y: 0 },
      layout,
    });
  }
  return panes;
}

/** Anchor point for every node header and property row, in page-diagram
 * coordinates. Source anchors sit on the right edge of their box, target
 * anchors on the left edge, so cross-links span the column gap. */
export function buildAnchors(panes: Pane[]): Map<string, Point> {
  const anchors = new Map<string, Point>();
  for (const pane of panes) {
    if (!pane.layout) continue;
    const edgeX = (box: { x: number; width: number }): number =>
      pane.role === "source"
        ? pane.origin.x + box.x + box.width
        : pane.origin.x + box.x;
    for (const node of pane.schema.nodes) {
      const box = pane.layout.boxes.get(node.id);
      if (!box) continue;
      anchors.set(`${pane.schema.name}:${node.label}`, {
        x: edgeX(box),
        y: pane.origin.y + PANE_TITLE + box.y + 13,
      });
      node.properties.forEach((prop, index) => {
        anchors.set(`${pane.schema.name}:${node.label}.${prop.name}`, {
          x: edgeX(box),
          y: pane.origin.y + PANE_TITLE + box.y + 26 + 9 + index * 18,
        });
      });
    }
  }
  return anchors;
}

function applyDrag(anchors: Map<string, Point>, state: ViewState): Map<string, Point> {
  if (state.positions.size === 0) return anchors;
  const adjusted = new Map<string, Point>();
  for (const [key, point] of anchors) {
    const nodeKey = key.includes(".") ? key.slice(0, key.lastIndexOf(".")) : key;
    const offset = state.positions.get(nodeKey);
    adjusted.set(
      key,
      offset ? { x: point.x + offset.dx, y: point.y + offset.dy } : point,
    );
  }
  return adjusted;
}

function renderSchemaSvg(
  pane: Pane,
  state: ViewState,
  onNodeMoved: () => void,
): SVGElement {
  const layout = pane.layout!;
  const svg = svgEl("svg", {
    width: String(layout.width),
    height: String(layout.height),
    class: "schema-canvas",
  });
  const labelById = new Map(pane.schema.nodes.map((n) => [n.id, n.label]));

  for (const edge of pane.schema.edges) {
    const [a, b] = edge.endpoints;
    if (!a || !b) continue;
    const boxA = layout.boxes.get(a.node);
    const boxB = layout.boxes.get(b.node);
    if (!boxA || !boxB) continue;
    const offA = state.positions.get(`${pane.schema.name}:${labelById.get(a.node)}`);
    const offB = state.positions.get(`${pane.schema.name}:${labelById.get(b.node)}`);
    const x1 = boxA.x + boxA.width / 2 + (offA?.dx ?? 0);
    const y1 = boxA.y + boxA.height / 2 + (offA?.dy ?? 0);
    const x2 = boxB.x + boxB.width / 2 + (offB?.dx ?? 0);
    const y2 = boxB.y + boxB.height / 2 + (offB?.dy ?? 0);
    svg.appendChild(svgEl("line", {
      x1: String(x1),
      y1: String(y1),
      x2: String(x2),
      y2: String(y2),
      class: `edge-line kind-${edge.kind}`,
    }));
    const label = svgEl("text", {
      x: String((x1 + x2) / 2),
      y: String((y1 + y2) / 2 - 4),
      class: `edge-label kind-${edge.kind}`,
    });
    label.textContent = edge.label;
    svg.appendChild(label);
  }

  for (const node of pane.schema.nodes) {
    const box = layout.boxes.get(node.id);
    if (!box) continue;
    const nodeKey = `${pane.schema.name}:${node.label}`;
    const offset = state.positions.get(nodeKey);
    const group = svgEl("g", {
      class: "node-group",
      "data-el": nodeKey,
      transform: `translate(${(offset?.dx ?? 0)},${(offset?.dy ?? 0)})`,
    });
    const deficient = state.highlight.sources.has(nodeKey);
    const neighbor = state.highlight.neighborhood.has(nodeKey);
    group.appendChild(svgEl("rect", {
      x: String(box.x),
      y: String(box.y),
      width: String(box.width),
      height: String(box.height),
      rx: "4",
      class: "node-box"
        + (deficient ? " deficient" : "")
        + (neighbor ? " neighborhood" : ""),
    }));
    const title = svgEl("text", {
      x: String(box.x + 8),
      y: String(box.y + 17),
      class: "node-title",
    });
    title.textContent = node.label;
    group.appendChild(title);
    group.appendChild(svgEl("line", {
      x1: String(box.x),
      y1: String(box.y + 26),
      x2: String(box.x + box.width),
      y2: String(box.y + 26),
      class: "node-divider",
    }));
    node.properties.forEach((prop, index) => {
      const row = svgEl("text", {
        x: String(box.x + 10),
        y: String(box.y + 26 + 14 + index * 18),
        class: "prop-row",
        "data-el": `${nodeKey}.${prop.name}`,
      });
      row.textContent = `${prop.name}: ${prop.type}`;
      group.appendChild(row);
    });

    group.addEventListener("mousedown", (down) => {
      const event = down as MouseEvent;
      const startX = event.clientX;
      const startY = event.clientY;
      const base = state.positions.get(nodeKey) ?? { dx: 0, dy: 0 };
      const move = (raw: Event): void => {
        const m = raw as MouseEvent;
        const dx = base.dx + (m.clientX - startX);
        const dy = base.dy + (m.clientY - startY);
        state.positions.set(nodeKey, { dx, dy });
        group.setAttribute("transform", `translate(${dx},${dy})`);
        onNodeMoved();
      };
      const up = (): void => {
        document.removeEventListener("mousemove", move);
        document.removeEventListener("mouseup", up);
      };
      document.addEventListener("mousemove", move);
      document.addEventListener("mouseup", up);
    });

    svg.appendChild(group);
  }
  return svg;
}

function renderSchemaList(schema: SchemaJson): HTMLElement {
  const wrap = el("div", "schema-list");
  const note = el("p", "list-note",
    `${schema.nodes.length} nodes, shown as a list`);
  wrap.appendChild(note);
  const list = el("ul");
  for (const node of schema.nodes) {
    const item = el("li", "list-node");
    item.setAttribute("data-el", `${schema.name}:${node.label}`);
    item.appendChild(el("span", "node-title", node.label));
    if (node.properties.length > 0) {
      const props = el("span", "list-props",
        " " + node.properties.map((p) => p.name).join(", "));
      item.appendChild(props);
    }
    list.appendChild(item);
  }
  wrap.appendChild(list);
  return wrap;
}

function visible(corr: CorrespondenceJson, state: ViewState): boolean {
  if (!state.filters.statuses.has(corr.status)) return false;
  const c = fractionToNumber(corr.confidence);
  return c >= state.filters.minConfidence && c <= state.filters.maxConfidence;
}

export function renderCrossLinks(
  overlay: SVGElement,
  project: ProjectDoc,
  anchors: Map<string, Point>,
  state: ViewState,
  onSelect: (corrId: string) => void,
): void {
  while (overlay.firstChild) overlay.removeChild(overlay.firstChild);
  const adjusted = applyDrag(anchors, state);
  for (const corr of project.correspondences) {
    if (!visible(corr, state)) continue;
    const from = adjusted.get(refKey(corr.source));
    const to = adjusted.get(refKey(corr.target));
    if (!from || !to) continue;
    const midX = (from.x + to.x) / 2;
    const path = svgEl("path", {
      d: `M ${from.x} ${from.y} C ${midX} ${from.y}, ${midX} ${to.y}, ${to.x} ${to.y}`,
      class: "cross-link status-" + corr.status.toLowerCase()
        + (state.selected.has(corr.id) ? " selected" : ""),
      "data-corr-id": corr.id,
      "data-status": corr.status,
    });
    path.addEventListener("click", () => onSelect(corr.id));
    overlay.appendChild(path);
  }
}

export function renderPanes(
  container: HTMLElement,
  project: ProjectDoc | null,
  state: ViewState,
  onSelect: (corrId: string) => void,
): RenderedPanes {
  container.textContent = "";
  if (!project || (project.sources.length === 0 && !project.target)) {
    const empty = el("div", "placeholder");
    empty.appendChild(el("h2", undefined, "No schemas yet"));
    empty.appendChild(el("p", undefined,
      "Import a source schema to get started. Upload relational DDL, "
      + "JSON documents or CSV files from the toolbar, or run tgm import "
      + "from the command line."));
    const button = el("button", "import-cta", "Import a source");
    button.setAttribute("data-action", "import");
    empty.appendChild(button);
    container.appendChild(empty);
    return { anchors: new Map(), panes: [], width: 0, height: 0 };
  }

  const panes = planPanes(project);
  const anchors = buildAnchors(panes);
  let width = 0;
  let height = 0;

  const board = el("div", "board");
  board.style.position = "relative";

  const overlay = svgEl("svg", { class: "cross-links" });
  const redraw = (): void =>
    renderCrossLinks(overlay, project, anchors, state, onSelect);

  for (const pane of panes) {
    const paneEl = el("div", `pane pane-${pane.role}`);
    paneEl.setAttribute("data-schema", pane.schema.name);
    paneEl.style.position = "absolute";
    paneEl.style.left = `${pane.origin.x}px`;
    paneEl.style.top = `${pane.origin.y}px`;
    const title = el("div", "pane-title",
      `${pane.schema.name} (${pane.role})`);
    paneEl.appendChild(title);
    if (pane.layout) {
      paneEl.appendChild(renderSchemaSvg(pane, state, redraw));
      width = Math.max(width, pane.origin.x + pane.layout.width);
      height = Math.max(height,
        pane.origin.y + PANE_TITLE + pane.layout.height);
    } else {
      paneEl.appendChild(renderSchemaList(pane.schema));
      width = Math.max(width, pane.origin.x + 260);
      height = Math.max(height, pane.origin.y + 200);
    }
    board.appendChild(paneEl);
  }

  overlay.setAttribute("width", String(width));
  overlay.setAttribute("height", String(height));
  (overlay as unknown as HTMLElement).style.position = "absolute";
  (overlay as unknown as HTMLElement).style.left = "0";
  (overlay as unknown as HTMLElement).style.top = "0";
  (overlay as unknown as HTMLElement).style.pointerEvents = "none";
  redraw();
  board.appendChild(overlay);
  board.style.width = `${width}px`;
  board.style.height = `${height}px`;
  container.appendChild(board);
  return { anchors, panes, width, height };
}
