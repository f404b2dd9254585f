import { TaskPayload } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const NODE_SPACING = 170;
const MARGIN_X = 60;
const BODY_Y = 150;
const HEAD_ARC_RISE = 90;
const NODE_RADIUS = 9;

export interface TaskView {
  root: SVGSVGElement;
  nodeCount: number;
  bodyEdgeCount: number;
  headEdgeCount: number;
}

function el<K extends keyof SVGElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const node = doc.createElementNS(SVG_NS, tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  return node;
}

function text(doc: Document, x: number, y: number, content: string, cls: string): SVGTextElement {
  const node = el(doc, "text", {
    x: String(x),
    y: String(y),
    class: cls,
    "text-anchor": "middle",
    "font-size": "13",
  });
  node.textContent = content;
  return node;
}

/** Render one task as an SVG picture: the body chain left to right along
 * the bottom, the implied head triple as a distinct arc above it from the
 * first node to the last. Layout depends only on the payload, so the same
 * task always renders identically. */
export function renderTask(payload: TaskPayload, doc: Document): TaskView {
  const { nodes, edges, head_relation } = payload.path;
  const xs = nodes.map((_, i) => MARGIN_X + i * NODE_SPACING);
  const lastX = xs[xs.length - 1] ?? MARGIN_X;
  const width = lastX + MARGIN_X;
  const height = BODY_Y + 60;

  const root = el(doc, "svg", {
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    class: "task-picture",
    role: "img",
  });

  const defs = el(doc, "defs", {});
  for (const [id, color] of [["arrow-body", "#444"], ["arrow-head", "#b3441f"]] as const) {
    const marker = el(doc, "marker", {
      id,
      viewBox: "0 0 10 10",
      refX: "9",
      refY: "5",
      markerWidth: "7",
      markerHeight: "7",
      orient: "auto-start-reverse",
    });
    marker.appendChild(el(doc, "path", { d: "M 0 0 L 10 5 L 0 10 z", fill: color }));
    defs.appendChild(marker);
  }
  root.appendChild(defs);

  // head triple: dashed colored arc above the chain, so it reads as the
  // relation the body chain is meant to justify
  const x0 = xs[0] ?? MARGIN_X;
  const arcTop = BODY_Y - HEAD_ARC_RISE;
  const headEdge = el(doc, "path", {
    class: "head-edge",
    d: `M ${x0} ${BODY_Y - NODE_RADIUS - 2} C ${x0} ${arcTop}, ${lastX} ${arcTop}, ${lastX} ${BODY_Y - NODE_RADIUS - 2}`,
    fill: "none",
    stroke: "#b3441f",
    "stroke-width": "2",
    "stroke-dasharray": "7 4",
    "marker-end": "url(#arrow-head)",
  });
  root.appendChild(headEdge);
  root.appendChild(
    text(doc, (x0 + lastX) / 2, arcTop + 8, head_relation, "head-label"),
  );

  edges.forEach((edge, i) => {
    const xa = xs[i] ?? MARGIN_X;
    const xb = xs[i + 1] ?? MARGIN_X;
    const line = el(doc, "line", {
      class: "body-edge",
      x1: String(xa + NODE_RADIUS + 2),
      y1: String(BODY_Y),
      x2: String(xb - NODE_RADIUS - 2),
      y2: String(BODY_Y),
      stroke: "#444",
      "stroke-width": "1.5",
      "marker-end": "url(#arrow-body)",
    });
    root.appendChild(line);
    root.appendChild(text(doc, (xa + xb) / 2, BODY_Y - 10, edge, "body-label"));
  });

  nodes.forEach((label, i) => {
    const x = xs[i] ?? MARGIN_X;
    root.appendChild(
      el(doc, "circle", {
        class: "node",
        cx: String(x),
        cy: String(BODY_Y),
        r: String(NODE_RADIUS),
        fill: "#e8eefc",
        stroke: "#33508a",
        "stroke-width": "1.5",
      }),
    );
    root.appendChild(text(doc, x, BODY_Y + 30, label, "node-label"));
  });

  return {
    root,
    nodeCount: nodes.length,
    bodyEdgeCount: edges.length,
    headEdgeCount: 1,
  };
}
