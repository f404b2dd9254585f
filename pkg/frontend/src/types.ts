/** Task payloads as served by GET /tasks/next (blind: no rule or model). */
export interface PathPayload {
  nodes: string[];
  edges: string[];
  head_relation: string;
}

export interface TaskPayload {
  task_id: string;
  path: PathPayload;
}

export class PayloadError extends Error {}

function isNonEmptyString(value: unknown): value is string {
  return typeof value === "string" && value.length > 0;
}

function stringList(value: unknown, what: string): string[] {
  if (!Array.isArray(value)) {
    throw new PayloadError(`${what} must be a list`);
  }
  for (const item of value) {
    if (!isNonEmptyString(item)) {
      throw new PayloadError(`${what} contains a missing or empty label`);
    }
  }
  return value as string[];
}

/** Validate a raw service response into a TaskPayload or throw PayloadError. */
export function parseTaskPayload(raw: unknown): TaskPayload {
  if (typeof raw !== "object" || raw === null) {
    throw new PayloadError("task payload is not an object");
  }
  const rec = raw as Record<string, unknown>;
  if (!isNonEmptyString(rec.task_id)) {
    throw new PayloadError("task payload lacks a task_id");
  }
  if (typeof rec.path !== "object" || rec.path === null) {
    throw new PayloadError("task payload lacks a path");
  }
  const path = rec.path as Record<string, unknown>;
  const nodes = stringList(path.nodes, "path.nodes");
  const edges = stringList(path.edges, "path.edges");
  if (nodes.length < 2) {
    throw new PayloadError("a path needs at least two nodes");
  }
  if (edges.length !== nodes.length - 1) {
    throw new PayloadError(
      `expected ${nodes.length - 1} edges for ${nodes.length} nodes, got ${edges.length}`,
    );
  }
  if (!isNonEmptyString(path.head_relation)) {
    throw new PayloadError("task payload lacks a head_relation");
  }
  return {
    task_id: rec.task_id,
    path: { nodes, edges, head_relation: path.head_relation },
  };
}
