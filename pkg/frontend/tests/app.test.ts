import { afterEach, describe, expect, test, vi } from "vitest";

import { AnnotationClient } from "../src/api.js";
import { AnnotationApp } from "../src/app.js";

interface PostedJudgment {
  task_id: string;
  annotator_id: string;
  grade: unknown;
}

type JudgeOutcome = "ok" | "conflict" | "network";

interface ScriptedService {
  fetchFn: typeof fetch;
  posted: PostedJudgment[];
  served: string[];
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** In-memory stand-in for the annotation service. `queue` is consumed by
 * /tasks/next in order; `judge` decides each /judgments outcome. */
function scriptedService(
  queue: unknown[],
  judge: (callIndex: number) => JudgeOutcome = () => "ok",
): ScriptedService {
  const posted: PostedJudgment[] = [];
  const served: string[] = [];
  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    if (url.includes("/tasks/next")) {
      const task = queue.shift() ?? null;
      if (task !== null && typeof task === "object" && "task_id" in task) {
        served.push(String((task as { task_id: unknown }).task_id));
      }
      return json(200, { task });
    }
    if (url.includes("/judgments")) {
      const body = JSON.parse(String(init?.body)) as PostedJudgment;
      posted.push(body);
      const outcome = judge(posted.length - 1);
      if (outcome === "network") {
        throw new TypeError("fetch failed");
      }
      if (outcome === "conflict") {
        return json(409, { detail: "annotator already graded this task" });
      }
      return json(200, { task_id: body.task_id, status: "pending", value: null });
    }
    if (url.includes("/progress")) {
      return json(200, {
        tasks: {
          a_benchmark: { pending: queue.length, complete: 0, discarded: 0 },
          golden: { pending: 0, complete: 0, discarded: 0 },
        },
        n_tasks: queue.length,
        n_judgments: posted.length,
      });
    }
    return json(404, { detail: `no route for ${url}` });
  }) as typeof fetch;
  return { fetchFn, posted, served };
}

function task(id: string) {
  return {
    task_id: id,
    path: { nodes: ["x", "y"], edges: ["r"], head_relation: "rh" },
  };
}

const disposers: Array<() => void> = [];

function makeApp(service: ScriptedService, annotator = "ann"): AnnotationApp {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = new AnnotationApp({
    root,
    client: new AnnotationClient("http://service", service.fetchFn),
    annotator,
  });
  disposers.push(() => {
    app.dispose();
    root.remove();
  });
  return app;
}

afterEach(() => {
  while (disposers.length > 0) {
    disposers.pop()?.();
  }
});

function gradeButton(value: number): HTMLButtonElement {
  const button = document.querySelector<HTMLButtonElement>(
    `button.grade-option[data-grade="${value}"]`,
  );
  if (button === null) {
    throw new Error(`no button for grade ${value}`);
  }
  return button;
}

function banner(): string {
  return document.querySelector(".banner:not([hidden])")?.textContent ?? "";
}

describe("grading flow", () => {
  test("clicking reasonable posts grade 1 and advances to the next task", async () => {
    const service = scriptedService([task("t1"), task("t2")]);
    const app = makeApp(service);
    await app.start();
    expect(app.currentTaskId).toBe("t1");

    gradeButton(1).click();
    await vi.waitFor(() => expect(app.currentTaskId).toBe("t2"));
    expect(service.posted).toEqual([{ task_id: "t1", annotator_id: "ann", grade: 1 }]);
    expect(app.completedCount).toBe(1);
    expect(document.querySelector(".progress")?.textContent).toContain("graded 1");
  });

  test("keyboard shortcut 2 submits partially reasonable", async () => {
    const service = scriptedService([task("t1")]);
    const app = makeApp(service);
    await app.start();

    document.dispatchEvent(new KeyboardEvent("keydown", { key: "2" }));
    await vi.waitFor(() => expect(service.posted).toHaveLength(1));
    expect(service.posted[0]?.grade).toBe(0.5);
    await vi.waitFor(() => expect(app.phaseName).toBe("drained"));
  });

  test("tasks are presented in the order the service returns them", async () => {
    const service = scriptedService([task("t1"), task("t2"), task("t3")]);
    const app = makeApp(service);
    await app.start();

    const seen = [app.currentTaskId];
    gradeButton(0).click();
    await vi.waitFor(() => expect(app.currentTaskId).toBe("t2"));
    seen.push(app.currentTaskId);
    gradeButton(0.5).click();
    await vi.waitFor(() => expect(app.currentTaskId).toBe("t3"));
    seen.push(app.currentTaskId);
    expect(seen).toEqual(["t1", "t2", "t3"]);
    expect(service.served).toEqual(["t1", "t2", "t3"]);
  });

  test("a conflict is surfaced and the task skipped", async () => {
    const service = scriptedService([task("t1"), task("t2")], (i) =>
      i === 0 ? "conflict" : "ok",
    );
    const app = makeApp(service);
    await app.start();

    gradeButton(1).click();
    await vi.waitFor(() => expect(app.currentTaskId).toBe("t2"));
    expect(banner()).toContain("already graded");
    expect(app.selectedGrade).toBeNull();
  });

  test("a network failure keeps the selection and retry resubmits it", async () => {
    const service = scriptedService([task("t1"), task("t2")], (i) =>
      i === 0 ? "network" : "ok",
    );
    const app = makeApp(service);
    await app.start();

    gradeButton(1).click();
    await vi.waitFor(() => expect(app.phaseName).toBe("retry"));
    expect(banner()).toContain("selection was kept");
    expect(app.selectedGrade).toBe(1);
    expect(gradeButton(1).classList.contains("selected")).toBe(true);

    const retry = document.querySelector<HTMLButtonElement>("button.retry");
    expect(retry?.hidden).toBe(false);
    retry?.click();
    await vi.waitFor(() => expect(app.currentTaskId).toBe("t2"));
    expect(service.posted).toHaveLength(2);
    expect(service.posted[1]).toEqual({ task_id: "t1", annotator_id: "ann", grade: 1 });
  });

  test("a malformed payload shows the error banner and is skipped", async () => {
    const bad = { task_id: "bad", path: { nodes: ["x"], edges: [], head_relation: "rh" } };
    const service = scriptedService([bad, task("t2")]);
    const app = makeApp(service);
    await app.start();

    expect(app.phaseName).toBe("skipped");
    expect(banner()).toContain("malformed");
    expect(service.posted).toHaveLength(0);

    const skip = document.querySelector<HTMLButtonElement>("button.skip");
    expect(skip?.hidden).toBe(false);
    skip?.click();
    await vi.waitFor(() => expect(app.currentTaskId).toBe("t2"));
  });

  test("an empty queue reports that no tasks are pending", async () => {
    const app = makeApp(scriptedService([]));
    await app.start();
    expect(app.phaseName).toBe("drained");
    expect(banner()).toContain("no pending tasks");
  });
});

describe("grade scale is inescapable", () => {
  test("programmatic off-scale grades are rejected before any request", async () => {
    const service = scriptedService([task("t1")]);
    const app = makeApp(service);
    await app.start();

    expect(() => app.select(0.25 as never)).toThrow(RangeError);
    const client = new AnnotationClient("http://service", service.fetchFn);
    await expect(client.submitJudgment("t1", "ann", 0.3 as never)).rejects.toThrow(RangeError);
    expect(service.posted).toHaveLength(0);
  });

  test("random interaction storms only ever post 0, 0.5 or 1", async () => {
    const queue = Array.from({ length: 40 }, (_, i) => task(`t${i}`));
    let state = 12345;
    const rand = () => {
      // deterministic LCG so failures replay
      state = (state * 1103515245 + 12345) % 2147483648;
      return state / 2147483648;
    };
    const service = scriptedService(queue, () => {
      const r = rand();
      return r < 0.2 ? "network" : r < 0.4 ? "conflict" : "ok";
    });
    const app = makeApp(service);
    await app.start();

    const keys = ["1", "2", "3", "4", "0", "a", "Enter", " ", "Escape"];
    for (let i = 0; i < 150; i++) {
      const r = rand();
      if (r < 0.5) {
        const key = keys[Math.floor(rand() * keys.length)] ?? "1";
        document.dispatchEvent(new KeyboardEvent("keydown", { key }));
      } else if (r < 0.8) {
        const grades = [1, 0.5, 0];
        gradeButton(grades[Math.floor(rand() * 3)] ?? 1).click();
      } else {
        document
          .querySelectorAll<HTMLButtonElement>("button.retry, button.skip")
          .forEach((b) => {
            if (!b.hidden) b.click();
          });
      }
      await new Promise((resolve) => setTimeout(resolve, 0));
    }

    expect(service.posted.length).toBeGreaterThan(0);
    for (const judgment of service.posted) {
      expect([0, 0.5, 1]).toContain(judgment.grade);
      expect(typeof judgment.grade).toBe("number");
    }
  });
});
