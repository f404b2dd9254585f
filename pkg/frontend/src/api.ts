import { Grade, isGrade } from "./grades.js";

/** The task was already completed or this annotator already graded it. */
export class ConflictError extends Error {}

/** Any other non-OK service response. */
export class ServiceError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

export interface ServiceProgress {
  tasks: Record<string, { pending: number; complete: number; discarded: number }>;
  n_tasks: number;
  n_judgments: number;
}

async function detailOf(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: string };
    return body.detail ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

/** Thin client for the annotation service. Network failures surface as the
 * fetch rejection (typically TypeError); callers decide how to retry. */
export class AnnotationClient {
  private readonly baseUrl: string;
  private readonly fetchFn: typeof fetch;

  constructor(baseUrl: string, fetchFn?: typeof fetch) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    // bare `fetch` loses its window receiver when stored; wrap it
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  /** Raw next-task payload for this annotator, or null when none pending. */
  async nextTask(annotator: string): Promise<unknown | null> {
    const url = `${this.baseUrl}/tasks/next?annotator=${encodeURIComponent(annotator)}`;
    const response = await this.fetchFn(url);
    if (!response.ok) {
      throw new ServiceError(await detailOf(response), response.status);
    }
    const body = (await response.json()) as { task?: unknown };
    return body.task ?? null;
  }

  async submitJudgment(taskId: string, annotatorId: string, grade: Grade): Promise<void> {
    if (!isGrade(grade)) {
      // unreachable through the UI; guards programmatic misuse
      throw new RangeError(`grade ${String(grade)} is not one of the three options`);
    }
    const response = await this.fetchFn(`${this.baseUrl}/judgments`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ task_id: taskId, annotator_id: annotatorId, grade }),
    });
    if (response.status === 409) {
      throw new ConflictError(await detailOf(response));
    }
    if (!response.ok) {
      throw new ServiceError(await detailOf(response), response.status);
    }
  }

  async progress(): Promise<ServiceProgress> {
    const response = await this.fetchFn(`${this.baseUrl}/progress`);
    if (!response.ok) {
      throw new ServiceError(await detailOf(response), response.status);
    }
    return (await response.json()) as ServiceProgress;
  }
}
