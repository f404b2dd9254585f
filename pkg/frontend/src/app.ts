import { AnnotationClient, ConflictError } from "./api.js";
import { GRADE_OPTIONS, Grade, gradeForKey, isGrade } from "./grades.js";
import { PayloadError, TaskPayload, parseTaskPayload } from "./types.js";
import { renderTask } from "./render.js";

export type Phase = "loading" | "grading" | "submitting" | "retry" | "skipped" | "drained";

export interface AppOptions {
  root: HTMLElement;
  client: AnnotationClient;
  annotator: string;
}

/** One-annotator grading flow: fetch a task, render it, submit the chosen
 * grade, advance. Tasks are presented strictly in the order the service
 * returns them; the only grade input surface is the three option buttons
 * (and their 1/2/3 keyboard shortcuts). */
export class AnnotationApp {
  private readonly root: HTMLElement;
  private readonly client: AnnotationClient;
  private readonly annotator: string;
  private readonly doc: Document;

  private readonly banner: HTMLElement;
  private readonly stage: HTMLElement;
  private readonly gradeButtons = new Map<Grade, HTMLButtonElement>();
  private readonly retryButton: HTMLButtonElement;
  private readonly skipButton: HTMLButtonElement;
  private readonly progressLine: HTMLElement;

  private task: TaskPayload | null = null;
  private selected: Grade | null = null;
  private completed = 0;
  private phase: Phase = "loading";

  constructor(options: AppOptions) {
    this.root = options.root;
    this.client = options.client;
    this.annotator = options.annotator;
    const doc = this.root.ownerDocument;
    if (doc === null) {
      throw new Error("root element is not attached to a document");
    }
    this.doc = doc;

    this.banner = this.child("div", "banner");
    this.banner.hidden = true;
    this.stage = this.child("div", "stage");

    const gradeRow = this.child("div", "grade-row");
    for (const option of GRADE_OPTIONS) {
      const button = this.doc.createElement("button");
      button.className = "grade-option";
      button.dataset.grade = String(option.value);
      button.textContent = `${option.label} [${option.key}]`;
      button.addEventListener("click", () => this.select(option.value));
      gradeRow.appendChild(button);
      this.gradeButtons.set(option.value, button);
    }

    const actions = this.child("div", "actions");
    this.retryButton = this.doc.createElement("button");
    this.retryButton.className = "retry";
    this.retryButton.textContent = "retry";
    this.retryButton.hidden = true;
    this.retryButton.addEventListener("click", () => void this.retry());
    actions.appendChild(this.retryButton);

    this.skipButton = this.doc.createElement("button");
    this.skipButton.className = "skip";
    this.skipButton.textContent = "next task";
    this.skipButton.hidden = true;
    this.skipButton.addEventListener("click", () => void this.loadNext());
    actions.appendChild(this.skipButton);

    this.progressLine = this.child("div", "progress");
    this.keyHandler = (event) => this.onKey(event as KeyboardEvent);
    this.doc.addEventListener("keydown", this.keyHandler);
  }

  private readonly keyHandler: (event: Event) => void;

  /** Detach the document-level keyboard listener. */
  dispose(): void {
    this.doc.removeEventListener("keydown", this.keyHandler);
  }

  private child(tag: string, className: string): HTMLElement {
    const node = this.doc.createElement(tag);
    node.className = className;
    this.root.appendChild(node);
    return node;
  }

  get currentTaskId(): string | null {
    return this.task ? this.task.task_id : null;
  }

  get selectedGrade(): Grade | null {
    return this.selected;
  }

  get phaseName(): Phase {
    return this.phase;
  }

  get completedCount(): number {
    return this.completed;
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  /** Fetch and render the next task the service dispatches. */
  async loadNext(): Promise<void> {
    this.phase = "loading";
    this.task = null;
    this.selected = null;
    this.skipButton.hidden = true;
    this.retryButton.hidden = true;
    this.clearSelection();
    let raw: unknown | null;
    try {
      raw = await this.client.nextTask(this.annotator);
    } catch (error) {
      this.phase = "retry";
      this.showBanner(`cannot reach the annotation service: ${describe(error)}`);
      this.retryButton.hidden = false;
      return;
    }
    if (raw === null) {
      this.phase = "drained";
      this.stage.replaceChildren();
      this.showBanner("no pending tasks for you right now");
      return;
    }
    try {
      this.task = parseTaskPayload(raw);
    } catch (error) {
      if (!(error instanceof PayloadError)) {
        throw error;
      }
      this.phase = "skipped";
      this.stage.replaceChildren();
      this.showBanner(`malformed task skipped: ${error.message}`);
      this.skipButton.hidden = false;
      return;
    }
    const view = renderTask(this.task, this.doc);
    this.stage.replaceChildren(view.root);
    this.hideBanner();
    this.phase = "grading";
  }

  /** Pick a grade and submit it. Only the three listed options exist;
   * anything else is a programming error and is rejected. */
  select(grade: Grade): void {
    if (this.phase !== "grading" && this.phase !== "retry") {
      return;
    }
    if (!isGrade(grade)) {
      throw new RangeError(`grade ${String(grade)} is not one of the three options`);
    }
    this.selected = grade;
    this.clearSelection();
    const button = this.gradeButtons.get(grade);
    if (button) {
      button.classList.add("selected");
    }
    void this.submit();
  }

  /** Resubmit after a failure, with the previous selection intact. */
  async retry(): Promise<void> {
    if (this.task === null) {
      await this.loadNext();
      return;
    }
    await this.submit();
  }

  private async submit(): Promise<void> {
    if (this.task === null || this.selected === null) {
      return;
    }
    this.phase = "submitting";
    this.retryButton.hidden = true;
    try {
      await this.client.submitJudgment(this.task.task_id, this.annotator, this.selected);
    } catch (error) {
      if (error instanceof ConflictError) {
        const skipped = this.task.task_id;
        await this.loadNext();
        // after the advance, so the next render does not wipe the notice
        this.showBanner(`task ${skipped} was already graded (${describe(error)}); skipped`);
        return;
      }
      // network failure or service error: keep the selection for a retry
      this.phase = "retry";
      this.showBanner(`submission failed: ${describe(error)} - your selection was kept`);
      this.retryButton.hidden = false;
      return;
    }
    this.completed += 1;
    await this.updateProgress();
    await this.loadNext();
  }

  private async updateProgress(): Promise<void> {
    let suffix = "";
    try {
      const progress = await this.client.progress();
      let pending = 0;
      for (const counts of Object.values(progress.tasks)) {
        pending += counts.pending;
      }
      suffix = ` - ${pending} task(s) still pending on the service`;
    } catch {
      // progress display is best-effort; grading flow must not depend on it
    }
    this.progressLine.textContent = `graded ${this.completed} this session${suffix}`;
  }

  private onKey(event: KeyboardEvent): void {
    const grade = gradeForKey(event.key);
    if (grade !== null) {
      this.select(grade);
    }
  }

  private clearSelection(): void {
    for (const button of this.gradeButtons.values()) {
      button.classList.remove("selected");
    }
  }

  private showBanner(message: string): void {
    this.banner.textContent = message;
    this.banner.hidden = false;
  }

  private hideBanner(): void {
    this.banner.hidden = true;
    this.banner.textContent = "";
  }
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}
