/**
 * Annotation session controller: the UI-framework-free core of the client.
 *
 * Responsibilities:
 *   - fetch pairs and present them with a randomized left/right assignment
 *     (seeded by the pair_id hash, so tests are reproducible) while always
 *     mapping the user's choice back to the canonical (topic_a, topic_b)
 *     outcome;
 *   - submit one outcome at a time; failed submissions are queued and
 *     flushed in order before anything else is sent;
 *   - count progress as acknowledged submissions only.
 *
 * The controller can only ever submit the pair_id it is currently
 * displaying, which is always one the service handed out.
 */

import { ApiClient, ApiError, Outcome, PairPayload, TopicSide } from "./api.js";

export type Action = "left" | "right" | "tie" | "skip";

export interface PairView {
  pairId: string;
  left: TopicSide;
  right: TopicSide;
  /** true when canonical topic_a is displayed on the left. */
  aOnLeft: boolean;
  progress: number;
}

export type SessionStatus = "idle" | "showing" | "submitting" | "blocked" | "no_work";

export interface SessionEvents {
  onPair?: (view: PairView) => void;
  onNoWork?: () => void;
  onConflict?: (message: string) => void;
  onOffline?: (queued: number) => void;
}

/** FNV-1a 32-bit hash; stable basis for the side randomization. */
export function hashString(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

/** Deterministic per-pair side assignment: avoids position bias. */
export function aGoesLeft(pairId: string): boolean {
  return (hashString(pairId) & 1) === 0;
}

/** Map a presented-side action back to the canonical outcome. */
export function actionToOutcome(view: Pick<PairView, "aOnLeft">, action: Action): Outcome {
  switch (action) {
    case "tie":
      return "tie";
    case "skip":
      return "skip";
    case "left":
      return view.aOnLeft ? "a_wins" : "b_wins";
    case "right":
      return view.aOnLeft ? "b_wins" : "a_wins";
  }
}

/** Keyboard shortcuts: arrows pick a side, t ties, s skips. */
export function keyToAction(key: string): Action | null {
  switch (key) {
    case "ArrowLeft":
      return "left";
    case "ArrowRight":
      return "right";
    case "t":
    case "T":
      return "tie";
    case "s":
    case "S":
      return "skip";
    default:
      return null;
  }
}

interface QueuedSubmission {
  pairId: string;
  outcome: Outcome;
}

export class AnnotationSession {
  current: PairView | null = null;
  status: SessionStatus = "idle";
  /** Acknowledged submissions in this session. */
  progress = 0;

  private queue: QueuedSubmission[] = [];

  constructor(
    private readonly api: ApiClient,
    public events: SessionEvents = {},
  ) {}

  private toView(payload: PairPayload): PairView {
    const aOnLeft = aGoesLeft(payload.pair_id);
    return {
      pairId: payload.pair_id,
      left: aOnLeft ? payload.topic_a : payload.topic_b,
      right: aOnLeft ? payload.topic_b : payload.topic_a,
      aOnLeft,
      progress: this.progress,
    };
  }

  async start(): Promise<void> {
    await this.fetchNext();
  }

  private async fetchNext(): Promise<void> {
    try {
      const payload = await this.api.nextPair();
      this.current = this.toView(payload);
      this.status = "showing";
      this.events.onPair?.(this.current);
    } catch (error) {
      this.current = null;
      if (error instanceof ApiError && error.status === 409) {
        this.status = "no_work";
        this.events.onNoWork?.();
        return;
      }
      throw error;
    }
  }

  /**
   * Handle one user action.  Ignored (no-op) unless a pair is currently
   * displayed and no submission is in flight, which also makes a double
   * click on the same pair harmless.
   */
  async choose(action: Action): Promise<void> {
    if (this.status !== "showing" || this.current === null) {
      return;
    }
    const view = this.current;
    const outcome = actionToOutcome(view, action);
    this.status = "submitting";
    this.current = null;
    await this.submit({ pairId: view.pairId, outcome });
  }

  private async submit(submission: QueuedSubmission): Promise<void> {
    this.queue.push(submission);
    await this.flush();
  }

  /** Send queued submissions in order; stop (blocked) on network failure. */
  async flush(): Promise<void> {
    while (this.queue.length > 0) {
      const head = this.queue[0]!;
      try {
        await this.api.annotate(head.pairId, head.outcome);
        this.queue.shift();
        this.progress += 1;
      } catch (error) {
        if (error instanceof ApiError && error.status === 409) {
          // Expired or duplicate checkout: drop it and move on.
          this.queue.shift();
          this.events.onConflict?.(error.message);
          continue;
        }
        this.status = "blocked";
        this.events.onOffline?.(this.queue.length);
        return;
      }
    }
    await this.fetchNext();
  }

  get queuedCount(): number {
    return this.queue.length;
  }
}
