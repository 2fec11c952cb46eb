/** Client-side turn orchestration: one in-flight request per session,
 * optimistic user bubbles, and error surfacing with a retry affordance. */

import type { ApiClient } from "./api.js";
import { errorHint } from "./errors.js";
import type { ApiError, TranscriptTurn } from "./types.js";

export type ChatPhase = "idle" | "waiting";

export interface TurnOutcome {
  ok: boolean;
  turn?: TranscriptTurn;
  errorMessage?: string;
  retriable?: boolean;
}

export class ChatController {
  phase: ChatPhase = "idle";
  turns: TranscriptTurn[] = [];

  constructor(
    private readonly api: ApiClient,
    readonly sessionId: string,
  ) {}

  /** True when a submission is currently allowed. */
  get canSubmit(): boolean {
    return this.phase === "idle";
  }

  /** Submit one query; a second call while waiting is rejected without a
   * request (the per-session serialization mirrored client-side). */
  async submit(text: string): Promise<TurnOutcome | null> {
    if (this.phase !== "idle" || !text.trim()) {
      return null;
    }
    this.phase = "waiting";
    try {
      const payload = await this.api.postMessage(this.sessionId, text);
      const turn: TranscriptTurn = { query: text, ...payload };
      this.turns.push(turn);
      return { ok: true, turn };
    } catch (error) {
      const apiError = error as Partial<ApiError>;
      if (apiError.code !== undefined && apiError.status !== undefined) {
        return {
          ok: false,
          errorMessage: errorHint(apiError.code, apiError.message),
          retriable: false,
        };
      }
      return {
        ok: false,
        errorMessage: "network problem — try sending again",
        retriable: true,
      };
    } finally {
      this.phase = "idle";
    }
  }

  /** Replace local state from the server transcript (reload / deep link). */
  async refresh(): Promise<void> {
    const transcript = await this.api.getTranscript(this.sessionId);
    this.turns = transcript.turns;
  }
}
