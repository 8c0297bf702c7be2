/** Client-side session state: everything recoverable from the service
 * plus the (append-only) conversation log. */

import type { QueryResponse, SessionHandle, McqOption } from "./types.js";
import { DEFAULT_PARAMS, type ParamValues } from "./params.js";

export interface ConversationTurn {
  question: string;
  options: McqOption[] | null;
  response: QueryResponse | null;
  error: string | null;
}

export class UiSessionState {
  handle: SessionHandle | null = null;
  docs: { filename: string; chunks: number }[] = [];
  conversation: ConversationTurn[] = [];
  params: ParamValues = { ...DEFAULT_PARAMS };
  queryInFlight = false;

  get sessionId(): string | null {
    return this.handle?.session_id ?? null;
  }

  get hasDocuments(): boolean {
    return (this.handle?.chunk_count ?? 0) > 0;
  }

  /** Conversation is append-only within a session. */
  pushTurn(turn: ConversationTurn): void {
    this.conversation.push(turn);
  }
}
