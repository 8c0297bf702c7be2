/** Wire types for the QA service API. */

export interface SessionHandle {
  session_id: string;
  doc_count: number;
  chunk_count: number;
  created_at: number;
  state: string;
  overrides: Record<string, unknown>;
}

export interface McqOption {
  label: string;
  text: string;
}

export interface EvidenceSource {
  filename: string;
  page: number;
  seq: number;
  snippet: string;
  rank_score: number;
}

export interface QueryResponse {
  answer: string;
  parsed_label: string | null;
  sources: EvidenceSource[];
  timings: Record<string, number>;
  warnings: string[];
  status: string;
  embedding_mode: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail: Record<string, unknown>;
}

export interface QueryRequest {
  question: string;
  options?: McqOption[];
  mode?: string;
  overrides?: Record<string, unknown>;
}
