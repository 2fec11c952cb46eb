/** Wire types of the chat service. */

export type Modality = "text" | "sql" | "dv";

export interface TablePayload {
  columns: string[];
  rows: (string | number | null)[][];
}

export interface TurnPayload {
  modality: Modality;
  text?: string;
  sql?: string;
  table?: TablePayload;
  dv_query?: string;
  vegalite?: Record<string, unknown>;
}

export interface TranscriptTurn extends TurnPayload {
  query: string;
}

export interface Transcript {
  id: string;
  dataset_ref: string;
  turns: TranscriptTurn[];
}

export interface SessionSummary {
  id: string;
  dataset_ref: string;
  turns: number;
}

export interface ApiError {
  status: number;
  code: string;
  message: string;
}
