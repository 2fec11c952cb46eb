/** Map machine-readable service error codes to human-readable hints. */

const HINTS: Record<string, string> = {
  NO_DATA_SOURCE:
    "I need data before I can draw a chart — ask a data question first.",
  EMPTY_QUERY: "Type a question before sending.",
  UNKNOWN_SESSION: "This session no longer exists; create a new one.",
  UNKNOWN_TABLE: "That dataset is not loaded on the server.",
  UNKNOWN_COLUMN: "The query referenced a column the dataset does not have.",
  DERIVATION_OVERFLOW: "The model could not finish composing that query.",
};

export function errorHint(code: string, message?: string): string {
  const hint = HINTS[code];
  if (hint !== undefined) {
    return hint;
  }
  return message ? `${code}: ${message}` : code;
}
