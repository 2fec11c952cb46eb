/** DOM construction for the chat transcript: user/system bubbles, result
 * tables, charts, and inline error bubbles that never break the session. */

import { checkSpec, type ChartRenderer } from "./charts.js";
import type { TablePayload, Transcript, TurnPayload } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function renderTable(doc: Document, payload: TablePayload): HTMLTableElement {
  const table = el(doc, "table", "result-table");
  const head = doc.createElement("thead");
  const headRow = doc.createElement("tr");
  for (const column of payload.columns) {
    const cell = doc.createElement("th");
    cell.textContent = column;
    headRow.appendChild(cell);
  }
  head.appendChild(headRow);
  table.appendChild(head);
  const body = doc.createElement("tbody");
  for (const row of payload.rows) {
    const tr = doc.createElement("tr");
    for (const value of row) {
      const td = doc.createElement("td");
      td.textContent = value === null ? "∅" : String(value);
      tr.appendChild(td);
    }
    body.appendChild(tr);
  }
  table.appendChild(body);
  return table;
}

export function errorBubble(doc: Document, message: string): HTMLElement {
  const bubble = el(doc, "div", "bubble system error", message);
  bubble.setAttribute("role", "alert");
  return bubble;
}

export function userBubble(doc: Document, text: string): HTMLElement {
  return el(doc, "div", "bubble user", text);
}

/** System bubble for one response; chart rendering is asynchronous and a
 * malformed specification degrades to an inline error bubble. */
export async function systemBubble(
  doc: Document,
  turn: TurnPayload,
  renderChart: ChartRenderer,
): Promise<HTMLElement> {
  if (turn.modality === "text") {
    return el(doc, "div", "bubble system", turn.text ?? "");
  }
  if (turn.modality === "sql") {
    const bubble = el(doc, "div", "bubble system");
    bubble.appendChild(el(doc, "code", "sql-query", turn.sql ?? ""));
    if (turn.table) {
      bubble.appendChild(renderTable(doc, turn.table));
    }
    return bubble;
  }
  const bubble = el(doc, "div", "bubble system");
  if (turn.dv_query) {
    bubble.appendChild(el(doc, "code", "dv-query", turn.dv_query));
  }
  const mount = el(doc, "div", "chart");
  bubble.appendChild(mount);
  try {
    checkSpec(turn.vegalite);
    await renderChart(turn.vegalite, mount);
  } catch (error) {
    bubble.replaceChild(
      errorBubble(doc, `chart failed: ${(error as Error).message}`),
      mount,
    );
  }
  return bubble;
}

/** Rebuild the whole chat view from a transcript (pure function of it). */
export async function renderChat(
  doc: Document,
  container: HTMLElement,
  transcript: Transcript,
  renderChart: ChartRenderer,
): Promise<void> {
  container.textContent = "";
  for (const turn of transcript.turns) {
    container.appendChild(userBubble(doc, turn.query));
    container.appendChild(await systemBubble(doc, turn, renderChart));
  }
}
