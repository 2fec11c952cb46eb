/** Chart rendering: a small structural check plus a pluggable renderer.
 *
 * In the browser the renderer delegates to the vega-embed UMD bundle loaded
 * from a CDN script tag; tests inject a Node-side renderer built on the
 * vega / vega-lite packages.
 */

export type ChartRenderer = (
  spec: Record<string, unknown>,
  element: HTMLElement,
) => Promise<void>;

const MARKS = new Set(["bar", "arc", "line", "point"]);

/** Throws with a reason when the specification is structurally unusable. */
export function checkSpec(spec: unknown): asserts spec is Record<string, unknown> {
  if (spec === null || typeof spec !== "object") {
    throw new Error("specification is not an object");
  }
  const obj = spec as Record<string, unknown>;
  const mark = obj.mark;
  if (typeof mark !== "string" || !MARKS.has(mark)) {
    throw new Error(`unsupported mark: ${String(mark)}`);
  }
  const encoding = obj.encoding;
  if (encoding === null || typeof encoding !== "object") {
    throw new Error("missing encoding");
  }
  const data = obj.data as Record<string, unknown> | undefined;
  const values = data?.values;
  if (!Array.isArray(values)) {
    throw new Error("missing inline data values");
  }
  const fields: string[] = [];
  for (const channel of Object.values(encoding as Record<string, unknown>)) {
    const field = (channel as Record<string, unknown>)?.field;
    if (typeof field === "string") {
      fields.push(field);
    }
  }
  for (const record of values as Record<string, unknown>[]) {
    for (const field of fields) {
      if (!(field in record)) {
        throw new Error(`field ${field} missing from data record`);
      }
    }
  }
}

declare global {
  interface Window {
    vegaEmbed?: (
      el: HTMLElement,
      spec: Record<string, unknown>,
      opts?: Record<string, unknown>,
    ) => Promise<unknown>;
  }
}

/** Browser renderer backed by the vega-embed global. */
export const vegaEmbedRenderer: ChartRenderer = async (spec, element) => {
  const embed = (globalThis as unknown as Window).vegaEmbed;
  if (embed === undefined) {
    throw new Error("vega-embed is not loaded");
  }
  await embed(element, spec, { actions: false });
};
