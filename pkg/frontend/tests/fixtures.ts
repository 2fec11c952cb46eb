/** Transcript fixture mirroring the four-turn walkthrough as the service
 * emits it: a text reply, two SQL turns with tables, and a bar chart. */

import type { Transcript } from "../src/types.js";

export const BAR_SPEC = {
  $schema: "https://vega.github.io/schema/vega-lite/v5.json",
  mark: "bar",
  encoding: {
    x: { field: "name", type: "nominal" },
    y: { field: "avg(price)", type: "quantitative" },
  },
  data: {
    values: [
      { name: "a", "avg(price)": 2.0 },
      { name: "b", "avg(price)": 2.0 },
    ],
  },
};

export function caseStudyTranscript(): Transcript {
  return {
    id: "case-study",
    dataset_ref: "product",
    turns: [
      {
        query: "give me a short description about the table",
        modality: "text",
        text: "this table describes 3 products with columns name and price",
      },
      {
        query:
          "what are the different product names and the average product price for each of them",
        modality: "sql",
        sql: "SELECT name, AVG(price) FROM product GROUP BY name",
        table: {
          columns: ["name", "avg(price)"],
          rows: [
            ["a", 2.0],
            ["b", 2.0],
          ],
        },
      },
      {
        query: "how about the minimum product price",
        modality: "sql",
        sql: "SELECT MIN(price) FROM product",
        table: { columns: ["min(price)"], rows: [[1]] },
      },
      {
        query: "show me a bar for the above result",
        modality: "dv",
        dv_query:
          "VISUALIZE BAR SELECT name, AVG(price) FROM product GROUP BY name",
        vegalite: BAR_SPEC,
      },
    ],
  };
}
