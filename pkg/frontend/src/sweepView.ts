/** Parallel-coordinates viewer for threshold sweep CSVs.

One polyline per CSV row (threshold) across the four metric axes, all
bounded to [0, 1]. Hovering a line highlights it and dims the rest.
*/

export interface SweepRow {
  threshold: number;
  ndcg10: number;
  mrr10: number;
  precision: number;
  recall: number;
  avg_found: number;
}

export const METRIC_AXES = ["ndcg10", "mrr10", "precision", "recall"] as const;

const HEADER = "threshold,ndcg10,mrr10,precision,recall,avg_found";

export class CsvFormatError extends Error {
  constructor(lineNumber: number, line: string, reason: string) {
    super(`line ${lineNumber}: ${reason}: ${JSON.stringify(line)}`);
    this.name = "CsvFormatError";
  }
}

export function parseSweepCsv(text: string): SweepRow[] {
  const lines = text.split("\n");
  if (lines.length === 0 || lines[0].trim() !== HEADER) {
    throw new CsvFormatError(1, lines[0] ?? "", `expected header ${HEADER}`);
  }
  const rows: SweepRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i];
    if (line.trim() === "") continue;
    const fields = line.split(",");
    if (fields.length !== 6 || fields.some((f) => f.trim() === "" || Number.isNaN(Number(f)))) {
      throw new CsvFormatError(i + 1, line, "expected 6 numeric fields");
    }
    const [threshold, ndcg10, mrr10, precision, recall, avgFound] = fields.map(Number);
    rows.push({ threshold, ndcg10, mrr10, precision, recall, avg_found: avgFound });
  }
  return rows;
}

const WIDTH = 640;
const HEIGHT = 320;
const MARGIN = { top: 24, right: 60, bottom: 28, left: 60 };
const SVG_NS = "http://www.w3.org/2000/svg";

function axisX(index: number): number {
  const span = WIDTH - MARGIN.left - MARGIN.right;
  return MARGIN.left + (span * index) / (METRIC_AXES.length - 1);
}

/** Metric value in [0,1] to a y pixel; 0 at the bottom, 1 at the top. */
export function metricY(value: number): number {
  const clamped = Math.max(0, Math.min(1, value));
  return MARGIN.top + (1 - clamped) * (HEIGHT - MARGIN.top - MARGIN.bottom);
}

export function renderSweep(container: HTMLElement, csvText: string): void {
  container.replaceChildren();
  let rows: SweepRow[];
  try {
    rows = parseSweepCsv(csvText);
  } catch (error) {
    const message = document.createElement("div");
    message.className = "sweep-error";
    message.textContent = error instanceof Error ? error.message : String(error);
    container.appendChild(message);
    return;
  }
  if (rows.length === 0) {
    const empty = document.createElement("div");
    empty.className = "sweep-empty";
    empty.textContent = "no data";
    container.appendChild(empty);
    return;
  }

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(HEIGHT));
  svg.classList.add("sweep-plot");

  METRIC_AXES.forEach((metric, index) => {
    const x = axisX(index);
    const axis = document.createElementNS(SVG_NS, "line");
    axis.setAttribute("x1", String(x));
    axis.setAttribute("x2", String(x));
    axis.setAttribute("y1", String(metricY(1)));
    axis.setAttribute("y2", String(metricY(0)));
    axis.classList.add("axis");
    svg.appendChild(axis);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(x));
    label.setAttribute("y", String(HEIGHT - 8));
    label.setAttribute("text-anchor", "middle");
    label.classList.add("axis-label");
    label.textContent = metric;
    svg.appendChild(label);
  });

  for (const row of rows) {
    const points = METRIC_AXES.map(
      (metric, index) => `${axisX(index)},${metricY(row[metric])}`,
    ).join(" ");
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute("points", points);
    line.classList.add("sweep-line");
    line.dataset.threshold = row.threshold.toFixed(6);
    line.addEventListener("mouseenter", () => {
      svg.querySelectorAll(".sweep-line").forEach((other) => {
        other.classList.toggle("active", other === line);
        other.classList.toggle("dimmed", other !== line);
      });
      caption.textContent = `threshold ${row.threshold.toFixed(2)}`;
    });
    line.addEventListener("mouseleave", () => {
      svg.querySelectorAll(".sweep-line").forEach((other) => {
        other.classList.remove("active", "dimmed");
      });
      caption.textContent = "";
    });
    svg.appendChild(line);
  }

  const caption = document.createElement("div");
  caption.className = "sweep-caption";
  container.append(svg, caption);
}
