/** Quality dashboard. Every number shown here comes straight from the
 * quality endpoint; nothing is recomputed on the client. */

import type { FindingJson, QualityJson } from "./types.js";
import { refKey } from "./types.js";
import { el } from "./dom.js";

export interface DashboardHandlers {
  /* wire the deficient-set chips to pane highlighting */
  onHighlight(sources: string[], neighborhood: string[]): void;
  onClearHighlight(): void;
}

function renderGauge(quality: QualityJson): HTMLElement {
  const { sourceProperties, matchedSourceProperties } = quality.propertyCoverage;
  const ratio = sourceProperties > 0
    ? matchedSourceProperties / sourceProperties
    : 0;
  const gauge = el("div", "gauge");
  gauge.setAttribute("role", "meter");
  gauge.setAttribute("aria-valuenow", String(Math.round(ratio * 100)));
  const bar = el("div", "gauge-bar");
  const fill = el("div", "gauge-fill");
  fill.style.width = `${(ratio * 100).toFixed(1)}%`;
  bar.appendChild(fill);
  gauge.appendChild(bar);
  gauge.appendChild(el("span", "gauge-label",
    `${matchedSourceProperties} of ${sourceProperties} source properties covered`));
  return gauge;
}

function renderMatching(
  quality: QualityJson,
  handlers: DashboardHandlers,
): HTMLElement {
  const section = el("section", "matching-summary");
  if (quality.perfect) {
    section.appendChild(el("span", "badge badge-perfect", "perfect matching"));
  } else {
    section.appendChild(el("span", "badge badge-gap", "coverage gap"));
    const deficient = quality.deficientSet;
    if (deficient) {
      const why = el("div", "deficient-set");
      why.appendChild(el("p", undefined,
        `${deficient.sources.length} source elements compete for `
        + `${deficient.neighborhood.length} target candidates; `
        + "no assignment can cover them all."));
      const chips = el("div", "chips");
      for (const ref of deficient.sources) {
        const chip = el("button", "chip chip-source", ref);
        chip.setAttribute("data-ref", ref);
        chip.addEventListener("click", () =>
          handlers.onHighlight(deficient.sources, deficient.neighborhood));
        chips.appendChild(chip);
      }
      for (const ref of deficient.neighborhood) {
        const chip = el("button", "chip chip-neighborhood", ref);
        chip.setAttribute("data-ref", ref);
        chips.appendChild(chip);
      }
      why.appendChild(chips);
      const clear = el("button", "chip chip-clear", "clear highlight");
      clear.addEventListener("click", () => handlers.onClearHighlight());
      why.appendChild(clear);
      section.appendChild(why);
    }
    if (quality.unmatchedSources.length > 0) {
      section.appendChild(el("p", "unmatched",
        "unmatched sources: " + quality.unmatchedSources.join(", ")));
    }
  }
  section.appendChild(el("p", "matching-size",
    `maximum matching covers ${quality.maximumMatchingSize} node pairs`));
  return section;
}

function renderScores(quality: QualityJson): HTMLElement {
  const section = el("section", "scores");
  section.appendChild(el("h3", undefined,
    `overall score ${quality.overallScore}`));
  const paths = el("table", "path-scores");
  const head = el("tr");
  for (const col of ["from", "to", "rules", "score"]) {
    head.appendChild(el("th", undefined, col));
  }
  paths.appendChild(head);
  for (const path of quality.pathScores) {
    const row = el("tr", "path-row");
    row.appendChild(el("td", undefined, refKey(path.from)));
    row.appendChild(el("td", undefined, refKey(path.to)));
    row.appendChild(el("td", undefined, path.rules.join(" > ")));
    row.appendChild(el("td", "path-score", String(path.score)));
    paths.appendChild(row);
  }
  section.appendChild(paths);
  const rules = el("details", "rule-scores");
  rules.appendChild(el("summary", undefined,
    `per-rule scores (${Object.keys(quality.ruleScores).length})`));
  const list = el("ul");
  for (const [ruleId, score] of Object.entries(quality.ruleScores)) {
    const item = el("li", "rule-score", `${ruleId}: ${score}`);
    item.setAttribute("data-rule", ruleId);
    list.appendChild(item);
  }
  rules.appendChild(list);
  section.appendChild(rules);
  return section;
}

function renderFinding(finding: FindingJson): HTMLElement {
  const row = el("div",
    "finding finding-" + finding.status.toLowerCase().replace(/_/g, "-"));
  row.setAttribute("data-status", finding.status);
  const head = el("div", "finding-head");
  head.appendChild(el("span", "finding-status", finding.status));
  head.appendChild(el("span", "finding-pair",
    `${refKey(finding.from)} to ${refKey(finding.to)}`));
  row.appendChild(head);
  const paths = el("p", "finding-paths",
    `${finding.path1.join(" > ")} (score ${finding.score1}) vs `
    + `${finding.path2.join(" > ")} (score ${finding.score2})`);
  row.appendChild(paths);
  if (finding.recommendation) {
    row.appendChild(el("p", "finding-recommendation", finding.recommendation));
  }
  const examples = finding.counterexamples ?? [];
  if (examples.length > 0) {
    const drill = el("details", "counterexamples");
    drill.appendChild(el("summary", undefined,
      `${examples.length} disagreeing value pairs`));
    const table = el("table");
    const head2 = el("tr");
    for (const col of ["element", "input", "path 1 value", "path 2 value"]) {
      head2.appendChild(el("th", undefined, col));
    }
    table.appendChild(head2);
    for (const example of examples) {
      const line = el("tr", "counterexample");
      line.appendChild(el("td", undefined, String(example.element ?? "")));
      line.appendChild(el("td", undefined, String(example.input)));
      line.appendChild(el("td", "via1", String(example.via1)));
      line.appendChild(el("td", "via2", String(example.via2)));
      table.appendChild(line);
    }
    drill.appendChild(table);
    row.appendChild(drill);
  }
  return row;
}

function renderFindings(quality: QualityJson): HTMLElement {
  const section = el("section", "findings");
  const errors = quality.commutativityFindings
    .filter((f) => f.status === "CONSISTENCY_ERROR");
  if (errors.length > 0) {
    const panel = el("div", "consistency-errors");
    panel.appendChild(el("h3", undefined,
      `${errors.length} consistency ${errors.length === 1 ? "error" : "errors"}: `
      + "alternative paths disagree on values"));
    for (const finding of errors) panel.appendChild(renderFinding(finding));
    section.appendChild(panel);
  }
  const rest = quality.commutativityFindings
    .filter((f) => f.status !== "CONSISTENCY_ERROR");
  if (rest.length > 0) {
    const panel = el("div", "commutativity");
    panel.appendChild(el("h3", undefined, "alternative path checks"));
    for (const finding of rest) panel.appendChild(renderFinding(finding));
    section.appendChild(panel);
  }
  if (quality.commutativityFindings.length === 0) {
    section.appendChild(el("p", "no-findings",
      "no alternative paths to compare"));
  }
  return section;
}

export function renderDashboard(
  container: HTMLElement,
  quality: QualityJson | null,
  handlers: DashboardHandlers,
): void {
  container.textContent = "";
  if (!quality) {
    container.appendChild(el("p", "dashboard-empty",
      "quality report appears once a target and matches exist"));
    return;
  }
  container.appendChild(renderGauge(quality));
  container.appendChild(renderMatching(quality, handlers));
  container.appendChild(renderScores(quality));
  container.appendChild(renderFindings(quality));
}
