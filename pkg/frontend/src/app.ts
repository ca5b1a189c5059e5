import { ApiClient } from "./api.js";
import { AgreementDashboard } from "./agreement.js";
import { LabelSession } from "./session.js";
import { CATEGORY_TAGS, RankReview } from "./rank.js";
import type { LabelValue } from "./types.js";

type Tab = "label" | "agreement" | "rank";

const KEY_BINDINGS: Record<string, LabelValue> = {
  p: "positive",
  "1": "positive",
  n: "negative",
  "2": "negative",
  s: "skip",
  "3": "skip",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export class App {
  private readonly client: ApiClient;
  private readonly session: LabelSession;
  private readonly dashboard: AgreementDashboard;
  private readonly review: RankReview;
  private tab: Tab = "label";
  private busy = false;

  constructor(
    private readonly root: HTMLElement,
    baseUrl: string,
    readonly annotator: string,
  ) {
    this.client = new ApiClient(baseUrl);
    this.session = new LabelSession(this.client, annotator);
    this.dashboard = new AgreementDashboard(this.client);
    this.review = new RankReview(this.client);
  }

  async start(): Promise<void> {
    await this.session.start();
    document.addEventListener("keydown", (event) => {
      void this.onKey(event);
    });
    this.render();
  }

  private async onKey(event: KeyboardEvent): Promise<void> {
    if (this.tab !== "label" || this.busy) return;
    if (event.key === "r" && this.session.awaitingRetry) {
      await this.guarded(() => this.session.retry());
      return;
    }
    const label = KEY_BINDINGS[event.key];
    if (label) {
      await this.guarded(() => this.session.label(label));
    }
  }

  private async guarded(action: () => Promise<unknown>): Promise<void> {
    this.busy = true;
    try {
      await action();
    } finally {
      this.busy = false;
      this.render();
    }
  }

  private async switchTab(tab: Tab): Promise<void> {
    this.tab = tab;
    if (tab === "agreement") await this.dashboard.refresh();
    if (tab === "rank" && this.review.items.length === 0) {
      try {
        await this.review.load();
      } catch {
        // No model loaded yet; the rank view renders an explanatory note.
      }
    }
    this.render();
  }

  render(): void {
    this.root.replaceChildren();
    this.root.append(this.renderTabs());
    if (this.tab === "label") this.root.append(this.renderLabelView());
    if (this.tab === "agreement") this.root.append(this.renderAgreementView());
    if (this.tab === "rank") this.root.append(this.renderRankView());
  }

  private renderTabs(): HTMLElement {
    const nav = el("nav", "tabs");
    const tabs: [Tab, string][] = [
      ["label", "Label"],
      ["agreement", "Agreement"],
      ["rank", "Rank review"],
    ];
    for (const [tab, title] of tabs) {
      const button = el("button", this.tab === tab ? "tab active" : "tab", title);
      button.addEventListener("click", () => void this.switchTab(tab));
      nav.append(button);
    }
    nav.append(el("span", "annotator", `annotator: ${this.annotator}`));
    return nav;
  }

  private renderDefinition(): HTMLElement {
    const aside = el("aside", "definition");
    aside.append(el("h2", "", "Definition checklist"));
    const definition = this.session.definition;
    if (!definition) return aside;
    aside.append(el("h3", "", "A comment is positive when it"));
    const pos = el("ul", "criteria positive");
    for (const criterion of definition.positive_criteria) {
      pos.append(el("li", "", criterion));
    }
    aside.append(pos);
    aside.append(el("h3", "", "A comment is negative when it"));
    const neg = el("ul", "criteria negative");
    for (const criterion of definition.negative_criteria) {
      neg.append(el("li", "", criterion));
    }
    aside.append(neg);
    return aside;
  }

  private renderLabelView(): HTMLElement {
    const main = el("main", "label-view");
    // The checklist stays pinned next to every comment.
    main.append(this.renderDefinition());
    const panel = el("section", "comment-panel");
    const { labeled, total } = this.session.progress;
    panel.append(el("div", "progress", `${labeled} / ${total} labeled`));
    if (this.session.notice === "batch_reloaded") {
      panel.append(el("div", "notice", "The batch changed on the server and was reloaded."));
    }
    const item = this.session.current();
    if (this.session.awaitingRetry) {
      panel.append(el("div", "error", "Could not reach the server; your label was not recorded."));
      const retry = el("button", "retry", "Retry (r)");
      retry.addEventListener("click", () => void this.guarded(() => this.session.retry()));
      panel.append(retry);
    } else if (item === null) {
      panel.append(el("div", "done", "Batch complete. Waiting for the other annotator."));
    } else {
      panel.append(el("div", "position", `comment ${item.position} of ${total}`));
      panel.append(el("blockquote", "comment-text", item.text));
      const controls = el("div", "controls");
      const buttons: [LabelValue, string][] = [
        ["positive", "Positive (p)"],
        ["negative", "Negative (n)"],
        ["skip", "Skip (s)"],
      ];
      for (const [value, title] of buttons) {
        const button = el("button", `label-${value}`, title);
        button.addEventListener("click", () =>
          void this.guarded(() => this.session.label(value)),
        );
        controls.append(button);
      }
      panel.append(controls);
    }
    main.append(panel);
    return main;
  }

  private renderAgreementView(): HTMLElement {
    const main = el("main", "agreement-view");
    if (this.dashboard.state === "pending") {
      main.append(el("div", "pending", "Round in progress — agreement appears once both annotators finish."));
      return main;
    }
    const kappa = this.dashboard.kappa;
    main.append(
      el("div", "kappa", kappa === null ? "No overlapping labels." : `Cohen's kappa: ${kappa.toFixed(4)}`),
    );
    if (this.dashboard.roundResolvable) {
      main.append(el("div", "resolvable", "All disagreements adjudicated — round resolvable."));
      return main;
    }
    const item = this.dashboard.currentDisagreement();
    if (item) {
      const card = el("section", "disagreement");
      card.append(el("div", "queue", `${this.dashboard.unresolved.length} disagreement(s) left`));
      card.append(el("blockquote", "comment-text", item.text));
      card.append(el("div", "labels", `A: ${item.label_a} — B: ${item.label_b}`));
      const note = el("input", "note");
      note.placeholder = "resolution note";
      card.append(note);
      for (const value of ["positive", "negative"] as const) {
        const button = el("button", `label-${value}`, `Resolve ${value}`);
        button.addEventListener("click", () =>
          void this.guarded(() => this.dashboard.adjudicate(value, note.value)),
        );
        card.append(button);
      }
      const nav = el("div", "queue-nav");
      const prev = el("button", "", "Previous");
      prev.addEventListener("click", () => { this.dashboard.previous(); this.render(); });
      const next = el("button", "", "Next");
      next.addEventListener("click", () => { this.dashboard.next(); this.render(); });
      nav.append(prev, next);
      card.append(nav);
      main.append(card);
    }
    return main;
  }

  private renderRankView(): HTMLElement {
    const main = el("main", "rank-view");
    if (this.review.items.length === 0) {
      main.append(el("div", "pending", "No ranked predictions — train a model first."));
      return main;
    }
    const exportButton = el("button", "export", "Export CSV");
    exportButton.addEventListener("click", () => this.downloadCsv());
    main.append(exportButton);
    const table = el("table", "rank-table");
    const head = el("tr");
    for (const title of ["p(+)", "comment", "false positive", ...CATEGORY_TAGS]) {
      head.append(el("th", "", title));
    }
    table.append(head);
    for (const item of this.review.items) {
      const row = el("tr");
      row.append(el("td", "prob", item.prob_positive.toFixed(3)));
      row.append(el("td", "text", item.text));
      const fpCell = el("td");
      const fp = el("input") as HTMLInputElement;
      fp.type = "checkbox";
      fp.checked = this.review.isFalsePositive(item.comment_id);
      fp.addEventListener("change", () => {
        if (fp.checked) this.review.markFalsePositive(item.comment_id);
        else this.review.clearReview(item.comment_id);
        this.render();
      });
      fpCell.append(fp);
      row.append(fpCell);
      for (const tag of CATEGORY_TAGS) {
        const cell = el("td");
        const box = el("input") as HTMLInputElement;
        box.type = "checkbox";
        box.checked = this.review.tagsFor(item.comment_id).has(tag);
        box.addEventListener("change", () => {
          this.review.toggleTag(item.comment_id, tag);
          this.render();
        });
        cell.append(box);
        row.append(cell);
      }
      table.append(row);
    }
    main.append(table);
    const report = this.review.toExport();
    if (report.precision !== null) {
      main.append(
        el("div", "precision",
           `precision ${report.precision.toFixed(2)} (${report.nTruePositive}/${report.nReviewed} reviewed)`),
      );
    }
    return main;
  }

  private downloadCsv(): void {
    const { csv } = this.review.toExport();
    const blob = new Blob([csv], { type: "text/csv;charset=utf-8" });
    const url = URL.createObjectURL(blob);
    const link = el("a") as HTMLAnchorElement;
    link.href = url;
    link.download = "rank_review.csv";
    link.click();
    URL.revokeObjectURL(url);
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const params = new URLSearchParams(window.location.search);
  const annotator =
    params.get("annotator") ??
    window.localStorage.getItem("annotator") ??
    window.prompt("annotator id") ??
    "";
  if (!annotator) {
    root.textContent = "An annotator id is required.";
    return;
  }
  window.localStorage.setItem("annotator", annotator);
  const app = new App(root, params.get("api") ?? "", annotator);
  void app.start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
