/** DOM rendering helpers. All state lives in the pure modules; this file
 * only projects it into elements. */

import { RankedSuggestions } from "./api.js";
import { JudgmentBadges, JUDGMENT_LABELS, LABEL_TITLES } from "./judgments.js";
import { AgreementRow } from "./judgments.js";
import { TimelineViewModel } from "./timeline.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) {
        node.className = className;
    }
    if (text !== undefined) {
        node.textContent = text;
    }
    return node;
}

export interface SuggestionHandlers {
    onOpen(docId: string): void;
    onJudge(docId: string, sessionIndex: number, label: string): void;
}

export function renderSuggestions(container: HTMLElement,
                                  result: RankedSuggestions,
                                  badges: JudgmentBadges,
                                  handlers: SuggestionHandlers): void {
    container.replaceChildren();
    const header = el("div", "panel-header",
        `Session ${result.session_index} — top ${result.items.length}`);
    container.appendChild(header);
    for (const item of result.items) {
        const card = el("div", "suggestion");
        const title = el("a", "doc-id", item.doc_id);
        title.href = "#";
        title.addEventListener("click", ev => {
            ev.preventDefault();
            handlers.onOpen(item.doc_id);
        });
        card.appendChild(title);

        const chips = el("div", "chips");
        chips.appendChild(el("span", "chip service", item.service));
        chips.appendChild(el("span", "chip note-type", item.note_type));
        chips.appendChild(el("span", "chip rel-time", item.relative_time));
        chips.appendChild(el("span", "chip prob",
            item.probability.toFixed(3)));
        card.appendChild(chips);

        const badge = badges.badge(result.visit_id, result.session_index,
            item.doc_id);
        if (badge) {
            card.appendChild(el("span", `badge ${badge}`,
                LABEL_TITLES[badge]));
        }

        const buttons = el("div", "judge-buttons");
        for (const label of JUDGMENT_LABELS) {
            const button = el("button", `judge ${label}`, LABEL_TITLES[label]);
            button.addEventListener("click", () =>
                handlers.onJudge(item.doc_id, result.session_index, label));
            buttons.appendChild(button);
        }
        card.appendChild(buttons);
        container.appendChild(card);
    }
}

export function renderError(banner: HTMLElement, message: string | null): void {
    banner.textContent = message ?? "";
    banner.classList.toggle("visible", message !== null);
}

export function renderTimeline(container: HTMLElement,
                               vm: TimelineViewModel): void {
    container.replaceChildren();

    const track = el("div", "session-track");
    for (const s of vm.sessions) {
        const span = el("div", "session-span", String(s.index));
        span.style.left = `${s.startFrac * 100}%`;
        span.style.width = `${Math.max(0.5, (s.endFrac - s.startFrac) * 100)}%`;
        span.title = `session ${s.index}: ${s.nReads} reads`;
        track.appendChild(span);
    }
    for (const f of vm.snapshotFracs) {
        const mark = el("div", "snapshot-mark");
        mark.style.left = `${f * 100}%`;
        track.appendChild(mark);
    }
    container.appendChild(track);

    for (const row of vm.rows) {
        const rowEl = el("div", "reader-row");
        rowEl.appendChild(el("span", "reader-id", row.readerId));
        const lane = el("div", "dot-lane");
        for (const dot of row.dots) {
            const dotEl = el("div", "read-dot");
            dotEl.style.left = `${dot.frac * 100}%`;
            dotEl.title = `${dot.docId} @ ${new Date(dot.time * 1000).toISOString()}`;
            lane.appendChild(dotEl);
        }
        rowEl.appendChild(lane);
        container.appendChild(rowEl);
    }

    const grid = el("table", "read-grid");
    const head = el("tr");
    for (const caption of ["reader", "document", "opens"]) {
        head.appendChild(el("th", undefined, caption));
    }
    grid.appendChild(head);
    for (const cell of vm.grid) {
        const tr = el("tr");
        tr.appendChild(el("td", undefined, cell.readerId));
        tr.appendChild(el("td", undefined, cell.docId));
        tr.appendChild(el("td", undefined, String(cell.count)));
        grid.appendChild(tr);
    }
    container.appendChild(grid);
}

export function renderAgreement(container: HTMLElement,
                                rows: AgreementRow[],
                                capturedFraction: number | null): void {
    container.replaceChildren();
    const summary = capturedFraction === null
        ? "no relevant-positive judgments yet"
        : `captured ${(capturedFraction * 100).toFixed(0)}% of relevant positives`;
    container.appendChild(el("div", "panel-header", summary));
    const table = el("table", "agreement");
    const head = el("tr");
    for (const caption of ["session", "document", "label", "capture"]) {
        head.appendChild(el("th", undefined, caption));
    }
    table.appendChild(head);
    for (const row of rows) {
        const tr = el("tr");
        tr.appendChild(el("td", undefined, String(row.sessionIndex)));
        tr.appendChild(el("td", undefined, row.docId));
        tr.appendChild(el("td", undefined, LABEL_TITLES[row.label]));
        tr.appendChild(el("td", undefined, row.capture));
        table.appendChild(tr);
    }
    container.appendChild(table);
}
