/** Wires the editor panel, suggestion sidebar, timeline, and judgment views
 * against the HTTP service. */

import { RankedSuggestions, ServiceClient } from "./api.js";
import { SuggestionController } from "./editor.js";
import { agreementRows, isJudgmentLabel, JudgmentBadges } from "./judgments.js";
import { ReadEventLog } from "./readlog.js";
import { renderAgreement, renderError, renderSuggestions,
         renderTimeline } from "./render.js";
import { buildTimelineViewModel } from "./timeline.js";

function requireEl(id: string): HTMLElement {
    const node = document.getElementById(id);
    if (!node) {
        throw new Error(`missing #${id}`);
    }
    return node;
}

export function startApp(): void {
    const client = new ServiceClient("");
    const badges = new JudgmentBadges();
    const readLog = new ReadEventLog();

    const visitInput = requireEl("visit-id") as HTMLInputElement;
    const annotatorInput = requireEl("annotator-id") as HTMLInputElement;
    const noteArea = requireEl("note-text") as HTMLTextAreaElement;
    const suggestionPanel = requireEl("suggestions");
    const timelinePanel = requireEl("timeline");
    const agreementPanel = requireEl("agreement");
    const errorBanner = requireEl("error-banner");
    const loadButton = requireEl("load-visit") as HTMLButtonElement;

    let controller: SuggestionController | null = null;
    let visitStart = 0;

    const now = () => visitStart + Math.floor(
        (Date.now() - pageLoadMs) / 1000);
    const pageLoadMs = Date.now();

    function show(result: RankedSuggestions): void {
        renderError(errorBanner, null);
        renderSuggestions(suggestionPanel, result, badges, {
            onOpen(docId) {
                readLog.logOpen(result.visit_id, docId, now());
                void refreshTimeline(result.visit_id);
            },
            onJudge(docId, sessionIndex, label) {
                if (!isJudgmentLabel(label)) {
                    return;
                }
                client.postJudgment({
                    annotator_id: annotatorInput.value || "anonymous",
                    visit_id: result.visit_id,
                    session_index: sessionIndex,
                    doc_id: docId,
                    label,
                }).then(record => {
                    badges.record(record);
                    show(result);
                    return refreshAgreement();
                }).catch(err => renderError(errorBanner, String(err)));
            },
        });
    }

    async function refreshTimeline(visitId: string): Promise<void> {
        const data = await client.timeline(visitId);
        for (const ev of readLog.all()) {
            if (ev.visit_id === visitId) {
                data.read_events.push({
                    doc_id: ev.doc_id, reader_id: ev.reader_id, time: ev.time,
                });
            }
        }
        renderTimeline(timelinePanel, buildTimelineViewModel(data));
    }

    async function refreshAgreement(): Promise<void> {
        const body = await client.agreement();
        renderAgreement(agreementPanel, agreementRows(body.judgments),
            body.captured_fraction);
    }

    loadButton.addEventListener("click", () => {
        const visitId = visitInput.value.trim();
        if (!visitId) {
            return;
        }
        client.timeline(visitId).then(data => {
            visitStart = data.visit.start_time;
            renderTimeline(timelinePanel, buildTimelineViewModel(data));
            controller = new SuggestionController(client, visitId, {
                onSuggestions: show,
                onError: msg => renderError(errorBanner, msg),
            });
            client.judgments(visitId).then(records => badges.recordAll(records))
                .then(() => refreshAgreement())
                .catch(() => undefined);
            controller.noteChanged(noteArea.value, now());
        }).catch(err => renderError(errorBanner, String(err)));
    });

    noteArea.addEventListener("input", () => {
        controller?.noteChanged(noteArea.value, now());
    });
}

startApp();
