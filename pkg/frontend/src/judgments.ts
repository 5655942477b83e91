/** Three-label relevance judgment capture and the agreement summary. */

import { AgreementEntry, JudgmentLabel, JudgmentRecord } from "./api.js";

export const JUDGMENT_LABELS: readonly JudgmentLabel[] = [
    "relevant_positive", "relevant_negative", "irrelevant_negative",
];

export const LABEL_TITLES: Record<JudgmentLabel, string> = {
    relevant_positive: "Relevant, read",
    relevant_negative: "Relevant, not read",
    irrelevant_negative: "Irrelevant",
};

export function isJudgmentLabel(value: string): value is JudgmentLabel {
    return (JUDGMENT_LABELS as readonly string[]).includes(value);
}

function key(visitId: string, sessionIndex: number, docId: string): string {
    return `${visitId} ${sessionIndex} ${docId}`;
}

/** Local mirror of persisted judgments; the last label per
 * (visit, session, doc) wins, matching the server's store. */
export class JudgmentBadges {
    private labels = new Map<string, JudgmentLabel>();

    record(j: JudgmentRecord): void {
        this.labels.set(key(j.visit_id, j.session_index, j.doc_id), j.label);
    }

    recordAll(records: JudgmentRecord[]): void {
        for (const j of records) {
            this.record(j);
        }
    }

    badge(visitId: string, sessionIndex: number, docId: string,
          ): JudgmentLabel | undefined {
        return this.labels.get(key(visitId, sessionIndex, docId));
    }

    get size(): number {
        return this.labels.size;
    }
}

/** "rank 3" for captured suggestions; an X marks a judged document the
 * service never predicted. */
export function describeCaptureRank(rank: number | null): string {
    return rank === null ? "X / not in top 10" : `rank ${rank}`;
}

export interface AgreementRow {
    docId: string;
    sessionIndex: number;
    label: JudgmentLabel;
    capture: string;
}

export function agreementRows(entries: AgreementEntry[]): AgreementRow[] {
    return entries.map(e => ({
        docId: e.doc_id,
        sessionIndex: e.session_index,
        label: e.label,
        capture: describeCaptureRank(e.rank),
    }));
}
