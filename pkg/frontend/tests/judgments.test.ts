import { describe, expect, it } from "vitest";

import { AgreementEntry, JudgmentRecord } from "../src/api.js";
import { agreementRows, describeCaptureRank, isJudgmentLabel,
         JudgmentBadges, JUDGMENT_LABELS } from "../src/judgments.js";

function record(docId: string, label: JudgmentRecord["label"],
                sessionIndex = 1): JudgmentRecord {
    return {
        annotator_id: "a", visit_id: "v1", session_index: sessionIndex,
        doc_id: docId, label, recorded_at: 0,
    };
}

describe("judgment labels", () => {
    it("exposes the three-label protocol", () => {
        expect(JUDGMENT_LABELS).toEqual([
            "relevant_positive", "relevant_negative", "irrelevant_negative"]);
    });

    it("validates label strings", () => {
        expect(isJudgmentLabel("relevant_positive")).toBe(true);
        expect(isJudgmentLabel("maybe")).toBe(false);
    });
});

describe("JudgmentBadges", () => {
    it("tracks labels per (visit, session, doc)", () => {
        const badges = new JudgmentBadges();
        badges.record(record("d1", "relevant_positive"));
        badges.record(record("d2", "irrelevant_negative", 2));
        expect(badges.badge("v1", 1, "d1")).toBe("relevant_positive");
        expect(badges.badge("v1", 2, "d2")).toBe("irrelevant_negative");
        expect(badges.badge("v1", 2, "d1")).toBeUndefined();
        expect(badges.size).toBe(2);
    });

    it("replaces the label on relabeling", () => {
        const badges = new JudgmentBadges();
        badges.record(record("d1", "relevant_positive"));
        badges.record(record("d1", "relevant_negative"));
        expect(badges.badge("v1", 1, "d1")).toBe("relevant_negative");
        expect(badges.size).toBe(1);
    });

    it("bulk-loads persisted records", () => {
        const badges = new JudgmentBadges();
        badges.recordAll([record("d1", "relevant_positive"),
                          record("d2", "relevant_negative")]);
        expect(badges.size).toBe(2);
    });
});

describe("capture descriptions", () => {
    it("shows the rank for captured documents", () => {
        expect(describeCaptureRank(1)).toBe("rank 1");
        expect(describeCaptureRank(7)).toBe("rank 7");
    });

    it("marks unranked documents with an X", () => {
        expect(describeCaptureRank(null)).toBe("X / not in top 10");
    });

    it("builds agreement rows from service entries", () => {
        const entries: AgreementEntry[] = [
            { annotator_id: "a", visit_id: "v1", session_index: 1,
              doc_id: "d1", label: "relevant_positive", rank: 1 },
            { annotator_id: "a", visit_id: "v1", session_index: 1,
              doc_id: "d9", label: "relevant_positive", rank: null },
        ];
        const rows = agreementRows(entries);
        expect(rows[0].capture).toBe("rank 1");
        expect(rows[1].capture).toBe("X / not in top 10");
        expect(rows[1].docId).toBe("d9");
    });
});
