import { describe, expect, it } from "vitest";

import { ReadEventLog } from "../src/readlog.js";

describe("ReadEventLog", () => {
    it("records suggestion opens in audit-log shape", () => {
        const log = new ReadEventLog("dr-demo");
        const event = log.logOpen("v1", "d3", 1700000000);
        expect(event).toEqual({
            visit_id: "v1", doc_id: "d3",
            reader_id: "dr-demo", time: 1700000000,
        });
        expect(log.all()).toHaveLength(1);
    });

    it("counts repeated opens per document", () => {
        const log = new ReadEventLog();
        log.logOpen("v1", "d1", 10);
        log.logOpen("v1", "d1", 20);
        log.logOpen("v1", "d2", 30);
        expect(log.countFor("d1")).toBe(2);
        expect(log.countFor("d2")).toBe(1);
        expect(log.countFor("d9")).toBe(0);
    });

    it("serializes to one JSON object per line", () => {
        const log = new ReadEventLog("u");
        expect(log.toJsonl()).toBe("");
        log.logOpen("v1", "d1", 10);
        log.logOpen("v1", "d2", 20);
        const lines = log.toJsonl().trimEnd().split("\n");
        expect(lines).toHaveLength(2);
        expect(JSON.parse(lines[0])).toEqual({
            visit_id: "v1", doc_id: "d1", reader_id: "u", time: 10,
        });
    });
});
