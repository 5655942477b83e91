/** Synthetic read-event log: opening a suggestion in the UI is recorded in
 * the same shape as an audit-log read event, so a demo session can be
 * replayed through the sessionizer. */

export interface SyntheticReadEvent {
    visit_id: string;
    doc_id: string;
    reader_id: string;
    time: number;
}

export class ReadEventLog {
    private events: SyntheticReadEvent[] = [];

    constructor(private readerId: string = "ui-user") {}

    logOpen(visitId: string, docId: string, time: number): SyntheticReadEvent {
        const event: SyntheticReadEvent = {
            visit_id: visitId, doc_id: docId,
            reader_id: this.readerId, time,
        };
        this.events.push(event);
        return event;
    }

    all(): readonly SyntheticReadEvent[] {
        return this.events;
    }

    countFor(docId: string): number {
        return this.events.filter(e => e.doc_id === docId).length;
    }

    /** One JSON object per line, the corpus read_events.jsonl format. */
    toJsonl(): string {
        return this.events.map(e => JSON.stringify(e)).join("\n")
            + (this.events.length ? "\n" : "");
    }
}
