/** Note-editing state: debounced /rank calls, request sequencing, and
 * stale-response discard. Suggestions shown always belong to the most recent
 * completed request. */

import { RankedSuggestions, RankRequest } from "./api.js";

export interface RankClient {
    rank(req: RankRequest): Promise<RankedSuggestions>;
}

export interface SuggestionSink {
    onSuggestions(result: RankedSuggestions): void;
    /** Network or service failure; the panel keeps its last good result. */
    onError(message: string): void;
}

export const DEFAULT_DEBOUNCE_MS = 600;

/** FNV-1a, enough to detect "text unchanged since last request". */
export function textHash(text: string): number {
    let h = 0x811c9dc5;
    for (let i = 0; i < text.length; i++) {
        h ^= text.charCodeAt(i);
        h = Math.imul(h, 0x01000193);
    }
    return h >>> 0;
}

export class SuggestionController {
    private timer: ReturnType<typeof setTimeout> | null = null;
    private nextSeq = 0;
    private appliedSeq = -1;
    private lastSentHash: number | null = null;
    private pendingText = "";
    private pendingTimestamp = 0;

    latest: RankedSuggestions | null = null;

    constructor(private client: RankClient,
                private visitId: string,
                private sink: SuggestionSink,
                private k: number = 10,
                private debounceMs: number = DEFAULT_DEBOUNCE_MS) {}

    /** Called on every keystroke; restarts the debounce window. */
    noteChanged(text: string, timestamp: number): void {
        this.pendingText = text;
        this.pendingTimestamp = timestamp;
        if (this.timer !== null) {
            clearTimeout(this.timer);
        }
        this.timer = setTimeout(() => {
            this.timer = null;
            void this.send();
        }, this.debounceMs);
    }

    /** Fire immediately, skipping any pending debounce window. */
    flush(): Promise<void> {
        if (this.timer !== null) {
            clearTimeout(this.timer);
            this.timer = null;
        }
        return this.send();
    }

    private async send(): Promise<void> {
        const hash = textHash(this.pendingText);
        if (hash === this.lastSentHash) {
            return; // unchanged since the last request; nothing to ask
        }
        this.lastSentHash = hash;
        const seq = this.nextSeq++;
        try {
            const result = await this.client.rank({
                visit_id: this.visitId,
                current_note_text: this.pendingText,
                timestamp: this.pendingTimestamp,
                k: this.k,
            });
            if (seq < this.appliedSeq) {
                return; // a newer response already landed
            }
            this.appliedSeq = seq;
            this.latest = result;
            this.sink.onSuggestions(result);
        } catch (err) {
            if (seq >= this.appliedSeq) {
                this.sink.onError(err instanceof Error ? err.message : String(err));
            }
        }
    }
}
