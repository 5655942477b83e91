/** Typed client for the ranking/judgment HTTP service. The UI never ranks
 * locally; every ordering decision comes from these endpoints. */

export interface SuggestionItem {
    doc_id: string;
    probability: number;
    creation_time: number;
    service: string;
    note_type: string;
    relative_time: string;
}

export interface RankedSuggestions {
    visit_id: string;
    session_index: number;
    k: number;
    items: SuggestionItem[];
}

export interface RankRequest {
    visit_id: string;
    current_note_text: string;
    timestamp: number;
    k: number;
}

export interface VisitInfo {
    visit_id: string;
    patient_id: string;
    start_time: number;
    end_time: number;
    chief_complaints: string[];
}

export interface SnapshotInfo {
    time: number;
    writer_id: string;
    writer_role: string;
    text: string;
}

export interface ReadEventInfo {
    doc_id: string;
    reader_id: string;
    time: number;
}

export interface SessionInfo {
    index: number;
    start_time: number;
    end_time: number;
    n_reads: number;
    available_count: number;
    positive_doc_ids: string[];
}

export interface DocumentInfo {
    doc_id: string;
    creation_time: number;
    service: string;
    note_type: string;
}

export interface TimelineResponse {
    visit: VisitInfo;
    snapshots: SnapshotInfo[];
    read_events: ReadEventInfo[];
    sessions: SessionInfo[];
    documents: DocumentInfo[];
}

export type JudgmentLabel =
    | "relevant_positive"
    | "relevant_negative"
    | "irrelevant_negative";

export interface JudgmentRecord {
    annotator_id: string;
    visit_id: string;
    session_index: number;
    doc_id: string;
    label: JudgmentLabel;
    recorded_at: number;
}

export interface AgreementEntry {
    annotator_id: string;
    visit_id: string;
    session_index: number;
    doc_id: string;
    label: JudgmentLabel;
    rank: number | null;
}

export interface AgreementResponse {
    judgments: AgreementEntry[];
    n_relevant_positive: number;
    captured_fraction: number | null;
}

export interface WeightEntry {
    feature: string;
    weight: number;
}

export class ApiError extends Error {
    constructor(public status: number, public code: string, message: string) {
        super(message || code);
    }
}

async function toJson<T>(resp: Response): Promise<T> {
    const body = await resp.json();
    if (!resp.ok) {
        throw new ApiError(resp.status, body.error ?? "unknown_error",
            body.message ?? "");
    }
    return body as T;
}

export class ServiceClient {
    constructor(private baseUrl: string = "",
                private fetchFn: typeof fetch = fetch) {}

    rank(req: RankRequest): Promise<RankedSuggestions> {
        return this.fetchFn(`${this.baseUrl}/rank`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(req),
        }).then(r => toJson<RankedSuggestions>(r));
    }

    timeline(visitId: string): Promise<TimelineResponse> {
        return this.fetchFn(
            `${this.baseUrl}/visits/${encodeURIComponent(visitId)}/timeline`)
            .then(r => toJson<TimelineResponse>(r));
    }

    weights(n: number, sign: "+" | "-"): Promise<WeightEntry[]> {
        const params = new URLSearchParams({ n: String(n), sign });
        return this.fetchFn(`${this.baseUrl}/model/weights?${params}`)
            .then(r => toJson<{ weights: WeightEntry[] }>(r))
            .then(body => body.weights);
    }

    postJudgment(judgment: Omit<JudgmentRecord, "recorded_at">,
                 ): Promise<JudgmentRecord> {
        return this.fetchFn(`${this.baseUrl}/judgments`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(judgment),
        }).then(r => toJson<JudgmentRecord>(r));
    }

    judgments(visitId?: string): Promise<JudgmentRecord[]> {
        const suffix = visitId
            ? `?visit_id=${encodeURIComponent(visitId)}` : "";
        return this.fetchFn(`${this.baseUrl}/judgments${suffix}`)
            .then(r => toJson<{ judgments: JudgmentRecord[] }>(r))
            .then(body => body.judgments);
    }

    agreement(): Promise<AgreementResponse> {
        return this.fetchFn(`${this.baseUrl}/judgments/agreement`)
            .then(r => toJson<AgreementResponse>(r));
    }
}
