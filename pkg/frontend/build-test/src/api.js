/** Typed client for the session service JSON protocol (docs/api_schema.json). */
export class ApiError extends Error {
    status;
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
async function requestJson(url, init) {
    const resp = await fetch(url, init);
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
        throw new ApiError(resp.status, body.error ?? `HTTP ${resp.status}`);
    }
    return body;
}
export class SessionApi {
    base;
    constructor(base) {
        this.base = base;
    }
    async createSession(options) {
        const body = await requestJson(`${this.base}/sessions`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(options),
        });
        return body.session_id;
    }
    next(sessionId) {
        return requestJson(`${this.base}/sessions/${sessionId}/next`);
    }
    /** Post one detection press. The server timestamps it on receipt. */
    postResponse(sessionId) {
        return requestJson(`${this.base}/sessions/${sessionId}/response`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: "{}",
        });
    }
    async trace(sessionId) {
        const body = await requestJson(`${this.base}/sessions/${sessionId}/trace`);
        return body.rows;
    }
    result(sessionId) {
        return requestJson(`${this.base}/sessions/${sessionId}/result`);
    }
}
export function thresholdValue(threshold) {
    return threshold.value === "NaN" ? null : threshold.value;
}
