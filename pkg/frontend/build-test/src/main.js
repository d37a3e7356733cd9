/** Exam client wiring: start screen -> live session loop -> result + trace. */
import { SessionApi, thresholdValue } from "./api.js";
import { TonePlayer } from "./audio.js";
import { ExamState } from "./state.js";
import { renderTrace } from "./trace.js";
import { examScreenHtml, resultScreenHtml, startScreenHtml } from "./view.js";
const POLL_MS = 150;
const RETRY_MS = 800;
const STIMULUS_DURATION_S = 0.1;
const app = document.getElementById("app");
const tone = new TonePlayer();
function sleep(ms) {
    return new Promise((resolve) => setTimeout(resolve, ms));
}
function showStart(audioBlocked = false) {
    app.innerHTML = startScreenHtml(audioBlocked);
    const server = document.getElementById("server");
    server.value = window.location.origin;
    document.getElementById("start-form").addEventListener("submit", async (ev) => {
        ev.preventDefault();
        const unlocked = await tone.unlock();
        if (!unlocked) {
            showStart(true);
            return;
        }
        const participant = document.getElementById("participant").value;
        const site = document.getElementById("site").value;
        runExamScreen(server.value, participant, site).catch((err) => {
            app.innerHTML = `<p class="banner error">Session failed: ${String(err)}</p>
          <p><button id="again">Back</button></p>`;
            document.getElementById("again")?.addEventListener("click", () => showStart());
        });
    });
}
export async function runExamScreen(serverBase, participantId, site) {
    const api = new SessionApi(serverBase);
    const state = new ExamState();
    const sessionId = await api.createSession({ participant_id: participantId, site });
    state.start();
    let stimulusCount = 0;
    let knownIndex = -1;
    const render = () => {
        app.innerHTML = examScreenHtml(state, stimulusCount);
        document.getElementById("respond")?.addEventListener("click", respond);
    };
    const respond = () => {
        if (!state.tryRespond())
            return; // double presses collapse client-side
        api.postResponse(sessionId).catch(() => state.setConnectionLost(true));
    };
    const onKey = (ev) => {
        if (ev.code === "Space") {
            ev.preventDefault();
            respond();
        }
    };
    window.addEventListener("keydown", onKey);
    render();
    try {
        for (;;) {
            let nxt;
            try {
                nxt = await api.next(sessionId);
            }
            catch {
                // connection lost: keep the session id and retry until it resumes
                if (!state.connectionLost) {
                    state.setConnectionLost(true);
                    render();
                }
                await sleep(RETRY_MS);
                continue;
            }
            if (state.connectionLost) {
                state.setConnectionLost(false);
                render();
            }
            if (nxt.complete) {
                const rows = await api.trace(sessionId);
                const value = thresholdValue(nxt.threshold);
                state.completed({
                    value,
                    saturated: nxt.threshold.saturated,
                    reversalValues: nxt.threshold.reversal_values.filter((v) => v !== "NaN"),
                });
                app.innerHTML = resultScreenHtml(state.result, renderTrace(rows, { threshold: value }));
                document.getElementById("again")?.addEventListener("click", () => showStart());
                return;
            }
            if (nxt.stimulus_index !== knownIndex) {
                knownIndex = nxt.stimulus_index;
                state.scheduled(nxt.stimulus_index, nxt.level, nxt.onset_s);
                stimulusCount = nxt.stimulus_index;
                render();
                const delayMs = Math.max(0, (nxt.onset_s - nxt.server_time_s) * 1000);
                const windowMs = (nxt.response_deadline_s - nxt.onset_s) * 1000;
                const index = nxt.stimulus_index;
                const level = nxt.level;
                const deadlineS = nxt.response_deadline_s;
                setTimeout(() => {
                    if (state.phase !== "waiting" || state.stimulusIndex !== index)
                        return;
                    tone.playLevel(level, STIMULUS_DURATION_S);
                    state.stimulusStarted();
                    setTimeout(() => {
                        if (state.phase === "stimulus" && state.stimulusIndex === index) {
                            state.stimulusEnded(deadlineS);
                        }
                    }, STIMULUS_DURATION_S * 1000);
                    setTimeout(() => {
                        if (state.phase === "response_window" && state.stimulusIndex === index) {
                            state.windowClosed();
                            stimulusCount = index + 1;
                            render();
                        }
                    }, windowMs);
                }, delayMs);
            }
            await sleep(POLL_MS);
        }
    }
    finally {
        window.removeEventListener("keydown", onKey);
    }
}
if (typeof document !== "undefined" && document.getElementById("app")) {
    showStart();
}
