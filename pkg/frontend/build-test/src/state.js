/** Exam view state machine.
 *
 * The client never computes staircase logic; this machine only tracks what
 * the participant may see. The commanded level is kept private and exposed
 * only after the session completes, so no on-screen cue can correlate with
 * stimulus strength mid-exam. Phases follow the session protocol order:
 * idle -> waiting -> stimulus -> response_window -> between -> ... -> complete.
 */
const NEXT_PHASES = {
    idle: ["waiting"],
    waiting: ["stimulus", "complete"],
    stimulus: ["response_window", "complete"],
    response_window: ["between", "complete"],
    between: ["waiting", "complete"],
    complete: [],
};
export class ExamState {
    phase = "idle";
    stimulusIndex = -1;
    result = null;
    connectionLost = false;
    level = null;
    respondedIndex = -1;
    countdownTargetS = null;
    transition(next) {
        if (!NEXT_PHASES[this.phase].includes(next)) {
            throw new Error(`illegal phase transition ${this.phase} -> ${next}`);
        }
        this.phase = next;
    }
    start() {
        this.transition("waiting");
    }
    /** A new pending stimulus was announced by the server.
     *
     * The server may have closed the previous cycle early (a detected press
     * ends its window), so walk any remaining phases in protocol order before
     * arming the next stimulus.
     */
    scheduled(stimulusIndex, level, onsetS) {
        if (this.phase === "stimulus")
            this.transition("response_window");
        if (this.phase === "response_window")
            this.transition("between");
        if (this.phase === "between")
            this.transition("waiting");
        if (this.phase !== "waiting") {
            throw new Error(`cannot schedule during ${this.phase}`);
        }
        this.stimulusIndex = stimulusIndex;
        this.level = level;
        this.countdownTargetS = onsetS;
    }
    stimulusStarted() {
        this.transition("stimulus");
        this.countdownTargetS = null;
    }
    stimulusEnded(windowCloseS) {
        this.transition("response_window");
        this.countdownTargetS = windowCloseS;
    }
    windowClosed() {
        this.transition("between");
        this.countdownTargetS = null;
    }
    /** True exactly once per stimulus: collapses double presses client-side. */
    tryRespond() {
        if (this.phase !== "stimulus" && this.phase !== "response_window") {
            return false;
        }
        if (this.respondedIndex === this.stimulusIndex) {
            return false;
        }
        this.respondedIndex = this.stimulusIndex;
        return true;
    }
    completed(result) {
        this.transition("complete");
        this.result = result;
        this.countdownTargetS = null;
    }
    setConnectionLost(lost) {
        this.connectionLost = lost;
    }
    /** The commanded level, visible only after completion. */
    displayLevel() {
        return this.phase === "complete" ? this.level : null;
    }
    /** Internal level for audio gain (never rendered). */
    stimulusLevel() {
        return this.level;
    }
    /** Whole seconds until the next phase boundary, for the progress dots. */
    countdown(nowS) {
        if (this.countdownTargetS === null)
            return null;
        return Math.max(0, Math.ceil(this.countdownTargetS - nowS));
    }
}
