/** 230 Hz tone surrogate for the phone actuator, via WebAudio. */
import { TONE_DURATION_S, TONE_FREQUENCY_HZ, gainForLevel } from "./calibration.js";
export class TonePlayer {
    context = null;
    /** Must be called from a user gesture; resolves false if audio is blocked. */
    async unlock() {
        if (this.context === null) {
            if (typeof AudioContext === "undefined")
                return false;
            this.context = new AudioContext();
        }
        if (this.context.state === "suspended") {
            try {
                await this.context.resume();
            }
            catch {
                return false;
            }
        }
        return this.context.state === "running";
    }
    get ready() {
        return this.context !== null && this.context.state === "running";
    }
    /** Play the stimulus for one commanded level; gain tracks the calibration map. */
    playLevel(level, durationS = TONE_DURATION_S) {
        if (!this.context || this.context.state !== "running")
            return;
        const ctx = this.context;
        const t0 = ctx.currentTime;
        const osc = ctx.createOscillator();
        const gain = ctx.createGain();
        osc.type = "sine";
        osc.frequency.value = TONE_FREQUENCY_HZ;
        const g = Math.max(gainForLevel(level), 0.0001);
        // short ramps avoid clicks without stretching the nominal duration
        gain.gain.setValueAtTime(0.0001, t0);
        gain.gain.exponentialRampToValueAtTime(g, t0 + 0.01);
        gain.gain.setValueAtTime(g, t0 + durationS - 0.01);
        gain.gain.exponentialRampToValueAtTime(0.0001, t0 + durationS);
        osc.connect(gain);
        gain.connect(ctx.destination);
        osc.onended = () => {
            gain.disconnect();
            osc.disconnect();
        };
        osc.start(t0);
        osc.stop(t0 + durationS);
    }
}
