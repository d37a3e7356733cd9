/** Pure HTML builders for the three screens.
 *
 * The mid-exam screen is deliberately identical across phases and commanded
 * levels: a participant must get no cue about when a stimulus fires or how
 * strong it is. Only the trial counter and the connection banner may change,
 * and neither derives from the level.
 */
export const SITE_CHOICES = [
    ["H1", "H1 - index finger pad"],
    ["H2", "H2 - back of index finger"],
    ["H3", "H3 - pinky finger pad"],
    ["W1", "W1 - dorsal wrist"],
    ["W2", "W2 - volar wrist"],
    ["F", "F - big toe pad"],
];
export function startScreenHtml(audioBlocked) {
    const options = SITE_CHOICES.map(([code, label]) => `<option value="${code}">${label}</option>`).join("");
    const blocked = audioBlocked
        ? `<p class="banner error">The browser blocked audio. Click Start again to grant it.</p>`
        : "";
    return `
    <h1>Perception exam</h1>
    <p>A brief 230 Hz tone stands in for the phone's vibration. Its loudness is
    not calibrated to any physical unit, so thresholds from this client are
    comparable only within this setup.</p>
    ${blocked}
    <form id="start-form">
      <label>Participant ID <input id="participant" value="anon" autocomplete="off"></label>
      <label>Body site <select id="site">${options}</select></label>
      <label>Server <input id="server" value=""></label>
      <button id="start" type="submit">Start (enables audio)</button>
    </form>`;
}
export function examScreenHtml(state, stimulusCount) {
    const banner = state.connectionLost
        ? `<p class="banner error">Connection lost - retrying, the session will resume.</p>`
        : "";
    // no phase text, no countdown, no level: nothing here may telegraph a stimulus
    return `
    ${banner}
    <h1>Listen&hellip;</h1>
    <p>Press <strong>SPACE</strong> (or tap the button) the moment you hear a tone.</p>
    <button id="respond" class="big">I heard it</button>
    <p class="muted">trials completed: ${stimulusCount}</p>`;
}
export function resultScreenHtml(result, traceSvg) {
    const headline = result.value === null
        ? "No threshold: the largest stimulus was not detected three times in a row (recorded as NaN)."
        : `Estimated threshold: <strong>${result.value.toFixed(4)}</strong> (haptic intensity units)`;
    return `
    <h1>Session complete</h1>
    <p>${headline}</p>
    <div id="trace">${traceSvg}</div>
    <p><button id="again">Run another session</button></p>`;
}
