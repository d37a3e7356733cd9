/** Commanded level -> audio gain via the calibration-table shape.
 *
 * Desktop speakers cannot reproduce the phone actuator, so the tone's
 * amplitude only needs to TRACK the calibration mapping, not match physical
 * units. The default table below is the synthetic schema example normalized
 * to a peak gain; it is not measured truth, and the UI says so.
 */
// Synthetic example shape (monotone, gently superlinear), peak-normalized.
export const DEFAULT_GAIN_TABLE = [
    [0.0, 0.0],
    [0.05, 0.008],
    [0.1, 0.02],
    [0.2, 0.054],
    [0.3, 0.108],
    [0.4, 0.186],
    [0.5, 0.284],
    [0.6, 0.402],
    [0.7, 0.529],
    [0.8, 0.676],
    [0.9, 0.833],
    [1.0, 1.0],
];
export const TONE_FREQUENCY_HZ = 230;
export const TONE_DURATION_S = 0.1;
/** Piecewise-linear interpolation, clamped to the table's span. */
export function gainForLevel(level, table = DEFAULT_GAIN_TABLE) {
    if (table.length < 2) {
        throw new Error("gain table needs at least 2 points");
    }
    const first = table[0];
    const last = table[table.length - 1];
    if (level <= first[0])
        return first[1];
    if (level >= last[0])
        return last[1];
    for (let i = 1; i < table.length; i++) {
        const [x1, y1] = table[i];
        if (level <= x1) {
            const [x0, y0] = table[i - 1];
            if (level === x0)
                return y0;
            if (level === x1)
                return y1;
            return y0 + ((y1 - y0) * (level - x0)) / (x1 - x0);
        }
    }
    return last[1];
}
