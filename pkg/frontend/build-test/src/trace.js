/** Staircase trace chart as an SVG string: stimulus index vs level,
 * detections filled, misses hollow, reversals ringed, threshold dashed.
 * String output keeps it renderable in any container and snapshot-testable
 * without a DOM.
 */
const MARGIN = { top: 16, right: 16, bottom: 34, left: 46 };
function fmt(v) {
    return Number(v.toFixed(4)).toString();
}
export function renderTrace(rows, options = {}) {
    const width = options.width ?? 640;
    const height = options.height ?? 360;
    if (rows.length === 0) {
        return (`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
            `viewBox="0 0 ${width} ${height}" class="trace trace-empty">` +
            `<text x="${width / 2}" y="${height / 2}" text-anchor="middle" class="placeholder">` +
            `no trials recorded</text></svg>`);
    }
    const innerW = width - MARGIN.left - MARGIN.right;
    const innerH = height - MARGIN.top - MARGIN.bottom;
    const maxIndex = Math.max(1, rows.length - 1);
    const levels = rows.map((r) => r.level);
    const loLevel = Math.min(...levels, options.threshold ?? Infinity);
    const hiLevel = Math.max(...levels, options.threshold ?? -Infinity);
    const pad = Math.max(0.05, (hiLevel - loLevel) * 0.15);
    const yLo = Math.max(0, loLevel - pad);
    const yHi = Math.min(1.05, hiLevel + pad);
    const x = (i) => MARGIN.left + (i / maxIndex) * innerW;
    const y = (lv) => MARGIN.top + (1 - (lv - yLo) / (yHi - yLo)) * innerH;
    const parts = [];
    parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" class="trace">`);
    parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${innerW}" height="${innerH}" ` +
        `fill="none" stroke="#ccc"/>`);
    // axes labels
    parts.push(`<text x="${MARGIN.left + innerW / 2}" y="${height - 8}" text-anchor="middle" ` +
        `class="axis">stimulus index</text>`);
    parts.push(`<text x="12" y="${MARGIN.top + innerH / 2}" text-anchor="middle" class="axis" ` +
        `transform="rotate(-90 12 ${MARGIN.top + innerH / 2})">haptic intensity</text>`);
    for (const tick of [yLo, (yLo + yHi) / 2, yHi]) {
        parts.push(`<text x="${MARGIN.left - 6}" y="${y(tick) + 4}" text-anchor="end" class="tick">` +
            `${fmt(tick)}</text>`);
    }
    // threshold line under the data
    if (options.threshold !== undefined && options.threshold !== null) {
        const ty = y(options.threshold);
        parts.push(`<line x1="${MARGIN.left}" y1="${ty}" x2="${MARGIN.left + innerW}" y2="${ty}" ` +
            `class="threshold" stroke="#c33" stroke-dasharray="6 4"/>`);
        parts.push(`<text x="${MARGIN.left + innerW - 4}" y="${ty - 5}" text-anchor="end" ` +
            `class="threshold-label" fill="#c33">threshold ${fmt(options.threshold)}</text>`);
    }
    // connecting line
    const path = rows
        .map((r, i) => `${i === 0 ? "M" : "L"}${x(i).toFixed(1)},${y(r.level).toFixed(1)}`)
        .join(" ");
    parts.push(`<path d="${path}" fill="none" stroke="#36c" stroke-width="1.5"/>`);
    // markers: reversal ring first so the point sits on top
    rows.forEach((r, i) => {
        const cx = x(i).toFixed(1);
        const cy = y(r.level).toFixed(1);
        if (r.reversal) {
            parts.push(`<circle cx="${cx}" cy="${cy}" r="9" class="reversal" fill="none" ` +
                `stroke="#e90" stroke-width="2"/>`);
        }
        if (r.detected) {
            parts.push(`<circle cx="${cx}" cy="${cy}" r="4.5" class="point detected" fill="#36c"/>`);
        }
        else {
            parts.push(`<circle cx="${cx}" cy="${cy}" r="4.5" class="point missed" fill="#fff" ` +
                `stroke="#36c" stroke-width="1.5"/>`);
        }
    });
    parts.push("</svg>");
    return parts.join("");
}
export function countReversalMarkers(svg) {
    return (svg.match(/class="reversal"/g) ?? []).length;
}
