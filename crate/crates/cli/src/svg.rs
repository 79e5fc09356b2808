//! Static SVG figures: a raw trace with protocol-segment shading and a
//! log-power spectrum. Output depends only on the inputs, so figures are
//! byte-identical across runs.

use std::fmt::Write;

use semgcn::features::Spectrum;
use semgcn::signal_io::{Recording, Segments};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 40.0;
const SHADES: [&str; 5] = ["#dbe9f6", "#f3f3f3", "#fde2c4", "#f3f3f3", "#d9f0d3"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        // Degenerate ranges still map to the middle of the plot.
        let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str, header: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, "<metadata>{}</metadata>", escape(header));
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{LEFT}" y="20" font-size="13">{}</text>"#,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, x_step: f64) {
    let (bx, by) = (f.py(f.y0), f.px(f.x0));
    let _ = writeln!(
        out,
        r#"<path d="M{by:.1} {TOP} V{bx:.1} H{:.1}" fill="none" stroke="black"/>"#,
        WIDTH - RIGHT
    );
    let mut k = (f.x0 / x_step).ceil();
    while k * x_step <= f.x1 + 1e-9 {
        let t = (k * x_step * 1e6).round() / 1e6;
        k += 1.0;
        let x = f.px(t);
        let _ = writeln!(
            out,
            r#"<path d="M{x:.1} {bx:.1} v4" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{t}</text>"#,
            bx + 16.0
        );
    }
    for y in [f.y0, f.y1] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            f.py(y) + 4.0,
            format_tick(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 6.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(14 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(y_label)
    );
}

fn format_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn nice_step(span: f64, target_ticks: f64) -> f64 {
    let raw = span / target_ticks;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Min/max envelope of the trace, one column per output pixel, over shaded
/// protocol segments.
pub fn signal_svg(r: &Recording, segments: Option<&Segments>, header: &str) -> String {
    let mut out = String::new();
    let title = format!("{} {} {} ({} Hz)", r.subject_id, r.group, r.hand, r.sampling_rate_hz);
    open(&mut out, &title, header);
    if r.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let (lo, hi) = r
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let t_end = r.times[r.len() - 1];
    let f = Frame::new(r.times[0], t_end, lo, hi);
    if let Some(segs) = segments {
        for (k, (id, range)) in segs.iter().enumerate() {
            if range.is_empty() {
                continue;
            }
            let end_t = r.times.get(range.end).copied().unwrap_or(t_end);
            let (x0, x1) = (f.px(r.times[range.start]), f.px(end_t));
            let _ = writeln!(
                out,
                r#"<rect x="{x0:.1}" y="{TOP}" width="{:.1}" height="{:.1}" fill="{}"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{id}</text>"#,
                x1 - x0,
                HEIGHT - TOP - BOTTOM,
                SHADES[k % SHADES.len()],
                (x0 + x1) / 2.0,
                TOP + 12.0
            );
        }
    }
    let cols = (WIDTH - LEFT - RIGHT) as usize;
    let n = r.len();
    let mut d = String::new();
    for c in 0..cols.min(n) {
        let (a, b) = (c * n / cols.min(n), (c + 1) * n / cols.min(n));
        let chunk = &r.values[a..b.max(a + 1)];
        let (mn, mx) = chunk
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(p, q), &v| (p.min(v), q.max(v)));
        let x = f.px(r.times[a]);
        let _ = write!(d, "M{x:.1} {:.1}V{:.1}", f.py(mx), f.py(mn) + 0.1);
    }
    let _ = writeln!(
        out,
        r##"<path d="{d}" fill="none" stroke="#1f4e79" stroke-width="1"/>"##
    );
    axes(
        &mut out,
        &f,
        "time (s)",
        "amplitude",
        nice_step(t_end - r.times[0], 10.0),
    );
    out.push_str("</svg>\n");
    out
}

/// log10 power up to `max_hz`, averaged into at most one bucket per pixel,
/// with an optional marker line (e.g. the median frequency).
pub fn spectrum_svg(title: &str, s: &Spectrum, marker: Option<(&str, f64)>, max_hz: f64, header: &str) -> String {
    let mut out = String::new();
    open(&mut out, title, header);
    let keep: Vec<(f64, f64)> = s
        .freqs
        .iter()
        .zip(&s.power)
        .filter(|(f, _)| **f <= max_hz)
        .map(|(&f, &p)| (f, p))
        .collect();
    if keep.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let cols = ((WIDTH - LEFT - RIGHT) as usize).min(keep.len());
    let floor = s.total_power().max(f64::MIN_POSITIVE) * 1e-12;
    let buckets: Vec<(f64, f64)> = (0..cols)
        .map(|c| {
            let chunk = &keep[c * keep.len() / cols..(c + 1) * keep.len() / cols];
            let f = chunk.iter().map(|p| p.0).sum::<f64>() / chunk.len() as f64;
            let p = chunk.iter().map(|p| p.1).sum::<f64>() / chunk.len() as f64;
            (f, p.max(floor).log10())
        })
        .collect();
    let (lo, hi) = buckets
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, v)| {
            (a.min(v), b.max(v))
        });
    let f_hi = keep[keep.len() - 1].0;
    let f = Frame::new(0.0, f_hi, lo.floor(), hi.ceil());
    let pts: Vec<String> = buckets
        .iter()
        .map(|&(x, y)| format!("{:.1},{:.1}", f.px(x), f.py(y)))
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#1f4e79" stroke-width="1"/>"##,
        pts.join(" ")
    );
    if let Some((label, at)) = marker.filter(|m| m.1.is_finite() && m.1 <= f_hi) {
        let x = f.px(at);
        // Keep the label inside the plot near the right edge.
        let (lx, anchor) = if x > WIDTH - RIGHT - 120.0 {
            (x - 4.0, "end")
        } else {
            (x + 4.0, "start")
        };
        let _ = writeln!(
            out,
            r##"<path d="M{x:.1} {TOP} V{:.1}" stroke="#c0392b" stroke-dasharray="4 3"/><text x="{lx:.1}" y="{:.1}" text-anchor="{anchor}" fill="#c0392b">{} {at:.1} Hz</text>"##,
            f.py(f.y0),
            TOP + 12.0,
            escape(label)
        );
    }
    axes(&mut out, &f, "frequency (Hz)", "log10 power", nice_step(f_hi, 10.0));
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_step(100.0, 10.0), 10.0);
        assert_eq!(nice_step(500.0, 10.0), 50.0);
        assert!((nice_step(0.3, 10.0) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn header_is_escaped() {
        let s = Spectrum {
            freqs: vec![0.0, 1.0, 2.0],
            power: vec![0.0, 1.0, 0.5],
        };
        let svg = spectrum_svg("t", &s, Some(("MDF", 1.0)), 10.0, "a<b & c");
        assert!(svg.contains("<metadata>a&lt;b &amp; c</metadata>"));
        assert!(svg.contains("MDF 1.0 Hz"));
    }
}
