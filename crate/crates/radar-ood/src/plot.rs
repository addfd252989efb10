//! Self-contained SVG figures: Pd-vs-SNR line plots and Doppler heat maps.

use std::fmt::Write;

use crate::csv_io::PdRow;
use crate::montecarlo::{DopplerMap, PdCurve};

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub fn series_from_curves(curves: &[PdCurve]) -> Vec<Series> {
    curves
        .iter()
        .map(|c| Series {
            label: format!("{} (d={})", c.detector, c.doppler_bin),
            points: c.points.iter().map(|p| (p.snr_db, p.pd)).collect(),
        })
        .collect()
}

/// One series per (detector, Doppler bin) in row order.
pub fn series_from_rows(rows: &[PdRow]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in rows {
        let label = format!("{} (d={})", r.detector, r.doppler_bin);
        match out.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((r.snr_db, r.pd)),
            None => out.push(Series {
                label,
                points: vec![(r.snr_db, r.pd)],
            }),
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>
<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        escape(title)
    );
}

/// Pd against SNR, y axis fixed to [0, 1].
pub fn line_plot(series: &[Series], title: &str) -> String {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - y) * ph;

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r##"<rect class="axes" data-ymin="0" data-ymax="1" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );
    for i in 0..=10 {
        let y = i as f64 / 10.0;
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#ddd"/><text x="{2:.1}" y="{3:.2}" text-anchor="end">{y:.1}</text>"##,
            sy(y),
            LEFT + pw,
            LEFT - 6.0,
            sy(y) + 4.0
        );
    }
    let ticks = 5;
    for i in 0..=ticks {
        let x = x0 + (x1 - x0) * i as f64 / ticks as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{x:.1}</text>"#,
            sx(x),
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">SNR (dB)</text>
<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">Pd</text>"#,
        LEFT + pw / 2.0,
        H - 16.0,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y.clamp(0.0, 1.0))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(&s.label),
            pts.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{0:.1}" y1="{ly:.1}" x2="{1:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{2:.1}" y="{3:.1}">{4}</text>"#,
            LEFT + pw + 12.0,
            LEFT + pw + 34.0,
            LEFT + pw + 40.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Linear blue-to-yellow ramp.
fn color(v: f64) -> String {
    let stops = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = v.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let i = (t.floor() as usize).min(stops.len() - 2);
    let f = t - i as f64;
    let (a, b) = (stops[i], stops[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Pd over (SNR, Doppler bin); one rectangle per lattice point.
pub fn heatmap(map: &DopplerMap, title: &str) -> String {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let rows = map.pd.len().max(1);
    let cols = map.snr_db.len().max(1);
    let (cw, ch) = (pw / cols as f64, ph / rows as f64);
    let mut out = String::new();
    header(&mut out, title);
    for (d, row) in map.pd.iter().enumerate() {
        for (j, &pd) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<rect class="cell" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>d={d} snr={} pd={pd:.4}</title></rect>"#,
                LEFT + j as f64 * cw,
                TOP + (rows - 1 - d) as f64 * ch,
                cw + 0.3,
                ch + 0.3,
                color(pd),
                map.snr_db[j]
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{d}</text>"#,
            LEFT - 6.0,
            TOP + (rows - 1 - d) as f64 * ch + ch / 2.0 + 4.0
        );
    }
    for (j, snr) in map.snr_db.iter().enumerate().step_by((cols / 6).max(1)) {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{snr}</text>"#,
            LEFT + (j as f64 + 0.5) * cw,
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">SNR (dB)</text>
<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">Doppler bin</text>"#,
        LEFT + pw / 2.0,
        H - 16.0,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    // Colour bar
    for i in 0..=20 {
        let v = i as f64 / 20.0;
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            LEFT + pw + 30.0,
            TOP + (1.0 - v) * ph - ph / 42.0,
            ph / 21.0 + 0.3,
            color(v)
        );
    }
    for v in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{v:.1}</text>"#,
            LEFT + pw + 52.0,
            TOP + (1.0 - v) * ph + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}
