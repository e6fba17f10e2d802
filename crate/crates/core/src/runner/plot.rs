// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! Minimal SVG line charts. Output depends only on the table contents.

use std::fmt::Write;

use super::output::SeriesTable;
use super::RunnerError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;
const COLORS: [&str; 6] = [
    "#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: &[f64], ys: &[&[f64]]) -> Self {
        let finite = |v: &&f64| v.is_finite();
        let (mut x0, mut x1) = minmax(xs.iter().filter(finite));
        let (mut y0, mut y1) = minmax(ys.iter().flat_map(|s| s.iter()).filter(finite));
        if x1 <= x0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        let pad = ((y1 - y0) * 0.05).max(1e-3);
        y0 -= pad;
        y1 += pad;
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn minmax<'a>(it: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(*v), hi.max(*v))
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Draws one polyline per series, `xs.len()` points each. Non-finite
/// values are drawn at the frame edge.
fn chart(title: &str, xs: &[f64], series: &[(&str, &[f64])]) -> String {
    let ys: Vec<&[f64]> = series.iter().map(|(_, s)| *s).collect();
    let f = if xs.is_empty() {
        Frame {
            x0: 0.0,
            x1: 1.0,
            y0: -1.0,
            y1: 1.0,
        }
    } else {
        Frame::fit(xs, &ys)
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (WIDTH - MARGIN_R + MARGIN_L) / 2.0,
        escape(title)
    );
    let (l, r, t, b) = (MARGIN_L, WIDTH - MARGIN_R, MARGIN_T, HEIGHT - MARGIN_B);
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let xv = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
        let yv = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.3}</text>"#,
            f.px(xv),
            b + 16.0,
            xv
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            l - 6.0,
            f.py(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">t</text>"#,
        (l + r) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">m_s</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0
    );
    for (k, (name, vals)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(vals.iter())
            .map(|(x, y)| {
                let y = if y.is_finite() { *y } else { f.y1 };
                format!("{:.2},{:.2}", f.px(*x), f.py(y))
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_T + 18.0 * k as f64 + 8.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            r + 12.0,
            r + 36.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            r + 42.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Exact, FC, PC and mitigated series of one chain.
pub fn render_series_svg(t: &SeriesTable, n_spins: usize) -> String {
    chart(
        &format!("Staggered magnetization, N = {n_spins}"),
        &t.t,
        &[
            ("exact", &t.exact),
            ("FC noisy", &t.fc),
            ("PC noisy", &t.pc),
            ("mitigated", &t.mitigated),
        ],
    )
}

/// Every `ms_*` column of a ZNE demo table against `t`.
pub fn render_zne_svg(csv_text: &str) -> Result<String, RunnerError> {
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    let header = rd
        .headers()
        .map_err(|e| RunnerError::Csv(e.to_string()))?
        .clone();
    let cols: Vec<usize> = (0..header.len())
        .filter(|&i| header[i].starts_with("ms_"))
        .collect();
    let mut xs = Vec::new();
    let mut ys = vec![Vec::new(); cols.len()];
    for rec in rd.records() {
        let rec = rec.map_err(|e| RunnerError::Csv(e.to_string()))?;
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| RunnerError::Csv(format!("bad number `{}`", &rec[i])))
        };
        xs.push(num(0)?);
        for (k, &c) in cols.iter().enumerate() {
            ys[k].push(num(c)?);
        }
    }
    let series: Vec<(&str, &[f64])> = cols
        .iter()
        .zip(&ys)
        .map(|(&c, v)| (header[c].trim_start_matches("ms_"), v.as_slice()))
        .collect();
    Ok(chart("Zero-noise extrapolation", &xs, &series))
}
