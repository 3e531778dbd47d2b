//! CSV and SVG output for sampled radiation patterns.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub fn pattern_csv(angles: &[f64], powers_db: &[f64]) -> String {
    let mut out = String::from("angle_deg,power_db\n");
    for (a, p) in angles.iter().zip(powers_db) {
        writeln!(out, "{a},{p}").unwrap();
    }
    out
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// Cartesian angle-vs-dB plot with vertical markers at beam and null directions.
pub fn pattern_svg(angles: &[f64], powers_db: &[f64], beams: &[f64], nulls: &[f64], title: &str) -> Result<String> {
    if angles.len() < 2 || angles.len() != powers_db.len() {
        return Err(Error::domain("a pattern plot needs at least two matching angle/power samples"));
    }
    let (a0, a1) = (angles[0], angles[angles.len() - 1]);
    if powers_db.iter().any(|p| !p.is_finite()) {
        return Err(Error::domain("pattern contains non-finite values"));
    }
    let lo = powers_db.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = powers_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(a1 > a0) {
        return Err(Error::domain("pattern angles must be increasing"));
    }
    let y0 = (lo / 10.0).floor() * 10.0;
    let y1 = ((hi / 10.0).ceil() * 10.0).max(y0 + 10.0);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let x = |a: f64| LEFT + (a - a0) / (a1 - a0) * pw;
    let y = |p: f64| TOP + (y1 - p) / (y1 - y0) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<title>{}</title>"#, escape(title)).unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<g class="plot" data-angle-min="{a0}" data-angle-max="{a1}" data-db-min="{y0}" data-db-max="{y1}" data-x0="{LEFT}" data-x1="{}" data-y0="{}" data-y1="{TOP}">"#,
        LEFT + pw,
        TOP + ph
    )
    .unwrap();
    writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##).unwrap();

    let mut tick = (a0 / 15.0).ceil() * 15.0;
    while tick <= a1 + 1e-9 {
        let px = x(tick);
        writeln!(s, r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#ddd"/>"##, TOP + ph).unwrap();
        writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{tick}</text>"#, TOP + ph + 18.0).unwrap();
        tick += 15.0;
    }
    let mut db = y0;
    while db <= y1 + 1e-9 {
        let py = y(db);
        writeln!(s, r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/>"##, LEFT + pw).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{db}</text>"#, LEFT - 6.0, py + 4.0).unwrap();
        db += 10.0;
    }
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">angle (deg)</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0)
        .unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">power (dB)</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    )
    .unwrap();

    for (dirs, class, color) in [(beams, "beam", "#2a9d2a"), (nulls, "null", "#c0392b")] {
        for &d in dirs.iter().filter(|d| (a0..=a1).contains(*d)) {
            let px = x(d);
            writeln!(
                s,
                r#"<line class="{class}" data-angle="{d}" x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="6 4"/>"#,
                TOP + ph
            )
            .unwrap();
        }
    }

    let points: Vec<String> = angles.iter().zip(powers_db).map(|(&a, &p)| format!("{:.3},{:.3}", x(a), y(p))).collect();
    writeln!(
        s,
        r##"<polyline class="pattern" fill="none" stroke="#1f4e9a" stroke-width="1.5" points="{}"/>"##,
        points.join(" ")
    )
    .unwrap();
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
