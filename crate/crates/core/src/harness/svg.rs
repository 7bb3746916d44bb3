use std::fmt::Write;

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 56.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Log-log scatter of `|value|` against eps with an optional fitted line
/// `ln |y| = slope ln eps + intercept`.
pub fn loglog_svg(title: &str, points: &[(f64, f64)], fit: Option<(f64, f64)>) -> String {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && y.abs() > 0.0 && y.is_finite())
        .map(|&(x, y)| (x.log10(), y.abs().log10()))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, esc(title));
    if pts.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">no positive data</text>"#, W / 2.0, H / 2.0);
        s.push_str("</svg>\n");
        return s;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    x0 = x0.floor();
    x1 = x1.ceil().max(x0 + 1.0);
    y0 = y0.floor();
    y1 = y1.ceil().max(y0 + 1.0);
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let _ = writeln!(
        s,
        r#"<path d="M{} {} L{} {} L{} {}" fill="none" stroke="black"/>"#,
        PAD,
        PAD,
        PAD,
        H - PAD,
        W - PAD,
        H - PAD
    );
    for k in (x0 as i64)..=(x1 as i64) {
        let x = sx(k as f64);
        let _ = writeln!(s, r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#ccc"/>"##, PAD, H - PAD);
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">1e{k}</text>"#, H - PAD + 16.0);
    }
    for k in (y0 as i64)..=(y1 as i64) {
        let y = sy(k as f64);
        let _ = writeln!(s, r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#ccc"/>"##, PAD, W - PAD);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">1e{k}</text>"#, PAD - 4.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">eps</text>"#, W / 2.0, H - 14.0);
    if let Some((slope, intercept)) = fit {
        // the fit lives in natural logs; log10 y = slope log10 x + intercept / ln 10
        let c = intercept / std::f64::consts::LN_10;
        let (xa, xb) = (pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min), pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max));
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-dasharray="4 3"/>"##,
            sx(xa),
            sy(slope * xa + c),
            sx(xb),
            sy(slope * xb + c)
        );
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" text-anchor="end" fill="#d62728">slope {slope:.3}</text>"##,
            W - PAD,
            PAD - 8.0
        );
    }
    for &(x, y) in &pts {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4"/>"##, sx(x), sy(y));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_contains_points_and_slope() {
        let s = loglog_svg("q", &[(0.1, 1.0), (0.01, 0.1)], Some((1.0, 0.0)));
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("slope 1.000"));
        assert!(loglog_svg("empty", &[], None).contains("no positive data"));
    }
}
