//! Minimal SVG figures, written without a plotting dependency.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    svg: String,
}

impl Frame {
    fn new(title: &str, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * MARGIN,
            H - 2.0 * MARGIN
        );
        let _ = writeln!(svg, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 15.0);
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{ylabel}</text>"#,
            H / 2.0,
            H / 2.0
        );
        let mut f = Self { x: pad(x), y: pad(y), svg };
        f.ticks();
        f
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn ticks(&mut self) {
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let (xv, yv) = (self.x.0 + t * (self.x.1 - self.x.0), self.y.0 + t * (self.y.1 - self.y.0));
            let (x, y) = (self.px(xv), self.py(yv));
            let _ =
                writeln!(self.svg, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{xv:.3}</text>"#, H - MARGIN + 16.0);
            let _ = writeln!(self.svg, r#"<text x="{}" y="{y:.1}" text-anchor="end">{yv:.3}</text>"#, MARGIN - 4.0);
        }
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let _ = writeln!(self.svg, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, coords.join(" "));
    }

    fn dots(&mut self, pts: &[(f64, f64)], color: &str) {
        for &(x, y) in pts {
            let _ =
                writeln!(self.svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, self.px(x), self.py(y));
        }
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

/// `log10 E[W1]` against `log10 N`, with a reference line of slope `-1/2`
/// through the first point.
pub fn w1_loglog(points: &[(usize, f64)]) -> String {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(n, w)| ((n as f64).log10(), w.log10())).collect();
    let xr = range(pts.iter().map(|p| p.0));
    let reference: Vec<(f64, f64)> = pts.iter().map(|&(x, _)| (x, pts[0].1 - 0.5 * (x - pts[0].0))).collect();
    let yr = range(pts.iter().chain(&reference).map(|p| p.1));
    let mut f = Frame::new("mean W1 against N", "log10 N", "log10 E[W1]", xr, yr);
    f.polyline(&reference, "gray");
    f.polyline(&pts, "steelblue");
    f.dots(&pts, "steelblue");
    f.finish()
}

/// Density histogram of `samples` with the `N(0, variance)` density.
pub fn histogram(samples: &[f64], variance: f64, bins: usize) -> String {
    let sd = variance.max(0.0).sqrt();
    let (lo, hi) = range(samples.iter().copied().chain([-4.0 * sd, 4.0 * sd]));
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in samples {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let dens: Vec<f64> = counts.iter().map(|&c| c as f64 / (samples.len() as f64 * width)).collect();
    let gauss = |x: f64| (-x * x / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt();
    let curve: Vec<(f64, f64)> = if sd > 0.0 {
        (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).map(|x| (x, gauss(x))).collect()
    } else {
        Vec::new()
    };
    let ymax = dens.iter().copied().chain(curve.iter().map(|p| p.1)).fold(0.0, f64::max);
    let mut f = Frame::new("CLT statistic", "value", "density", (lo, lo + width * bins as f64), (0.0, ymax));
    for (i, &d) in dens.iter().enumerate() {
        let x0 = f.px(lo + i as f64 * width);
        let x1 = f.px(lo + (i + 1) as f64 * width);
        let (y0, y1) = (f.py(d), f.py(0.0));
        let _ = writeln!(
            f.svg,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue" stroke="white"/>"#,
            x1 - x0,
            y1 - y0
        );
    }
    if !curve.is_empty() {
        f.polyline(&curve, "firebrick");
    }
    f.finish()
}

/// `μ_p` against `|p|`.
pub fn mu_profile(points: &[(f64, f64)]) -> String {
    let xr = range(points.iter().map(|p| p.0));
    let yr = range(points.iter().map(|p| p.1).chain([0.0]));
    let mut f = Frame::new("mu_p", "|p|", "mu", xr, yr);
    f.dots(points, "darkgreen");
    f.finish()
}
