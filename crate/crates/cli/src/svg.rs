//! Bifurcation diagram as plain SVG: energy across, chart parameter up.

use std::fmt::Write;

use symchord_core::continuation::{EventKind, Forest};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

fn colour(mu_x2: i64) -> &'static str {
    PALETTE[mu_x2.rem_euclid(PALETTE.len() as i64) as usize]
}

struct Scale {
    x: (f64, f64),
    y: (f64, f64),
}

impl Scale {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for (a, b) in points {
            x = (x.0.min(a), x.1.max(a));
            y = (y.0.min(b), y.1.max(b));
        }
        let pad = |r: (f64, f64)| {
            if !r.0.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 < 1e-12 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                let d = 0.05 * (r.1 - r.0);
                (r.0 - d, r.1 + d)
            }
        };
        Self { x: pad(x), y: pad(y) }
    }

    fn px(&self, tau: f64) -> f64 {
        MARGIN + (tau - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, s: f64) -> f64 {
        HEIGHT - MARGIN - (s - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

/// Families as polylines split where the index changes, events as dots.
pub fn render(forest: &Forest, version: &str) -> String {
    let scale = Scale::fit(
        forest
            .families
            .iter()
            .flat_map(|f| f.points.iter().map(|p| (p.chord.tau, p.chord.s)))
            .chain(forest.events.iter().map(|e| (e.tau_star, e.chord.s))),
    );
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<!-- symchord {version} -->");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        "<path d=\"M{x0},{y0} L{x0},{y1} L{x1},{y1}\" fill=\"none\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\">tau</text>",
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        "<text x=\"15\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 15 {:.1})\">s</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (v, anchor, x, y) in [
        (scale.x.0, "start", x0, y1 + 18.0),
        (scale.x.1, "end", x1, y1 + 18.0),
    ] {
        let _ = writeln!(out, "<text x=\"{x:.1}\" y=\"{y:.1}\" font-size=\"11\" text-anchor=\"{anchor}\">{v:.4}</text>");
    }
    for (v, y) in [(scale.y.0, y1), (scale.y.1, y0)] {
        let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{y:.1}\" font-size=\"11\" text-anchor=\"end\">{v:.4}</text>", x0 - 4.0);
    }

    for (id, fam) in forest.families.iter().enumerate() {
        for plateau in fam.plateaus() {
            // share the boundary point so consecutive plateaus join up
            let end = (plateau.last + 1).min(fam.points.len() - 1);
            let pts: Vec<String> = fam.points[plateau.first..=end]
                .iter()
                .map(|p| format!("{:.2},{:.2}", scale.px(p.chord.tau), scale.py(p.chord.s)))
                .collect();
            let _ = writeln!(
                out,
                "<polyline data-family=\"{id}\" data-mu-x2=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>",
                plateau.mu_x2,
                pts.join(" "),
                colour(plateau.mu_x2)
            );
        }
    }
    for e in &forest.events {
        let fill = match (e.kind, e.inherited_from_cover) {
            (EventKind::IndexJump, None) => "black",
            _ => "gray",
        };
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"{fill}\"><title>tau* = {:.10}, p = {}</title></circle>",
            scale.px(e.tau_star),
            scale.py(e.chord.s),
            e.tau_star,
            e.p
        );
    }
    out.push_str("</svg>\n");
    out
}
