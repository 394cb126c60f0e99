//! Static SVG phase portraits: the simplex, trajectory polylines, and
//! equilibrium markers. Output is a pure function of its inputs.

use std::fmt::Write as _;

use crate::integrate::Trajectory;
use crate::model::PlanarState;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 70.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Cap polyline vertices per trajectory; long runs are subsampled with a
/// deterministic stride that always keeps the final point.
const MAX_POLYLINE_POINTS: usize = 1500;

fn x_pix(s: f64) -> f64 {
    MARGIN + s * (WIDTH - 2.0 * MARGIN)
}

fn y_pix(i: f64) -> f64 {
    HEIGHT - MARGIN - i * (HEIGHT - 2.0 * MARGIN)
}

fn poly_points(states: &[PlanarState]) -> String {
    let stride = states.len().div_ceil(MAX_POLYLINE_POINTS).max(1);
    let mut pts = String::new();
    for (k, x) in states.iter().enumerate() {
        if k % stride == 0 || k == states.len() - 1 {
            let _ = write!(pts, "{:.2},{:.2} ", x_pix(x.s), y_pix(x.i));
        }
    }
    pts.trim_end().to_string()
}

/// Render a phase portrait of the given trajectories inside the simplex, with
/// labelled equilibrium markers.
pub fn phase_portrait(
    trajectories: &[&Trajectory<PlanarState>],
    marks: &[(String, PlanarState)],
    title: &str,
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>",
        WIDTH / 2.0,
        MARGIN / 2.0
    );

    // Simplex boundary: (0,0) - (1,0) - (0,1).
    let _ = writeln!(
        out,
        "<polygon points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"#f5f5f5\" stroke=\"#444444\" stroke-width=\"1.5\"/>",
        x_pix(0.0),
        y_pix(0.0),
        x_pix(1.0),
        y_pix(0.0),
        x_pix(0.0),
        y_pix(1.0)
    );

    // Axis ticks and labels.
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#444444\"/>",
            x_pix(v),
            y_pix(0.0),
            x_pix(v),
            y_pix(0.0) + 6.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{v}</text>",
            x_pix(v),
            y_pix(0.0) + 20.0
        );
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#444444\"/>",
            x_pix(0.0) - 6.0,
            y_pix(v),
            x_pix(0.0),
            y_pix(v)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{v}</text>",
            x_pix(0.0) - 10.0,
            y_pix(v) + 4.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">susceptible fraction S</text>",
        WIDTH / 2.0,
        HEIGHT - MARGIN / 4.0
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 {:.2} {:.2})\">infected fraction I</text>",
        MARGIN / 4.0,
        HEIGHT / 2.0,
        MARGIN / 4.0,
        HEIGHT / 2.0
    );

    for (k, tr) in trajectories.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            poly_points(&tr.states)
        );
        if let Some(first) = tr.states.first() {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                x_pix(first.s),
                y_pix(first.i)
            );
        }
    }

    for (label, point) in marks {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"black\" stroke=\"white\" stroke-width=\"1.5\"/>",
            x_pix(point.s),
            y_pix(point.i)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>",
            x_pix(point.s) + 8.0,
            y_pix(point.i) - 8.0
        );
    }

    out.push_str("</svg>\n");
    out
}
