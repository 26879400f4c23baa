//! Dependency-free SVG rendering of a global importance summary as a
//! beeswarm: one row per ranked feature, one dot per explained instance,
//! horizontal position by phi, color by (per-feature normalized) value.

use crate::explain::GlobalSummary;

const WIDTH: f64 = 860.0;
const ROW_HEIGHT: f64 = 26.0;
const TOP: f64 = 52.0;
const LABEL_WIDTH: f64 = 230.0;
const PLOT_RIGHT: f64 = WIDTH - 40.0;

/// Deterministic pseudo-jitter in (−1, 1) so overlapping dots spread
/// vertically without pulling in an RNG.
fn jitter(row: usize, point: usize) -> f64 {
    let mut h = (row as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (point as u64);
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    (h % 2000) as f64 / 1000.0 - 1.0
}

/// Blue (low value) → red (high value) ramp; gray for constant features.
fn color_for(value: f64, min: f64, max: f64) -> String {
    if !(max > min) {
        return "#888888".to_string();
    }
    let t = ((value - min) / (max - min)).clamp(0.0, 1.0);
    let r = (31.0 + t * (214.0 - 31.0)) as u8;
    let g = (119.0 + t * (39.0 - 119.0)) as u8;
    let b = (180.0 + t * (40.0 - 180.0)) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render the summary as a standalone SVG document.
pub fn beeswarm_svg(summary: &GlobalSummary) -> String {
    let n_rows = summary.ranking.len();
    let height = TOP + n_rows as f64 * ROW_HEIGHT + 46.0;

    let phi_extent = summary
        .ranking
        .iter()
        .flat_map(|f| f.points.iter().map(|&(_, phi)| phi.abs()))
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let x_of = |phi: f64| {
        let half = (PLOT_RIGHT - LABEL_WIDTH) / 2.0;
        LABEL_WIDTH + half + (phi / phi_extent) * half
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" \
         viewBox=\"0 0 {WIDTH} {height}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{LABEL_WIDTH}\" y=\"22\" font-size=\"14\">Shapley attribution by feature \
         ({} instances, {} scale)</text>\n",
        summary.n_explained,
        escape(&summary.score_scale)
    ));

    // Zero line and horizontal extent labels.
    let zero_x = x_of(0.0);
    let bottom = TOP + n_rows as f64 * ROW_HEIGHT;
    svg.push_str(&format!(
        "<line x1=\"{zero_x:.1}\" y1=\"{TOP}\" x2=\"{zero_x:.1}\" y2=\"{bottom:.1}\" \
         stroke=\"#444444\" stroke-dasharray=\"3,3\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">-{phi_extent:.4}</text>\n",
        x_of(-phi_extent),
        bottom + 18.0
    ));
    svg.push_str(&format!(
        "<text x=\"{zero_x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">0</text>\n",
        bottom + 18.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{phi_extent:.4}</text>\n",
        x_of(phi_extent),
        bottom + 18.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">phi (impact on model output)</text>\n",
        (LABEL_WIDTH + PLOT_RIGHT) / 2.0,
        bottom + 36.0
    ));

    for (row, feature) in summary.ranking.iter().enumerate() {
        let cy = TOP + row as f64 * ROW_HEIGHT + ROW_HEIGHT / 2.0;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            LABEL_WIDTH - 8.0,
            cy + 4.0,
            escape(&feature.feature)
        ));
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(value, _) in &feature.points {
            vmin = vmin.min(value);
            vmax = vmax.max(value);
        }
        for (i, &(value, phi)) in feature.points.iter().enumerate() {
            let cx = x_of(phi);
            let cy_jittered = cy + jitter(row, i) * (ROW_HEIGHT / 2.0 - 4.0);
            svg.push_str(&format!(
                "<circle cx=\"{cx:.1}\" cy=\"{cy_jittered:.1}\" r=\"2.4\" fill=\"{}\" \
                 fill-opacity=\"0.75\"/>\n",
                color_for(value, vmin, vmax)
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::FeatureImportance;

    fn summary() -> GlobalSummary {
        GlobalSummary {
            n_explained: 3,
            score_scale: "probability".into(),
            ranking: vec![
                FeatureImportance {
                    feature: "age".into(),
                    mean_abs_phi: 0.4,
                    points: vec![(1.0, 0.5), (200.0, -0.4), (3000.0, 0.3)],
                },
                FeatureImportance {
                    feature: "statuses_by_age".into(),
                    mean_abs_phi: 0.1,
                    points: vec![(0.0, 0.1), (0.0, -0.1), (0.0, 0.1)],
                },
            ],
        }
    }

    #[test]
    fn renders_one_row_per_feature_and_one_dot_per_point() {
        let svg = beeswarm_svg(&summary());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.contains(">age</text>"));
        assert!(svg.contains(">statuses_by_age</text>"));
        assert!(svg.contains("probability"));
    }

    #[test]
    fn output_is_deterministic() {
        assert_eq!(beeswarm_svg(&summary()), beeswarm_svg(&summary()));
    }

    #[test]
    fn constant_valued_features_render_gray() {
        let svg = beeswarm_svg(&summary());
        assert!(svg.contains("#888888"));
    }

    #[test]
    fn feature_names_are_escaped() {
        let mut s = summary();
        s.ranking[0].feature = "a<b&c".into();
        let svg = beeswarm_svg(&s);
        assert!(svg.contains("a&lt;b&amp;c"));
        assert!(!svg.contains("a<b&c"));
    }
}
