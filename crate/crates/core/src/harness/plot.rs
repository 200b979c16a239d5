//! Reward-curve rendering: per-episode return with a windowed-average overlay.

use super::metrics::{moving_average, read_metrics};
use super::{HarnessError, AVG_WINDOW};
use plotters::prelude::*;
use std::path::Path;

/// Renders `metrics` as an SVG image: the raw return per episode plus its
/// 50-episode moving average.
pub fn plot_metrics(metrics: &Path, out: &Path) -> Result<(), HarnessError> {
    let records = read_metrics(metrics)?;
    if records.is_empty() {
        return Err(HarnessError::Metrics(format!(
            "no episodes in {}",
            metrics.display()
        )));
    }
    let returns: Vec<f64> = records.iter().map(|r| r.ret).collect();
    let average = moving_average(&returns, AVG_WINDOW);

    let y_lo = returns.iter().copied().fold(f64::INFINITY, f64::min);
    let y_hi = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((y_hi - y_lo) * 0.05).max(1.0);
    let x_hi = (records.len() as u32).max(2);

    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let root = SVGBackend::new(out, (960, 540)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Reward per episode", ("sans-serif", 24))
        .margin(14)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(1u32..x_hi, (y_lo - pad)..(y_hi + pad))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("episode")
        .y_desc("return")
        .draw()
        .map_err(plot_err)?;

    chart
        .draw_series(LineSeries::new(
            returns
                .iter()
                .enumerate()
                .map(|(i, &r)| ((i + 1) as u32, r)),
            &RGBColor(140, 160, 220),
        ))
        .map_err(plot_err)?
        .label("return")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], RGBColor(140, 160, 220)));
    chart
        .draw_series(LineSeries::new(
            average
                .iter()
                .enumerate()
                .map(|(i, &r)| ((i + 1) as u32, r)),
            RED.stroke_width(2),
        ))
        .map_err(plot_err)?
        .label(format!("{AVG_WINDOW}-episode average"))
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], RED.stroke_width(2)));
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.85))
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

fn plot_err<E: std::fmt::Display>(e: E) -> HarnessError {
    HarnessError::Plot(e.to_string())
}
