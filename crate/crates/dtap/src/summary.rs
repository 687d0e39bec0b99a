//! Run summaries and trend statistics over a metrics series.

use std::fmt::Write as _;

use dtap_core::MetricsFrame;

/// Span, in time units, of the tail used for the stability statistics.
pub const TAIL_SPAN: u64 = 50_000;

/// Ordinary least-squares slope of `y` on `x`. `None` with fewer than two
/// distinct abscissae.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Frames with `from < time <= to`.
pub fn frames_in(frames: &[MetricsFrame], from: u64, to: u64) -> impl Iterator<Item = &MetricsFrame> {
    frames.iter().filter(move |f| f.time > from && f.time <= to)
}

/// Task-weighted mean ATST over `from < time <= to`.
pub fn mean_atst(frames: &[MetricsFrame], from: u64, to: u64) -> Option<f64> {
    let (sum, n) = frames_in(frames, from, to)
        .filter_map(|f| f.atst.map(|a| (a * f.window_tasks as f64, f.window_tasks)))
        .fold((0.0, 0u64), |(s, n), (a, k)| (s + a, n + k));
    (n > 0).then(|| sum / n as f64)
}

pub fn mean_entropy(frames: &[MetricsFrame], from: u64, to: u64) -> Option<f64> {
    let values: Vec<f64> = frames_in(frames, from, to).map(|f| f.entropy_mean).collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Fitted change of ATST across `(from, to]` divided by its mean there.
pub fn atst_relative_change(frames: &[MetricsFrame], from: u64, to: u64) -> Option<f64> {
    let points: Vec<(f64, f64)> = frames_in(frames, from, to)
        .filter_map(|f| f.atst.map(|a| (f.time as f64, a)))
        .collect();
    let slope = ols_slope(&points)?;
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    (mean > 0.0).then(|| slope * (to - from) as f64 / mean)
}

/// Fitted change of mean entropy (bits) across `(from, to]`.
pub fn entropy_change(frames: &[MetricsFrame], from: u64, to: u64) -> Option<f64> {
    let points: Vec<(f64, f64)> = frames_in(frames, from, to)
        .map(|f| (f.time as f64, f.entropy_mean))
        .collect();
    Some(ols_slope(&points)? * (to - from) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub frames: usize,
    pub final_atst: Option<f64>,
    pub final_entropy_mean: f64,
    pub peak_atst: Option<f64>,
    pub overall_atst: Option<f64>,
    pub total_tasks: u64,
    /// Relative fitted ATST change over the last [`TAIL_SPAN`] time units.
    pub tail_atst_change: Option<f64>,
    /// Fitted entropy change (bits) over the last [`TAIL_SPAN`] time units.
    pub tail_entropy_change: Option<f64>,
}

impl RunSummary {
    pub fn from_frames(frames: &[MetricsFrame]) -> Self {
        let last = frames.last();
        let end = last.map_or(0, |f| f.time);
        let tail_start = end.saturating_sub(TAIL_SPAN);
        let peak_atst = frames
            .iter()
            .filter_map(|f| f.atst)
            .fold(None, |m: Option<f64>, a| Some(m.map_or(a, |m| m.max(a))));
        Self {
            frames: frames.len(),
            final_atst: last.and_then(|f| f.atst),
            final_entropy_mean: last.map_or(0.0, |f| f.entropy_mean),
            peak_atst,
            overall_atst: mean_atst(frames, 0, end),
            total_tasks: last.map_or(0, |f| f.tasks_completed_total),
            tail_atst_change: atst_relative_change(frames, tail_start, end),
            tail_entropy_change: entropy_change(frames, tail_start, end),
        }
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::new();
        let _ = writeln!(s, "frames = {}", self.frames);
        let _ = writeln!(s, "final_atst = {}", opt(self.final_atst));
        let _ = writeln!(s, "final_entropy_mean = {}", self.final_entropy_mean);
        let _ = writeln!(s, "peak_atst = {}", opt(self.peak_atst));
        let _ = writeln!(s, "overall_atst = {}", opt(self.overall_atst));
        let _ = writeln!(s, "total_tasks = {}", self.total_tasks);
        let _ = writeln!(s, "tail_span = {TAIL_SPAN}");
        let _ = writeln!(s, "tail_atst_relative_change = {}", opt(self.tail_atst_change));
        let _ = writeln!(s, "tail_entropy_change = {}", opt(self.tail_entropy_change));
        s
    }
}
