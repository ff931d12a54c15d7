//! CSV emission with deterministic 6-significant-digit number formatting,
//! so repeated runs with the same seed produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use loadcoord::dfw::TraceRow;

pub const RESULT_HEADER: &str = "experiment,sweep_value,algorithm,mean_cost,stderr,iterations,final_gap,utilization,savings_pct,savings_se,seed";

#[derive(Debug, Clone)]
pub struct ResultRow {
    pub experiment: String,
    pub sweep_value: Option<f64>,
    pub algorithm: &'static str,
    pub mean_cost: f64,
    pub stderr: f64,
    pub iterations: Option<usize>,
    pub final_gap: Option<f64>,
    pub utilization: f64,
    pub savings_pct: Option<f64>,
    pub savings_se: Option<f64>,
    pub seed: u64,
}

/// Rounds to 6 significant digits and prints without an exponent,
/// trimming trailing fractional zeros. `g6(40733.823240) == "40733.8"`.
pub fn g6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let x = if exp > 5 {
        // `{:.0}` alone would print every integer digit.
        let scale = 10f64.powi(exp - 5);
        (x / scale).round() * scale
    } else {
        x
    };
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt_g6(x: Option<f64>) -> String {
    x.map(g6).unwrap_or_default()
}

pub fn render_results(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            opt_g6(r.sweep_value),
            r.algorithm,
            g6(r.mean_cost),
            g6(r.stderr),
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            opt_g6(r.final_gap),
            g6(r.utilization),
            opt_g6(r.savings_pct),
            opt_g6(r.savings_se),
            r.seed,
        ));
    }
    out
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> anyhow::Result<()> {
    fs::write(path, render_results(rows))
        .with_context(|| format!("writing {}", path.display()))
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> anyhow::Result<()> {
    let mut out = String::from("iteration,mu,gap,lambda_min,lambda_mean,lambda_max,q_mean\n");
    for t in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            t.iteration,
            g6(t.mu),
            g6(t.gap),
            g6(t.lambda_min),
            g6(t.lambda_mean),
            g6(t.lambda_max),
            g6(t.q_mean),
        ));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// `--out` wins; otherwise the default file name is placed under
/// `$LOADCOORD_OUT_DIR` (or the working directory when unset).
pub fn resolve_out(flag: &Option<PathBuf>, default_name: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.clone();
    }
    match std::env::var_os("LOADCOORD_OUT_DIR") {
        Some(dir) => PathBuf::from(dir).join(default_name),
        None => PathBuf::from(default_name),
    }
}

/// Companion path for the iteration trace: `foo.csv` -> `foo_trace.csv`.
pub fn trace_path(results: &Path) -> PathBuf {
    let stem = results.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    results.with_file_name(format!("{stem}_trace.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_rounds_to_six_significant_digits() {
        assert_eq!(g6(40733.823240739905), "40733.8");
        assert_eq!(g6(0.0), "0");
        assert_eq!(g6(-4.8234567), "-4.82346");
        assert_eq!(g6(123456789.0), "123457000");
        assert_eq!(g6(0.000123456789), "0.000123457");
        assert_eq!(g6(999999.7), "1000000");
        assert_eq!(g6(150.0), "150");
    }

    #[test]
    fn trace_path_appends_suffix() {
        assert_eq!(
            trace_path(Path::new("/tmp/example1.csv")),
            PathBuf::from("/tmp/example1_trace.csv")
        );
    }
}
