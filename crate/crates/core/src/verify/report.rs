//! Human-readable rendering of claim reports.

use std::fmt::Write;

use super::ClaimReport;

fn fraction(f: Option<f64>) -> String {
    f.map_or_else(|| "-".into(), |v| format!("{v:.2}"))
}

/// One row per report plus a summary line.
pub fn render_text(reports: &[ClaimReport]) -> String {
    let width = reports.iter().map(|r| r.claim.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:<9}  {:<18}  {:>9}  {:>10}  {:>10}  {:>6}  {:>8}",
        "claim", "group", "assertion", "acc/rej", "max", "median", "nonvan", "verdict"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:<9}  {:<18}  {:>9}  {:>10.3e}  {:>10.3e}  {:>6}  {:>8}",
            r.claim,
            r.group,
            r.assertion,
            format!("{}/{}", r.samples.accepted, r.samples.rejected),
            r.residuals.max,
            r.residuals.median,
            fraction(r.nonvanishing_fraction),
            r.verdict.to_string(),
        );
        if let Some(e) = &r.error {
            let _ = writeln!(out, "    error: {e}");
        }
        if let Some(k) = r.exact_failures.filter(|k| *k > 0) {
            let _ = writeln!(out, "    exact identity failed at {k} points");
        }
    }
    let failed = reports
        .iter()
        .filter(|r| !r.advisory && r.verdict != super::Verdict::Pass)
        .count();
    let advisory = reports.iter().filter(|r| r.advisory).count();
    let _ = writeln!(
        out,
        "{} claims, {} failed, {} advisory",
        reports.len(),
        failed,
        advisory
    );
    out
}
