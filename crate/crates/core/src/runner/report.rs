use std::collections::BTreeMap;

use super::{EvalReport, Mode, RunError};
use crate::features::Preset;
use crate::learners::ModelFamily;

/// Percentage with two decimals, rounding half away from zero on the
/// shortest decimal representation of `fraction` (so 0.81525 → "81.53").
pub fn format_percent(fraction: f64) -> String {
    let text = format!("{}", fraction.abs());
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    // Move the decimal point two places right.
    let mut digits: Vec<u8> = int.bytes().chain(frac.bytes()).map(|b| b - b'0').collect();
    let point = int.len() + 2;
    while digits.len() < point + 3 {
        digits.push(0);
    }
    let round_up = digits[point + 2] >= 5;
    digits.truncate(point + 2);
    if round_up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - 2;
    let whole: String = digits[..split].iter().map(|d| char::from(b'0' + d)).collect();
    let whole = whole.trim_start_matches('0');
    let whole = if whole.is_empty() { "0" } else { whole };
    let dec: String = digits[split..].iter().map(|d| char::from(b'0' + d)).collect();
    let sign = if fraction < 0.0 && digits.iter().any(|&d| d != 0) { "-" } else { "" };
    format!("{sign}{whole}.{dec}")
}

fn family_title(f: ModelFamily) -> &'static str {
    match f {
        ModelFamily::Logreg => "Logistic Regression",
        ModelFamily::Mlp => "Multi-Layer Perceptron",
    }
}

/// Markdown table with one row per target dataset and Self/Cross columns for
/// the compact and brute presets. Missing cells render as `-`.
pub fn render_tables(reports: &[EvalReport]) -> Result<String, RunError> {
    let first = reports.first().ok_or_else(|| RunError::InconsistentReports("no reports".into()))?;
    let family = first.config.model;
    let mut cells: BTreeMap<(usize, usize), String> = BTreeMap::new();
    let mut datasets: Vec<String> = Vec::new();
    for r in reports {
        if r.config.model != family {
            return Err(RunError::InconsistentReports(format!(
                "mixed model families: {family} and {}",
                r.config.model
            )));
        }
        let row = match datasets.iter().position(|d| *d == r.target) {
            Some(p) => p,
            None => {
                datasets.push(r.target.clone());
                datasets.len() - 1
            }
        };
        let col = match (r.config.preset, r.config.mode) {
            (Preset::Compact, Mode::SelfCorpus) => 0,
            (Preset::Compact, Mode::CrossCorpus) => 1,
            (Preset::Brute, Mode::SelfCorpus) => 2,
            (Preset::Brute, Mode::CrossCorpus) => 3,
        };
        if cells.insert((row, col), format_percent(r.mean_uar)).is_some() {
            return Err(RunError::InconsistentReports(format!(
                "two reports for {} / {} / {}",
                r.target,
                r.config.preset,
                r.config.mode.as_str()
            )));
        }
    }
    let mut out = format!("Table: {} performance reported in terms of UAR (%).\n\n", family_title(family));
    out.push_str("| Dataset | Compact Self-Corpus | Compact Cross-Corpus | Brute Self-Corpus | Brute Cross-Corpus |\n");
    out.push_str("|---|---:|---:|---:|---:|\n");
    for (i, d) in datasets.iter().enumerate() {
        out.push_str("| ");
        out.push_str(d);
        for c in 0..4 {
            out.push_str(" | ");
            out.push_str(cells.get(&(i, c)).map_or("-", String::as_str));
        }
        out.push_str(" |\n");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_rounding() {
        assert_eq!(format_percent(0.6484), "64.84");
        assert_eq!(format_percent(0.81525), "81.53");
        assert_eq!(format_percent(0.81524999), "81.52");
        assert_eq!(format_percent(1.0), "100.00");
        assert_eq!(format_percent(0.0), "0.00");
        assert_eq!(format_percent(0.99995), "100.00");
        assert_eq!(format_percent(0.000049), "0.00");
        assert_eq!(format_percent(0.00005), "0.01");
        assert_eq!(format_percent(-0.00125), "-0.13");
        assert_eq!(format_percent(0.5), "50.00");
    }

    #[test]
    fn empty_list_is_inconsistent() {
        assert!(matches!(render_tables(&[]), Err(RunError::InconsistentReports(_))));
    }
}
