use super::metrics::TrialMetrics;
use super::stats::{one_way_anova, stars, welch_t_test, AnovaResult, WelchResult};
use serde::Serialize;
use std::fmt::Write as _;

pub const METRIC_NAMES: [&str; 8] =
    ["IT", "CIT", "SIT", "HT", "min_tdtc_av", "min_tdtc_hv", "ehmi_count", "ehmi_first_t"];

fn metric_values(m: &TrialMetrics) -> [Option<f64>; 8] {
    let i = m.interaction.as_ref();
    [
        i.map(|i| i.it),
        i.and_then(|i| i.cit),
        i.and_then(|i| i.sit),
        i.map(|i| i.ht),
        m.min_abs_tdtc_av,
        m.min_abs_tdtc_hv,
        Some(m.ehmi_count as f64),
        m.ehmi_first_t,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub sd: f64,
}

impl Summary {
    fn of(v: &[f64]) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Summary { n, mean, sd })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub label: String,
    pub trials: usize,
    /// Indexed like `METRIC_NAMES`; `None` when no trial defines the metric.
    pub metrics: Vec<Option<Summary>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseRow {
    pub a: String,
    pub b: String,
    pub metric: &'static str,
    pub result: WelchResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub conditions: Vec<ConditionSummary>,
    /// One entry per metric; absent with fewer than two conditions.
    pub anova: Option<Vec<Option<AnovaResult>>>,
    pub pairwise: Vec<PairwiseRow>,
}

/// Summaries per condition (in first-seen order), ANOVA across conditions
/// and pairwise Welch tests for every metric where they are defined.
pub fn aggregate_report(runs: &[(String, TrialMetrics)]) -> Result<Report, String> {
    if runs.is_empty() {
        return Err("no trials to report".into());
    }
    let mut labels: Vec<&str> = Vec::new();
    for (l, _) in runs {
        if !labels.contains(&l.as_str()) {
            labels.push(l);
        }
    }
    // values[condition][metric] -> observations
    let values: Vec<Vec<Vec<f64>>> = labels
        .iter()
        .map(|l| {
            let mut per = vec![Vec::new(); METRIC_NAMES.len()];
            for (_, m) in runs.iter().filter(|(x, _)| x == l) {
                for (k, v) in metric_values(m).into_iter().enumerate() {
                    per[k].extend(v);
                }
            }
            per
        })
        .collect();

    let conditions = labels
        .iter()
        .zip(&values)
        .map(|(l, per)| ConditionSummary {
            label: l.to_string(),
            trials: runs.iter().filter(|(x, _)| x == l).count(),
            metrics: per.iter().map(|v| Summary::of(v)).collect(),
        })
        .collect();

    let anova = (labels.len() >= 2).then(|| {
        (0..METRIC_NAMES.len())
            .map(|k| {
                // conditions where the metric is undefined (or seen once) sit out
                let groups: Vec<&[f64]> =
                    values.iter().map(|per| per[k].as_slice()).filter(|g| g.len() >= 2).collect();
                one_way_anova(&groups).ok()
            })
            .collect()
    });

    let mut pairwise = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            for (k, metric) in METRIC_NAMES.iter().enumerate() {
                if let Ok(result) = welch_t_test(&values[i][k], &values[j][k]) {
                    pairwise.push(PairwiseRow {
                        a: labels[i].to_string(),
                        b: labels[j].to_string(),
                        metric,
                        result,
                    });
                }
            }
        }
    }
    Ok(Report { conditions, anova, pairwise })
}

fn fmt_summary(s: &Option<Summary>) -> String {
    match s {
        Some(s) => format!("{:.3}±{:.3}", s.mean, s.sd),
        None => String::new(),
    }
}

fn fmt_p(p: f64) -> String {
    format!("{p:.4}{}", stars(p))
}

fn csv_string(rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
}

impl Report {
    /// Condition rows of `mean±sd`, followed by a `p` row when there is an
    /// ANOVA section.
    pub fn to_csv(&self) -> String {
        let mut rows = vec![std::iter::once("condition".to_string())
            .chain(METRIC_NAMES.iter().map(|s| s.to_string()))
            .collect::<Vec<_>>()];
        for c in &self.conditions {
            rows.push(std::iter::once(c.label.clone()).chain(c.metrics.iter().map(fmt_summary)).collect());
        }
        if let Some(anova) = &self.anova {
            rows.push(
                std::iter::once("p".to_string())
                    .chain(anova.iter().map(|a| a.map(|a| fmt_p(a.p)).unwrap_or_default()))
                    .collect(),
            );
        }
        csv_string(rows)
    }

    pub fn pairwise_csv(&self) -> String {
        let header = ["a", "b", "metric", "t", "df", "p", "stars"].map(String::from).to_vec();
        csv_string(std::iter::once(header).chain(self.pairwise.iter().map(|r| {
            vec![
                r.a.clone(),
                r.b.clone(),
                r.metric.to_string(),
                format!("{:.4}", r.result.t),
                format!("{:.2}", r.result.df),
                format!("{:.4}", r.result.p),
                stars(r.result.p).to_string(),
            ]
        })))
    }

    pub fn to_text(&self) -> String {
        let width = self.conditions.iter().map(|c| c.label.len()).max().unwrap_or(0).max(9);
        let mut out = String::new();
        let _ = write!(out, "{:<width$}", "condition");
        for m in METRIC_NAMES {
            let _ = write!(out, " {m:>16}");
        }
        out.push('\n');
        for c in &self.conditions {
            let _ = write!(out, "{:<width$}", c.label);
            for s in &c.metrics {
                let _ = write!(out, " {:>16}", fmt_summary(s));
            }
            out.push('\n');
        }
        if let Some(anova) = &self.anova {
            let _ = write!(out, "{:<width$}", "p");
            for a in anova {
                let _ = write!(out, " {:>16}", a.map(|a| fmt_p(a.p)).unwrap_or_default());
            }
            out.push('\n');
        }
        out
    }
}

/// One row per trial with every metric; empty cells for undefined ones.
pub fn metrics_csv(runs: &[(String, TrialMetrics)]) -> String {
    let header = ["condition", "onset"].into_iter().chain(METRIC_NAMES).map(String::from).collect();
    csv_string(std::iter::once(header).chain(runs.iter().map(|(label, m)| {
        let onset = m.interaction.map(|i| i.onset.to_string()).unwrap_or_default();
        std::iter::once(label.clone())
            .chain(std::iter::once(onset))
            .chain(metric_values(m).iter().map(|v| v.map(|v| v.to_string()).unwrap_or_default()))
            .collect()
    })))
}
