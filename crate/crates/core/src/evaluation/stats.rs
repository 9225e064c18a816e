use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {index} has {n} observations, need at least 2")]
    TooSmall { index: usize, n: usize },
    #[error("all observations are identical; the statistic is undefined")]
    NoVariance,
    #[error("non-finite observation")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub p: f64,
    pub df_between: f64,
    pub df_within: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sum_sq_dev(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m) * (v - m)).sum()
}

fn check(groups: &[&[f64]]) -> Result<(), StatsError> {
    for (index, g) in groups.iter().enumerate() {
        if g.len() < 2 {
            return Err(StatsError::TooSmall { index, n: g.len() });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
    }
    Ok(())
}

pub fn one_way_anova(groups: &[&[f64]]) -> Result<AnovaResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    check(groups)?;
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let ssb: f64 = groups.iter().map(|g| g.len() as f64 * (mean(g) - grand).powi(2)).sum();
    let ssw: f64 = groups.iter().map(|g| sum_sq_dev(g, mean(g))).sum();
    let df_between = (groups.len() - 1) as f64;
    let df_within = (n - groups.len()) as f64;
    if ssw == 0.0 {
        if ssb == 0.0 {
            return Err(StatsError::NoVariance);
        }
        return Ok(AnovaResult { f: f64::INFINITY, p: 0.0, df_between, df_within });
    }
    let f = (ssb / df_between) / (ssw / df_within);
    let dist = FisherSnedecor::new(df_between, df_within).expect("positive degrees of freedom");
    let p = if f == 0.0 { 1.0 } else { dist.sf(f).clamp(0.0, 1.0) };
    Ok(AnovaResult { f, p, df_between, df_within })
}

/// Two-sided Welch t-test of `a` against `b`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, StatsError> {
    check(&[a, b])?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let va = sum_sq_dev(a, ma) / (na - 1.0) / na;
    let vb = sum_sq_dev(b, mb) / (nb - 1.0) / nb;
    let se2 = va + vb;
    if se2 == 0.0 {
        return Err(StatsError::NoVariance);
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p = if t == 0.0 { 1.0 } else { (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0) };
    Ok(WelchResult { t, df, p })
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}
