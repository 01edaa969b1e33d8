use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::{check_finite, StatFlag, StatResult, StatsError, TestKind};

/// One-way ANOVA F test across `groups`.
///
/// Zero within-group variance yields `F = 0, p = 1` (flagged degenerate) when
/// all group means agree and `F = ∞, p = 0` otherwise.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<StatResult, StatsError> {
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(StatsError::AnovaShape);
    }
    for g in groups {
        check_finite(g)?;
    }
    let k = groups.len();
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let means: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();

    let ss_between: f64 = groups.iter().zip(&means).map(|(g, m)| g.len() as f64 * (m - grand).powi(2)).sum();
    let ss_within: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();

    let df1 = (k - 1) as f64;
    let df2 = (n - k) as f64;
    // relative tolerance so rounding noise in the sums doesn't masquerade as signal
    let scale = groups.iter().flatten().map(|x| x.abs()).fold(0.0f64, f64::max).max(1.0);
    let eps = 1e-12 * scale * scale * n as f64;
    if ss_within <= eps {
        return Ok(if ss_between <= eps {
            StatResult::unadjusted(TestKind::AnovaF, 0.0, 1.0, Some(StatFlag::DegenerateData))
        } else {
            StatResult::unadjusted(TestKind::AnovaF, f64::INFINITY, 0.0, Some(StatFlag::InfiniteF))
        });
    }
    let f = (ss_between / df1) / (ss_within / df2);
    let dist = FisherSnedecor::new(df1, df2).expect("degrees of freedom are positive");
    let p = dist.sf(f).clamp(0.0, 1.0);
    Ok(StatResult::unadjusted(TestKind::AnovaF, f, p, None))
}
