use statrs::function::erf::erfc;

use super::{check_finite, StatFlag, StatResult, StatsError, TestKind};

/// `Auto` uses the exact distribution up to this combined sample size (no ties).
pub const EXACT_AUTO_LIMIT: usize = 14;

/// Labelings enumerated at most by the tie-aware exact path.
const TIED_ENUMERATION_LIMIT: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MwuMode {
    #[default]
    Auto,
    Exact,
    Normal,
}

/// Midranks of the pooled sample plus tie-group sizes.
fn pooled_ranks(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<(f64, usize)> = a.iter().chain(b).copied().zip(0..).collect();
    idx.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut ranks = vec![0.0; idx.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && idx[j].0 == idx[i].0 {
            j += 1;
        }
        let mid = (i + j + 1) as f64 / 2.0;
        for &(_, orig) in &idx[i..j] {
            ranks[orig] = mid;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Number of arrangements of `n` and `m` items with each value of U, for
/// U = 0..=n·m (coefficients of the Gaussian binomial).
fn u_counts(n: usize, m: usize) -> Vec<f64> {
    // cols[i] holds counts for (i, j) at the current j.
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0]; n + 1];
    for j in 1..=m {
        for i in 1..=n {
            let mut next = vec![0.0; i * j + 1];
            // c(i, j-1, u): last item belongs to the second sample
            for (u, &c) in cols[i].iter().enumerate() {
                next[u] += c;
            }
            // c(i-1, j, u-j): last item belongs to the first sample, beating all j
            for (u, &c) in cols[i - 1].iter().enumerate() {
                next[u + j] += c;
            }
            cols[i] = next;
        }
    }
    std::mem::take(&mut cols[n])
}

/// `P(U ≤ u)` under the null for tie-free samples of sizes `n`, `m`.
pub fn exact_u_cdf(n: usize, m: usize, u: f64) -> f64 {
    let counts = u_counts(n, m);
    let total: f64 = counts.iter().sum();
    let upto = counts
        .iter()
        .enumerate()
        .take_while(|(k, _)| *k as f64 <= u + 1e-9)
        .map(|(_, c)| c)
        .sum::<f64>();
    upto / total
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Two-sided permutation p-value over all labelings of the given midranks.
fn exact_tied_p(ranks: &[f64], n: usize, u_obs: f64) -> Result<f64, StatsError> {
    let total_n = ranks.len();
    let count = binomial(total_n, n);
    if count > TIED_ENUMERATION_LIMIT {
        return Err(StatsError::ExactTooLarge(count));
    }
    let m = total_n - n;
    let mu = (n * m) as f64 / 2.0;
    let obs = (u_obs - mu).abs() - 1e-9;
    let mut chosen: Vec<usize> = (0..n).collect();
    let mut extreme = 0u128;
    let mut seen = 0u128;
    loop {
        let r: f64 = chosen.iter().map(|&i| ranks[i]).sum();
        let u = r - (n * (n + 1)) as f64 / 2.0;
        if (u - mu).abs() >= obs {
            extreme += 1;
        }
        seen += 1;
        // next combination in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return Ok((extreme as f64 / seen as f64).min(1.0));
            }
            i -= 1;
            if chosen[i] != i + total_n - n {
                break;
            }
        }
        chosen[i] += 1;
        for j in i + 1..n {
            chosen[j] = chosen[j - 1] + 1;
        }
    }
}

/// Two-sided Mann-Whitney U test. The reported statistic is `min(U_a, U_b)`.
///
/// `Exact` uses the null distribution of U (full enumeration of labelings
/// when ties are present); `Normal` uses the tie-corrected normal
/// approximation with continuity correction; `Auto` picks exact when the
/// combined size is at most [`EXACT_AUTO_LIMIT`] and there are no ties.
pub fn mann_whitney_u(a: &[f64], b: &[f64], mode: MwuMode) -> Result<StatResult, StatsError> {
    if a.is_empty() {
        return Err(StatsError::Empty("first group"));
    }
    if b.is_empty() {
        return Err(StatsError::Empty("second group"));
    }
    check_finite(a)?;
    check_finite(b)?;
    let (n, m) = (a.len(), b.len());
    let total = n + m;
    let nm = (n * m) as f64;

    let first = a[0];
    if a.iter().chain(b).all(|&x| x == first) {
        return Ok(StatResult::unadjusted(TestKind::MannWhitneyU, nm / 2.0, 1.0, Some(StatFlag::DegenerateData)));
    }

    let (ranks, ties) = pooled_ranks(a, b);
    let rank_sum_a: f64 = ranks[..n].iter().sum();
    let u_a = rank_sum_a - (n * (n + 1)) as f64 / 2.0;
    let u_b = nm - u_a;
    let u = u_a.min(u_b);

    let use_exact = match mode {
        MwuMode::Exact => true,
        MwuMode::Normal => false,
        MwuMode::Auto => total <= EXACT_AUTO_LIMIT && ties.is_empty(),
    };

    let p = if use_exact {
        if ties.is_empty() {
            (2.0 * exact_u_cdf(n, m, u)).min(1.0)
        } else {
            exact_tied_p(&ranks, n, u_a)?
        }
    } else {
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>()
            / (total * (total - 1)) as f64;
        let sigma = (nm / 12.0 * ((total + 1) as f64 - tie_term)).sqrt();
        let z = ((u - nm / 2.0).abs() - 0.5).max(0.0) / sigma;
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(StatResult::unadjusted(TestKind::MannWhitneyU, u, p, None))
}
