//! Rank statistics: Spearman correlation with average-rank ties, the
//! two-sided Wilcoxon rank-sum test (exact at desk scale, normal
//! approximation otherwise), and Bonferroni adjustment.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

fn check_finite(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{name} contains a non-finite value"
        )));
    }
    Ok(())
}

/// Average ranks (1-based); tied values share the mean of their positions.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| xs[i].partial_cmp(&xs[j]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Spearman rank correlation: Pearson correlation of average-ranked data.
/// Errors on mismatched lengths, fewer than two points, or a constant input
/// (whose rank correlation is undefined).
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
            context: "spearman inputs".into(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument(
            "spearman needs at least two points".into(),
        ));
    }
    check_finite("spearman input a", a)?;
    check_finite("spearman input b", b)?;
    let constant = |xs: &[f64]| xs.iter().all(|&x| x == xs[0]);
    if constant(a) || constant(b) {
        return Err(Error::InvalidArgument(
            "spearman is undefined for a constant input".into(),
        ));
    }
    Ok(pearson(&average_ranks(a), &average_ranks(b)).clamp(-1.0, 1.0))
}

/// Number of k-subsets of ranks {1..n_total} whose sum is exactly s, for all
/// (k, s); used to enumerate the exact rank-sum null distribution.
fn rank_sum_counts(n_total: usize, k: usize) -> Vec<Vec<f64>> {
    let max_sum = n_total * (n_total + 1) / 2;
    // counts[j][s]: j-subsets of the ranks seen so far with sum s.
    let mut counts = vec![vec![0.0f64; max_sum + 1]; k + 1];
    counts[0][0] = 1.0;
    for r in 1..=n_total {
        for j in (1..=k).rev() {
            for s in (r..=max_sum).rev() {
                let add = counts[j - 1][s - r];
                if add > 0.0 {
                    counts[j][s] += add;
                }
            }
        }
    }
    counts
}

/// Exact two-sided p by full enumeration of the rank-sum null distribution:
/// `p = min(1, 2·min(P(W ≤ w), P(W ≥ w)))`. Requires tie-free pooled data.
pub fn wilcoxon_rank_sum_p_exact(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "wilcoxon needs two non-empty samples".into(),
        ));
    }
    check_finite("wilcoxon sample a", a)?;
    check_finite("wilcoxon sample b", b)?;
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite values"));
    if pooled.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(
            "exact wilcoxon requires tie-free samples".into(),
        ));
    }
    let n = a.len();
    let total = pooled.len();
    // Rank sum of sample a under the pooled ordering.
    let w: usize = a
        .iter()
        .map(|x| pooled.partition_point(|p| p < x) + 1)
        .sum();
    let counts = rank_sum_counts(total, n);
    let dist = &counts[n];
    let all: f64 = dist.iter().sum();
    let p_le: f64 = dist[..=w].iter().sum::<f64>() / all;
    let p_ge: f64 = dist[w..].iter().sum::<f64>() / all;
    Ok((2.0 * p_le.min(p_ge)).min(1.0))
}

/// Normal-approximation two-sided p with tie correction and continuity
/// correction. Degenerate variance (all values tied) gives p = 1.
pub fn wilcoxon_rank_sum_p_approx(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "wilcoxon needs two non-empty samples".into(),
        ));
    }
    check_finite("wilcoxon sample a", a)?;
    check_finite("wilcoxon sample b", b)?;
    let n = a.len() as f64;
    let m = b.len() as f64;
    let total = n + m;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = average_ranks(&pooled);
    let w: f64 = ranks[..a.len()].iter().sum();
    let mu = n * (total + 1.0) / 2.0;

    // Tie correction: subtract Σ(t³−t)/(N(N−1)) from (N+1) in the variance.
    let mut sorted: Vec<f64> = pooled.clone();
    sorted.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite values"));
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * m / 12.0 * (total + 1.0 - tie_term / (total * (total - 1.0)));
    if var <= 0.0 {
        return Ok(1.0);
    }
    let num = ((w - mu).abs() - 0.5).max(0.0);
    let z = num / var.sqrt();
    Ok(erfc(z / std::f64::consts::SQRT_2).min(1.0))
}

/// Two-sided Wilcoxon rank-sum p-value. Exact by enumeration when the
/// combined sample size is at most 12 and the pooled values are tie-free;
/// otherwise the tie-corrected normal approximation.
pub fn wilcoxon_rank_sum_p(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "wilcoxon needs two non-empty samples".into(),
        ));
    }
    check_finite("wilcoxon sample a", a)?;
    check_finite("wilcoxon sample b", b)?;
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite values"));
    let tie_free = pooled.windows(2).all(|w| w[0] != w[1]);
    if a.len() + b.len() <= 12 && tie_free {
        wilcoxon_rank_sum_p_exact(a, b)
    } else {
        wilcoxon_rank_sum_p_approx(a, b)
    }
}

/// Bonferroni adjustment: `min(1, p·m)` with m defaulting to the list
/// length. Inputs must lie in (0, 1].
pub fn bonferroni_adjust(p_values: &[f64], m: Option<usize>) -> Result<Vec<f64>> {
    for &p in p_values {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "p-value {p} outside (0, 1]"
            )));
        }
    }
    let m = m.unwrap_or(p_values.len()) as f64;
    Ok(p_values.iter().map(|&p| (p * m).min(1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn monotone_data_gives_extreme_rho() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up = [2.0, 4.0, 8.0, 16.0, 32.0];
        let down = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_abs_diff_eq!(spearman_rho(&a, &up).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spearman_rho(&a, &down).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn tied_input_matches_the_frozen_oracle_value() {
        let a = [1.0, 2.0, 2.0, 4.0];
        let b = [1.0, 3.0, 2.0, 4.0];
        let rho = spearman_rho(&a, &b).unwrap();
        assert_abs_diff_eq!(rho, 0.9486832980505138, epsilon = 1e-15);
    }

    #[test]
    fn spearman_is_symmetric() {
        let a = [0.3, -1.0, 2.5, 2.5, 0.0];
        let b = [1.0, 0.5, -2.0, 3.0, 3.0];
        assert_eq!(
            spearman_rho(&a, &b).unwrap(),
            spearman_rho(&b, &a).unwrap()
        );
    }

    #[test]
    fn constant_input_rejected() {
        assert!(spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman_rho(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]).is_err());
        assert!(spearman_rho(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn complete_separation_exact_p() {
        let a = [1.0, 2.0, 3.0];
        let b = [10.0, 11.0, 12.0];
        assert_abs_diff_eq!(
            wilcoxon_rank_sum_p(&a, &b).unwrap(),
            0.1,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            wilcoxon_rank_sum_p(&b, &a).unwrap(),
            0.1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn identical_samples_give_p_one() {
        let a = [3.0, 1.0, 2.0];
        assert_eq!(wilcoxon_rank_sum_p(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn exact_route_rejects_ties() {
        assert!(wilcoxon_rank_sum_p_exact(&[1.0, 2.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn exact_and_approx_agree_on_moderate_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..25 {
            let a: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..6).map(|_| rng.random::<f64>() + 0.2).collect();
            let exact = wilcoxon_rank_sum_p_exact(&a, &b).unwrap();
            let approx = wilcoxon_rank_sum_p_approx(&a, &b).unwrap();
            assert!(
                (exact - approx).abs() < 0.02,
                "exact {exact} vs approx {approx}"
            );
        }
    }

    #[test]
    fn empty_samples_rejected() {
        assert!(wilcoxon_rank_sum_p(&[], &[1.0]).is_err());
        assert!(wilcoxon_rank_sum_p(&[1.0], &[]).is_err());
    }

    #[test]
    fn bonferroni_spec_cases() {
        assert_eq!(bonferroni_adjust(&[0.01], Some(1)).unwrap(), vec![0.01]);
        assert_eq!(
            bonferroni_adjust(&[0.01, 0.03], None).unwrap(),
            vec![0.02, 0.06]
        );
        assert_eq!(
            bonferroni_adjust(&[0.4, 0.6], Some(3)).unwrap(),
            vec![1.0, 1.0]
        );
        assert!(bonferroni_adjust(&[0.0], None).is_err());
        assert!(bonferroni_adjust(&[1.2], None).is_err());
    }
}
