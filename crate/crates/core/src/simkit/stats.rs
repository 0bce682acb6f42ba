//! Rank correlation coefficients with two-sided p-values.

use num_traits::{Float, NumCast};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 observations, got {0}")]
    TooFew(usize),
    #[error("a sample has zero rank variance")]
    ZeroVariance,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation<T> {
    pub coefficient: T,
    pub p_value: T,
    pub n: usize,
}

fn check<T>(xs: &[T], ys: &[T]) -> Result<usize, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(StatsError::TooFew(xs.len()));
    }
    Ok(xs.len())
}

fn cast<T: Float>(v: f64) -> T {
    <T as NumCast>::from(v).expect("f64 fits the target float")
}

fn to_f64<T: Float>(v: T) -> f64 {
    v.to_f64().expect("float converts to f64")
}

/// 1-based ranks, ties receiving the mean of the ranks they span.
pub fn average_ranks<T: Float>(xs: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("NaN in sample"));
    let mut ranks = vec![T::zero(); xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let mean = cast::<T>((i + j) as f64 / 2.0 + 1.0);
        for &k in &order[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

fn pearson<T: Float>(xs: &[T], ys: &[T]) -> Result<T, StatsError> {
    let n = cast::<T>(xs.len() as f64);
    let mx = xs.iter().fold(T::zero(), |a, &b| a + b) / n;
    let my = ys.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(StatsError::ZeroVariance);
    }
    let r = sxy / (sxx * syy).sqrt();
    // clamp rounding drift so perfect orderings give exactly ±1
    Ok(r.max(-T::one()).min(T::one()))
}

/// Spearman's rho (Pearson on average ranks); p from Student's t with
/// n − 2 degrees of freedom.
pub fn spearman<T: Float>(xs: &[T], ys: &[T]) -> Result<Correlation<T>, StatsError> {
    let n = check(xs, ys)?;
    let rho = pearson(&average_ranks(xs), &average_ranks(ys))?;
    let r = to_f64(rho);
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok(Correlation {
        coefficient: rho,
        p_value: cast(p),
        n,
    })
}

/// Kendall's tau-a: (concordant − discordant) / (n(n−1)/2); p from the
/// normal approximation of the pair-count statistic.
pub fn kendall_tau_a<T: Float>(xs: &[T], ys: &[T]) -> Result<Correlation<T>, StatsError> {
    let n = check(xs, ys)?;
    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let prod = (xs[i] - xs[j]) * (ys[i] - ys[j]);
            if prod > T::zero() {
                s += 1;
            } else if prod < T::zero() {
                s -= 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let tau = cast::<T>(s as f64) / cast::<T>(pairs);
    let nf = n as f64;
    let z = 3.0 * s as f64 / (nf * (nf - 1.0) * (2.0 * nf + 5.0) / 2.0).sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let p = 2.0 * (1.0 - normal.cdf(z.abs()));
    Ok(Correlation {
        coefficient: tau,
        p_value: cast(p),
        n,
    })
}
