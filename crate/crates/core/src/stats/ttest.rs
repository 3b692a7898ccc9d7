//! Two-sample location tests.
//!
//! The default is Welch's unequal-variance t-test; the classic pooled
//! variance form is available behind [`TestKind::Pooled`] for sensitivity
//! checks. Both report a two-sided p-value.

use serde::Serialize;

use super::special::student_t_two_sided_p;
use super::StatsError;
use crate::num::Real;

/// Which two-sample test to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Welch,
    Pooled,
}

/// Test statistic, degrees of freedom, and two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult<F> {
    pub t: F,
    pub df: F,
    pub p: F,
}

/// Sample mean; `None` for an empty slice.
pub fn mean<F: Real>(xs: &[F]) -> Option<F> {
    if xs.is_empty() {
        return None;
    }
    let sum = xs.iter().fold(F::zero(), |acc, &x| acc + x);
    Some(sum / F::of_usize(xs.len()))
}

/// Unbiased sample variance (n - 1 denominator); 0 when n <= 1.
pub fn sample_variance<F: Real>(xs: &[F]) -> F {
    let n = xs.len();
    if n <= 1 {
        return F::zero();
    }
    let m = mean(xs).expect("non-empty");
    let ss = xs.iter().fold(F::zero(), |acc, &x| {
        let d = x - m;
        acc + d * d
    });
    ss / F::of_usize(n - 1)
}

/// Sample standard deviation; 0 when n <= 1.
pub fn sample_sd<F: Real>(xs: &[F]) -> F {
    sample_variance(xs).sqrt()
}

fn check_sides<F: Real>(a: &[F], b: &[F]) -> Result<(F, F, F, F), StatsError> {
    let (n_a, n_b) = (a.len(), b.len());
    if n_a < 2 || n_b < 2 {
        return Err(StatsError::DegenerateSample {
            n_a,
            n_b,
            detail: "each side needs at least two observations",
        });
    }
    let va = sample_variance(a);
    let vb = sample_variance(b);
    if va == F::zero() && vb == F::zero() {
        return Err(StatsError::DegenerateSample {
            n_a,
            n_b,
            detail: "both sides have zero variance",
        });
    }
    Ok((mean(a).expect("non-empty"), mean(b).expect("non-empty"), va, vb))
}

/// Welch's t-test: t = (mean_a - mean_b) / sqrt(va/na + vb/nb) with
/// Welch–Satterthwaite degrees of freedom.
pub fn welch_t_test<F: Real>(a: &[F], b: &[F]) -> Result<TTestResult<F>, StatsError> {
    let (ma, mb, va, vb) = check_sides(a, b)?;
    let na = F::of_usize(a.len());
    let nb = F::of_usize(b.len());
    let ra = va / na;
    let rb = vb / nb;
    let se2 = ra + rb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (ra * ra / (na - F::one()) + rb * rb / (nb - F::one()));
    let p = student_t_two_sided_p(t, df);
    Ok(TTestResult { t, df, p })
}

/// Pooled-variance (equal variance) two-sample t-test with n_a + n_b - 2
/// degrees of freedom.
pub fn pooled_t_test<F: Real>(a: &[F], b: &[F]) -> Result<TTestResult<F>, StatsError> {
    let (ma, mb, va, vb) = check_sides(a, b)?;
    let na = F::of_usize(a.len());
    let nb = F::of_usize(b.len());
    let one = F::one();
    let df = na + nb - F::of(2.0);
    let sp2 = ((na - one) * va + (nb - one) * vb) / df;
    let se = (sp2 * (one / na + one / nb)).sqrt();
    let t = (ma - mb) / se;
    let p = student_t_two_sided_p(t, df);
    Ok(TTestResult { t, df, p })
}

/// Dispatch on [`TestKind`].
pub fn t_test<F: Real>(a: &[F], b: &[F], kind: TestKind) -> Result<TTestResult<F>, StatsError> {
    match kind {
        TestKind::Welch => welch_t_test(a, b),
        TestKind::Pooled => pooled_t_test(a, b),
    }
}
