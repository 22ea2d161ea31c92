//! Two-sample tests, correlation, least squares and the exact binomial test.

use statrs::distribution::{Binomial, ContinuousCDF, Discrete, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("samples have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("{0} has zero variance")]
    ZeroVariance(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided, against zero correlation.
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn t_two_sided(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Unequal-variance two-sample t-test of mean(a) - mean(b).
///
/// When both samples are constant the result is p = 1 for equal means and
/// p = 0 (with an infinite t) otherwise.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFew { needed: 2, got: s.len() });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let se2 = va + vb;
    if se2 == 0.0 {
        return Ok(if ma == mb {
            TTest { t: 0.0, df: na + nb - 2.0, p: 1.0 }
        } else {
            TTest { t: (ma - mb).signum() * f64::INFINITY, df: na + nb - 2.0, p: 0.0 }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(TTest { t, df, p: t_two_sided(t, df) })
}

fn centered_sums(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64), StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    Ok((sxx, syy, sxy))
}

/// Pearson correlation with the t-based two-sided p-value.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Correlation, StatsError> {
    if xs.len() < 3 {
        return Err(StatsError::TooFew { needed: 3, got: xs.len() });
    }
    let (sxx, syy, sxy) = centered_sums(xs, ys)?;
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance("y"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = xs.len() as f64 - 2.0;
    let p = if r.abs() == 1.0 { 0.0 } else { t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df) };
    Ok(Correlation { r, p })
}

/// Ordinary least squares of ys on xs.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: xs.len() });
    }
    let (sxx, _, sxy) = centered_sums(xs, ys)?;
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x"));
    }
    let slope = sxy / sxx;
    Ok(LinearFit { slope, intercept: mean(ys) - slope * mean(xs) })
}

/// Exact two-sided binomial test: total probability of outcomes no more
/// likely than `successes` under Binomial(n, p).
pub fn binomial_test(successes: u64, n: u64, p: f64) -> f64 {
    assert!(successes <= n, "successes exceed trials");
    let dist = Binomial::new(p, n).expect("probability in [0, 1]");
    let observed = dist.pmf(successes);
    // relative slack so ties at the mirror point are counted
    let cutoff = observed * (1.0 + 1e-7);
    let total: f64 = (0..=n).map(|k| dist.pmf(k)).filter(|&q| q <= cutoff).sum();
    total.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two-sided t tail via t = sqrt(df) tan(theta), which turns the density
    /// into cos^(df-1)(theta) on [0, pi/2]; both integrals by Simpson's rule.
    fn oracle_t_tail(t: f64, df: f64) -> f64 {
        let f = |th: f64| th.cos().powf(df - 1.0);
        let simpson = |a: f64, b: f64| {
            let n = 200_000;
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let half_pi = std::f64::consts::FRAC_PI_2;
        let theta = (t.abs() / df.sqrt()).atan();
        simpson(theta, half_pi) / simpson(0.0, half_pi)
    }

    fn oracle_welch(a: &[f64], b: &[f64]) -> (f64, f64) {
        let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let s2 = |v: &[f64]| {
            let mu = m(v);
            v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (v.len() - 1) as f64
        };
        let (qa, qb) = (s2(a) / a.len() as f64, s2(b) / b.len() as f64);
        let t = (m(a) - m(b)) / (qa + qb).sqrt();
        let df = (qa + qb).powi(2) / (qa.powi(2) / (a.len() - 1) as f64 + qb.powi(2) / (b.len() - 1) as f64);
        (t, oracle_t_tail(t, df))
    }

    /// Raw-moment formulas, deliberately different from the centered sums.
    fn oracle_pearson_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let syy: f64 = ys.iter().map(|y| y * y).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
        let num = n * sxy - sx * sy;
        let r = num / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
        let slope = num / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        let df = n - 2.0;
        let p = oracle_t_tail(r * (df / (1.0 - r * r)).sqrt(), df);
        (r, p, slope, intercept)
    }

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn swap_negates_t() {
        let a = [1.0, 2.5, 3.0, 4.5, 2.0];
        let b = [0.5, 1.0, 1.5, 0.0];
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.p, ba.p);
    }

    #[test]
    fn zero_variance_conventions() {
        let r = welch_t_test(&[1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
        let r = welch_t_test(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert_eq!(r.p, 0.0);
        assert!(r.t.is_infinite() && r.t < 0.0);
        assert_eq!(welch_t_test(&[1.0], &[2.0, 3.0]), Err(StatsError::TooFew { needed: 2, got: 1 }));
    }

    #[test]
    fn textbook_pair_matches_oracle() {
        let a = [19.1, 21.3, 20.2, 18.7, 22.4, 20.9, 19.8, 21.7, 20.4, 19.5];
        let b = [17.2, 18.9, 16.5, 19.8, 18.1, 17.7, 20.3, 16.9, 18.4, 17.5];
        let r = welch_t_test(&a, &b).unwrap();
        let (t, p) = oracle_welch(&a, &b);
        assert!((r.t - t).abs() < 1e-9);
        assert!((r.p - p).abs() < 1e-6, "{} vs {p}", r.p);
    }

    #[test]
    fn exact_lines() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let c = pearson(&xs, &xs).unwrap();
        let f = linear_fit(&xs, &xs).unwrap();
        assert_eq!((c.r, c.p), (1.0, 0.0));
        assert!((f.slope - 1.0).abs() < 1e-12 && f.intercept.abs() < 1e-12);
        let ys: Vec<f64> = xs.iter().map(|x| -x + 5.0).collect();
        let c = pearson(&xs, &ys).unwrap();
        let f = linear_fit(&xs, &ys).unwrap();
        assert_eq!(c.r, -1.0);
        assert!((f.slope + 1.0).abs() < 1e-12 && (f.intercept - 5.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(linear_fit(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]), Err(StatsError::ZeroVariance("x")));
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]), Err(StatsError::ZeroVariance("y")));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFew { .. })));
    }

    #[test]
    fn random_pairs_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..50).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.7 * x + rng.random_range(-2.0..2.0)).collect();
        let c = pearson(&xs, &ys).unwrap();
        let f = linear_fit(&xs, &ys).unwrap();
        let (r, p, slope, intercept) = oracle_pearson_fit(&xs, &ys);
        assert!((c.r - r).abs() < 1e-9);
        assert!((f.slope - slope).abs() < 1e-9);
        assert!((f.intercept - intercept).abs() < 1e-9);
        assert!((c.p - p).abs() < 1e-6);
    }

    fn oracle_binomial(k: u64, n: u64, p: f64) -> f64 {
        let ln_fact = |m: u64| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
        let pmf = |j: u64| {
            (ln_fact(n) - ln_fact(j) - ln_fact(n - j) + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln()).exp()
        };
        let obs = pmf(k);
        (0..=n).map(pmf).filter(|&q| q <= obs * (1.0 + 1e-7)).sum::<f64>().min(1.0)
    }

    #[test]
    fn binomial_matches_oracle() {
        for &(k, n, p) in &[(155, 311, 0.5), (120, 311, 0.5), (3, 20, 0.3), (0, 10, 0.5), (10, 10, 0.5)] {
            let got = binomial_test(k, n, p);
            let want = oracle_binomial(k, n, p);
            assert!((got - want).abs() < 1e-9, "{k}/{n}: {got} vs {want}");
        }
        assert!((binomial_test(155, 311, 0.5) - 1.0).abs() < 1e-9);
    }
}
