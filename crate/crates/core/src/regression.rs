//! Daily spread/volatility regression
//! σ̂ = p1·η̂α√M + p2·S√M + p3, fitted by ordinary least squares.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::estimators::DailyRecord;

const N_PARAMS: usize = 3;
/// Relative size below which a diagonal entry of R marks a rank-deficient design.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficient {
    pub value: f64,
    pub se: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Coefficient {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionFit {
    pub p1: Coefficient,
    pub p2: Coefficient,
    /// Intercept, currency.
    pub p3: Coefficient,
    pub r2: f64,
    pub n_days: usize,
}

/// Plain OLS of `y` on the columns `(x1, x2, 1)` with 95% t-intervals.
pub fn ols3(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<RegressionFit> {
    let n = y.len();
    if x1.len() != n || x2.len() != n {
        return Err(Error::InvalidParameter("regressor lengths differ".into()));
    }
    if n < N_PARAMS + 1 {
        return Err(Error::InsufficientData(format!(
            "need at least {} rows, got {n}",
            N_PARAMS + 1
        )));
    }
    if x1.iter().chain(x2).chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite regression input".into()));
    }

    // Columns are normalised before factorisation so that the rank test and
    // the triangular solve see comparable magnitudes.
    let mut design = DMatrix::from_fn(n, N_PARAMS, |i, j| match j {
        0 => x1[i],
        1 => x2[i],
        _ => 1.0,
    });
    let mut scale = [0.0; N_PARAMS];
    for (j, s) in scale.iter_mut().enumerate() {
        *s = design.column(j).norm();
        if *s == 0.0 {
            return Err(Error::Collinear(format!("regressor {} is identically zero", j + 1)));
        }
        design.column_mut(j).scale_mut(1.0 / *s);
    }
    let yv = DVector::from_column_slice(y);

    let qr = design.clone().qr();
    let r = qr.r();
    for j in 0..N_PARAMS {
        if r[(j, j)].abs() < RANK_TOL {
            return Err(Error::Collinear(format!(
                "design matrix is rank deficient (column {})",
                j + 1
            )));
        }
    }
    let qty = qr.q().transpose() * &yv;
    let beta_scaled = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Collinear("singular triangular factor".into()))?;

    let fitted = &design * &beta_scaled;
    let rss: f64 = (&yv - &fitted).iter().map(|e| e * e).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };

    let dof = (n - N_PARAMS) as f64;
    let s2 = rss / dof;
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| Error::Collinear("singular triangular factor".into()))?;
    let cov_unit = &r_inv * r_inv.transpose();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .inverse_cdf(0.975);

    let coef = |j: usize| {
        let value = beta_scaled[j] / scale[j];
        let se = (s2 * cov_unit[(j, j)]).sqrt() / scale[j];
        Coefficient {
            value,
            se,
            lo: value - t * se,
            hi: value + t * se,
        }
    };
    Ok(RegressionFit {
        p1: coef(0),
        p2: coef(1),
        p3: coef(2),
        r2,
        n_days: n,
    })
}

/// Fits σ̂ on (η̂α√M, S√M, 1) over the given records, without filtering.
pub fn fit_spread_vol(records: &[DailyRecord]) -> Result<RegressionFit> {
    let x1: Vec<f64> = records.iter().map(DailyRecord::implicit_term).collect();
    let x2: Vec<f64> = records.iter().map(DailyRecord::spread_term).collect();
    let y: Vec<f64> = records.iter().map(|r| r.sigma_hat).collect();
    ols3(&x1, &x2, &y)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FitOptions {
    /// Fit each (asset, tick value) regime separately instead of pooling.
    pub split_regimes: bool,
    /// Keep days with η̂ above the flag threshold.
    pub include_flagged: bool,
}

#[derive(Debug)]
pub struct GroupFit {
    pub asset_id: String,
    /// Set when regimes are split.
    pub alpha: Option<f64>,
    pub excluded_flagged: usize,
    pub fit: Result<RegressionFit>,
}

impl GroupFit {
    pub fn label(&self) -> String {
        match self.alpha {
            Some(a) => format!("{}@{}", self.asset_id, a),
            None => self.asset_id.clone(),
        }
    }
}

/// Groups records by asset (and optionally tick value) and fits each group.
/// Output is ordered by asset id, then tick value.
pub fn fit_groups(records: &[DailyRecord], opts: FitOptions) -> Vec<GroupFit> {
    let mut groups: BTreeMap<(String, Option<u64>), Vec<&DailyRecord>> = BTreeMap::new();
    for r in records {
        let key = opts.split_regimes.then(|| r.alpha.to_bits());
        groups.entry((r.asset_id.clone(), key)).or_default().push(r);
    }
    groups
        .into_par_iter()
        .map(|((asset_id, alpha_bits), rows)| {
            let total = rows.len();
            let kept: Vec<DailyRecord> = rows
                .into_iter()
                .filter(|r| opts.include_flagged || !r.is_flagged())
                .cloned()
                .collect();
            let excluded_flagged = total - kept.len();
            if excluded_flagged > 0 {
                log::info!("{asset_id}: excluded {excluded_flagged} flagged day(s) from the fit");
            }
            GroupFit {
                fit: fit_spread_vol(&kept),
                asset_id,
                alpha: alpha_bits.map(f64::from_bits),
                excluded_flagged,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Normal-equation solve by Cramer's rule, independent of the QR route.
    fn normal_equations(x1: &[f64], x2: &[f64], y: &[f64]) -> [f64; 3] {
        let cols = [x1.to_vec(), x2.to_vec(), vec![1.0; y.len()]];
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        let mut a = [[0.0; 3]; 3];
        let mut b = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = dot(&cols[i], &cols[j]);
            }
            b[i] = dot(&cols[i], y);
        }
        let det = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det(a);
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let mut m = a;
            for i in 0..3 {
                m[i][k] = b[i];
            }
            *o = det(m) / d;
        }
        out
    }

    fn record(eta: f64, alpha: f64, m: u64, s: f64, sigma: f64) -> DailyRecord {
        DailyRecord {
            date: NaiveDate::from_ymd_opt(2009, 1, 1).unwrap(),
            asset_id: "A".into(),
            eta_hat: eta,
            alpha,
            sigma_hat: sigma,
            m_trades: m,
            avg_spread: s,
            frac_one_tick: 100.0,
        }
    }

    fn planted(rng: &mut ChaCha8Rng, n: usize, noise_sd: f64) -> Vec<DailyRecord> {
        (0..n)
            .map(|_| {
                let eta = rng.random_range(0.05..0.5);
                let m = rng.random_range(1_000..50_000);
                let s = rng.random_range(1.0..1.6);
                let mut r = record(eta, 1.0, m, s, 0.0);
                let clean = r.implicit_term() + 0.1 * r.spread_term();
                r.sigma_hat = clean;
                if noise_sd > 0.0 {
                    r.sigma_hat += Normal::new(0.0, noise_sd * clean).unwrap().sample(rng);
                }
                r
            })
            .collect()
    }

    #[test]
    fn exact_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let recs = planted(&mut rng, 30, 0.0);
        let fit = fit_spread_vol(&recs).unwrap();
        assert!((fit.p1.value - 1.0).abs() < 1e-9);
        assert!((fit.p2.value - 0.1).abs() < 1e-9);
        assert!(fit.p3.value.abs() < 1e-7);
        assert!((fit.r2 - 1.0).abs() < 1e-9);
        assert_eq!(fit.n_days, 30);
    }

    #[test]
    fn matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let recs = planted(&mut rng, 50, 0.05);
        let x1: Vec<f64> = recs.iter().map(|r| r.implicit_term()).collect();
        let x2: Vec<f64> = recs.iter().map(|r| r.spread_term()).collect();
        let y: Vec<f64> = recs.iter().map(|r| r.sigma_hat).collect();
        let fit = ols3(&x1, &x2, &y).unwrap();
        let oracle = normal_equations(&x1, &x2, &y);
        assert!((fit.p1.value - oracle[0]).abs() < 1e-8 * oracle[0].abs().max(1.0));
        assert!((fit.p2.value - oracle[1]).abs() < 1e-8 * oracle[1].abs().max(1.0));
        assert!((fit.p3.value - oracle[2]).abs() < 1e-6 * oracle[2].abs().max(1.0));
    }

    #[test]
    fn interval_width_uses_t_quantile() {
        // n = 13 → 10 degrees of freedom, t(0.975) ≈ 2.228139.
        let x1: Vec<f64> = (0..13).map(|i| i as f64).collect();
        let x2: Vec<f64> = (0..13).map(|i| ((i * 7) % 5) as f64).collect();
        let y: Vec<f64> = (0..13).map(|i| (i as f64).sin() + i as f64).collect();
        let fit = ols3(&x1, &x2, &y).unwrap();
        let half = (fit.p1.hi - fit.p1.lo) / 2.0;
        assert!((half / fit.p1.se - 2.228_138_852).abs() < 1e-6);
        assert!(fit.p1.contains(fit.p1.value));
        assert!((0.0..=1.0).contains(&fit.r2));
    }

    #[test]
    fn too_few_rows() {
        let recs = vec![record(0.2, 1.0, 100, 1.0, 1.0); 3];
        assert!(matches!(fit_spread_vol(&recs), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn collinear_design() {
        // S = 2ηα everywhere: second regressor is a multiple of the first.
        let recs: Vec<_> = (0..10)
            .map(|i| {
                let eta = 0.1 + 0.03 * i as f64;
                record(eta, 1.0, 1000 + 100 * i, 2.0 * eta, i as f64)
            })
            .collect();
        assert!(matches!(fit_spread_vol(&recs), Err(Error::Collinear(_))));
        let zeros = vec![record(0.0, 1.0, 100, 1.0, 1.0); 6];
        assert!(matches!(fit_spread_vol(&zeros), Err(Error::Collinear(_))));
    }

    #[test]
    fn noisy_coverage() {
        let mut covered = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let fit = fit_spread_vol(&planted(&mut rng, 40, 0.01)).unwrap();
            covered += fit.p1.contains(1.0) as usize;
        }
        assert!(covered >= 90, "covered {covered}/100");
    }

    #[test]
    fn groups_pool_and_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut recs = planted(&mut rng, 20, 0.01);
        for r in recs.iter_mut().take(10) {
            r.alpha = 2.0;
        }
        recs[15].eta_hat = 0.7;
        let pooled = fit_groups(&recs, FitOptions::default());
        assert_eq!(pooled.len(), 1);
        assert_eq!(pooled[0].excluded_flagged, 1);
        assert_eq!(pooled[0].fit.as_ref().unwrap().n_days, 19);
        assert_eq!(pooled[0].label(), "A");

        let split = fit_groups(
            &recs,
            FitOptions {
                split_regimes: true,
                include_flagged: true,
            },
        );
        assert_eq!(split.len(), 2);
        assert_eq!(split[0].label(), "A@1");
        assert_eq!(split[1].label(), "A@2");
        assert_eq!(split[0].fit.as_ref().unwrap().n_days, 10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn scale_equivariance(seed in 0u64..10_000, k in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let recs = planted(&mut rng, 25, 0.05);
            let scaled: Vec<_> = recs.iter().map(|r| DailyRecord {
                alpha: r.alpha * k,
                avg_spread: r.avg_spread * k,
                sigma_hat: r.sigma_hat * k,
                ..r.clone()
            }).collect();
            let a = fit_spread_vol(&recs).unwrap();
            let b = fit_spread_vol(&scaled).unwrap();
            prop_assert!((a.p1.value - b.p1.value).abs() < 1e-8 * a.p1.value.abs().max(1.0));
            prop_assert!((a.p2.value - b.p2.value).abs() < 1e-8 * a.p2.value.abs().max(1.0));
            prop_assert!((a.p3.value * k - b.p3.value).abs() < 1e-7 * (a.p3.value * k).abs().max(k));
            prop_assert!((a.r2 - b.r2).abs() < 1e-9);
        }

        #[test]
        fn residuals_orthogonal(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let recs = planted(&mut rng, 30, 0.1);
            let fit = fit_spread_vol(&recs).unwrap();
            let mut dots = [0.0f64; 3];
            let mut norms = [0.0f64; 3];
            for r in &recs {
                let cols = [r.implicit_term(), r.spread_term(), 1.0];
                let e = r.sigma_hat
                    - fit.p1.value * cols[0]
                    - fit.p2.value * cols[1]
                    - fit.p3.value;
                for j in 0..3 {
                    dots[j] += e * cols[j];
                    norms[j] += (r.sigma_hat * cols[j]).abs();
                }
            }
            for j in 0..3 {
                prop_assert!(dots[j].abs() <= 1e-9 * norms[j], "col {} dot {}", j, dots[j]);
            }
        }
    }
}
