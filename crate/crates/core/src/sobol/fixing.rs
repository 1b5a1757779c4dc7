//! Error of fixing the parameters outside a subset `U` at nominal values.
//!
//! For a nominal `xbar` of `xi_{U^c}` the relative error is
//! `E = sum_m w_m eps(t_m) / sum_m w_m D(t_m)` with
//! `eps(t_m) = 1/2 E_xi[(f(t_m, xi) - f(t_m, xi_U, xbar))^2]`. Its mean over
//! nominals is the generalized total index of `U^c`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mc::{generalized_mc, McConfig};
use super::Subset;
use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::Process;
use crate::quadrature::TimeRule;

#[derive(Debug, Clone, PartialEq)]
pub struct FixingConfig {
    /// Number of nominal draws `M`.
    pub n_nominal: usize,
    /// Inner samples `N` used for every nominal (shared across nominals).
    pub n_eval: usize,
    /// Pick-freeze sample size of the reference total index.
    pub n_ref: usize,
    pub seed: u64,
    /// Markov-bound levels.
    pub eps_levels: Vec<f64>,
}

impl Default for FixingConfig {
    fn default() -> Self {
        Self { n_nominal: 200, n_eval: 2000, n_ref: 100_000, seed: 0, eps_levels: vec![0.1, 0.25, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovCheck {
    pub eps: f64,
    /// Fraction of nominals with `E >= S_tot^{U^c} / eps`.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixingReport {
    pub kept: Subset,
    pub fixed: Subset,
    /// Values of the fixed coordinates, one row per nominal.
    pub nominals: Vec<Vec<f64>>,
    pub errors: Vec<f64>,
    pub mean_error: f64,
    pub reference_total: f64,
    pub reference_se: Option<f64>,
    pub markov: Vec<MarkovCheck>,
}

fn draw_rows(rng: &mut ChaCha8Rng, n: usize, np: usize) -> Vec<f64> {
    (0..n * np).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn evaluate<P: Process + ?Sized, B: Batch>(model: &P, points: &[f64], rule: &TimeRule, batch: &B) -> Result<Matrix> {
    let np = model.n_params();
    let nt = rule.len();
    let n = points.len() / np;
    let rows = batch.map(n, |k| {
        let xi = &points[k * np..(k + 1) * np];
        let mut out = vec![0.0; nt];
        model.trajectory(xi, rule.nodes(), &mut out).map(|_| out).map_err(|e| Error::Sample {
            index: k,
            xi: xi.to_vec(),
            source: alloc::boxed::Box::new(e),
        })
    });
    let mut data = Vec::with_capacity(n * nt);
    for r in rows {
        data.extend_from_slice(&r?);
    }
    Matrix::from_row_major(n, nt, data)
}

/// Relative fixing errors for `M` nominal values of `xi_{U^c}`.
pub fn fixing_error<P, B>(
    model: &P,
    kept: &Subset,
    rule: &TimeRule,
    cfg: &FixingConfig,
    batch: &B,
) -> Result<FixingReport>
where
    P: Process + ?Sized,
    B: Batch,
{
    let np = model.n_params();
    if kept.np() != np || kept.is_empty() {
        return Err(Error::invalid("kept subset must be a nonempty subset of the parameters"));
    }
    if cfg.n_nominal == 0 || cfg.n_eval < 2 {
        return Err(Error::invalid("need at least one nominal and two inner samples"));
    }
    let fixed = kept.complement();
    let fixed_idx = fixed.members();
    let nt = rule.len();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let eval_points = draw_rows(&mut rng, cfg.n_eval, np);
    rng.set_stream(2);
    let nominals: Vec<Vec<f64>> =
        (0..cfg.n_nominal).map(|_| fixed_idx.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();

    let f = evaluate(model, &eval_points, rule, batch)?;
    let mut mean = vec![0.0; nt];
    for k in 0..cfg.n_eval {
        crate::linalg::axpy(1.0 / cfg.n_eval as f64, f.row(k), &mut mean);
    }
    let mut d = vec![0.0; nt];
    for k in 0..cfg.n_eval {
        for m in 0..nt {
            let e = f[(k, m)] - mean[m];
            d[m] += e * e / (cfg.n_eval as f64 - 1.0);
        }
    }
    let denom = rule.integrate(&d);
    if !(denom > 0.0) {
        return Err(Error::degenerate("time-integrated variance is zero"));
    }

    let errors = batch.map(cfg.n_nominal, |j| -> Result<f64> {
        let mut eps = vec![0.0; nt];
        let mut xi = vec![0.0; np];
        let mut fbar = vec![0.0; nt];
        for k in 0..cfg.n_eval {
            xi.copy_from_slice(&eval_points[k * np..(k + 1) * np]);
            for (&i, &v) in fixed_idx.iter().zip(&nominals[j]) {
                xi[i] = v;
            }
            model.trajectory(&xi, rule.nodes(), &mut fbar).map_err(|e| Error::Sample {
                index: k,
                xi: xi.clone(),
                source: alloc::boxed::Box::new(e),
            })?;
            for m in 0..nt {
                let e = f[(k, m)] - fbar[m];
                eps[m] += 0.5 * e * e;
            }
        }
        Ok(rule.integrate(&eps) / cfg.n_eval as f64 / denom)
    });
    let errors: Vec<f64> = errors.into_iter().collect::<Result<_>>()?;
    let mean_error = errors.iter().sum::<f64>() / errors.len() as f64;

    let (reference_total, reference_se) = if fixed.is_empty() {
        (0.0, None)
    } else {
        let mc = McConfig { n: cfg.n_ref, seed: cfg.seed.wrapping_add(1), ..McConfig::default() };
        let out = generalized_mc(model, &[fixed], rule, &mc, batch)?;
        (out.report.entries[0].total, out.report.entries[0].total_se)
    };

    let markov = cfg
        .eps_levels
        .iter()
        .map(|&eps| {
            let threshold = reference_total / eps;
            let hits = errors.iter().filter(|&&e| e >= threshold && e > 0.0).count();
            MarkovCheck { eps, rate: hits as f64 / errors.len() as f64 }
        })
        .collect();

    Ok(FixingReport { kept: *kept, fixed, nominals, errors, mean_error, reference_total, reference_se, markov })
}

/// Percentile envelopes of the full and the reduced model on a shared sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Bands {
    pub times: Vec<f64>,
    pub percentiles: (f64, f64),
    pub full_lo: Vec<f64>,
    pub full_hi: Vec<f64>,
    pub reduced_lo: Vec<f64>,
    pub reduced_hi: Vec<f64>,
}

/// `percentile` in `[0, 100]` with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (p / 100.0) * (n - 1) as f64;
    let lo = crate::math::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bands of `f(t, xi)` and of `f(t, xi_U, xbar_{U^c})`, where `nominal` is a full
/// parameter vector whose entries outside `kept` are used.
#[allow(clippy::too_many_arguments)]
pub fn reduced_model_bands<P, B>(
    model: &P,
    kept: &Subset,
    nominal: &[f64],
    n: usize,
    rule: &TimeRule,
    percentiles: (f64, f64),
    seed: u64,
    batch: &B,
) -> Result<Bands>
where
    P: Process + ?Sized,
    B: Batch,
{
    let np = model.n_params();
    if kept.np() != np || nominal.len() != np {
        return Err(Error::mismatch("subset or nominal vector has the wrong dimension"));
    }
    if n == 0 || !(0.0..=100.0).contains(&percentiles.0) || !(percentiles.0 <= percentiles.1 && percentiles.1 <= 100.0)
    {
        return Err(Error::invalid("need samples and percentiles 0 <= lo <= hi <= 100"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let points = draw_rows(&mut rng, n, np);
    let mut reduced_points = points.clone();
    for k in 0..n {
        for i in 0..np {
            if !kept.contains(i) {
                reduced_points[k * np + i] = nominal[i];
            }
        }
    }
    let full = evaluate(model, &points, rule, batch)?;
    let reduced = evaluate(model, &reduced_points, rule, batch)?;
    let nt = rule.len();
    let band = |m: &Matrix| -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![0.0; nt];
        let mut hi = vec![0.0; nt];
        let mut col = vec![0.0; n];
        for t in 0..nt {
            for k in 0..n {
                col[k] = m[(k, t)];
            }
            col.sort_by(f64::total_cmp);
            lo[t] = percentile(&col, percentiles.0);
            hi[t] = percentile(&col, percentiles.1);
        }
        (lo, hi)
    };
    let (full_lo, full_hi) = band(&full);
    let (reduced_lo, reduced_hi) = band(&reduced);
    Ok(Bands { times: rule.nodes().to_vec(), percentiles, full_lo, full_hi, reduced_lo, reduced_hi })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandCoverage {
    /// Per node: reduced band inside the dilated full band.
    pub covered: Vec<bool>,
    pub first_violation: Option<f64>,
}

impl BandCoverage {
    pub fn all_covered(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Check the reduced band against the full band widened by `dilation` times its width on each side.
pub fn band_coverage(bands: &Bands, dilation: f64) -> BandCoverage {
    let covered: Vec<bool> = (0..bands.times.len())
        .map(|t| {
            let (lo, hi) = (bands.full_lo[t], bands.full_hi[t]);
            let slack = dilation * (hi - lo) + 1e-12 * lo.abs().max(hi.abs()).max(1.0);
            bands.reduced_lo[t] >= lo - slack && bands.reduced_hi[t] <= hi + slack
        })
        .collect();
    let first_violation = covered.iter().position(|c| !c).map(|i| bands.times[i]);
    BandCoverage { covered, first_violation }
}

/// Two-sided check: both reduced percentiles lie within `tol` times the full
/// band width of the full percentiles. Unlike [`band_coverage`] this also fails
/// when the reduced band is too narrow.
pub fn band_agreement(bands: &Bands, tol: f64) -> BandCoverage {
    let covered: Vec<bool> = (0..bands.times.len())
        .map(|t| {
            let (lo, hi) = (bands.full_lo[t], bands.full_hi[t]);
            let slack = tol * (hi - lo) + 1e-12 * lo.abs().max(hi.abs()).max(1.0);
            (bands.reduced_lo[t] - lo).abs() <= slack && (bands.reduced_hi[t] - hi).abs() <= slack
        })
        .collect();
    let first_violation = covered.iter().position(|c| !c).map(|i| bands.times[i]);
    BandCoverage { covered, first_violation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FnProcess;
    use crate::Sequential;

    #[test]
    fn fixing_nothing_has_zero_error() {
        let model = FnProcess::new(2, |t, xi: &[f64]| xi[0] * t + xi[1]);
        let rule = TimeRule::uniform(1.0, 0.25).unwrap();
        let cfg = FixingConfig { n_nominal: 5, n_eval: 50, ..FixingConfig::default() };
        let r = fixing_error(&model, &Subset::full(2), &rule, &cfg, &Sequential).unwrap();
        assert!(r.errors.iter().all(|&e| e == 0.0));
        assert_eq!(r.reference_total, 0.0);
    }

    #[test]
    fn additive_model_mean_error_matches_total() {
        // f = xi_1 + 2 xi_2: fixing xi_2 has expected relative error 4/5.
        let model = FnProcess::new(2, |_, xi: &[f64]| xi[0] + 2.0 * xi[1]);
        let rule = TimeRule::uniform(1.0, 0.5).unwrap();
        let cfg = FixingConfig { n_nominal: 400, n_eval: 400, n_ref: 20_000, ..FixingConfig::default() };
        let r = fixing_error(&model, &Subset::singleton(2, 0), &rule, &cfg, &Sequential).unwrap();
        assert!((r.mean_error - 0.8).abs() < 0.08, "{}", r.mean_error);
        assert!((r.reference_total - 0.8).abs() < 0.03);
        for m in &r.markov {
            assert!(m.rate <= m.eps + 0.03);
        }
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert_eq!(percentile(&v, 100.0), 5.0);
        assert!((percentile(&v, 10.0) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn fixing_nothing_gives_identical_bands() {
        let model = FnProcess::new(2, |t, xi: &[f64]| xi[0] * t + xi[1]);
        let rule = TimeRule::uniform(1.0, 0.25).unwrap();
        let b = reduced_model_bands(&model, &Subset::full(2), &[0.0, 0.0], 300, &rule, (2.0, 98.0), 1, &Sequential)
            .unwrap();
        assert_eq!(b.full_lo, b.reduced_lo);
        assert_eq!(b.full_hi, b.reduced_hi);
        assert!(band_coverage(&b, 0.0).all_covered());
        let b =
            reduced_model_bands(&model, &Subset::singleton(2, 1), &[0.0, 0.0], 300, &rule, (2.0, 98.0), 1, &Sequential)
                .unwrap();
        let cov = band_coverage(&b, 0.1);
        assert!(cov.covered[0] && cov.all_covered());
        // Keeping only the intercept is exact at t = 0 and too narrow by t = 1.
        let agree = band_agreement(&b, 0.1);
        assert!(agree.covered[0] && !agree.covered[4]);
    }
}
