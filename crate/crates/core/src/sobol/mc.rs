//! Monte Carlo pick-freeze estimation.
//!
//! With independent input matrices `A`, `B` and `A_B^U` (rows of `A` with the
//! `U` columns taken from `B`):
//!
//! * first order: `D^U ~ 1/N sum f(B) (f(A_B^U) - f(A))`,
//! * total: `D_tot^U ~ 1/(2N) sum (f(A) - f(A_B^U))^2`,
//! * `D` is the pooled sample variance of `f(A)` and `f(B)`.
//!
//! Samples are drawn in fixed-size chunks, each from its own ChaCha8 stream, and
//! chunk statistics are merged in chunk order, so results do not depend on the
//! executor.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_targets, Diagnostics, Method, PointwiseVariances, SobolReport, Subset};
use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math;
use crate::models::Process;
use crate::quadrature::TimeRule;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n: usize,
    pub seed: u64,
    /// Bootstrap replicates for the standard errors; 0 disables them.
    pub bootstrap: usize,
    pub chunk: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n: 10_000, seed: 0, bootstrap: 200, chunk: 1000 }
    }
}

#[derive(Debug, Clone)]
pub struct McOutput {
    pub report: SobolReport,
    pub pointwise: PointwiseVariances,
}

struct Chunk {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    first: Matrix,
    total: Matrix,
    /// Per sample: `[z, x_1, y_1, .., x_J, y_J]`.
    scalars: Vec<f64>,
}

/// Streaming mean / sum of squared deviations.
fn welford_push(count: &mut usize, mean: &mut [f64], m2: &mut [f64], x: &[f64]) {
    *count += 1;
    let n = *count as f64;
    for ((mu, s), &v) in mean.iter_mut().zip(m2.iter_mut()).zip(x) {
        let d = v - *mu;
        *mu += d / n;
        *s += d * (v - *mu);
    }
}

fn chan_merge(na: usize, mean_a: &mut [f64], m2_a: &mut [f64], nb: usize, mean_b: &[f64], m2_b: &[f64]) {
    if nb == 0 {
        return;
    }
    let (fa, fb) = (na as f64, nb as f64);
    let n = fa + fb;
    for m in 0..mean_a.len() {
        let d = mean_b[m] - mean_a[m];
        mean_a[m] += d * fb / n;
        m2_a[m] += m2_b[m] + d * d * fa * fb / n;
    }
}

/// Pick-freeze estimates of the generalized indices of every target.
pub fn generalized_mc<P, B>(
    model: &P,
    targets: &[Subset],
    rule: &TimeRule,
    cfg: &McConfig,
    batch: &B,
) -> Result<McOutput>
where
    P: Process + ?Sized,
    B: Batch,
{
    let np = model.n_params();
    check_targets(targets, np)?;
    if cfg.n < 100 {
        return Err(Error::invalid("Monte Carlo estimation needs at least 100 samples"));
    }
    if cfg.chunk == 0 {
        return Err(Error::invalid("chunk size must be positive"));
    }
    let times = rule.nodes();
    let nt = times.len();
    let w = rule.weights();
    let nj = targets.len();

    let mut shift = vec![0.0; nt];
    model.trajectory(&vec![0.0; np], times, &mut shift)?;

    let n_chunks = cfg.n.div_ceil(cfg.chunk);
    let chunks = batch.map(n_chunks, |c| -> Result<Chunk> {
        let start = c * cfg.chunk;
        let len = cfg.chunk.min(cfg.n - start);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(c as u64);
        let mut ch = Chunk {
            count: 0,
            mean: vec![0.0; nt],
            m2: vec![0.0; nt],
            first: Matrix::zeros(nj, nt),
            total: Matrix::zeros(nj, nt),
            scalars: Vec::with_capacity(len * (1 + 2 * nj)),
        };
        let mut a = vec![0.0; np];
        let mut b = vec![0.0; np];
        let mut ab = vec![0.0; np];
        let (mut fa, mut fb, mut fab) = (vec![0.0; nt], vec![0.0; nt], vec![0.0; nt]);
        let eval = |xi: &[f64], out: &mut [f64], k: usize| -> Result<()> {
            model.trajectory(xi, times, out).map_err(|e| Error::Sample {
                index: k,
                xi: xi.to_vec(),
                source: alloc::boxed::Box::new(e),
            })?;
            for (o, s) in out.iter_mut().zip(&shift) {
                *o -= s;
            }
            Ok(())
        };
        for r in 0..len {
            let k = start + r;
            a.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..=1.0));
            b.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..=1.0));
            eval(&a, &mut fa, k)?;
            eval(&b, &mut fb, k)?;
            welford_push(&mut ch.count, &mut ch.mean, &mut ch.m2, &fa);
            welford_push(&mut ch.count, &mut ch.mean, &mut ch.m2, &fb);
            let z: f64 = (0..nt).map(|m| w[m] * 0.5 * (fa[m] - fb[m]) * (fa[m] - fb[m])).sum();
            ch.scalars.push(z);
            for (j, u) in targets.iter().enumerate() {
                for i in 0..np {
                    ab[i] = if u.contains(i) { b[i] } else { a[i] };
                }
                eval(&ab, &mut fab, k)?;
                let (mut x, mut y) = (0.0, 0.0);
                let first = ch.first.row_mut(j);
                for m in 0..nt {
                    let p = fb[m] * (fab[m] - fa[m]);
                    first[m] += p;
                    x += w[m] * p;
                }
                let total = ch.total.row_mut(j);
                for m in 0..nt {
                    let q = 0.5 * (fa[m] - fab[m]) * (fa[m] - fab[m]);
                    total[m] += q;
                    y += w[m] * q;
                }
                ch.scalars.push(x);
                ch.scalars.push(y);
            }
        }
        Ok(ch)
    });

    let mut count = 0;
    let mut mean = vec![0.0; nt];
    let mut m2 = vec![0.0; nt];
    let mut first = Matrix::zeros(nj, nt);
    let mut total = Matrix::zeros(nj, nt);
    let mut scalars = Vec::with_capacity(cfg.n * (1 + 2 * nj));
    for ch in chunks {
        let ch = ch?;
        chan_merge(count, &mut mean, &mut m2, ch.count, &ch.mean, &ch.m2);
        count += ch.count;
        for j in 0..nj {
            for m in 0..nt {
                first[(j, m)] += ch.first[(j, m)];
                total[(j, m)] += ch.total[(j, m)];
            }
        }
        scalars.extend_from_slice(&ch.scalars);
    }
    let n = cfg.n as f64;
    let variance: Vec<f64> = m2.iter().map(|s| s / (count as f64 - 1.0)).collect();
    let first = Matrix::from_fn(nj, nt, |j, m| first[(j, m)] / n);
    let total = Matrix::from_fn(nj, nt, |j, m| total[(j, m)] / n);
    let pointwise = PointwiseVariances::new(targets.to_vec(), variance, first, total)?;
    let mut entries = pointwise.generalized(rule)?;

    if cfg.bootstrap >= 2 {
        let stride = 1 + 2 * nj;
        let reps = batch.map(cfg.bootstrap, |r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
            rng.set_stream(r as u64);
            let mut sums = vec![0.0; stride];
            for _ in 0..cfg.n {
                let k = rng.gen_range(0..cfg.n);
                for (s, v) in sums.iter_mut().zip(&scalars[k * stride..(k + 1) * stride]) {
                    *s += v;
                }
            }
            sums
        });
        for (j, e) in entries.iter_mut().enumerate() {
            let est = |col: usize| -> f64 {
                let vals: Vec<f64> = reps.iter().map(|s| s[col] / s[0]).collect();
                let mu = vals.iter().sum::<f64>() / vals.len() as f64;
                math::sqrt(vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (vals.len() - 1) as f64)
            };
            e.first_se = Some(est(1 + 2 * j));
            e.total_se = Some(est(2 + 2 * j));
        }
    }

    let denominator = rule.integrate(&pointwise.variance);
    let report = SobolReport::new(
        Method::Mc,
        rule.horizon(),
        entries,
        Diagnostics { n_samples: cfg.n, seed: Some(cfg.seed), denominator, ..Diagnostics::default() },
    );
    Ok(McOutput { report, pointwise })
}
