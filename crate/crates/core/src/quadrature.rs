//! Quadrature rules on the parameter cube `[-1, 1]^d` (normalized uniform
//! measure, so weights sum to one) and on the time interval `[0, T]`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;

/// Default upper bound on the number of nodes a tensor rule may produce.
pub const DEFAULT_NODE_CAP: usize = 10_000_000;

/// One-dimensional rule on `[-1, 1]` for the measure `dx / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule1D {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss-Legendre rule with `n` nodes, exact for polynomials of degree `2n - 1`.
///
/// Nodes are found by Newton iteration on the Legendre three-term recurrence.
pub fn gauss_legendre(n: usize) -> Result<Rule1D> {
    if n == 0 {
        return Err(Error::invalid("gauss_legendre needs at least one node"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = math::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if math::abs(dx) <= 1e-16 {
                break;
            }
        }
        // Refresh the derivative at the converged node.
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        // x is positive here (descending from the right end); mirror it.
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(Rule1D { nodes, weights })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Clenshaw-Curtis rule with `m` nodes (`m = 1` or odd `m >= 3`), ascending.
pub fn clenshaw_curtis(m: usize) -> Result<Rule1D> {
    if m == 0 {
        return Err(Error::invalid("clenshaw_curtis needs at least one node"));
    }
    if m == 1 {
        return Ok(Rule1D { nodes: vec![0.0], weights: vec![1.0] });
    }
    let n = m - 1;
    let nf = n as f64;
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for j in 0..=n {
        let x = -math::cos(PI * j as f64 / nf);
        nodes.push(if 2 * j == n { 0.0 } else { x });
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        let mut s = 0.0;
        for k in 1..=n / 2 {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            let kf = k as f64;
            s += b / (4.0 * kf * kf - 1.0) * math::cos(2.0 * kf * j as f64 * PI / nf);
        }
        // Standard weights integrate against dx (total 2); halve for the normalized measure.
        weights.push(0.5 * c / nf * (1.0 - s));
    }
    Ok(Rule1D { nodes, weights })
}

/// Rule on `[-1, 1]^dim` for the normalized uniform measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamRule {
    dim: usize,
    /// Node coordinates, `dim` values per node.
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl ParamRule {
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() != dim * weights.len() {
            return Err(Error::mismatch("parameter rule points do not match dim x weights"));
        }
        if points.iter().any(|x| !(math::abs(*x) <= 1.0)) {
            return Err(Error::invalid("parameter rule node outside [-1, 1]"));
        }
        Ok(Self { dim, points, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|j| self.weights[j] * f(self.node(j))).sum()
    }
}

/// Full tensor product of a 1D rule, capped at [`DEFAULT_NODE_CAP`] nodes.
pub fn tensor_rule(rule: &Rule1D, dim: usize) -> Result<ParamRule> {
    tensor_rule_capped(rule, dim, DEFAULT_NODE_CAP)
}

pub fn tensor_rule_capped(rule: &Rule1D, dim: usize, cap: usize) -> Result<ParamRule> {
    if dim == 0 {
        return Err(Error::invalid("tensor rule needs dim >= 1"));
    }
    let n = rule.len();
    let count = (n as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::CapExceeded { what: "tensor rule", requested: count, cap });
    }
    let count = count as usize;
    let mut points = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    let mut idx = vec![0usize; dim];
    for _ in 0..count {
        let mut w = 1.0;
        for &i in &idx {
            points.push(rule.nodes[i]);
            w *= rule.weights[i];
        }
        weights.push(w);
        // Last coordinate varies fastest.
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
    ParamRule::new(dim, points, weights)
}

/// Smolyak sparse grid built from nested Clenshaw-Curtis rules with
/// `2^l + 1` nodes at 1D level `l >= 1` (one node at level 0).
///
/// Exact for total-degree polynomials up to `2 * level + 1`. Weights may be
/// negative. Nodes shared between tensor components are merged.
pub fn smolyak_rule(level: usize, dim: usize) -> Result<ParamRule> {
    if dim == 0 {
        return Err(Error::invalid("smolyak rule needs dim >= 1"));
    }
    if level > 20 {
        return Err(Error::invalid("smolyak level above 20 is not supported"));
    }
    let rules: Vec<Rule1D> =
        (0..=level).map(|l| clenshaw_curtis(if l == 0 { 1 } else { (1 << l) + 1 })).collect::<Result<_>>()?;

    let lowest = (level + 1).saturating_sub(dim);
    let mut merged: BTreeMap<Vec<i64>, (Vec<f64>, f64)> = BTreeMap::new();
    let mut levels = vec![0usize; dim];
    loop {
        let total: usize = levels.iter().sum();
        if total >= lowest && total <= level {
            let gap = level - total;
            let coeff = binomial(dim - 1, gap) as f64 * if gap % 2 == 0 { 1.0 } else { -1.0 };
            if coeff != 0.0 {
                add_tensor_component(&rules, &levels, coeff, &mut merged);
            }
        }
        if !next_bounded_index(&mut levels, level) {
            break;
        }
    }

    let mut points = Vec::with_capacity(merged.len() * dim);
    let mut weights = Vec::with_capacity(merged.len());
    for (_, (x, w)) in merged {
        if math::abs(w) > 1e-15 {
            points.extend_from_slice(&x);
            weights.push(w);
        }
    }
    ParamRule::new(dim, points, weights)
}

fn add_tensor_component(
    rules: &[Rule1D],
    levels: &[usize],
    coeff: f64,
    merged: &mut BTreeMap<Vec<i64>, (Vec<f64>, f64)>,
) {
    let dim = levels.len();
    let mut idx = vec![0usize; dim];
    loop {
        let mut w = coeff;
        let mut x = Vec::with_capacity(dim);
        let mut key = Vec::with_capacity(dim);
        for d in 0..dim {
            let r = &rules[levels[d]];
            let xd = r.nodes[idx[d]];
            w *= r.weights[idx[d]];
            x.push(xd);
            key.push(math::round(xd * (1u64 << 40) as f64) as i64);
        }
        merged.entry(key).or_insert((x, 0.0)).1 += w;
        let mut d = dim;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < rules[levels[d]].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Advance `levels` to the next multi-index with `sum <= bound`; false when exhausted.
fn next_bounded_index(levels: &mut [usize], bound: usize) -> bool {
    for d in (0..levels.len()).rev() {
        levels[d] += 1;
        if levels.iter().sum::<usize>() <= bound {
            return true;
        }
        levels[d] = 0;
    }
    false
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeRuleKind {
    Trapezoid,
    Custom,
}

/// Quadrature on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: TimeRuleKind,
}

impl TimeRule {
    /// Composite trapezoid weights on an increasing grid of at least two nodes.
    pub fn trapezoid(grid: &[f64]) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::invalid("trapezoid rule needs at least two nodes"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("time grid must be strictly increasing"));
        }
        let n = grid.len();
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let h = 0.5 * (grid[i + 1] - grid[i]);
            weights[i] += h;
            weights[i + 1] += h;
        }
        Ok(Self { nodes: grid.to_vec(), weights, kind: TimeRuleKind::Trapezoid })
    }

    /// Trapezoid rule on `t_i = i * dt`, `i = 0..=T/dt`. `T` must be a multiple of `dt`.
    pub fn uniform(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0 && dt > 0.0) {
            return Err(Error::invalid("horizon and dt must be positive"));
        }
        let steps = math::round(horizon / dt);
        if math::abs(steps * dt - horizon) > 1e-9 * horizon {
            return Err(Error::invalid("horizon must be an integer multiple of dt"));
        }
        let steps = steps as usize;
        let mut grid: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
        grid[steps] = horizon;
        Self::trapezoid(&grid)
    }

    /// Arbitrary nodes and weights; the weights must sum to the interval length.
    pub fn custom(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::mismatch("time rule nodes and weights differ in length"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes[0] < 0.0 {
            return Err(Error::invalid("time nodes must be increasing and nonnegative"));
        }
        Ok(Self { nodes, weights, kind: TimeRuleKind::Custom })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self) -> TimeRuleKind {
        self.kind
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap_or(&0.0)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Index of the node equal to `t` (within `1e-9 * T`).
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * self.horizon().max(1.0);
        let (mut best, mut dist) = (0, f64::INFINITY);
        for (i, &s) in self.nodes.iter().enumerate() {
            let d = math::abs(s - t);
            if d < dist {
                best = i;
                dist = d;
            }
        }
        if dist <= tol {
            Ok(best)
        } else {
            Err(Error::OffGrid { t, nearest: self.nodes[best] })
        }
    }

    /// The rule on `[0, tau]`, where `tau` must be a grid node.
    ///
    /// Trapezoid rules are rebuilt on the prefix grid. Custom rules can only be
    /// restricted to their full horizon.
    pub fn restrict(&self, tau: f64) -> Result<TimeRule> {
        let idx = self.node_index(tau)?;
        if idx + 1 == self.len() {
            return Ok(self.clone());
        }
        match self.kind {
            TimeRuleKind::Trapezoid => TimeRule::trapezoid(&self.nodes[..=idx]),
            TimeRuleKind::Custom => Err(Error::invalid("custom time rules cannot be restricted to a shorter window")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_moment(d: usize) -> f64 {
        // E[x^d] for x ~ U(-1, 1).
        if d % 2 == 1 {
            0.0
        } else {
            1.0 / (d as f64 + 1.0)
        }
    }

    #[test]
    fn one_and_two_point_gauss_rules() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert_eq!(r.weights(), &[1.0]);
        let r = gauss_legendre(2).unwrap();
        let s = 1.0 / 3.0f64.sqrt();
        assert!((r.nodes()[0] + s).abs() < 1e-15 && (r.nodes()[1] - s).abs() < 1e-15);
        assert!((r.weights()[0] - 0.5).abs() < 1e-15 && (r.weights()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn three_point_rule_fourth_moment() {
        let r = gauss_legendre(3).unwrap();
        assert!((r.integrate(|x| x.powi(4)) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn gauss_exactness_up_to_ten_nodes() {
        for n in 1..=10 {
            let r = gauss_legendre(n).unwrap();
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for d in 0..2 * n {
                let err = (r.integrate(|x| x.powi(d as i32)) - monomial_moment(d)).abs();
                assert!(err <= 1e-13, "n={n} d={d} err={err}");
            }
        }
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(gauss_legendre(0).is_err());
    }

    #[test]
    fn tensor_rule_shapes() {
        let r = gauss_legendre(5).unwrap();
        let t1 = tensor_rule(&r, 1).unwrap();
        assert_eq!(t1.points(), r.nodes());
        assert_eq!(t1.weights(), r.weights());
        let t3 = tensor_rule(&r, 3).unwrap();
        assert_eq!(t3.len(), 125);
        assert!((t3.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(matches!(tensor_rule_capped(&r, 12, 1000), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn clenshaw_curtis_exactness() {
        for m in [1usize, 3, 5, 9, 17] {
            let r = clenshaw_curtis(m).unwrap();
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let exact = if m == 1 { 1 } else { m };
            for d in 0..=exact {
                let err = (r.integrate(|x| x.powi(d as i32)) - monomial_moment(d)).abs();
                assert!(err < 1e-14, "m={m} d={d}");
            }
        }
    }

    #[test]
    fn smolyak_level_zero_is_origin() {
        for dim in 1..5 {
            let r = smolyak_rule(0, dim).unwrap();
            assert_eq!(r.len(), 1);
            assert!(r.node(0).iter().all(|&x| x == 0.0));
            assert!((r.weights()[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn smolyak_level_two_dim_three_total_degree_three() {
        let r = smolyak_rule(2, 3).unwrap();
        for a in 0..=3usize {
            for b in 0..=3 - a {
                for c in 0..=3 - a - b {
                    let q = r.integrate(|x| x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32));
                    let exact = monomial_moment(a) * monomial_moment(b) * monomial_moment(c);
                    assert!((q - exact).abs() < 1e-12, "({a},{b},{c})");
                }
            }
        }
    }

    #[test]
    fn smolyak_is_sparse() {
        let r = smolyak_rule(2, 8).unwrap();
        assert!((r.len() as u128) < 17u128.pow(8));
        let full = 5usize.pow(3);
        assert!(smolyak_rule(2, 3).unwrap().len() < full);
        assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_examples() {
        let r = TimeRule::trapezoid(&[0.0, 1.0]).unwrap();
        assert_eq!(r.weights(), &[0.5, 0.5]);
        let r = TimeRule::trapezoid(&[0.0, 0.5, 3.0, 7.0, 10.0]).unwrap();
        assert!((r.integrate(&[1.0; 5]) - 10.0).abs() < 1e-12);
        let r = TimeRule::trapezoid(&[0.0, 1.0, 2.0]).unwrap();
        assert!((r.integrate(&[0.0, 1.0, 2.0]) - 2.0).abs() < 1e-15);
        assert!(TimeRule::trapezoid(&[0.0, 2.0, 1.0]).is_err());
        assert!(TimeRule::trapezoid(&[0.0]).is_err());
    }

    #[test]
    fn uniform_rule_and_restriction() {
        let r = TimeRule::uniform(10.0, 0.5).unwrap();
        assert_eq!(r.len(), 21);
        assert!((r.weights().iter().sum::<f64>() - 10.0).abs() < 1e-10);
        let sub = r.restrict(5.0).unwrap();
        assert_eq!(sub.len(), 11);
        assert!((sub.weights().iter().sum::<f64>() - 5.0).abs() < 1e-12);
        assert_eq!(r.restrict(10.0).unwrap(), r);
        assert!(matches!(r.restrict(5.2), Err(Error::OffGrid { .. })));
    }
}
