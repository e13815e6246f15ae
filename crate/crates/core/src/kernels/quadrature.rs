//! Gauss–Hermite and Gauss–Legendre rules, and multinomial-probit class probabilities.

use super::normal::{std_normal_cdf, std_normal_pdf};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nodes and weights of an n-point quadrature rule.
#[derive(Clone, Debug)]
pub struct Rule<T: Real> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

/// Physicists' Gauss–Hermite rule: ∫ e^{−x²} f(x) dx ≈ Σ wᵢ f(xᵢ).
///
/// Nodes are found by Newton iteration on the orthonormal Hermite recurrence
/// in f64 and then converted.
pub fn gauss_hermite<T: Real>(n: usize) -> Result<Rule<T>> {
    if n == 0 {
        return Err(Error::invalid("quadrature needs at least one node"));
    }
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let mut pairs: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Rule {
        nodes: pairs.iter().map(|p| T::of(p.0)).collect(),
        weights: pairs.iter().map(|p| T::of(p.1)).collect(),
    })
}

/// Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre<T: Real>(n: usize) -> Result<Rule<T>> {
    if n == 0 {
        return Err(Error::invalid("quadrature needs at least one node"));
    }
    let nf = n as f64;
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    Ok(Rule { nodes: x.into_iter().map(T::of).collect(), weights: w.into_iter().map(T::of).collect() })
}

impl<T: Real> Rule<T> {
    /// E[f(X)] for X ~ N(0, var) with a Gauss–Hermite rule.
    pub fn normal_expectation(&self, var: T, mut f: impl FnMut(T) -> T) -> T {
        let scale = (T::of(2.0) * var).sqrt();
        let norm = T::of(std::f64::consts::PI.sqrt());
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * f(scale * *x);
        }
        acc / norm
    }

    /// ∫ₐᵇ f(x) dx with a Gauss–Legendre rule.
    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let half = (b - a) * T::of(0.5);
        let mid = (b + a) * T::of(0.5);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * f(mid + half * *x);
        }
        acc * half
    }
}

/// Gauss–Legendre nodes per half-interval used for class probabilities: the
/// relative error is below 1e-11 for utility means in [−4, 4].
pub const CLASS_PROB_NODES: usize = 24;

/// Class probabilities of the multinomial probit with independent unit-variance
/// utilities ξ_k ~ N(μ_k, 1), k < K: class k wins when ξ_k is the largest and
/// positive, class K when every utility is negative.
pub fn probit_class_probabilities(means: &[f64], legendre: &Rule<f64>) -> Vec<f64> {
    let k1 = means.len();
    let mut probs = Vec::with_capacity(k1 + 1);
    if k1 == 1 {
        let p = std_normal_cdf(means[0]);
        return vec![p, 1.0 - p];
    }
    for k in 0..k1 {
        let lo = (means[k] - 9.0).max(0.0);
        let hi = (means[k] + 9.0).max(0.0);
        let p = if hi <= lo {
            0.0
        } else {
            let mid = 0.5 * (lo + hi).max(lo);
            let f = |x: f64| {
                let mut v = std_normal_pdf(x - means[k]);
                for (l, m) in means.iter().enumerate() {
                    if l != k {
                        v *= std_normal_cdf(x - m);
                    }
                }
                v
            };
            let anchor = means[k].clamp(lo, hi);
            let split = if anchor > lo && anchor < hi { anchor } else { mid };
            legendre.integrate(lo, split, f) + legendre.integrate(split, hi, f)
        };
        probs.push(p.max(0.0));
    }
    probs.push(means.iter().map(|m| std_normal_cdf(-m)).product());
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}
