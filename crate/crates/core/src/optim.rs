//! Seeded multi-start maximization of power sums over unit balls, and a small
//! derivative-free pattern search.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{dot, Exponent, FiniteSpace};

/// Resources granted to the iterative paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptBudget {
    pub starts: usize,
    pub iterations: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for OptBudget {
    fn default() -> Self {
        Self { starts: 64, iterations: 500, seed: 0, tolerance: 1e-8 }
    }
}

impl OptBudget {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.iterations == 0 {
            return Err(Error::invalid("budget starts and iterations must be positive"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::invalid(format!("budget tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }

    pub(crate) fn rng(&self, salt: &[u64]) -> ChaCha8Rng {
        let mut parts = vec![self.seed];
        parts.extend_from_slice(salt);
        ChaCha8Rng::seed_from_u64(derive_seed(&parts))
    }
}

/// Mixes a list of integers into one seed (splitmix64 finalizer chain).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15_u64;
    for &p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = splitmix(h);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

/// Result of maximizing `Σ_j w_j |<b, v_j>|^p` over a unit ball.
#[derive(Clone, Debug)]
pub(crate) struct PowerSumMax {
    pub value: f64,
    pub point: Vec<f64>,
    pub exact: bool,
    pub converged: bool,
}

pub(crate) fn power_sum(rows: &[Vec<f64>], weights: Option<&[f64]>, p: f64, b: &[f64]) -> f64 {
    rows.iter()
        .enumerate()
        .map(|(j, v)| {
            let c = dot(v, b).abs();
            let w = weights.map_or(1.0, |w| w[j]);
            if p == 1.0 {
                w * c
            } else if p == 2.0 {
                w * c * c
            } else {
                w * c.powf(p)
            }
        })
        .sum()
}

fn power_sum_gradient(rows: &[Vec<f64>], weights: Option<&[f64]>, p: f64, b: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; b.len()];
    for (j, v) in rows.iter().enumerate() {
        let c = dot(v, b);
        if c == 0.0 {
            continue;
        }
        let w = weights.map_or(1.0, |w| w[j]);
        let coef = if p == 1.0 { w * c.signum() } else { w * c.signum() * c.abs().powf(p - 1.0) };
        for (gi, vi) in g.iter_mut().zip(v) {
            *gi += coef * vi;
        }
    }
    g
}

/// Maximizes `Σ_j w_j |<b, v_j>|^p` over the unit ball of `ball`.
///
/// The objective is convex and even, so on polytope balls the vertices (up to
/// sign) are enumerated unless `ascent_only` is set. Otherwise each start is
/// pushed through `b ← argmax_{B} <∇f(b), ·>`, which never decreases `f`.
pub(crate) fn max_power_sum(
    ball: &FiniteSpace,
    rows: &[Vec<f64>],
    weights: Option<&[f64]>,
    p: f64,
    budget: &OptBudget,
    salt: u64,
    ascent_only: bool,
) -> PowerSumMax {
    let d = ball.dim();
    if !ascent_only {
        if let Some(verts) = ball.ball_vertices_up_to_sign() {
            let mut best = PowerSumMax { value: -1.0, point: vec![0.0; d], exact: true, converged: true };
            for v in verts {
                let f = power_sum(rows, weights, p, &v);
                if f > best.value {
                    best.value = f;
                    best.point = v;
                }
            }
            return best;
        }
        if p == 2.0 && ball.exponent() == Exponent::Finite(2.0) {
            let (f, b) = quadratic_peaks(rows, weights, d).swap_remove(0);
            return PowerSumMax { value: f.max(0.0), point: b, exact: true, converged: true };
        }
    }

    let peaks = power_sum_peaks(ball, rows, weights, p, budget, salt);
    let mut best = PowerSumMax { value: 0.0, point: vec![0.0; d], exact: false, converged: true };
    if let Some((f, b, conv)) = peaks.into_iter().next() {
        best = PowerSumMax { value: f.max(0.0), point: b, exact: false, converged: conv };
    }
    best
}

/// Endpoints of the power ascent from every start, deduplicated up to sign
/// and sorted by decreasing value. Ties keep the earliest start first.
pub(crate) fn power_sum_peaks(
    ball: &FiniteSpace,
    rows: &[Vec<f64>],
    weights: Option<&[f64]>,
    p: f64,
    budget: &OptBudget,
    salt: u64,
) -> Vec<(f64, Vec<f64>, bool)> {
    let d = ball.dim();
    if p == 2.0 && ball.exponent() == Exponent::Finite(2.0) {
        return quadratic_peaks(rows, weights, d).into_iter().map(|(f, b)| (f, b, true)).collect();
    }
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(rows.len() + budget.starts);
    for v in rows {
        if v.iter().any(|&x| x != 0.0) {
            starts.push(ball.support_point(v));
        }
    }
    let mut rng = budget.rng(&[salt, d as u64, rows.len() as u64]);
    for _ in 0..budget.starts {
        let g = gaussian_vec(&mut rng, d);
        starts.push(ball.support_point(&g));
    }

    let mut peaks: Vec<(f64, Vec<f64>, bool)> = Vec::new();
    for b0 in starts {
        let (f, b, conv) = ascend(ball, rows, weights, p, b0, budget);
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let duplicate = peaks.iter().any(|(_, c, _)| {
            let nc = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            let cos: f64 = b.iter().zip(c).map(|(x, y)| x * y).sum::<f64>() / (nb * nc).max(f64::MIN_POSITIVE);
            cos.abs() > 1.0 - 1e-9
        });
        if !duplicate {
            peaks.push((f, b, conv));
        }
    }
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    peaks
}

/// Eigenpairs of `Σ_j w_j v_j v_jᵀ` by decreasing eigenvalue: on the Euclidean
/// sphere these are the critical points of the quadratic power sum.
fn quadratic_peaks(rows: &[Vec<f64>], weights: Option<&[f64]>, d: usize) -> Vec<(f64, Vec<f64>)> {
    let mut gram = DMatrix::<f64>::zeros(d, d);
    for (j, v) in rows.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[j]);
        for a in 0..d {
            for b in 0..d {
                gram[(a, b)] += w * v[a] * v[b];
            }
        }
    }
    let eig = gram.symmetric_eigen();
    let mut out: Vec<(f64, Vec<f64>)> =
        (0..d).map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())).collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

fn ascend(
    ball: &FiniteSpace,
    rows: &[Vec<f64>],
    weights: Option<&[f64]>,
    p: f64,
    mut b: Vec<f64>,
    budget: &OptBudget,
) -> (f64, Vec<f64>, bool) {
    let mut f = power_sum(rows, weights, p, &b);
    for _ in 0..budget.iterations {
        let g = power_sum_gradient(rows, weights, p, &b);
        if g.iter().all(|&x| x == 0.0) {
            return (f, b, true);
        }
        let nb = ball.support_point(&g);
        let nf = power_sum(rows, weights, p, &nb);
        if nf <= f * (1.0 + budget.tolerance * 1e-3) {
            if nf > f {
                return (nf, nb, true);
            }
            return (f, b, true);
        }
        b = nb;
        f = nf;
    }
    (f, b, false)
}

/// Coordinate pattern search maximizing `f`, halving the step after every
/// unsuccessful sweep. Returns the best point and its value.
pub(crate) fn pattern_search<F>(mut f: F, mut x: Vec<f64>, mut step: f64, sweeps: usize, min_step: f64) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let mut fx = f(&x);
    for _ in 0..sweeps {
        if step < min_step {
            break;
        }
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let old = x[i];
                x[i] = old + dir * step;
                let fy = f(&x);
                if fy > fx {
                    fx = fy;
                    improved = true;
                    break;
                }
                x[i] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}
