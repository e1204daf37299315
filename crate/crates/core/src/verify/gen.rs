//! Random instances for the property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::nseq::{NSeq, Shape};
use crate::operators::{LinearOp, MultiOp};
use crate::spaces::{FiniteSpace, Functional};

pub(crate) struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn gauss(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn vec(&mut self, d: usize) -> Vec<f64> {
        (0..d).map(|_| self.gauss()).collect()
    }

    /// A Gaussian vector that is not identically zero.
    pub fn nonzero_vec(&mut self, d: usize) -> Vec<f64> {
        loop {
            let v = self.vec(d);
            if v.iter().any(|&x| x != 0.0) {
                return v;
            }
        }
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    pub fn bounds(&mut self, order: usize, max_len: usize) -> Vec<usize> {
        (0..order).map(|_| self.range(1, max_len)).collect()
    }

    /// Gaussian entries, each zeroed with probability 1/5; never entirely zero.
    pub fn nseq(&mut self, space: &FiniteSpace, bounds: &[usize]) -> NSeq {
        let shape = Shape::new(bounds.to_vec()).expect("positive bounds");
        let d = space.dim();
        let mut data = Vec::with_capacity(shape.size() * d);
        for _ in 0..shape.size() {
            if self.coin(0.2) {
                data.extend(std::iter::repeat(0.0).take(d));
            } else {
                data.extend(self.vec(d));
            }
        }
        if data.iter().all(|&v| v == 0.0) {
            let k = self.range(0, data.len() - 1);
            data[k] = 1.0;
        }
        NSeq::from_flat(shape, space, data).expect("consistent data")
    }

    pub fn scalars(&mut self, len: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..len).map(|_| if self.coin(0.2) { 0.0 } else { self.gauss() }).collect();
        if v.iter().all(|&x| x == 0.0) {
            v[0] = 1.0;
        }
        v
    }

    /// `base` with its dimension redrawn in `1..=max_dim` (scalars stay scalar).
    pub fn resized(&mut self, base: &FiniteSpace, max_dim: usize) -> FiniteSpace {
        if base.is_scalar() {
            return base.clone();
        }
        let d = self.range(1, max_dim);
        FiniteSpace::new(d, base.exponent(), "").expect("valid dimension")
    }

    pub fn linear(&mut self, source: &FiniteSpace, target: &FiniteSpace) -> LinearOp {
        LinearOp::from_fn(source, target, |_, _| self.rng.sample(StandardNormal))
    }

    pub fn multi(&mut self, sources: Vec<FiniteSpace>, target: &FiniteSpace) -> MultiOp {
        let len: usize = sources.iter().map(FiniteSpace::dim).product::<usize>() * target.dim();
        let c = self.vec(len);
        MultiOp::new(sources, target, c).expect("consistent coefficients")
    }

    pub fn functional(&mut self, host: &FiniteSpace) -> Functional {
        let c = self.vec(host.dim());
        Functional::new(host, c).expect("matching dimension")
    }
}
