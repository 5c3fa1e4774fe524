use std::ops::Range;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::simulators::{Model, SimVariates};

/// Partition of simulation indices `0..M` into `G` contiguous blocks whose
/// sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    starts: Vec<usize>,
    m: usize,
}

impl BlockLayout {
    pub fn new(m: usize, g: usize) -> Result<Self> {
        if g == 0 || g > m {
            return Err(invalid(format!("need 1 <= G <= M, got G = {g}, M = {m}")));
        }
        let (base, extra) = (m / g, m % g);
        let mut starts = Vec::with_capacity(g + 1);
        let mut at = 0;
        for k in 0..g {
            starts.push(at);
            at += base + usize::from(k < extra);
        }
        starts.push(m);
        Ok(Self { starts, m })
    }

    pub fn blocks(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn simulations(&self) -> usize {
        self.m
    }

    pub fn block(&self, k: usize) -> Range<usize> {
        self.starts[k]..self.starts[k + 1]
    }

    /// `(block, offset within block)` of simulation `i`.
    pub fn locate(&self, i: usize) -> (usize, usize) {
        let k = self.starts.partition_point(|&s| s <= i) - 1;
        (k, i - self.starts[k])
    }
}

/// Draw `count` prepared variate bundles in index order from `rng`.
pub(crate) fn draw_many<R: Rng + ?Sized>(model: &dyn Model, count: usize, rng: &mut R) -> Vec<Arc<SimVariates>> {
    let layout = model.layout();
    let mut raw: Vec<SimVariates> = (0..count).map(|_| layout.draw(rng)).collect();
    raw.par_iter_mut().for_each(|v| model.prepare(v));
    raw.into_iter().map(Arc::new).collect()
}

/// Auxiliary variates for all `M` simulations, grouped into blocks.
#[derive(Debug, Clone)]
pub struct VariateStore {
    layout: BlockLayout,
    sims: Vec<Arc<SimVariates>>,
}

impl VariateStore {
    pub fn draw<R: Rng + ?Sized>(model: &dyn Model, m: usize, g: usize, rng: &mut R) -> Result<Self> {
        if !model.supports_csl() {
            return Err(invalid(format!("model `{}` has no fixed variate budget", model.id())));
        }
        let layout = BlockLayout::new(m, g)?;
        Ok(Self { sims: draw_many(model, m, rng), layout })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn sims(&self) -> &[Arc<SimVariates>] {
        &self.sims
    }

    /// A copy with block `k` redrawn; every other block shares its data.
    pub fn with_block_redrawn<R: Rng + ?Sized>(&self, model: &dyn Model, k: usize, rng: &mut R) -> Self {
        let range = self.layout.block(k);
        let fresh = draw_many(model, range.len(), rng);
        let mut sims = self.sims.clone();
        for (slot, v) in sims[range].iter_mut().zip(fresh) {
            *slot = v;
        }
        Self { layout: self.layout.clone(), sims }
    }

    /// Uniformly choose a block with `block_rng` and redraw it from `variate_rng`.
    pub fn refresh<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &self,
        model: &dyn Model,
        block_rng: &mut R1,
        variate_rng: &mut R2,
    ) -> (Self, usize) {
        let k = block_rng.random_range(0..self.layout.blocks());
        (self.with_block_redrawn(model, k, variate_rng), k)
    }
}
