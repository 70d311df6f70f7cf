//! Batch-cluster evaluation kernels.
//!
//! The direct and approximate interactions share one tile routine: a target
//! batch against a set of weighted points, which are either the cluster's
//! sources with their charges or its grid nodes with the modified charges.
//!
//! Each target keeps a compensated running sum (error-free `two_sum` steps)
//! that sees its interactions in a fixed order, so results do not depend on
//! the SIMD width the host supports and agree with any other accurate
//! summation order to within a few units in the last place of the potential.

use crate::interp::ChebyshevGrid1D;
use crate::kernels::{dist2, KernelSpec, KernelVisitor, PairKernel, SINGULAR_R2};
use crate::particles::ParticleSlice;

const TARGET_BLOCK: usize = 256;

#[inline(always)]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Per-target compensated accumulator for one batch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PotentialAccumulator {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl PotentialAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            hi: vec![0.0; n],
            lo: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.hi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hi.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.hi[i] + self.lo[i]
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    pub fn write_to(&self, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.value(i);
        }
    }
}

/// Sources are the outer loop and a block of contiguous targets the inner
/// one, so each target's running sum sees the sources in list order whatever
/// width the inner loop is vectorized to.
#[inline(always)]
fn tile_body<K: PairKernel>(
    kernel: K,
    targets: ParticleSlice<'_>,
    sx: &[f64],
    sy: &[f64],
    sz: &[f64],
    w: &[f64],
    acc: &mut PotentialAccumulator,
) {
    let n = targets.len();
    for start in (0..n).step_by(TARGET_BLOCK) {
        let end = (start + TARGET_BLOCK).min(n);
        let (tx, ty, tz) = (&targets.x[start..end], &targets.y[start..end], &targets.z[start..end]);
        let hi = &mut acc.hi[start..end];
        let lo = &mut acc.lo[start..end];
        for (((&px, &py), &pz), &q) in sx.iter().zip(sy).zip(sz).zip(w) {
            let y = [px, py, pz];
            for ((((h, l), &ax), &ay), &az) in hi.iter_mut().zip(lo.iter_mut()).zip(tx).zip(ty).zip(tz) {
                let x = [ax, ay, az];
                let g = kernel.value(x, y) * q;
                let t = if dist2(x, y) < SINGULAR_R2 { 0.0 } else { g };
                let (s, e) = two_sum(*h, t);
                *h = s;
                *l += e;
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn tile_avx512<K: PairKernel>(
    kernel: K,
    targets: ParticleSlice<'_>,
    sx: &[f64],
    sy: &[f64],
    sz: &[f64],
    w: &[f64],
    acc: &mut PotentialAccumulator,
) {
    tile_body(kernel, targets, sx, sy, sz, w, acc)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn tile_avx2<K: PairKernel>(
    kernel: K,
    targets: ParticleSlice<'_>,
    sx: &[f64],
    sy: &[f64],
    sz: &[f64],
    w: &[f64],
    acc: &mut PotentialAccumulator,
) {
    tile_body(kernel, targets, sx, sy, sz, w, acc)
}

fn tile<K: PairKernel>(
    kernel: K,
    targets: ParticleSlice<'_>,
    sx: &[f64],
    sy: &[f64],
    sz: &[f64],
    w: &[f64],
    acc: &mut PotentialAccumulator,
) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: feature presence checked at runtime
            return unsafe { tile_avx512(kernel, targets, sx, sy, sz, w, acc) };
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: feature presence checked at runtime
            return unsafe { tile_avx2(kernel, targets, sx, sy, sz, w, acc) };
        }
    }
    tile_body(kernel, targets, sx, sy, sz, w, acc)
}

struct Tile<'a> {
    targets: ParticleSlice<'a>,
    sx: &'a [f64],
    sy: &'a [f64],
    sz: &'a [f64],
    w: &'a [f64],
    acc: &'a mut PotentialAccumulator,
}

impl KernelVisitor for Tile<'_> {
    type Output = ();
    fn visit<K: PairKernel>(self, kernel: K) {
        tile(kernel, self.targets, self.sx, self.sy, self.sz, self.w, self.acc)
    }
}

/// Direct batch-cluster interaction: adds `sum_j G(x_i, y_j) q_j` for every
/// target, skipping singular pairs.
pub fn eval_batch_direct(
    targets: ParticleSlice<'_>,
    sources: ParticleSlice<'_>,
    kernel: &KernelSpec,
    potentials: &mut PotentialAccumulator,
) {
    assert_eq!(targets.len(), potentials.len());
    kernel.dispatch(Tile {
        targets,
        sx: sources.x,
        sy: sources.y,
        sz: sources.z,
        w: sources.q,
        acc: potentials,
    });
}

/// Tensor-product grid nodes flattened in moment order (`k3` fastest).
#[derive(Clone, Debug, Default)]
pub struct GridNodes {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl GridNodes {
    pub fn new(grid: &[ChebyshevGrid1D; 3]) -> Self {
        let m = grid[0].num_points();
        let cap = m * m * m;
        let mut nodes = Self {
            x: Vec::with_capacity(cap),
            y: Vec::with_capacity(cap),
            z: Vec::with_capacity(cap),
        };
        for &s1 in &grid[0].points {
            for &s2 in &grid[1].points {
                for &s3 in &grid[2].points {
                    nodes.x.push(s1);
                    nodes.y.push(s2);
                    nodes.z.push(s3);
                }
            }
        }
        nodes
    }
}

/// Approximate batch-cluster interaction: adds `sum_k G(x_i, s_k) q^_k`.
pub fn eval_batch_approx(
    targets: ParticleSlice<'_>,
    nodes: &GridNodes,
    q_hat: &[f64],
    kernel: &KernelSpec,
    potentials: &mut PotentialAccumulator,
) {
    assert_eq!(nodes.x.len(), q_hat.len());
    assert_eq!(targets.len(), potentials.len());
    kernel.dispatch(Tile {
        targets,
        sx: &nodes.x,
        sy: &nodes.y,
        sz: &nodes.z,
        w: q_hat,
        acc: potentials,
    });
}
