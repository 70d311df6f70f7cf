//! Brute-force reference potentials and the error metric.

use rayon::prelude::*;

use crate::error::{BltcError, Result};
use crate::kernels::{dist2, KernelSpec, KernelVisitor, PairKernel, SINGULAR_R2};
use crate::particles::ParticleSystem;

/// Largest system the full oracle runs on without an explicit override.
pub const FULL_ORACLE_LIMIT: usize = 1_000_000;

/// Potential at each requested target (all targets when `sample` is `None`)
/// due to every source, skipping singular pairs. Targets and sources are the
/// same set. Each sum is compensated, so the result is accurate to a few ulps
/// of the potential regardless of cancellation between charges.
pub fn direct_sum_oracle(system: &ParticleSystem, kernel: &KernelSpec, sample: Option<&[usize]>) -> Vec<f64> {
    let all: Vec<usize>;
    let targets = match sample {
        Some(s) => s,
        None => {
            all = (0..system.len()).collect();
            &all
        }
    };
    kernel.dispatch(Oracle { system, targets })
}

struct Oracle<'a> {
    system: &'a ParticleSystem,
    targets: &'a [usize],
}

impl KernelVisitor for Oracle<'_> {
    type Output = Vec<f64>;
    fn visit<K: PairKernel>(self, kernel: K) -> Vec<f64> {
        let sys = self.system;
        self.targets
            .par_iter()
            .map(|&i| {
                let x = sys.position(i);
                let mut sum = 0.0f64;
                let mut comp = 0.0f64;
                for j in 0..sys.len() {
                    let y = sys.position(j);
                    if dist2(x, y) >= SINGULAR_R2 {
                        // Neumaier summation
                        let t = kernel.value(x, y) * sys.q[j];
                        let s = sum + t;
                        comp += if sum.abs() >= t.abs() {
                            (sum - s) + t
                        } else {
                            (t - s) + sum
                        };
                        sum = s;
                    }
                }
                sum + comp
            })
            .collect()
    }
}

/// Guarded oracle: refuses the unsampled O(N^2) sum above
/// [`FULL_ORACLE_LIMIT`] unless `allow_full` is set.
pub fn checked_oracle(
    system: &ParticleSystem,
    kernel: &KernelSpec,
    sample: Option<&[usize]>,
    allow_full: bool,
) -> Result<Vec<f64>> {
    let full = sample.is_none_or(|s| s.len() >= system.len());
    if full && system.len() > FULL_ORACLE_LIMIT && !allow_full {
        return Err(BltcError::OracleTooLarge {
            n: system.len(),
            limit: FULL_ORACLE_LIMIT,
        });
    }
    Ok(direct_sum_oracle(system, kernel, sample))
}

/// `||ds - tc||_2 / ||ds||_2`.
pub fn relative_error(ds: &[f64], tc: &[f64]) -> Result<f64> {
    if ds.len() != tc.len() {
        return Err(BltcError::LengthMismatch {
            expected: ds.len(),
            actual: tc.len(),
        });
    }
    let (num, den) = ds
        .iter()
        .zip(tc)
        .fold((0.0, 0.0), |(n, d), (&a, &b)| (n + (a - b) * (a - b), d + a * a));
    if den == 0.0 {
        return Err(BltcError::ZeroReference);
    }
    Ok((num / den).sqrt())
}
