//! Interaction kernels `G(x, y)`.
//!
//! The engine only ever sees a [`PairKernel`]; adding a kernel means adding a
//! type here and a [`KernelKind`] variant, nothing else.

use serde::{Deserialize, Serialize};

use crate::error::{BltcError, Result};

/// Pairs with squared separation below this are treated as self-interactions
/// and skipped by every summation routine.
pub const SINGULAR_R2: f64 = 1e-28;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Coulomb,
    Yukawa,
    /// `G == 1`. Only useful for partition-of-unity checks.
    TestConstant,
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            KernelKind::Coulomb => "coulomb",
            KernelKind::Yukawa => "yukawa",
            KernelKind::TestConstant => "test-constant",
        };
        f.write_str(name)
    }
}

/// Kernel selection plus its parameter. `kappa` is the inverse screening
/// length and is ignored unless `kind` is [`KernelKind::Yukawa`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub kappa: f64,
}

impl KernelSpec {
    pub fn coulomb() -> Self {
        Self {
            kind: KernelKind::Coulomb,
            kappa: 0.0,
        }
    }

    pub fn yukawa(kappa: f64) -> Self {
        Self {
            kind: KernelKind::Yukawa,
            kappa,
        }
    }

    pub fn test_constant() -> Self {
        Self {
            kind: KernelKind::TestConstant,
            kappa: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(BltcError::InvalidConfig(format!(
                "kappa must be finite and nonnegative, got {}",
                self.kappa
            )));
        }
        Ok(())
    }

    /// Runs `f` with the concrete kernel type so hot loops are monomorphized.
    pub fn dispatch<R>(&self, f: impl KernelVisitor<Output = R>) -> R {
        match self.kind {
            KernelKind::Coulomb => f.visit(Coulomb),
            KernelKind::Yukawa => f.visit(Yukawa { kappa: self.kappa }),
            KernelKind::TestConstant => f.visit(Constant),
        }
    }
}

/// Evaluates `G(x, y)` for a single pair, rejecting self-interactions.
pub fn eval_kernel(kernel: &KernelSpec, x: [f64; 3], y: [f64; 3]) -> Result<f64> {
    let r2 = dist2(x, y);
    if r2 < SINGULAR_R2 {
        return Err(BltcError::SingularPair { r2 });
    }
    Ok(kernel.dispatch(Single { x, y }))
}

struct Single {
    x: [f64; 3],
    y: [f64; 3],
}

impl KernelVisitor for Single {
    type Output = f64;
    fn visit<K: PairKernel>(self, kernel: K) -> f64 {
        kernel.value(self.x, self.y)
    }
}

/// Generic callback for [`KernelSpec::dispatch`].
pub trait KernelVisitor {
    type Output;
    fn visit<K: PairKernel>(self, kernel: K) -> Self::Output;
}

/// A kernel that is smooth away from `x == y`. Callers are responsible for
/// skipping singular pairs.
pub trait PairKernel: Copy + Send + Sync {
    fn value(&self, x: [f64; 3], y: [f64; 3]) -> f64;
}

#[inline(always)]
pub fn dist2(x: [f64; 3], y: [f64; 3]) -> f64 {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    let dz = x[2] - y[2];
    dx * dx + dy * dy + dz * dz
}

#[derive(Clone, Copy, Debug)]
pub struct Coulomb;

impl PairKernel for Coulomb {
    #[inline(always)]
    fn value(&self, x: [f64; 3], y: [f64; 3]) -> f64 {
        1.0 / dist2(x, y).sqrt()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Yukawa {
    pub kappa: f64,
}

impl PairKernel for Yukawa {
    #[inline(always)]
    fn value(&self, x: [f64; 3], y: [f64; 3]) -> f64 {
        let r = dist2(x, y).sqrt();
        exp(-self.kappa * r) / r
    }
}

/// Branch-free `e^x`, within about one ulp of `f64::exp` for
/// `x >= -708.39` and flushed to zero below (so the subnormal range is lost).
/// Unlike the libm call it inlines into the tile loops and vectorizes.
#[inline(always)]
pub fn exp(x: f64) -> f64 {
    const LOG2E: f64 = std::f64::consts::LOG2_E;
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    // 1.5 * 2^52: adding it rounds to an integer held in the low mantissa bits
    const SHIFT: f64 = 6_755_399_441_055_744.0;
    const MIN_ARG: f64 = -708.39;
    const MAX_ARG: f64 = 709.78;
    // 1/k! for k = 13 down to 2
    const C: [f64; 12] = [
        1.0 / 6_227_020_800.0,
        1.0 / 479_001_600.0,
        1.0 / 39_916_800.0,
        1.0 / 3_628_800.0,
        1.0 / 362_880.0,
        1.0 / 40_320.0,
        1.0 / 5_040.0,
        1.0 / 720.0,
        1.0 / 120.0,
        1.0 / 24.0,
        1.0 / 6.0,
        0.5,
    ];
    let xc = x.clamp(MIN_ARG, MAX_ARG);
    let t = xc * LOG2E + SHIFT;
    let k = t - SHIFT;
    let r = (xc - k * LN2_HI) - k * LN2_LO;
    let mut p = C[0];
    for &c in &C[1..] {
        p = p * r + c;
    }
    let poly = 1.0 + r + r * r * p;
    // wrapping ops keep the body free of overflow-check branches
    let ki = (t.to_bits() as i64).wrapping_sub(SHIFT.to_bits() as i64);
    let scale = f64::from_bits((ki.wrapping_add(1023) << 52) as u64);
    let v = poly * scale;
    if x < MIN_ARG {
        0.0
    } else if x > MAX_ARG {
        f64::INFINITY
    } else {
        v
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Constant;

impl PairKernel for Constant {
    #[inline(always)]
    fn value(&self, _x: [f64; 3], _y: [f64; 3]) -> f64 {
        1.0
    }
}
