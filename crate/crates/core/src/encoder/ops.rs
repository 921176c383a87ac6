//! Dense kernels on row-major slices.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

/// Floating point type the encoder can run in: `f32` for training, `f64`
/// for gradient checks.
pub trait Scalar:
    Float + FromPrimitive + AddAssign + SubAssign + MulAssign + DivAssign + Default + Debug + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Transcendentals, always from libm.
    fn exp_m(self) -> Self;
    fn ln_m(self) -> Self;
    fn tanh_m(self) -> Self;
}

impl Scalar for f32 {
    fn exp_m(self) -> Self {
        libm::expf(self)
    }
    fn ln_m(self) -> Self {
        libm::logf(self)
    }
    fn tanh_m(self) -> Self {
        libm::tanhf(self)
    }
}

impl Scalar for f64 {
    fn exp_m(self) -> Self {
        libm::exp(self)
    }
    fn ln_m(self) -> Self {
        libm::log(self)
    }
    fn tanh_m(self) -> Self {
        libm::tanh(self)
    }
}

pub const LN_EPS: f64 = 1e-5;

/// `a (n×k) · b (k×m)`.
pub fn matmul<F: Scalar>(a: &[F], b: &[F], n: usize, k: usize, m: usize) -> Vec<F> {
    let mut out = vec![F::zero(); n * m];
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        for p in 0..k {
            let s = a[i * k + p];
            if s == F::zero() {
                continue;
            }
            for (o, &x) in row.iter_mut().zip(&b[p * m..(p + 1) * m]) {
                *o += s * x;
            }
        }
    }
    out
}

/// `a (n×k) · bᵀ` where `b` is `m×k`.
pub fn matmul_bt<F: Scalar>(a: &[F], b: &[F], n: usize, k: usize, m: usize) -> Vec<F> {
    let mut out = vec![F::zero(); n * m];
    for i in 0..n {
        let ar = &a[i * k..(i + 1) * k];
        for j in 0..m {
            out[i * m + j] = dot(ar, &b[j * k..(j + 1) * k]);
        }
    }
    out
}

/// `out (k×m) += aᵀ · b` where `a` is `n×k` and `b` is `n×m`.
pub fn matmul_at_acc<F: Scalar>(a: &[F], b: &[F], n: usize, k: usize, m: usize, out: &mut [F]) {
    for i in 0..n {
        let br = &b[i * m..(i + 1) * m];
        for p in 0..k {
            let s = a[i * k + p];
            if s == F::zero() {
                continue;
            }
            for (o, &x) in out[p * m..(p + 1) * m].iter_mut().zip(br) {
                *o += s * x;
            }
        }
    }
}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn add_bias<F: Scalar>(x: &mut [F], bias: &[F]) {
    for row in x.chunks_mut(bias.len()) {
        for (v, &b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

/// Column sums of `dy` added into `out`.
pub fn bias_grad_acc<F: Scalar>(dy: &[F], out: &mut [F]) {
    for row in dy.chunks(out.len()) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

/// Per-row normalization statistics kept for the backward pass.
pub struct LnCache<F> {
    pub xhat: Vec<F>,
    pub rstd: Vec<F>,
}

pub fn layer_norm<F: Scalar>(x: &[F], gamma: &[F], beta: &[F]) -> (Vec<F>, LnCache<F>) {
    let d = gamma.len();
    let n = x.len() / d;
    let inv_d = F::of(1.0 / d as f64);
    let eps = F::of(LN_EPS);
    let mut out = vec![F::zero(); x.len()];
    let mut xhat = vec![F::zero(); x.len()];
    let mut rstd = vec![F::zero(); n];
    for i in 0..n {
        let row = &x[i * d..(i + 1) * d];
        let mean = row.iter().fold(F::zero(), |a, &v| a + v) * inv_d;
        let var = row.iter().fold(F::zero(), |a, &v| a + (v - mean) * (v - mean)) * inv_d;
        let r = F::one() / (var + eps).sqrt();
        rstd[i] = r;
        for j in 0..d {
            let h = (row[j] - mean) * r;
            xhat[i * d + j] = h;
            out[i * d + j] = h * gamma[j] + beta[j];
        }
    }
    (out, LnCache { xhat, rstd })
}

/// Returns `dx` and accumulates `dgamma`, `dbeta`.
pub fn layer_norm_backward<F: Scalar>(
    dy: &[F],
    cache: &LnCache<F>,
    gamma: &[F],
    dgamma: &mut [F],
    dbeta: &mut [F],
) -> Vec<F> {
    let d = gamma.len();
    let inv_d = F::of(1.0 / d as f64);
    let mut dx = vec![F::zero(); dy.len()];
    let mut g = vec![F::zero(); d];
    for (i, &r) in cache.rstd.iter().enumerate() {
        let dyr = &dy[i * d..(i + 1) * d];
        let xh = &cache.xhat[i * d..(i + 1) * d];
        let mut sum_g = F::zero();
        let mut sum_gx = F::zero();
        for j in 0..d {
            dgamma[j] += dyr[j] * xh[j];
            dbeta[j] += dyr[j];
            g[j] = dyr[j] * gamma[j];
            sum_g += g[j];
            sum_gx += g[j] * xh[j];
        }
        for j in 0..d {
            dx[i * d + j] = r * (g[j] - inv_d * sum_g - xh[j] * inv_d * sum_gx);
        }
    }
    dx
}

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_C: f64 = 0.044_715;

/// Tanh approximation of GELU.
pub fn gelu<F: Scalar>(x: F) -> F {
    let c = F::of(SQRT_2_OVER_PI);
    let half = F::of(0.5);
    half * x * (F::one() + (c * (x + F::of(GELU_C) * x * x * x)).tanh_m())
}

pub fn gelu_grad<F: Scalar>(x: F) -> F {
    let c = F::of(SQRT_2_OVER_PI);
    let half = F::of(0.5);
    let u = c * (x + F::of(GELU_C) * x * x * x);
    let t = u.tanh_m();
    let du = c * (F::one() + F::of(3.0 * GELU_C) * x * x);
    half * (F::one() + t) + half * x * (F::one() - t * t) * du
}

/// In-place softmax over `row`; entries where `keep` is false get zero mass.
pub fn masked_softmax<F: Scalar>(row: &mut [F], keep: &[bool]) {
    let max = row.iter().zip(keep).filter(|(_, &k)| k).fold(F::neg_infinity(), |m, (&v, _)| m.max(v));
    let mut sum = F::zero();
    for (v, &k) in row.iter_mut().zip(keep) {
        *v = if k { (*v - max).exp_m() } else { F::zero() };
        sum += *v;
    }
    if sum > F::zero() {
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Log-sum-exp based cross entropy of one logit row; also writes the
/// softmax into `probs`.
pub fn cross_entropy<F: Scalar>(logits: &[F], target: usize, probs: &mut [F]) -> F {
    let max = logits.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
    let mut sum = F::zero();
    for (p, &l) in probs.iter_mut().zip(logits) {
        *p = (l - max).exp_m();
        sum += *p;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    sum.ln_m() + max - logits[target]
}
