//! Minimal dense linear algebra and optimization kernel.
//!
//! Everything here is 64-bit and deliberately free of BLAS: the matrices in
//! this crate are small enough that plain loops are both fast and
//! bit-reproducible, which the training determinism contract depends on.

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "matrix {}x{} needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `A x` with explicit dimension checking.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matvec: matrix is {}x{} but vector has length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            out[r] = acc;
        }
        Ok(out)
    }

    /// `A^T y` without materializing the transpose.
    pub fn matvec_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::Dimension(format!(
                "matvec_t: matrix is {}x{} but vector has length {}",
                self.rows,
                self.cols,
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(row) {
                *o += yr * a;
            }
        }
        Ok(out)
    }

    /// Rank-one accumulation `self += scale * y x^T`.
    pub fn add_outer(&mut self, y: &[f64], x: &[f64], scale: f64) -> Result<()> {
        if y.len() != self.rows || x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "add_outer: matrix is {}x{} but operands have lengths {} and {}",
                self.rows,
                self.cols,
                y.len(),
                x.len()
            )));
        }
        for r in 0..self.rows {
            let f = scale * y[r];
            if f == 0.0 {
                continue;
            }
            let base = r * self.cols;
            for c in 0..self.cols {
                self.data[base + c] += f * x[c];
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `ln(sum(exp(x)))` computed with max subtraction.
pub fn log_sum_exp(logits: &[f64]) -> Result<f64> {
    if logits.is_empty() {
        return Err(Error::Dimension("log_sum_exp of empty vector".into()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numeric("log_sum_exp input not finite".into()));
    }
    let sum: f64 = logits.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Numerically stable softmax.
///
/// Output entries are nonnegative and sum to 1 for any finite input.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Dimension("softmax of empty vector".into()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numeric("softmax input not finite".into()));
    }
    let mut out: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Ok(out)
}

/// Heavy-ball SGD with classic L2 weight decay folded into the gradient.
///
/// The update per parameter block is
/// `v <- momentum * v - lr * (g + weight_decay * theta); theta <- theta + v`.
/// Velocity buffers are zero-initialized lazily on the first step and must
/// keep their shapes afterwards.
#[derive(Debug, Clone)]
pub struct SgdMomentum {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Vec<Vec<f64>>,
}

impl SgdMomentum {
    pub fn new(learning_rate: f64, momentum: f64, weight_decay: f64) -> Result<Self> {
        if !(learning_rate > 0.0) || !learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be positive and finite, got {learning_rate}"
            )));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {momentum}"
            )));
        }
        if !(weight_decay >= 0.0) || !weight_decay.is_finite() {
            return Err(Error::Config(format!(
                "weight decay must be nonnegative, got {weight_decay}"
            )));
        }
        Ok(Self {
            learning_rate,
            momentum,
            weight_decay,
            velocity: Vec::new(),
        })
    }

    /// Applies one update to every parameter block.
    ///
    /// Blocks are identified by their position in the slice; callers must pass
    /// the same blocks in the same order on every step.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Dimension(format!(
                "optimizer got {} parameter blocks but {} gradient blocks",
                params.len(),
                grads.len()
            )));
        }
        if self.velocity.is_empty() {
            self.velocity = params.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        if self.velocity.len() != params.len() {
            return Err(Error::Dimension(format!(
                "optimizer state has {} blocks but step got {}",
                self.velocity.len(),
                params.len()
            )));
        }
        for ((block, grad), vel) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            if block.len() != grad.len() || block.len() != vel.len() {
                return Err(Error::Dimension(format!(
                    "optimizer block sizes disagree: params {}, grads {}, velocity {}",
                    block.len(),
                    grad.len(),
                    vel.len()
                )));
            }
            for i in 0..block.len() {
                let g = grad[i] + self.weight_decay * block[i];
                vel[i] = self.momentum * vel[i] - self.learning_rate * g;
                block[i] += vel[i];
            }
        }
        Ok(())
    }
}

/// Central finite-difference gradient of a scalar function.
///
/// This is the verification oracle the analytic backward passes are checked
/// against; it must stay independent of them.
pub fn finite_diff_grad<F>(mut f: F, theta: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::Config(format!("step must be positive, got {step}")));
    }
    let mut point = theta.to_vec();
    let mut grad = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let orig = point[i];
        point[i] = orig + step;
        let up = f(&point)?;
        point[i] = orig - step;
        let down = f(&point)?;
        point[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric(
                "finite difference probe produced a non-finite value".into(),
            ));
        }
        grad[i] = (up - down) / (2.0 * step);
    }
    Ok(grad)
}

/// Relative error between an analytic and a reference gradient,
/// `||a - b|| / max(||b||, floor)`.
pub fn relative_error(analytic: &[f64], reference: &[f64]) -> f64 {
    debug_assert_eq!(analytic.len(), reference.len());
    let mut diff = 0.0;
    for (a, b) in analytic.iter().zip(reference) {
        diff += (a - b) * (a - b);
    }
    let scale = norm(reference).max(1e-8);
    diff.sqrt() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softmax_uniform_logits() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_large_equal_logits_is_stable() {
        let p = softmax(&[1000.0, 1000.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!((p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn softmax_hand_case() {
        // exp-normalize of (ln 1, ln 3) is (1/4, 3/4)
        let p = softmax(&[1.0_f64.ln(), 3.0_f64.ln()]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-12);
        assert!((p[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn softmax_empty_is_dimension_error() {
        assert!(matches!(softmax(&[]), Err(Error::Dimension(_))));
    }

    #[test]
    fn sgd_vanilla_step() {
        let mut opt = SgdMomentum::new(0.1, 0.0, 0.0).unwrap();
        let mut theta = [1.0];
        opt.step(&mut [&mut theta], &[&[2.0]]).unwrap();
        assert!((theta[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn sgd_zero_learning_rate_is_rejected() {
        assert!(SgdMomentum::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn sgd_momentum_two_steps_hand_unrolled() {
        // v1 = -0.1, theta1 = -0.1; v2 = 0.9*(-0.1) - 0.1 = -0.19; theta2 = -0.29
        let mut opt = SgdMomentum::new(0.1, 0.9, 0.0).unwrap();
        let mut theta = [0.0];
        opt.step(&mut [&mut theta], &[&[1.0]]).unwrap();
        opt.step(&mut [&mut theta], &[&[1.0]]).unwrap();
        assert!((theta[0] - (-0.29)).abs() < 1e-12);
    }

    #[test]
    fn sgd_shape_mismatch_is_dimension_error() {
        let mut opt = SgdMomentum::new(0.1, 0.0, 0.0).unwrap();
        let mut theta = [1.0, 2.0];
        let r = opt.step(&mut [&mut theta], &[&[1.0][..]]);
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn finite_diff_on_quadratic() {
        let g = finite_diff_grad(|x| Ok(x[0] * x[0]), &[3.0], 1e-3).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn finite_diff_on_constant_is_zero() {
        let g = finite_diff_grad(|_| Ok(7.5), &[1.0, -2.0, 0.3], 1e-3).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn matvec_checks_dimensions() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(m.matvec(&[1.0, 2.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn matvec_hand_case() {
        let m = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = m.matvec(&[1.0, 1.0]).unwrap();
        assert_eq!(y, vec![3.0, 7.0]);
    }

    proptest! {
        #[test]
        fn softmax_is_simplex_point(v in proptest::collection::vec(-50.0f64..50.0, 1..16)) {
            let p = softmax(&v).unwrap();
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|x| *x >= 0.0));
        }

        #[test]
        fn softmax_preserves_order(v in proptest::collection::vec(-50.0f64..50.0, 2..8)) {
            let p = softmax(&v).unwrap();
            for i in 0..v.len() {
                for j in 0..v.len() {
                    if v[i] < v[j] {
                        prop_assert!(p[i] <= p[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn sgd_tiny_learning_rate_approximates_identity() {
        // lr = 0 is disallowed by contract, so the identity property is
        // checked in the limit: the update scales linearly with lr.
        let mut opt = SgdMomentum::new(1e-300, 0.5, 0.0).unwrap();
        let mut theta = [1.0, -2.0];
        opt.step(&mut [&mut theta], &[&[3.0, 4.0][..]]).unwrap();
        assert!((theta[0] - 1.0).abs() < 1e-290);
        assert!((theta[1] + 2.0).abs() < 1e-290);
    }
}
