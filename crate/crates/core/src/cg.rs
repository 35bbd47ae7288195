//! Conjugate gradients on factor-shaped unknowns with Frobenius inner
//! products. The operator is only ever applied, never stored.

use crate::error::{Error, Result};
use crate::factor::Factor;

/// Symmetric positive definite map on `n x r` factors.
pub trait LinearOperator {
    /// Overwrites `out` with the image of `x`.
    fn apply(&self, x: &Factor, out: &mut Factor);
}

impl<F> LinearOperator for F
where
    F: Fn(&Factor, &mut Factor),
{
    fn apply(&self, x: &Factor, out: &mut Factor) {
        self(x, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub converged: bool,
    /// Norm of the recursively updated residual at exit.
    pub residual_norm: f64,
}

/// Scratch space reused across solves of the same shape.
#[derive(Debug, Clone)]
pub struct CgWorkspace {
    residual: Factor,
    direction: Factor,
    product: Factor,
}

impl CgWorkspace {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            residual: Factor::zeros(rows, cols),
            direction: Factor::zeros(rows, cols),
            product: Factor::zeros(rows, cols),
        }
    }

    fn fit(&mut self, shape: &Factor) {
        if !self.residual.same_shape(shape) {
            *self = Self::new(shape.rows(), shape.cols());
        }
    }

    /// Solves `op(x) = rhs` starting from the current contents of `x`.
    /// Stops once `||op(x) - rhs||_F <= tol * max(1, ||rhs||_F)`.
    pub fn solve<O: LinearOperator + ?Sized>(
        &mut self,
        op: &O,
        rhs: &Factor,
        x: &mut Factor,
        tol: f64,
        max_iter: usize,
    ) -> Result<CgOutcome> {
        self.fit(x);
        let threshold = tol * rhs.norm().max(1.0);

        op.apply(x, &mut self.product);
        self.residual.copy_from(rhs);
        self.residual.axpy(-1.0, &self.product);
        let mut rs = self.residual.norm_sq();
        if rs.sqrt() <= threshold {
            return Ok(CgOutcome {
                iterations: 0,
                converged: true,
                residual_norm: rs.sqrt(),
            });
        }
        self.direction.copy_from(&self.residual);

        for k in 0..max_iter {
            op.apply(&self.direction, &mut self.product);
            let curvature = self.direction.dot(&self.product);
            if !(curvature > 0.0) {
                return Err(Error::NumericalFailure {
                    phase: "conjugate gradient",
                    iteration: k,
                    message: format!("non-positive curvature {curvature:e}"),
                });
            }
            let alpha = rs / curvature;
            x.axpy(alpha, &self.direction);
            self.residual.axpy(-alpha, &self.product);
            let rs_next = self.residual.norm_sq();
            if rs_next.sqrt() <= threshold {
                return Ok(CgOutcome {
                    iterations: k + 1,
                    converged: true,
                    residual_norm: rs_next.sqrt(),
                });
            }
            let beta = rs_next / rs;
            rs = rs_next;
            // p = r + beta p
            for (p, r) in self.direction.as_mut_slice().iter_mut().zip(self.residual.as_slice()) {
                *p = r + beta * *p;
            }
        }
        Ok(CgOutcome {
            iterations: max_iter,
            converged: false,
            residual_norm: rs.sqrt(),
        })
    }
}

/// Convenience wrapper returning the solution by value.
pub fn cg_solve<O: LinearOperator + ?Sized>(
    op: &O,
    rhs: &Factor,
    warm_start: &Factor,
    tol: f64,
    max_iter: usize,
) -> Result<(Factor, CgOutcome)> {
    if !rhs.same_shape(warm_start) {
        return Err(Error::DimensionMismatch {
            context: "cg warm start",
            expected: rhs.rows() * rhs.cols(),
            actual: warm_start.rows() * warm_start.cols(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("cg tolerance must be positive, got {tol}")));
    }
    let mut x = warm_start.clone();
    let mut ws = CgWorkspace::new(x.rows(), x.cols());
    let outcome = ws.solve(op, rhs, &mut x, tol, max_iter)?;
    Ok((x, outcome))
}
