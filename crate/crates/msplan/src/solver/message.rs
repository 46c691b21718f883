//! Quadratic message and local-quadratic machinery.
//!
//! Messages are quadratic forms in one state, kept in information form
//! `m(x) = 1/2 x^T L x - eta^T x + c`. Linearizing a factor at a point
//! produces such a form; minimizing a joint quadratic over one of its two
//! states is a Schur complement in information space, which realizes the
//! min-marginal exactly for the linearized model.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factors::FactorGraph;

/// Quadratic form in one state, information parameterization.
#[derive(Clone, Debug)]
pub struct QuadraticMessage {
    pub info: DMatrix<f64>,
    pub eta: DVector<f64>,
    pub constant: f64,
}

impl QuadraticMessage {
    /// Zero-information message (identically zero value).
    pub fn zero(dim: usize) -> Self {
        Self { info: DMatrix::zeros(dim, dim), eta: DVector::zeros(dim), constant: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.info * x)[(0, 0)] - self.eta.dot(x) + self.constant
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.info * x - &self.eta
    }

    pub fn add_assign(&mut self, other: &QuadraticMessage) {
        self.info += &other.info;
        self.eta += &other.eta;
        self.constant += other.constant;
    }

    /// Minimizer of the quadratic, if the information matrix is invertible.
    pub fn argmin(&self) -> Option<DVector<f64>> {
        self.info.clone().cholesky().map(|c| c.solve(&self.eta))
    }
}

/// Accumulates `1/2 || r + J (x - xbar) ||^2_W` onto an information-form
/// quadratic in `x`.
fn accumulate(
    info: &mut DMatrix<f64>,
    eta: &mut DVector<f64>,
    constant: &mut f64,
    jac: &DMatrix<f64>,
    residual: &DVector<f64>,
    weight: &DMatrix<f64>,
    xbar: &DVector<f64>,
) {
    let jtw = jac.transpose() * weight;
    let lam = &jtw * jac;
    let g = &jtw * residual;
    *eta += &lam * xbar - &g;
    *constant += 0.5 * (residual.transpose() * weight * residual)[(0, 0)]
        + 0.5 * (xbar.transpose() * &lam * xbar)[(0, 0)]
        - g.dot(xbar);
    *info += lam;
}

/// Linearizes a group of unary factors at one state into a quadratic.
pub fn linearize_unary_group(
    graph: &FactorGraph,
    factor_ids: &[usize],
    x: &DVector<f64>,
) -> Result<QuadraticMessage> {
    let dim = graph.dim();
    let mut out = QuadraticMessage::zero(dim);
    for &id in factor_ids {
        let factor = &graph.factors[id];
        debug_assert!(factor.is_unary());
        let eval = graph.eval_single(factor, x)?;
        accumulate(&mut out.info, &mut out.eta, &mut out.constant, &eval.jacobians[0].1, &eval.residual, &eval.info, x);
    }
    Ok(out)
}

/// Joint quadratic in a pair of consecutive states, block layout
/// `[x_left; x_right]`.
#[derive(Clone, Debug)]
pub struct EdgeQuadratic {
    dim: usize, // per-state dimension
    pub info: DMatrix<f64>,
    pub eta: DVector<f64>,
    pub constant: f64,
}

impl EdgeQuadratic {
    pub fn zero(dim: usize) -> Self {
        Self { dim, info: DMatrix::zeros(2 * dim, 2 * dim), eta: DVector::zeros(2 * dim), constant: 0.0 }
    }

    pub fn value(&self, x_left: &DVector<f64>, x_right: &DVector<f64>) -> f64 {
        let mut x = DVector::zeros(2 * self.dim);
        x.rows_mut(0, self.dim).copy_from(x_left);
        x.rows_mut(self.dim, self.dim).copy_from(x_right);
        0.5 * (x.transpose() * &self.info * &x)[(0, 0)] - self.eta.dot(&x) + self.constant
    }

    /// Adds a quadratic acting on the left state only.
    pub fn add_left(&mut self, m: &QuadraticMessage) {
        let d = self.dim;
        let mut block = self.info.view_mut((0, 0), (d, d));
        block += &m.info;
        let mut eta = self.eta.rows_mut(0, d);
        eta += &m.eta;
        self.constant += m.constant;
    }

    /// Adds a quadratic acting on the right state only.
    pub fn add_right(&mut self, m: &QuadraticMessage) {
        let d = self.dim;
        let mut block = self.info.view_mut((d, d), (d, d));
        block += &m.info;
        let mut eta = self.eta.rows_mut(d, d);
        eta += &m.eta;
        self.constant += m.constant;
    }

    fn marginalize(&self, keep_right: bool, node: usize) -> Result<QuadraticMessage> {
        let d = self.dim;
        let (a0, b0) = if keep_right { (0, d) } else { (d, 0) };
        let info_aa = self.info.view((a0, a0), (d, d)).into_owned();
        let info_ab = self.info.view((a0, b0), (d, d)).into_owned();
        let info_bb = self.info.view((b0, b0), (d, d)).into_owned();
        let eta_a = self.eta.rows(a0, d).into_owned();
        let eta_b = self.eta.rows(b0, d).into_owned();
        let chol = info_aa.cholesky().ok_or_else(|| Error::Numerical {
            node,
            reason: "eliminated block of the edge quadratic is not positive definite".into(),
        })?;
        let x_solve = chol.solve(&info_ab); // Laa^-1 Lab
        let y = chol.solve(&eta_a);
        let mut info = info_bb - info_ab.transpose() * x_solve;
        // enforce symmetry lost to round-off
        info = (&info + info.transpose()) * 0.5;
        let eta = eta_b - info_ab.transpose() * &y;
        let constant = self.constant - 0.5 * eta_a.dot(&y);
        Ok(QuadraticMessage { info, eta, constant })
    }

    /// Minimizes over the left state, returning a quadratic in the right.
    pub fn marginalize_left(&self, node: usize) -> Result<QuadraticMessage> {
        self.marginalize(true, node)
    }

    /// Minimizes over the right state, returning a quadratic in the left.
    pub fn marginalize_right(&self, node: usize) -> Result<QuadraticMessage> {
        self.marginalize(false, node)
    }
}

/// Linearizes a group of binary factors on edge `(left, right)` at the
/// given states into a joint quadratic. Factors whose stored variable pair
/// is reversed are accounted for by their own jacobian indices.
pub fn linearize_edge_group(
    graph: &FactorGraph,
    factor_ids: &[usize],
    left_index: usize,
    x_left: &DVector<f64>,
    x_right: &DVector<f64>,
) -> Result<EdgeQuadratic> {
    let d = graph.dim();
    let mut out = EdgeQuadratic::zero(d);
    let mut xbar = DVector::zeros(2 * d);
    xbar.rows_mut(0, d).copy_from(x_left);
    xbar.rows_mut(d, d).copy_from(x_right);
    for &id in factor_ids {
        let factor = &graph.factors[id];
        let eval = graph.eval_pair(factor, x_left, x_right)?;
        let rows = eval.residual.len();
        // stack jacobians into [d_left | d_right] layout
        let mut jac = DMatrix::zeros(rows, 2 * d);
        for (var, j) in &eval.jacobians {
            let col0 = if *var == left_index { 0 } else { d };
            jac.view_mut((0, col0), (rows, d)).copy_from(j);
        }
        accumulate(&mut out.info, &mut out.eta, &mut out.constant, &jac, &eval.residual, &eval.info, &xbar);
    }
    Ok(out)
}
