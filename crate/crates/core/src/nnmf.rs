//! Non-negative matrix factorization `V ≈ W·H` with Lee–Seung
//! multiplicative updates on the Euclidean objective `‖V − WH‖²_F`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

/// Denominator guard in the multiplicative updates.
pub const EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnmfParams {
    pub rank: usize,
    pub max_iter: usize,
    /// Stop once the relative objective decrease falls below this.
    pub tol: f64,
}

impl Default for NnmfParams {
    fn default() -> Self {
        NnmfParams { rank: 8, max_iter: 500, tol: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    W,
    H,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorPair {
    /// rows(V) × rank basis.
    pub w: Matrix,
    /// rank × cols(V) abundance.
    pub h: Matrix,
    pub rank: usize,
    /// `‖V − WH‖_F` at exit.
    pub final_error: f64,
    /// Objective `‖V − WH‖²_F`: the initial value, then one entry per iteration.
    pub error_trace: Vec<f64>,
}

impl FactorPair {
    pub fn iterations(&self) -> usize {
        self.error_trace.len().saturating_sub(1)
    }

    pub fn reconstruction(&self) -> Matrix {
        self.w.matmul(&self.h)
    }
}

fn check_input(v: &Matrix, rank: usize) -> Result<()> {
    if let Some(bad) = v.as_slice().iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::InvalidParameter(format!("factorization input has entry {bad}; must be non-negative")));
    }
    let limit = v.rows().min(v.cols());
    if rank < 1 || rank > limit {
        return Err(Error::InvalidParameter(format!("rank {rank} outside 1..={limit}")));
    }
    Ok(())
}

/// Factorize from a seeded uniform `(0, 1]` initialization.
pub fn factorize(v: &Matrix, params: &NnmfParams, seed: u64) -> Result<FactorPair> {
    check_input(v, params.rank)?;
    let mut rng = seed::rng(seed);
    let mut init = |rows, cols| Matrix::from_fn(rows, cols, |_, _| 1.0 - rng.random::<f64>());
    let w0 = init(v.rows(), params.rank);
    let h0 = init(params.rank, v.cols());
    factorize_from(v, w0, h0, params)
}

/// Factorize from explicit initial factors.
pub fn factorize_from(v: &Matrix, mut w: Matrix, mut h: Matrix, params: &NnmfParams) -> Result<FactorPair> {
    let rank = w.cols();
    check_input(v, rank)?;
    if w.rows() != v.rows() || h.rows() != rank || h.cols() != v.cols() {
        return Err(Error::Shape(format!(
            "initial factors {:?}·{:?} do not match {:?}",
            w.shape(),
            h.shape(),
            v.shape()
        )));
    }
    if !(w.is_non_negative() && h.is_non_negative()) {
        return Err(Error::InvalidParameter("initial factors must be non-negative".into()));
    }
    let mut objective = v.sq_distance(&w.matmul(&h));
    let mut trace = Vec::with_capacity(params.max_iter + 1);
    trace.push(objective);
    for _ in 0..params.max_iter {
        // H ← H ∘ (WᵀV) / (WᵀWH + ε)
        let wtv = w.t_matmul(v);
        let wtwh = w.t_matmul(&w).matmul(&h);
        for ((hv, num), den) in h.as_mut_slice().iter_mut().zip(wtv.as_slice()).zip(wtwh.as_slice()) {
            *hv *= num / (den + EPSILON);
        }
        // W ← W ∘ (VHᵀ) / (WHHᵀ + ε)
        let vht = v.matmul_t(&h);
        let whht = w.matmul(&h.matmul_t(&h));
        for ((wv, num), den) in w.as_mut_slice().iter_mut().zip(vht.as_slice()).zip(whht.as_slice()) {
            *wv *= num / (den + EPSILON);
        }
        let next = v.sq_distance(&w.matmul(&h));
        if !next.is_finite() {
            return Err(Error::Numeric("factorization objective became non-finite".into()));
        }
        trace.push(next);
        let converged = next == 0.0 || (objective - next) / objective < params.tol;
        objective = next;
        if converged {
            break;
        }
    }
    Ok(FactorPair { w, h, rank, final_error: objective.sqrt(), error_trace: trace })
}

/// The selected factor, `rows(V) × r` for W or `r × cols(V)` for H.
pub fn feature_of(fp: &FactorPair, which: Factor) -> &Matrix {
    match which {
        Factor::W => &fp.w,
        Factor::H => &fp.h,
    }
}
