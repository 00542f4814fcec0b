//! First-order optimizers over flat tensors and row-sparse embedding
//! gradients.

use std::fmt;
use std::str::FromStr;

use crate::model::RowGrads;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub const fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam { .. } => "adam",
        }
    }
}

impl Default for OptimizerKind {
    fn default() -> Self {
        Self::adam()
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::adam()),
            _ => Err(Error::InvalidArgument(format!("unknown optimizer `{s}`"))),
        }
    }
}

/// Moment accumulators for one tensor. Empty under SGD.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Per-tensor optimizer state for one parameter group.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizerState {
    pub tensors: Vec<TensorState>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, sizes: &[usize]) -> Self {
        let tensors = sizes
            .iter()
            .map(|&n| match kind {
                OptimizerKind::Sgd => TensorState::default(),
                OptimizerKind::Adam { .. } => TensorState {
                    step: 0,
                    m: vec![0.0; n],
                    v: vec![0.0; n],
                },
            })
            .collect();
        OptimizerState { tensors }
    }
}

/// Gradient for one tensor.
#[derive(Clone, Copy, Debug)]
pub enum Grad<'a> {
    Dense(&'a [f64]),
    /// Row-sparse gradient of a row-major table; untouched rows (and their
    /// moments) are left as they are.
    Rows(&'a RowGrads),
}

impl Grad<'_> {
    fn is_finite(&self) -> bool {
        match self {
            Grad::Dense(g) => g.iter().all(|x| x.is_finite()),
            Grad::Rows(r) => r.is_finite(),
        }
    }
}

#[inline]
fn update_slice(kind: OptimizerKind, lr: f64, correction: (f64, f64), p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]) {
    match kind {
        OptimizerKind::Sgd => {
            for (pi, gi) in p.iter_mut().zip(g) {
                *pi -= lr * gi;
            }
        }
        OptimizerKind::Adam { beta1, beta2, eps } => {
            let (c1, c2) = correction;
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Applies one update to `params`.
///
/// SGD: `p ← p − lr·g`. Adam: the bias-corrected update with the
/// configured betas and epsilon. Non-finite gradients are rejected before
/// anything is modified.
pub fn optimizer_step(kind: OptimizerKind, params: &mut [f64], grad: Grad<'_>, state: &mut TensorState, lr: f64) -> Result<()> {
    if !grad.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    let correction = match kind {
        OptimizerKind::Sgd => (1.0, 1.0),
        OptimizerKind::Adam { beta1, beta2, .. } => {
            if state.m.len() != params.len() || state.v.len() != params.len() {
                return Err(Error::Shape(format!(
                    "optimizer state holds {} values for a tensor of {}",
                    state.m.len(),
                    params.len()
                )));
            }
            let t = (state.step + 1) as i32;
            (1.0 - beta1.powi(t), 1.0 - beta2.powi(t))
        }
    };
    let adam = matches!(kind, OptimizerKind::Adam { .. });
    match grad {
        Grad::Dense(g) => {
            if g.len() != params.len() {
                return Err(Error::Shape(format!("gradient {} vs parameters {}", g.len(), params.len())));
            }
            let (m, v) = if adam {
                (&mut state.m[..], &mut state.v[..])
            } else {
                (&mut [][..], &mut [][..])
            };
            update_slice(kind, lr, correction, params, g, m, v);
        }
        Grad::Rows(rows) => {
            let w = rows.width;
            if w == 0 || !params.len().is_multiple_of(w) {
                return Err(Error::Shape(format!("row width {w} does not tile {} parameters", params.len())));
            }
            for (&r, g) in &rows.rows {
                let span = r * w..(r + 1) * w;
                if span.end > params.len() {
                    return Err(Error::Shape(format!("gradient row {r} out of range")));
                }
                let (m, v) = if adam {
                    (&mut state.m[span.clone()], &mut state.v[span.clone()])
                } else {
                    (&mut [][..], &mut [][..])
                };
                update_slice(kind, lr, correction, &mut params[span], g, m, v);
            }
        }
    }
    state.step += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_step() {
        let mut p = [1.0];
        let mut st = TensorState::default();
        optimizer_step(OptimizerKind::Sgd, &mut p, Grad::Dense(&[0.5]), &mut st, 0.1).unwrap();
        assert!((p[0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        // m̂ = g, v̂ = g² after one bias-corrected step, so Δ = -lr·g/(|g| + eps).
        let kind = OptimizerKind::adam();
        for &g in &[3.0, -0.002, 1e-3, -250.0] {
            let mut p = [0.5];
            let mut st = OptimizerState::new(kind, &[1]).tensors.remove(0);
            optimizer_step(kind, &mut p, Grad::Dense(&[g]), &mut st, 0.01).unwrap();
            let want = 0.5 - 0.01 * g / (f64::abs(g) + 1e-8);
            assert!((p[0] - want).abs() < 1e-15, "{g}: {} vs {want}", p[0]);
            assert_eq!(st.step, 1);
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::adam()] {
            let mut p = [0.25, -1.0];
            let mut st = OptimizerState::new(kind, &[2]).tensors.remove(0);
            optimizer_step(kind, &mut p, Grad::Dense(&[0.0, 0.0]), &mut st, 0.1).unwrap();
            assert_eq!(p, [0.25, -1.0]);
        }
    }

    #[test]
    fn non_finite_gradient_fails_without_side_effects() {
        let kind = OptimizerKind::adam();
        let mut p = [1.0, 2.0];
        let mut st = OptimizerState::new(kind, &[2]).tensors.remove(0);
        let err = optimizer_step(kind, &mut p, Grad::Dense(&[0.1, f64::NAN]), &mut st, 0.1);
        assert!(matches!(err, Err(Error::NonFinite(_))));
        assert_eq!(p, [1.0, 2.0]);
        assert_eq!(st.step, 0);
    }

    #[test]
    fn row_updates_match_dense_on_touched_rows() {
        let kind = OptimizerKind::adam();
        let mut rows = RowGrads::new(2);
        rows.add(1, 1.0, &[0.3, -0.4]);
        let dense = [0.0, 0.0, 0.3, -0.4, 0.0, 0.0];
        let mut a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut b = a;
        let mut sa = OptimizerState::new(kind, &[6]).tensors.remove(0);
        let mut sb = sa.clone();
        optimizer_step(kind, &mut a, Grad::Rows(&rows), &mut sa, 0.1).unwrap();
        optimizer_step(kind, &mut b, Grad::Dense(&dense), &mut sb, 0.1).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }

    #[test]
    fn shape_errors() {
        let mut p = [1.0, 2.0];
        let mut st = TensorState::default();
        assert!(optimizer_step(OptimizerKind::Sgd, &mut p, Grad::Dense(&[1.0]), &mut st, 0.1).is_err());
        let mut st = TensorState::default();
        assert!(optimizer_step(OptimizerKind::adam(), &mut p, Grad::Dense(&[1.0, 1.0]), &mut st, 0.1).is_err());
    }
}
