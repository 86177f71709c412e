use serde::{Deserialize, Serialize};

use super::graph::NetworkGraph;
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    /// `v ← m·v + g;  p ← p − lr·v`
    SgdMomentum { momentum: f64 },
    /// Bias-corrected first and second moments.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: OptimizerKind,
    lr: f64,
    steps: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, lr: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::param(format!("learning rate must be positive, got {lr}")));
        }
        match kind {
            OptimizerKind::SgdMomentum { momentum } if !(0.0..1.0).contains(&momentum) => {
                return Err(Error::param("momentum must lie in [0, 1)"));
            }
            OptimizerKind::Adam { beta1, beta2, eps }
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || eps <= 0.0 =>
            {
                return Err(Error::param("adam betas must lie in [0, 1) and eps > 0"));
            }
            _ => {}
        }
        Ok(Self {
            kind,
            lr,
            steps: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    pub fn sgd(lr: f64, momentum: f64) -> Result<Self> {
        Self::new(OptimizerKind::SgdMomentum { momentum }, lr)
    }

    /// Adam with β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn adam(lr: f64) -> Result<Self> {
        Self::new(
            OptimizerKind::Adam {
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            lr,
        )
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::shape(format!(
                "{} parameters but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(Error::shape(format!(
                    "parameter {i} has shape {:?} but gradient {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
            if matches!(self.kind, OptimizerKind::Adam { .. }) {
                self.second = self.first.clone();
            }
        } else if self.first.len() != params.len()
            || self.first.iter().zip(params.iter()).any(|(a, p)| a.shape() != p.shape())
        {
            return Err(Error::shape("accumulators do not match the parameter list"));
        }
        self.steps += 1;
        let lr = self.lr;
        match self.kind {
            OptimizerKind::SgdMomentum { momentum } => {
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.first) {
                    for ((pv, gv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
                        *vv = momentum * *vv + gv;
                        *pv -= lr * *vv;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let t = self.steps as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.first).zip(&mut self.second) {
                    let it = p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut());
                    for (((pv, gv), mv), vv) in it {
                        *mv = beta1 * *mv + (1.0 - beta1) * gv;
                        *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                        *pv -= lr * (*mv / c1) / ((*vv / c2).sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies the stored gradients of every trainable parameter in `graph`.
    pub fn step_graph(&mut self, graph: &mut NetworkGraph) -> Result<()> {
        let pairs = graph.trainable_pairs();
        let (mut ps, gs): (Vec<&mut Tensor>, Vec<&Tensor>) = pairs.into_iter().unzip();
        self.step(&mut ps, &gs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: f64) -> Tensor {
        Tensor::new(vec![1], vec![v]).unwrap()
    }

    #[test]
    fn sgd_definition() {
        let mut o = OptimizerState::sgd(0.1, 0.0).unwrap();
        let mut p = one(0.0);
        o.step(&mut [&mut p], &[&one(1.0)]).unwrap();
        assert!((p.data()[0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn sgd_momentum_accumulates() {
        let mut o = OptimizerState::sgd(0.01, 0.937).unwrap();
        let mut p = one(0.0);
        o.step(&mut [&mut p], &[&one(1.0)]).unwrap();
        o.step(&mut [&mut p], &[&one(1.0)]).unwrap();
        // v1 = 1, v2 = 1.937
        assert!((p.data()[0] + 0.01 * (1.0 + 1.937)).abs() < 1e-15);
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        for mut o in [OptimizerState::sgd(0.5, 0.9).unwrap(), OptimizerState::adam(1e-3).unwrap()] {
            let mut p = Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap();
            let before = p.clone();
            for _ in 0..5 {
                o.step(&mut [&mut p], &[&Tensor::zeros(&[3])]).unwrap();
            }
            assert_eq!(p, before);
        }
    }

    #[test]
    fn adam_first_step_is_unit_scaled() {
        // m̂ = g, v̂ = g², update = α·g/(|g| + ε) ≈ α
        let alpha = 1e-4;
        let mut o = OptimizerState::adam(alpha).unwrap();
        let mut p = one(0.0);
        o.step(&mut [&mut p], &[&one(1.0)]).unwrap();
        let want = -alpha / (1.0 + 1e-8);
        assert!((p.data()[0] - want).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut o = OptimizerState::adam(0.1).unwrap();
        let mut p = Tensor::zeros(&[2]);
        assert!(o.step(&mut [&mut p], &[&Tensor::zeros(&[3])]).is_err());
        assert!(OptimizerState::sgd(0.0, 0.5).is_err());
    }
}
