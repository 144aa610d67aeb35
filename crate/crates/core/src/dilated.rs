//! Dilated regularizers on treeplexes and the dilated mirror-descent steps
//! built on them (DMoGDA with the L2 kernel, DMoMWU with entropy).
//!
//! The dilated regularizer is `ψ(x) = Σ_j x[p_j]·ψ_j(x_j / x[p_j])` with unit
//! weights. A prox step `argmin_x η⟨x, g⟩ + D_ψ(x, z)` equals
//! `argmin_x ⟨x, c⟩ + ψ(x)` with `c = ηg − ∇ψ(z)`, which separates into
//! local simplex problems solved children first. For entropy the partial
//! derivative at sequence `s = (j, a)` is `log ẑ_j[a] + 1 − |C_s|`; for L2
//! it is `ẑ_j[a] − Σ_{j'∈C_s} ½‖ẑ_{j'}‖²`.

use crate::efg::{behavior_from_values, BehaviorStrategy, SequenceFormStrategy, Treeplex, ROOT_SEQUENCE};
use crate::error::{check_len, Error, Result};
use crate::simplex::Regularizer;
use crate::vecops;

/// Dilated distance-generating function with unit weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DilatedDgf {
    pub regularizer: Regularizer,
}

impl DilatedDgf {
    pub const ENTROPY: DilatedDgf = DilatedDgf { regularizer: Regularizer::NegativeEntropy };
    pub const L2: DilatedDgf = DilatedDgf { regularizer: Regularizer::HalfSquaredL2 };

    /// `ψ(x)`. Zero entries contribute zero to the entropy.
    pub fn value(&self, tp: &Treeplex, x: &[f64]) -> Result<f64> {
        check_len(tp.seq_count(), x.len())?;
        let mut total = 0.0;
        for p in tp.points() {
            let reach = x[p.parent];
            match self.regularizer {
                Regularizer::NegativeEntropy => {
                    for s in p.sequences() {
                        if x[s] > 0.0 {
                            total += x[s] * (x[s] / reach).ln();
                        }
                    }
                }
                Regularizer::HalfSquaredL2 => {
                    if reach > 0.0 {
                        total += 0.5 * x[p.sequences()].iter().map(|v| v * v).sum::<f64>() / reach;
                    }
                }
            }
        }
        Ok(total)
    }

    /// `∇ψ(z)`, using uniform local strategies below zero-reach sequences.
    pub fn gradient(&self, tp: &Treeplex, z: &[f64]) -> Result<Vec<f64>> {
        check_len(tp.seq_count(), z.len())?;
        if self.regularizer == Regularizer::NegativeEntropy {
            if let Some(s) = z.iter().position(|v| !(*v > 0.0)) {
                return Err(Error::Domain(format!("entropy regularizer needs z > 0, sequence {s} has {}", z[s])));
            }
        }
        self.gradient_at_behavior(tp, &behavior_from_values(tp, z))
    }

    /// `∇ψ` at the sequence-form point induced by `b`. Zero-reach subtrees
    /// keep the local strategies stored in `b`. An entropy coordinate whose
    /// local probability underflowed to zero gets `−∞`, which pins it at
    /// zero in the next prox step.
    pub fn gradient_at_behavior(&self, tp: &Treeplex, b: &BehaviorStrategy) -> Result<Vec<f64>> {
        let b = b.values();
        check_len(tp.seq_count(), b.len())?;
        let mut grad = vec![0.0; tp.seq_count()];
        let child_term = |s: usize| -> f64 {
            match self.regularizer {
                Regularizer::NegativeEntropy => -(tp.children_of(s).len() as f64),
                Regularizer::HalfSquaredL2 => -tp
                    .children_of(s)
                    .iter()
                    .map(|&c| 0.5 * b[tp.point(c).sequences()].iter().map(|v| v * v).sum::<f64>())
                    .sum::<f64>(),
            }
        };
        grad[ROOT_SEQUENCE] = child_term(ROOT_SEQUENCE);
        for p in tp.points() {
            for s in p.sequences() {
                let own = match self.regularizer {
                    Regularizer::NegativeEntropy => b[s].ln() + 1.0,
                    Regularizer::HalfSquaredL2 => b[s],
                };
                grad[s] = own + child_term(s);
            }
        }
        Ok(grad)
    }
}

/// `D_ψ(x, z) = ψ(x) − ψ(z) − ⟨∇ψ(z), x − z⟩`.
pub fn dilated_bregman(tp: &Treeplex, x: &[f64], z: &[f64], dgf: DilatedDgf) -> Result<f64> {
    let grad = dgf.gradient(tp, z)?;
    let lin: f64 = grad.iter().zip(x.iter().zip(z)).map(|(g, (a, b))| g * (a - b)).sum();
    Ok(dgf.value(tp, x)? - dgf.value(tp, z)? - lin)
}

/// `argmin_{x∈𝒳} η⟨x, g⟩ + D_ψ(x, z)` by one bottom-up pass.
pub fn dilated_prox(
    tp: &Treeplex,
    z: &SequenceFormStrategy,
    g: &[f64],
    eta: f64,
    dgf: DilatedDgf,
) -> Result<SequenceFormStrategy> {
    check_len(tp.seq_count(), z.values().len())?;
    dgf.gradient(tp, z.values())?;
    let b = behavior_from_values(tp, z.values());
    Ok(dilated_prox_behavior(tp, &b, g, eta, dgf)?.1)
}

/// The same step with the center given by local strategies. Returns the
/// minimizer as local strategies (defined also where reach is zero) and in
/// sequence form. Iterating on the behavior form keeps strategies in
/// unreached subtrees from being reset between steps.
pub fn dilated_prox_behavior(
    tp: &Treeplex,
    z: &BehaviorStrategy,
    g: &[f64],
    eta: f64,
    dgf: DilatedDgf,
) -> Result<(BehaviorStrategy, SequenceFormStrategy)> {
    let mut local = vec![0.0; tp.seq_count()];
    let mut out = vec![0.0; tp.seq_count()];
    dilated_prox_into(tp, z, g, eta, dgf, &mut local, &mut out)?;
    Ok((BehaviorStrategy::from_trusted(local), SequenceFormStrategy::from_trusted(out)))
}

pub(crate) fn dilated_prox_into(
    tp: &Treeplex,
    z: &BehaviorStrategy,
    g: &[f64],
    eta: f64,
    dgf: DilatedDgf,
    local: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    check_len(tp.seq_count(), g.len())?;
    if !(eta > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {eta}")));
    }
    if let Some(v) = g.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite gradient entry {v}")));
    }
    let grad = dgf.gradient_at_behavior(tp, z)?;
    // Local costs; each sequence also absorbs the optimal values of the
    // decision points below it.
    let mut cost: Vec<f64> = g.iter().zip(&grad).map(|(gi, d)| eta * gi - d).collect();
    let mut value = vec![0.0; tp.num_points()];
    local[ROOT_SEQUENCE] = 1.0;
    for j in tp.bottom_up() {
        let p = tp.point(j);
        for s in p.sequences() {
            cost[s] += tp.children_of(s).iter().map(|&c| value[c]).sum::<f64>();
        }
        let c = &cost[p.sequences()];
        let x = &mut local[p.sequences()];
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        value[j] = match dgf.regularizer {
            Regularizer::NegativeEntropy => -vecops::softmax_into(&neg, x),
            Regularizer::HalfSquaredL2 => {
                vecops::project_simplex_into(&neg, x);
                vecops::dot(x, c) + 0.5 * vecops::dot(x, x)
            }
        };
    }
    out[ROOT_SEQUENCE] = 1.0;
    for &j in tp.top_down() {
        let p = tp.point(j);
        let reach = out[p.parent];
        for s in p.sequences() {
            out[s] = reach * local[s];
        }
    }
    Ok(())
}

/// Dilated mirror descent with momentum: a prox step against `−μ_t`.
pub fn dmomd_step(
    tp: &Treeplex,
    z: &SequenceFormStrategy,
    momentum: &[f64],
    eta: f64,
    dgf: DilatedDgf,
) -> Result<SequenceFormStrategy> {
    let neg: Vec<f64> = momentum.iter().map(|m| -m).collect();
    dilated_prox(tp, z, &neg, eta, dgf)
}
