//! Closed-form Rényi divergence quantities for Gaussian noise and the
//! shifted-divergence budget calculus.
//!
//! A [`ShiftedBudget`] `(z, ε)` stands for the statement
//! `D_α^{(z)}(X_t ‖ X'_t) ≤ ε`: the two processes are within Rényi
//! divergence `ε` once the first one is allowed to move by at most `z` in
//! `W∞`. A contractive step whose two maps differ by at most `s` grows the
//! shift ([`contraction_step`]); a noise step spends part `a` of the shift at
//! cost `R_α(ζ, a)` ([`shift_reduction_step`]). Folding both over a schedule
//! with total allowance equal to total discrepancy ends at shift zero, which
//! is a plain Rényi bound.

use serde::{Deserialize, Serialize};

use crate::error::{finite, invalid, non_negative, positive, unit_interval_open};
use crate::{Error, Result};

/// Relative slack used when a shift that should be exactly zero comes out of
/// a floating-point sum slightly negative.
pub const SHIFT_TOLERANCE: f64 = 1e-10;

/// A finite Rényi order `α > 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RenyiOrder(f64);

impl RenyiOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        finite("alpha", alpha)?;
        if alpha > 1.0 {
            Ok(Self(alpha))
        } else {
            Err(invalid("alpha", format!("Rényi order must be > 1, got {alpha}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for RenyiOrder {
    type Error = Error;

    fn try_from(alpha: f64) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<RenyiOrder> for f64 {
    fn from(order: RenyiOrder) -> f64 {
        order.0
    }
}

/// `(α, ε)`: a Rényi-DP guarantee, or a divergence bound at order `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenyiBound {
    pub order: RenyiOrder,
    pub epsilon: f64,
}

impl RenyiBound {
    pub fn new(order: RenyiOrder, epsilon: f64) -> Result<Self> {
        non_negative("epsilon", epsilon)?;
        Ok(Self { order, epsilon })
    }
}

/// Approximate differential privacy parameters `(ε, δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl DpParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        non_negative("epsilon", epsilon)?;
        unit_interval_open("delta", delta)?;
        Ok(Self { epsilon, delta })
    }
}

/// Measures how well a noise distribution hides a displacement: the largest
/// Rényi divergence between the noise and a copy of itself translated by a
/// vector of norm at most `displacement`.
pub trait NoiseModel {
    fn shift_cost(&self, displacement: f64, order: RenyiOrder) -> f64;
}

/// Isotropic Gaussian noise `N(0, σ² I_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianNoise {
    sigma: f64,
    dim: usize,
}

impl GaussianNoise {
    pub fn new(sigma: f64, dim: usize) -> Result<Self> {
        positive("sigma", sigma)?;
        if dim == 0 {
            return Err(invalid("dim", "dimension must be positive"));
        }
        Ok(Self { sigma, dim })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl NoiseModel for GaussianNoise {
    fn shift_cost(&self, displacement: f64, order: RenyiOrder) -> f64 {
        order.value() * displacement * displacement / (2.0 * self.sigma * self.sigma)
    }
}

/// `α a² / (2σ²)`: the Rényi divergence between `N(a, σ²I)` and `N(0, σ²I)`
/// for any displacement of norm `a`. Independent of the dimension.
pub fn gaussian_renyi(noise: &GaussianNoise, displacement: f64, order: RenyiOrder) -> Result<f64> {
    non_negative("displacement", displacement)?;
    Ok(noise.shift_cost(displacement, order))
}

/// Converts `(α, ε)`-RDP into `(ε + ln(1/δ)/(α−1), δ)`-DP.
pub fn rdp_to_dp(bound: RenyiBound, delta: f64) -> Result<DpParams> {
    unit_interval_open("delta", delta)?;
    let alpha = bound.order.value();
    DpParams::new(bound.epsilon + (1.0 / delta).ln() / (alpha - 1.0), delta)
}

/// Sums RDP guarantees that share an order. The empty composition is
/// `(α, 0)` at the supplied `order`.
pub fn compose_rdp(order: RenyiOrder, bounds: &[RenyiBound]) -> Result<RenyiBound> {
    let mut epsilon = 0.0;
    for bound in bounds {
        if bound.order != order {
            return Err(Error::OrderMismatch {
                left: order.value(),
                right: bound.order.value(),
            });
        }
        epsilon += bound.epsilon;
    }
    RenyiBound::new(order, epsilon)
}

/// The pair `(z, ε)` carried through a CNI: `D_α^{(z)}(X_t ‖ X'_t) ≤ ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedBudget {
    pub shift: f64,
    pub epsilon: f64,
    pub order: RenyiOrder,
}

impl ShiftedBudget {
    pub fn new(shift: f64, epsilon: f64, order: RenyiOrder) -> Result<Self> {
        non_negative("shift", shift)?;
        non_negative("epsilon", epsilon)?;
        Ok(Self {
            shift,
            epsilon,
            order,
        })
    }

    /// `(0, 0)`: identical initial states.
    pub fn zero(order: RenyiOrder) -> Self {
        Self {
            shift: 0.0,
            epsilon: 0.0,
            order,
        }
    }

    /// A budget with no remaining shift is an ordinary divergence bound.
    pub fn into_bound(self) -> Result<RenyiBound> {
        if self.shift > 0.0 {
            return Err(Error::ResidualShift(self.shift));
        }
        RenyiBound::new(self.order, self.epsilon)
    }
}

/// Noise step: spends allowance `a` of the shift, paying `R_α(ζ, a)`.
///
/// Fails when the shift would go negative; never clamps beyond rounding
/// slack of [`SHIFT_TOLERANCE`].
pub fn shift_reduction_step<N: NoiseModel>(
    budget: ShiftedBudget,
    allowance: f64,
    noise: &N,
) -> Result<ShiftedBudget> {
    shift_reduction_at(budget, allowance, noise, 0, 0.0)
}

/// `injected` is the total shift added so far; rounding in a long schedule
/// accumulates relative to it rather than to the current shift.
pub(crate) fn shift_reduction_at<N: NoiseModel>(
    budget: ShiftedBudget,
    allowance: f64,
    noise: &N,
    step: usize,
    injected: f64,
) -> Result<ShiftedBudget> {
    non_negative("allowance", allowance)?;
    let remaining = budget.shift - allowance;
    let slack = SHIFT_TOLERANCE * budget.shift.max(allowance).max(injected);
    if remaining < -slack {
        return Err(Error::InfeasibleSchedule {
            step,
            shift: remaining,
        });
    }
    Ok(ShiftedBudget {
        shift: remaining.max(0.0),
        epsilon: budget.epsilon + noise.shift_cost(allowance, budget.order),
        order: budget.order,
    })
}

/// Contraction step: two contractive maps that differ by at most `s`
/// everywhere grow the shift by `s` and leave the divergence untouched.
pub fn contraction_step(budget: ShiftedBudget, map_discrepancy: f64) -> Result<ShiftedBudget> {
    non_negative("map_discrepancy", map_discrepancy)?;
    Ok(ShiftedBudget {
        shift: budget.shift + map_discrepancy,
        ..budget
    })
}

/// Upper bound on `D_α^{(z)}(N(g, σ²) ‖ N(0, σ²))` from translating the
/// first Gaussian towards the second by `min(z, g)`.
pub fn shifted_gaussian_upper(mean_gap: f64, shift: f64, sigma: f64, order: RenyiOrder) -> Result<f64> {
    non_negative("mean_gap", mean_gap)?;
    non_negative("shift", shift)?;
    positive("sigma", sigma)?;
    let residual = (mean_gap - shift).max(0.0);
    Ok(order.value() * residual * residual / (2.0 * sigma * sigma))
}
