//! Privacy tables computed from parameters alone.

use anyhow::Result;
use pai_core::accountant::{
    default_alpha_grid, local_rdp, multiepoch_pnmsgd_rdp, per_index_pnsgd_rdp, stop_noise_floor,
    stop_pnsgd_rdp, stop_pnsgd_rdp_stated, tightest_dp, SgdPrivacyConfig,
};
use pai_core::divergence::RenyiOrder;
use serde::Serialize;

use crate::experiments::table_indices;

/// One RDP value of one guarantee at one order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdpEntry {
    pub quantity: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub alpha: f64,
    /// `None` when the guarantee's hypotheses fail at this order.
    pub rdp: Option<f64>,
}

/// Best `(ε, δ)` of one guarantee over the default order grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpEntry {
    pub quantity: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccountTables {
    pub rdp: Vec<RdpEntry>,
    pub dp: Vec<DpEntry>,
}

type Curve<'a> = Box<dyn Fn(RenyiOrder) -> Option<f64> + 'a>;

pub fn account(cfg: &SgdPrivacyConfig, orders: &[RenyiOrder], delta: f64) -> Result<AccountTables> {
    let mut curves: Vec<(&'static str, Option<usize>, Curve)> = vec![(
        "local",
        None,
        Box::new(move |a| local_rdp(cfg.lipschitz(), cfg.sigma(), a).ok().map(|b| b.epsilon)),
    )];
    for t in table_indices(cfg.n()) {
        curves.push((
            "per-index",
            Some(t),
            Box::new(move |a| per_index_pnsgd_rdp(cfg, t, a).ok().map(|b| b.epsilon)),
        ));
    }
    curves.push(("stop-certified", None, Box::new(move |a| stop_pnsgd_rdp(cfg, a).ok().map(|b| b.epsilon))));
    curves.push(("stop-stated", None, Box::new(move |a| stop_pnsgd_rdp_stated(cfg, a).ok().map(|b| b.epsilon))));
    curves.push((
        "multi-epoch",
        None,
        Box::new(move |a| multiepoch_pnmsgd_rdp(cfg, a).ok().map(|b| b.exact)),
    ));

    let mut rdp = Vec::new();
    for (quantity, index, curve) in &curves {
        for &a in orders {
            rdp.push(RdpEntry {
                quantity,
                index: *index,
                alpha: a.value(),
                rdp: curve(a),
            });
        }
    }

    let grid = default_alpha_grid();
    let mut dp = Vec::new();
    for (quantity, index, curve) in &curves {
        // only orders where the guarantee holds take part in the minimum
        let admissible: Vec<RenyiOrder> = grid
            .iter()
            .copied()
            .filter(|&a| match *quantity {
                "stop-certified" | "stop-stated" => cfg.sigma() >= stop_noise_floor(cfg.lipschitz(), a),
                _ => true,
            })
            .collect();
        if admissible.is_empty() {
            continue;
        }
        let (best, alpha) = tightest_dp(|a| curve(a).unwrap_or(f64::INFINITY), delta, &admissible)?;
        if best.epsilon.is_finite() {
            dp.push(DpEntry {
                quantity,
                index: *index,
                epsilon: best.epsilon,
                delta,
                alpha: alpha.value(),
            });
        }
    }
    Ok(AccountTables { rdp, dp })
}

/// Plain-text rendering of [`AccountTables`].
pub fn render(tables: &AccountTables) -> String {
    let mut out = String::from("quantity        index      alpha          rdp\n");
    for e in &tables.rdp {
        let index = e.index.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
        let rdp = e.rdp.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "n/a".into());
        out.push_str(&format!("{:<15} {:>5} {:>10.4} {:>12}\n", e.quantity, index, e.alpha, rdp));
    }
    out.push_str("\nquantity        index      epsilon      delta      alpha\n");
    for e in &tables.dp {
        let index = e.index.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<15} {:>5} {:>12.6} {:>10.3e} {:>10.4}\n",
            e.quantity, index, e.epsilon, e.delta, e.alpha
        ));
    }
    out
}
