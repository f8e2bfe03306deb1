//! Closed-form sufficient measurement counts.
//!
//! All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `(√(2 ln(M−k)) + √B)²·k + kB`
    Group,
    /// The group bound divided by `(1−ε)²`.
    Noisy,
    /// `(2s+1)·ln(p−s)`
    Lasso,
    /// `(√(2 ln L) + √d)²`
    ChisqMax,
}

/// Parameters a bound was evaluated at. Unused fields are omitted from JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    #[serde(skip_serializing_if = "Option::is_none", rename = "M")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", rename = "B")]
    pub b: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", rename = "L")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub inputs: BoundInputs,
    pub raw: f64,
    /// `⌈raw⌉`, at least 1.
    pub measurements: u64,
}

impl BoundReport {
    fn new(kind: BoundKind, inputs: BoundInputs, raw: f64) -> Self {
        BoundReport { kind, inputs, raw, measurements: (raw.ceil() as u64).max(1) }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `(√(2 ln L) + √d)²`, an upper bound on `E[max of L χ²_d variables]`.
pub fn chisq_max_bound(l: usize, d: usize) -> f64 {
    let log_term = if l > 1 { (2.0 * (l as f64).ln()).sqrt() } else { 0.0 };
    (log_term + (d as f64).sqrt()).powi(2)
}

pub fn chisq_max_report(l: usize, d: usize) -> Result<BoundReport> {
    if l == 0 || d == 0 {
        return Err(Error::InvalidParameter("L and d must be >= 1".into()));
    }
    let inputs = BoundInputs { l: Some(l), d: Some(d), ..Default::default() };
    Ok(BoundReport::new(BoundKind::ChisqMax, inputs, chisq_max_bound(l, d)))
}

/// Measurements sufficient to recover a signal supported on `k` of `M`
/// groups of size at most `B`. The `ln(M−k)` term is dropped when `M−k ≤ 1`.
pub fn group_bound(m: usize, k: usize, b: usize) -> Result<BoundReport> {
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= M, got k = {k}, M = {m}")));
    }
    if b == 0 {
        return Err(Error::InvalidParameter("group size B must be >= 1".into()));
    }
    let raw = chisq_max_bound(m - k, b) * k as f64 + (k * b) as f64;
    let inputs = BoundInputs { m: Some(m), k: Some(k), b: Some(b), ..Default::default() };
    Ok(BoundReport::new(BoundKind::Group, inputs, raw))
}

/// Measurements sufficient for `‖x̂ − x*‖ ≤ 2δ/ε` under bounded noise.
pub fn noisy_bound(m: usize, k: usize, b: usize, epsilon: f64) -> Result<BoundReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let exact = group_bound(m, k, b)?;
    let raw = exact.raw / (1.0 - epsilon).powi(2);
    let inputs = BoundInputs { epsilon: Some(epsilon), ..exact.inputs };
    Ok(BoundReport::new(BoundKind::Noisy, inputs, raw))
}

/// Standard ℓ1 bound for an `s`-sparse signal in `ℝ^p`.
pub fn lasso_bound(s: usize, p: usize) -> Result<BoundReport> {
    if s == 0 || s >= p {
        return Err(Error::InvalidParameter(format!("need 1 <= s < p, got s = {s}, p = {p}")));
    }
    let raw = (2 * s + 1) as f64 * ((p - s) as f64).ln();
    let inputs = BoundInputs { s: Some(s), p: Some(p), ..Default::default() };
    Ok(BoundReport::new(BoundKind::Lasso, inputs, raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_model::{make_scenario, ActiveSet, ScenarioKind, ScenarioParams};

    #[test]
    fn group_bound_reported_values() {
        let r = group_bound(100, 5, 20).unwrap();
        assert!((r.raw - 380.5).abs() < 1.0, "{}", r.raw);
        assert_eq!(r.measurements, 381);
        let r = group_bound(100, 5, 40).unwrap();
        assert!((620.0..=640.0).contains(&r.raw), "{}", r.raw);
        let r = group_bound(16382, 47, 2).unwrap();
        assert!((1680.0..=1695.0).contains(&r.raw), "{}", r.raw);
    }

    #[test]
    fn group_bound_edge_cases() {
        assert!(group_bound(5, 6, 2).is_err());
        assert!(group_bound(5, 0, 2).is_err());
        assert!(group_bound(5, 1, 0).is_err());
        // M = k and M − k = 1 drop the log term: 2k·B
        assert_eq!(group_bound(4, 4, 3).unwrap().raw, 24.0);
        assert_eq!(group_bound(5, 4, 3).unwrap().raw, 24.0);
    }

    #[test]
    fn noisy_bound_values() {
        let exact = group_bound(100, 5, 20).unwrap().raw;
        let r = noisy_bound(100, 5, 20, 0.5).unwrap();
        assert!((r.raw - 4.0 * exact).abs() < 1e-9);
        assert!((r.raw - 1522.0).abs() < 4.0);
        let r = noisy_bound(100, 5, 20, 0.9).unwrap();
        assert!((r.raw / exact - 100.0).abs() < 1e-9);
        let tiny = noisy_bound(100, 5, 20, 1e-12).unwrap();
        assert!((tiny.raw - exact).abs() < 1e-6);
        assert!(noisy_bound(100, 5, 20, 0.0).is_err());
        assert!(noisy_bound(100, 5, 20, 1.0).is_err());
    }

    #[test]
    fn lasso_bound_values() {
        assert!((lasso_bound(200, 4000).unwrap().raw - 3305.0).abs() < 5.0);
        assert!((lasso_bound(44, 139).unwrap().raw - 405.0).abs() < 5.0);
        let r = lasso_bound(100, 2000).unwrap().raw;
        assert!((r - 201.0 * 1900f64.ln()).abs() < 1e-9);
        assert!((r - 1518.0).abs() < 1.0);
        assert!(lasso_bound(10, 10).is_err());
        assert!(lasso_bound(0, 10).is_err());
    }

    #[test]
    fn chisq_bound_values() {
        assert_eq!(chisq_max_bound(1, 1), 1.0);
        for d in [1, 2, 7, 40] {
            assert!((chisq_max_bound(1, d) - d as f64).abs() < 1e-12);
        }
        assert!((chisq_max_bound(95, 20) - 56.10).abs() < 0.01);
        let rep = chisq_max_report(95, 20).unwrap();
        assert_eq!(rep.measurements, 57);
        assert!(chisq_max_report(0, 3).is_err());
    }

    #[test]
    fn monotone_in_m_and_b() {
        for m in [3usize, 10, 50, 200] {
            for b in 1..12 {
                for k in 1..m {
                    let here = group_bound(m, k, b).unwrap().raw;
                    assert!(group_bound(m + 1, k, b).unwrap().raw >= here);
                    assert!(group_bound(m, k, b + 1).unwrap().raw >= here);
                }
            }
        }
    }

    #[test]
    fn not_monotone_in_k_near_m() {
        // Shrinking M − k removes more log term than the extra group adds.
        assert!(group_bound(3, 2, 1).unwrap().raw < group_bound(3, 1, 1).unwrap().raw);
        for k in 1..20 {
            assert!(group_bound(1000, k + 1, 10).unwrap().raw > group_bound(1000, k, 10).unwrap().raw);
        }
    }

    #[test]
    fn noisy_rescales_exactly() {
        for eps in [0.1, 0.25, 0.5, 0.75] {
            let e = group_bound(40, 3, 7).unwrap().raw;
            let n = noisy_bound(40, 3, 7, eps).unwrap().raw;
            assert!((n * (1.0 - eps).powi(2) - e).abs() <= 1e-12 * e);
        }
    }

    #[test]
    fn disjoint_sparsity_term_equals_union_size() {
        let g = make_scenario(ScenarioKind::Disjoint, 30, 6, ScenarioParams::default()).unwrap();
        for k in 1..=30 {
            let a = ActiveSet::random(&g, k, k as u64).unwrap();
            let r = group_bound(30, k, 6).unwrap();
            let sparsity = r.raw - chisq_max_bound(30 - k, 6) * k as f64;
            assert!((sparsity - a.union_support().len() as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn report_json_omits_unused_inputs() {
        let json = serde_json::to_value(lasso_bound(44, 139).unwrap()).unwrap();
        assert_eq!(json["kind"], "lasso");
        assert_eq!(json["inputs"].as_object().unwrap().len(), 2);
        assert_eq!(json["measurements"], 406);
    }
}
