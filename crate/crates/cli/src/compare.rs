//! Exact propagation against the effective two-level model.

use serde::{Deserialize, Serialize};
use serde_json::json;

use ddsim_core::drive::{classify_regime, Regime};
use ddsim_core::effective::{evolution_matrix, mixing_angle_and_rabi};

use crate::config::ExactTier;
use crate::error::CliResult;
use crate::modes::Prepared;
use crate::output::{csv_bytes, fmt, Artifacts};

/// Largest max_k |λ_k/δ_k| for which the effective model is trusted.
pub const VALIDITY_RATIO: f64 = 0.1;
/// Population deviations up to `BOUND_FACTOR · r²` are expected.
pub const BOUND_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub exact: ExactTier,
    pub samples: usize,
    /// max_k |λ_k/δ_k|.
    pub coupling_ratio: f64,
    pub regime: Regime,
    /// r ≤ 0.1 and every level off resonance.
    pub within_validity: bool,
    pub bound: f64,
    /// max over time and over |0⟩, |1⟩ of |P_exact − P_effective|.
    pub max_deviation: f64,
    pub t_at_max: f64,
    pub final_deviation: f64,
    pub peak_manifold_population: f64,
    pub pass: bool,
}

pub fn compare_models(prep: &Prepared) -> CliResult<(ComparisonReport, Artifacts)> {
    let tier = prep.config.exact.unwrap_or(ExactTier::PropagateRwa);
    let p = &prep.pulses;
    let mut settings = prep.config.integrator.clone();
    if settings.save_interval.is_none() {
        settings.save_interval = Some(p.duration / (prep.config.output.samples - 1) as f64);
    }
    let tr = prep.propagate(tier, &settings)?;
    let ham = prep.hamiltonian()?;
    let evo = mixing_angle_and_rabi(&ham, &p.envelope0, &p.envelope1, p.t_start, p.t_end())?;
    let s = prep.config.initial_state;

    let mut rows = Vec::with_capacity(tr.len());
    let (mut max_dev, mut t_at_max, mut last_dev) = (0.0f64, p.t_start, 0.0);
    for (i, &t) in tr.times.iter().enumerate() {
        let (a, b) = evolution_matrix(&evo, &prep.spectrum, p.t_start, t).apply((s.c0, s.c1))?;
        let pops = tr.populations(i);
        let manifold: f64 = pops[2..].iter().sum();
        let (e0, e1) = (a.norm_sqr(), b.norm_sqr());
        let dev = (pops[0] - e0).abs().max((pops[1] - e1).abs());
        if dev > max_dev {
            max_dev = dev;
            t_at_max = t;
        }
        last_dev = dev;
        rows.push(vec![fmt(t), fmt(pops[0]), fmt(pops[1]), fmt(manifold), fmt(e0), fmt(e1), fmt(dev)]);
    }

    let regime = classify_regime(&prep.couplings);
    let r = prep.couplings.max_coupling_ratio();
    let within_validity = r <= VALIDITY_RATIO && regime.all_off_resonant();
    if !within_validity {
        log::warn!("effective model out of validity: r = {r:.3}, regime {:?}", regime.overall());
    }
    let bound = BOUND_FACTOR * r * r;
    let report = ComparisonReport {
        exact: tier,
        samples: tr.len(),
        coupling_ratio: r,
        regime: regime.overall(),
        within_validity,
        bound,
        max_deviation: max_dev,
        t_at_max,
        final_deviation: last_dev,
        peak_manifold_population: tr.peak_manifold_population(),
        pass: within_validity && max_dev <= bound,
    };
    let header = ["t", "p0_exact", "p1_exact", "p_manifold", "p0_effective", "p1_effective", "deviation"];
    let mut art = Artifacts::new(json!({ "mode": "compare", "report": report }));
    art.push("compare.csv", csv_bytes(&header, rows)?);
    Ok((report, art))
}
