//! Degradation from field polarization off the interdonor axis.

use serde::{Deserialize, Serialize};

use crate::drive::{PulsePair, Regime, RegimeReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageEstimate {
    /// max over pulses of (γ_y², γ_z²).
    pub gamma_sqr_max: f64,
    /// Resonant-scheme factor 1 − γ²_max.
    pub resonant_factor: f64,
    /// Off-resonant leakage γ²_max · max_k |λ_k/δ_k|².
    pub off_resonant_leakage: f64,
    pub regime: Regime,
    /// Factor that applies to `regime`; mixed or unclassified regimes use the
    /// resonant (larger) degradation.
    pub w: f64,
}

/// Transverse polarization couples |0⟩/|1⟩ to y- and z-extended orbitals.
///
/// On resonance a fraction γ² of the drive is lost; far off resonance those
/// channels are themselves suppressed by |λ/δ|².
pub fn polarization_leakage(pulses: &PulsePair, regime: &RegimeReport) -> LeakageEstimate {
    let g2 = pulses.max_gamma_sqr();
    let r = regime.max_coupling_ratio;
    let resonant_factor = 1.0 - g2;
    let off_resonant_leakage = g2 * r * r;
    let w = if regime.all_off_resonant() { 1.0 - off_resonant_leakage } else { resonant_factor };
    LeakageEstimate { gamma_sqr_max: g2, resonant_factor, off_resonant_leakage, regime: regime.overall(), w }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::{classify_regime, CouplingSet, Envelope};
    use num_complex::Complex64;

    fn pulses(gamma: f64) -> PulsePair {
        let mut p = PulsePair::new(1.0, 1.0, (600.0, 500.0), Envelope::Constant, Envelope::Constant, 1.0);
        p.gamma_y1 = gamma;
        p.gamma_z0 = -0.5 * gamma;
        p
    }

    fn couplings(lambda: f64, delta: f64, big: f64) -> CouplingSet {
        let l = vec![Complex64::new(lambda, 0.0)];
        CouplingSet {
            lambda0: l.clone(),
            lambda1: l.clone(),
            mu0: l.clone(),
            mu1: l,
            delta: vec![delta],
            delta_qubit: big,
        }
    }

    #[test]
    fn aligned_fields_do_not_leak() {
        let est = polarization_leakage(&pulses(0.0), &classify_regime(&couplings(10.0, -100.0, 5000.0)));
        assert_eq!(est.w, 1.0);
    }

    #[test]
    fn resonant_drive_loses_gamma_squared() {
        let rep = classify_regime(&couplings(10.0, 0.1, 0.5));
        assert!(rep.any_resonant());
        let est = polarization_leakage(&pulses(0.1), &rep);
        assert!((est.w - 0.99).abs() < 1e-12);
    }

    #[test]
    fn off_resonant_leakage_is_doubly_suppressed() {
        let rep = classify_regime(&couplings(10.0, -100.0, 5000.0));
        assert_eq!(rep.overall(), Regime::OffResonantAsymmetric);
        let est = polarization_leakage(&pulses(0.1), &rep);
        assert!((est.off_resonant_leakage - 1e-4).abs() < 1e-15);
        assert!((est.w - (1.0 - 1e-4)).abs() < 1e-15);
    }
}
