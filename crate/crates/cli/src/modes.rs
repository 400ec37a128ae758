//! Single-point execution of each mode.

use serde_json::{json, Value};

use ddsim_core::drive::{check_slow_switching, classify_regime, derive_couplings, CouplingSet, PulsePair};
use ddsim_core::dynamics::{
    check_adiabatic_elimination, lab_frame_block, propagate_averaged, propagate_bare, propagate_rwa, Frame,
    IntegratorSettings, StateVector, Trajectory,
};
use ddsim_core::effective::{
    diagonal_evolution_check, effective_hamiltonian, evolution_matrix, mixing_angle_and_rabi, EffectiveHamiltonian,
};
use ddsim_core::gates::{analytic_gate, overlap_fidelity, schedule_stirap, synthesize_gate, GateSolution};
use ddsim_core::spectrum::{build_spectrum, SpectrumModel};
use ddsim_core::units;

use crate::config::{ExactTier, ExperimentConfig, Mode};
use crate::error::{CliError, CliResult};
use crate::output::{csv_bytes, fmt, Artifacts};

/// A config resolved against its spectrum.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub spectrum: SpectrumModel,
    pub pulses: PulsePair,
    pub couplings: CouplingSet,
}

/// Checks everything that can be checked without propagating. Every failure
/// here is a schema error.
pub fn prepare(config: ExperimentConfig) -> CliResult<Prepared> {
    let spectrum = build_spectrum(&config.spectrum).map_err(CliError::schema)?;
    let pulses = config.pulses.build(&spectrum).map_err(CliError::schema)?;
    pulses.validate().map_err(CliError::schema)?;
    config.integrator.validate().map_err(CliError::schema)?;
    let s = config.initial_state;
    StateVector::qubit(s.c0, s.c1, spectrum.len(), Frame::Rwa)
        .check(Frame::Rwa, spectrum.len())
        .map_err(CliError::schema)?;
    if let Some(gate) = &config.gate {
        gate.validate().map_err(CliError::schema)?;
    }
    if config.output.samples < 2 {
        return Err(CliError::Schema("output.samples must be >= 2".into()));
    }
    match config.mode {
        Mode::SynthesizeGate if config.gate.is_none() => {
            return Err(CliError::Schema("mode synthesize-gate needs a 'gate' section".into()))
        }
        Mode::Stirap => {
            let st = config.stirap.ok_or_else(|| CliError::Schema("mode stirap needs a 'stirap' section".into()))?;
            if !(st.sigma > 0.0) || !(st.half_window_sigmas > 0.0) || st.delay.is_some_and(|d| !(d >= 0.0)) {
                return Err(CliError::Schema("stirap: sigma, half_window_sigmas must be > 0, delay >= 0".into()));
            }
        }
        Mode::Sweep => {
            let sw =
                config.sweep.as_ref().ok_or_else(|| CliError::Schema("mode sweep needs a 'sweep' section".into()))?;
            if sw.axes.is_empty() {
                return Err(CliError::Schema("sweep needs at least one axis".into()));
            }
            if let Some(a) = sw.axes.iter().find(|a| a.steps < 1) {
                return Err(CliError::Schema(format!("sweep axis '{}' needs steps >= 1", a.path)));
            }
        }
        _ => {}
    }
    let couplings = derive_couplings(&spectrum, &pulses).map_err(CliError::schema)?;
    Ok(Prepared { config, spectrum, pulses, couplings })
}

impl Prepared {
    pub fn initial_state(&self, frame: Frame) -> StateVector {
        let s = self.config.initial_state;
        StateVector::qubit(s.c0, s.c1, self.spectrum.len(), frame)
    }

    pub fn hamiltonian(&self) -> CliResult<EffectiveHamiltonian> {
        Ok(effective_hamiltonian(&self.couplings, self.pulses.phi0, self.pulses.phi1)?)
    }

    /// Same spectrum, different pulses.
    pub fn with_pulses(&self, pulses: PulsePair) -> CliResult<Prepared> {
        let couplings = derive_couplings(&self.spectrum, &pulses)?;
        Ok(Prepared { config: self.config.clone(), spectrum: self.spectrum.clone(), pulses, couplings })
    }

    pub fn propagate(&self, tier: ExactTier, settings: &IntegratorSettings) -> CliResult<Trajectory> {
        let tr = match tier {
            ExactTier::PropagateRwa => {
                propagate_rwa(&self.spectrum, &self.pulses, &self.couplings, &self.initial_state(Frame::Rwa), settings)?
            }
            ExactTier::PropagateAveraged => propagate_averaged(
                &self.spectrum,
                &self.pulses,
                &self.couplings,
                &self.initial_state(Frame::Averaged),
                settings,
            )?,
            ExactTier::PropagateBare => {
                propagate_bare(&self.spectrum, &self.pulses, &self.initial_state(Frame::Bare), settings)?
            }
        };
        Ok(tr)
    }

    /// Lab-frame fidelity of the propagated qubit block against `solution`'s
    /// target; only the rotating-wave tier provides the block.
    pub fn exact_gate_fidelity(&self, tier: ExactTier, solution: &GateSolution) -> CliResult<Option<f64>> {
        if tier != ExactTier::PropagateRwa {
            log::warn!("exact gate fidelity needs the propagate-rwa tier; skipped for {}", tier.name());
            return Ok(None);
        }
        let u = lab_frame_block(&self.spectrum, &self.pulses, &self.couplings, &self.config.integrator)?;
        Ok(Some(overlap_fidelity(&u, &solution.target.matrix())))
    }

    fn regime_summary(&self) -> Value {
        let regime = classify_regime(&self.couplings);
        if !regime.all_off_resonant() {
            log::warn!("drive is not off-resonant on every level ({:?})", regime.overall());
        }
        json!({
            "overall": regime.overall(),
            "report": regime,
            "max_coupling_ratio": self.couplings.max_coupling_ratio(),
            "elimination_bound": 2.0 * self.couplings.sum_coupling_ratio_sqr(),
        })
    }
}

fn trajectory_csv(tr: &Trajectory) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    tr.write_csv(&mut buf)?;
    Ok(buf)
}

fn tier_of(mode: Mode) -> Option<ExactTier> {
    match mode {
        Mode::PropagateRwa => Some(ExactTier::PropagateRwa),
        Mode::PropagateAveraged => Some(ExactTier::PropagateAveraged),
        Mode::PropagateBare => Some(ExactTier::PropagateBare),
        _ => None,
    }
}

fn propagation_summary(prep: &Prepared, tier: ExactTier, tr: &Trajectory) -> Value {
    let elimination = match tier {
        ExactTier::PropagateBare => None,
        _ => check_adiabatic_elimination(tr, &prep.pulses, &prep.couplings).ok(),
    };
    json!({
        "tier": tier.name(),
        "final_populations": tr.final_populations(),
        "peak_manifold_population": tr.peak_manifold_population(),
        "max_norm_drift": tr.max_norm_drift(),
        "stats": tr.stats,
        "elimination": elimination,
    })
}

fn propagate_mode(prep: &Prepared, tier: ExactTier) -> CliResult<Artifacts> {
    let switching = check_slow_switching(&prep.pulses, prep.couplings.delta_qubit);
    let tr = prep.propagate(tier, &prep.config.integrator)?;
    let mut art = Artifacts::new(json!({
        "mode": prep.config.mode,
        "regime": prep.regime_summary(),
        "switching": switching,
        "propagation": propagation_summary(prep, tier, &tr),
    }));
    if prep.config.output.trajectory {
        art.push("trajectory.csv", trajectory_csv(&tr)?);
    }
    Ok(art)
}

fn synthesize(prep: &Prepared) -> CliResult<Option<(GateSolution, Value)>> {
    let Some(spec) = &prep.config.gate else { return Ok(None) };
    let ham = prep.hamiltonian()?;
    let delta = prep.spectrum.delta();
    let solution = synthesize_gate(spec, &ham, delta)?;
    let analytic = analytic_gate(&solution, delta)?;
    let configured = solution.configure(&prep.pulses);
    let value = json!({
        "solution": solution,
        "analytic_matrix": analytic.to_matrix(),
        "configured_pulses": configured,
    });
    Ok(Some((solution, value)))
}

fn effective_mode(prep: &Prepared) -> CliResult<Artifacts> {
    let ham = prep.hamiltonian()?;
    let p = &prep.pulses;
    let evo = mixing_angle_and_rabi(&ham, &p.envelope0, &p.envelope1, p.t_start, p.t_end())?;
    let g = evolution_matrix(&evo, &prep.spectrum, p.t_start, p.t_end());
    let s = prep.config.initial_state;
    let (a, b) = g.apply((s.c0, s.c1))?;
    let gate = synthesize(prep)?.map(|(_, v)| v);
    let summary = json!({
        "mode": prep.config.mode,
        "regime": prep.regime_summary(),
        "hamiltonian": ham,
        "theta0": ham.theta0(),
        "rabi_frequency": ham.rabi(),
        "rabi_rate_per_second": units::to_rate_per_second(ham.rabi()),
        "lambda0_rate_per_second": units::to_rate_per_second(ham.lambda0.abs()),
        "gate_matrix": g,
        "final_populations": [a.norm_sqr(), b.norm_sqr()],
        "adiabaticity": diagonal_evolution_check(&evo),
        "gate": gate,
    });
    let mut art = Artifacts::new(summary);
    let header = ["t", "theta", "theta_dot", "omega", "omega_integral", "phi_lambda", "e_plus", "e_minus"];
    let rows = evo.samples(prep.config.output.samples).into_iter().map(|r| {
        [r.t, r.theta, r.theta_dot, r.omega, r.omega_integral, r.phi_lambda, r.e_plus, r.e_minus]
            .iter()
            .map(|x| fmt(*x))
            .collect()
    });
    art.push("effective.csv", csv_bytes(&header, rows)?);
    Ok(art)
}

fn synthesize_mode(prep: &Prepared) -> CliResult<Artifacts> {
    let (solution, mut gate) = synthesize(prep)?.expect("gate section checked in prepare");
    if let Some(tier) = prep.config.exact {
        let configured = prep.with_pulses(solution.configure(&prep.pulses))?;
        let fidelity = configured.exact_gate_fidelity(tier, &solution)?;
        gate["exact"] = json!({ "tier": tier.name(), "fidelity": fidelity });
    }
    Ok(Artifacts::new(json!({
        "mode": prep.config.mode,
        "regime": prep.regime_summary(),
        "gate": gate,
    })))
}

fn stirap_mode(prep: &Prepared) -> CliResult<Artifacts> {
    let st = prep.config.stirap.expect("stirap section checked in prepare");
    let ham = prep.hamiltonian()?;
    let schedule = schedule_stirap(
        &ham,
        prep.spectrum.delta(),
        st.ordering,
        st.sigma,
        st.delay.unwrap_or(st.sigma),
        st.half_window_sigmas,
    )?;
    if !schedule.limits_match_ordering() {
        log::warn!(
            "mixing angle runs {:.3} -> {:.3}, expected {:.3} -> {:.3}",
            schedule.theta_start,
            schedule.theta_end,
            schedule.expected_theta_start,
            schedule.expected_theta_end
        );
    }
    let configured = prep.with_pulses(schedule.configure(&prep.pulses))?;
    let mut summary = json!({
        "mode": prep.config.mode,
        "regime": configured.regime_summary(),
        "schedule": schedule,
        "configured_pulses": configured.pulses,
    });
    let mut art = Artifacts::new(Value::Null);
    if let Some(tier) = prep.config.exact {
        let tr = configured.propagate(tier, &prep.config.integrator)?;
        let mut exact = propagation_summary(&configured, tier, &tr);
        exact["transfer_probability"] = json!(tr.final_populations()[1]);
        summary["exact"] = exact;
        if prep.config.output.trajectory {
            art.push("trajectory.csv", trajectory_csv(&tr)?);
        }
    }
    art.summary = summary;
    Ok(art)
}

/// Runs a non-sweep mode.
pub fn execute(prep: &Prepared) -> CliResult<Artifacts> {
    match prep.config.mode {
        m @ (Mode::PropagateRwa | Mode::PropagateAveraged | Mode::PropagateBare) => {
            propagate_mode(prep, tier_of(m).unwrap())
        }
        Mode::Effective => effective_mode(prep),
        Mode::SynthesizeGate => synthesize_mode(prep),
        Mode::Stirap => stirap_mode(prep),
        Mode::Sweep => unreachable!("sweeps are dispatched by the caller"),
    }
}

/// Scalar observables of one sweep point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointObservables {
    pub max_coupling_ratio: f64,
    pub theta0: f64,
    pub omega: f64,
    pub t_solution: Option<f64>,
    pub analytic_fidelity: Option<f64>,
    pub final_populations: Option<(f64, f64)>,
    pub peak_manifold_population: Option<f64>,
    /// Exact fidelity when propagated, analytic otherwise.
    pub fidelity: Option<f64>,
}

impl PointObservables {
    pub const HEADER: [&'static str; 9] = [
        "max_coupling_ratio",
        "theta0",
        "omega",
        "t_solution",
        "analytic_fidelity",
        "final_p0",
        "final_p1",
        "peak_manifold_population",
        "fidelity",
    ];

    pub fn cells(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
        vec![
            fmt(self.max_coupling_ratio),
            fmt(self.theta0),
            fmt(self.omega),
            opt(self.t_solution),
            opt(self.analytic_fidelity),
            opt(self.final_populations.map(|p| p.0)),
            opt(self.final_populations.map(|p| p.1)),
            opt(self.peak_manifold_population),
            opt(self.fidelity),
        ]
    }
}

/// Evaluates one sweep point: effective parameters, the gate solution if a
/// target is set, and the exact tier if requested.
pub fn evaluate_point(prep: &Prepared) -> CliResult<PointObservables> {
    let ham = prep.hamiltonian()?;
    let mut obs = PointObservables {
        max_coupling_ratio: prep.couplings.max_coupling_ratio(),
        theta0: ham.theta0(),
        omega: ham.rabi(),
        ..Default::default()
    };
    let mut target = prep.clone();
    let mut solution = None;
    if let Some(spec) = &prep.config.gate {
        let sol = synthesize_gate(spec, &ham, prep.spectrum.delta())?;
        obs.t_solution = Some(sol.duration);
        obs.analytic_fidelity = Some(sol.predicted_fidelity);
        obs.fidelity = Some(sol.predicted_fidelity);
        target = prep.with_pulses(sol.configure(&prep.pulses))?;
        solution = Some(sol);
    }
    if let Some(tier) = prep.config.exact {
        let tr = target.propagate(tier, &prep.config.integrator)?;
        let p = tr.final_populations();
        obs.final_populations = Some((p[0], p[1]));
        obs.peak_manifold_population = Some(tr.peak_manifold_population());
        if let Some(sol) = &solution {
            if let Some(f) = target.exact_gate_fidelity(tier, sol)? {
                obs.fidelity = Some(f);
            }
        }
    }
    Ok(obs)
}
