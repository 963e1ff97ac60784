//! Twin experiments: truth generation, noise, estimation runs, artifacts
//! and run comparison.

mod noise;
mod run;
mod scenario;
mod tables;

pub use noise::{add_noise, mech_peak, NoiseModel};
pub use run::{
    compare_runs, estimate, estimate_csv, noise_model, observation_records, pod_basis, probe_diagnostics, rel_err, run_scenario,
    read_scenario, run_with_truth, sensitivity_csv, simulate_truth, write_diagnostics, write_json, write_run,
    write_simulation, Comparison, SimulationMeta,
    ComparisonRow, Diagnostics, EstimateOutput, RunMeta, RunOutput, RunTrace, Summary, SummaryRow, TruthRun, Winner,
};
pub use scenario::{
    ElectroSection, FilterKind, FilterSection, LeadsSection, MeasuredNodes, MechSection, NoiseSection, ObsKind,
    ObserveSection, ParamsSection, PodSection, StimulusSection, TwinScenario,
};
pub use tables::{ObsRow, ObservationTable, TruthTable};
