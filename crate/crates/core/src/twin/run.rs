use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::noise::{add_noise, mech_peak, NoiseModel};
use super::scenario::{FilterKind, ObsKind, TwinScenario};
use super::tables::{fmt, split_header, ObsRow, ObservationTable, TruthTable};
use crate::coupled::run::block_norms;
use crate::coupled::{
    coupled_roukf_run, observability_gramian, parameter_probe, sensitivity_curves, CoupledModel, EstimateRow, EstimationReport,
    GramianReport, MechData, SensitivityTrace, StackedObservation,
};
use crate::electro::{ElectroModel, LeadObservation};
use crate::error::{Error, Result};
use crate::filters::{
    roekf_step, simplex_sigma_points, ukf_step, FilterState, JacobianSource, LowRankCovariance, ObservationRecord,
    ParamSet, StepReport,
};
use crate::pod::{build_pod, electro_snapshots, read_basis, state_gram, PodBasis};
use crate::statespace::{propagate, AugmentedState, ObservationOperator, TimeGrid, TransitionOperator};

pub const ESTIMATE_SCHEMA: &str = "# cardassim estimate v1";
pub const SENSITIVITY_SCHEMA: &str = "# cardassim sensitivity v1";
pub const RUN_SCHEMA: &str = "cardassim run v1";

/// Truth trajectory at the window ends and its noise-free observations.
#[derive(Debug, Clone)]
pub struct TruthRun {
    pub states: Vec<AugmentedState>,
    pub table: TruthTable,
    pub clean: ObservationTable,
}

fn aligned(t: f64, every: f64) -> bool {
    let k = (t / every).round();
    (k * every - t).abs() <= 1e-9 * (1.0 + t.abs())
}

enum Model {
    Electro(ElectroModel),
    Coupled(CoupledModel),
}

impl Model {
    fn op(&self) -> &dyn TransitionOperator {
        match self {
            Model::Electro(m) => m,
            Model::Coupled(m) => m,
        }
    }

    fn resting(&self, params: DVector<f64>) -> Result<AugmentedState> {
        match self {
            Model::Electro(m) => Ok(m.augmented(&m.resting()?, params)),
            Model::Coupled(m) => m.resting(params),
        }
    }
}

/// Deterministic forward run of the truth model over all beats.
pub fn simulate_truth(sc: &TwinScenario) -> Result<TruthRun> {
    sc.validate()?;
    let window = sc.window_ms()?;
    let n = sc.n_windows()?;
    let electro = sc.truth_electro()?;
    let model = match sc.coupled(electro.clone())? {
        Some(c) => Model::Coupled(c),
        None => Model::Electro(electro),
    };
    let x0 = model.resting(DVector::zeros(0))?;
    let states = propagate(model.op(), &x0, &TimeGrid::new(0.0, window, n, 1)?)?;

    let layout = x0.layout().clone();
    let mut names = Vec::new();
    for seg in layout.segments() {
        if matches!(seg.name.as_str(), "vm" | "w" | "y") {
            names.extend((0..seg.len).map(|i| format!("{}.{i}", seg.name)));
        }
    }
    let mut table = TruthTable { names, ..Default::default() };
    for (k, x) in states.iter().enumerate() {
        let mut row = Vec::with_capacity(table.names.len());
        for seg in ["vm", "w", "y"] {
            if let Ok(v) = x.state.segment(seg) {
                row.extend_from_slice(v);
            }
        }
        table.times.push(k as f64 * window);
        table.values.push(row);
    }

    let leads = LeadObservation {
        cable: sc.cable()?,
        leads: sc.leads()?,
        dt_obs: sc.observe.ecg_every_ms,
        sigma: sc.filter.ecg_sigma,
    };
    let region = sc.fiber()?.map(|(_, r)| r);
    let mut clean = ObservationTable {
        ecg_dim: leads.output_dim(),
        mech_dim: region.as_ref().map_or(0, |r| r.len()),
        rows: Vec::with_capacity(n),
    };
    for (k, x) in states.iter().enumerate().skip(1) {
        let t = k as f64 * window;
        let ecg = if aligned(t, sc.observe.ecg_every_ms) { Some(leads.observe(x, t)?.as_slice().to_vec()) } else { None };
        let mech = match &region {
            Some(r) if aligned(t, sc.observe.mech_every_ms) => Some(r.restrict(x.state.segment("y")?)),
            _ => None,
        };
        if ecg.is_some() || mech.is_some() {
            clean.rows.push(ObsRow { time: t, ecg, mech });
        }
    }
    Ok(TruthRun { states, table, clean })
}

/// Noise levels of the scenario for one seed; the relative displacement
/// level is taken from the clean data.
pub fn noise_model(sc: &TwinScenario, clean: &ObservationTable, seed: u64) -> NoiseModel {
    let mech_std = sc.noise.mech_std.unwrap_or(sc.noise.mech_rel * mech_peak(clean));
    NoiseModel { ecg_std: sc.noise.ecg_std, mech_std, seed }
}

/// Basis from `pod.basis_file`, or from snapshots of the estimator cable
/// under each `pod.sets` override with the stimulus applied.
pub fn pod_basis(sc: &TwinScenario) -> Result<Option<PodBasis>> {
    let Some(pod) = &sc.pod else { return Ok(None) };
    let basis = match &pod.basis_file {
        Some(p) => read_basis(p)?.truncated(pod.rank)?,
        None => {
            let cable = sc.cable()?;
            let ionic = sc.base_ionic(&cable.config.regions)?;
            let model = ElectroModel::new(cable.clone(), ionic.clone(), sc.stimulus()?, sc.electro.dt_ms, 1, ParamSet::empty())?;
            let sets: Vec<Vec<(String, f64)>> =
                pod.sets.iter().map(|s| s.iter().map(|(k, v)| (k.clone(), *v)).collect()).collect();
            let snaps = electro_snapshots(&model, &sets, pod.t_end_ms.unwrap_or(sc.beat_ms), pod.every_ms)?;
            let gram = state_gram(&cable, &ionic, pod.gram);
            build_pod(&snaps, pod.rank, &gram, pod.gram)?
        }
    };
    if basis.dim() != 2 * sc.electro.n_nodes {
        return Err(Error::config(format!(
            "POD basis has dimension {}, the cable state has {}",
            basis.dim(),
            2 * sc.electro.n_nodes
        )));
    }
    Ok(Some(basis))
}

/// Observability and sensitivity summaries of a run.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub gramians: Vec<GramianReport>,
    pub sensitivity: Option<SensitivityTrace>,
}

#[derive(Debug, Clone)]
pub struct EstimateOutput {
    pub filter: FilterKind,
    pub obs: ObsKind,
    pub report: EstimationReport,
    /// `‖v̂m − vm‖ / ‖vm‖` per row when the truth is known.
    pub vm_rel_err: Vec<Option<f64>>,
    pub diagnostics: Diagnostics,
    pub pod_rank: usize,
}

/// Records at every window end after `start_ms`; blocks outside `obs` or
/// not sampled at that time carry zero weight.
pub fn observation_records(
    sc: &TwinScenario,
    obs: &StackedObservation,
    data: &ObservationTable,
) -> Result<Vec<ObservationRecord>> {
    let window = sc.window_ms()?;
    let kind = sc.obs_kind();
    let first = (sc.observe.start_ms / window).round() as usize + 1;
    let last = sc.n_windows()?;
    (first..=last)
        .map(|k| {
            let t = k as f64 * window;
            let row = data.row_at(t);
            let mut blocks: Vec<Option<&[f64]>> = Vec::new();
            if kind.ecg() {
                blocks.push(row.and_then(|r| r.ecg.as_deref()));
            }
            if kind.mech() {
                blocks.push(row.and_then(|r| r.mech.as_deref()));
            }
            obs.record(t, &blocks)
        })
        .collect()
}

/// Runs the configured filter on `data`. The estimator starts from rest at
/// `observe.start_ms` with the prior parameters.
pub fn estimate(sc: &TwinScenario, data: &ObservationTable, truth: Option<&TruthRun>) -> Result<EstimateOutput> {
    sc.validate()?;
    let kind = sc.filter_kind();
    let obs_kind = sc.obs_kind();
    let params = sc.estimated()?;
    let electro = sc.estimator_electro()?;
    let model = if obs_kind.mech() {
        let mut c = sc.coupled(electro)?.ok_or_else(|| Error::config("mechanical observations need a [mech] section"))?;
        if kind == FilterKind::Coupled {
            c = c.with_mech_data(Some(Arc::new(MechData::new(data.mech_records())?)));
        }
        Model::Coupled(c)
    } else {
        // One-way coupling: the electrical estimate does not depend on the fiber.
        Model::Electro(electro)
    };
    let obs = sc.observation(obs_kind)?;
    let records = observation_records(sc, &obs, data)?;
    let x0 = model.resting(DVector::zeros(params.len()))?;
    let t0 = sc.observe.start_ms;
    let basis = match kind {
        FilterKind::PodRoukf | FilterKind::Coupled => pod_basis(sc)?,
        _ => None,
    };
    let emb = basis.as_ref().map(|b| b.embedding(0)).transpose()?;
    let report = match kind {
        FilterKind::Roukf | FilterKind::PodRoukf | FilterKind::Coupled => {
            coupled_roukf_run(model.op(), &obs, &records, x0, t0, emb.as_ref(), &params, &sc.observer_config())?
        }
        FilterKind::Ukf => {
            let n = x0.state_dim();
            let ne = sc.electro.n_nodes;
            let diag = DVector::from_fn(n + params.len(), |i, _| {
                let s = if i < ne {
                    sc.filter.vm_std
                } else if i < n {
                    sc.filter.w_std
                } else {
                    sc.filter.param_std
                };
                s * s
            });
            let f0 = FilterState::full(x0, DMatrix::from_diagonal(&diag), t0)?;
            let sp = simplex_sigma_points(n + params.len());
            sequential_run(model.op(), &obs, &records, f0, &params, |f, y| ukf_step(f, model.op(), &obs, Some(y), &sp))?
        }
        FilterKind::Roekf => {
            let n = x0.state_dim();
            let p = params.len();
            let l = DMatrix::from_fn(n + p, p, |i, j| if i == n + j { 1.0 } else { 0.0 });
            let u = DMatrix::identity(p, p) / (sc.filter.param_std * sc.filter.param_std);
            let f0 = FilterState::low_rank(x0, LowRankCovariance::new(l, u)?, t0)?;
            let jac = JacobianSource::FiniteDifference;
            sequential_run(model.op(), &obs, &records, f0, &params, |f, y| roekf_step(f, model.op(), &obs, Some(y), &jac))?
        }
    };
    let vm_rel_err = vm_errors(sc, &report, truth)?;
    let diagnostics = run_diagnostics(sc, &obs, &report, &params);
    Ok(EstimateOutput {
        filter: kind,
        obs: obs_kind,
        report,
        vm_rel_err,
        diagnostics,
        pod_rank: basis.map_or(0, |b| b.rank()),
    })
}

fn sequential_run<F>(
    op: &dyn TransitionOperator,
    obs: &StackedObservation,
    records: &[ObservationRecord],
    mut f: FilterState,
    params: &ParamSet,
    step: F,
) -> Result<EstimationReport>
where
    F: Fn(&FilterState, &ObservationRecord) -> Result<(FilterState, StepReport)>,
{
    let mut rows = Vec::with_capacity(records.len());
    let mut states = Vec::with_capacity(records.len());
    for (k, rec) in records.iter().enumerate() {
        let expected = f.time + op.step_length();
        if (rec.time - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
            return Err(Error::config(format!("observation {k} at t = {} does not close the window", rec.time)));
        }
        let (next, rep) = step(&f, rec).map_err(|e| e.at_step(k))?;
        let est = &next.estimate;
        if est.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("estimate is not finite", format!("after observation at t = {}", rec.time)).at_step(k));
        }
        rows.push(EstimateRow {
            time: rec.time,
            params: est.params.iter().cloned().collect(),
            physical: params.to_physical(&est.params)?.into_iter().map(|(_, v)| v).collect(),
            innovation: block_norms(obs, rep.innovation.as_ref(), &rec.noise_norm),
            u_min: rep.u_min_eigenvalue.unwrap_or(f64::NAN),
        });
        states.push(est.state.values.clone());
        f = next;
    }
    Ok(EstimationReport {
        names: params.names().map(String::from).collect(),
        blocks: obs.names().iter().map(|s| s.to_string()).collect(),
        rows,
        final_estimate: f.estimate,
        probes: Vec::new(),
        states,
    })
}

fn vm_errors(sc: &TwinScenario, report: &EstimationReport, truth: Option<&TruthRun>) -> Result<Vec<Option<f64>>> {
    let n = sc.electro.n_nodes;
    let Some(truth) = truth else { return Ok(vec![None; report.rows.len()]) };
    let cols = truth.table.column_range("vm");
    if cols.len() != n {
        return Ok(vec![None; report.rows.len()]);
    }
    Ok(report
        .rows
        .iter()
        .zip(&report.states)
        .map(|(row, x)| {
            let k = truth.table.times.iter().position(|t| (t - row.time).abs() <= 1e-9 * (1.0 + t.abs()))?;
            let vm = &truth.table.values[k][cols.clone()];
            let num: f64 = vm.iter().zip(x.iter()).map(|(a, b)| (a - b).powi(2)).sum();
            let den: f64 = vm.iter().map(|a| a * a).sum();
            (den > 0.0).then(|| (num / den).sqrt())
        })
        .collect())
}

fn run_diagnostics(sc: &TwinScenario, obs: &StackedObservation, report: &EstimationReport, params: &ParamSet) -> Diagnostics {
    if report.probes.is_empty() {
        return Diagnostics::default();
    }
    let dt = sc.window_ms().unwrap_or(1.0);
    let ecg = obs.range("ecg");
    let mech = obs.range("mech");
    let mut gramians = Vec::new();
    let mut push = |range: std::ops::Range<usize>, label: &str| match observability_gramian(&report.probes, dt, range, label) {
        Ok(g) => gramians.push(g),
        Err(e) => log::warn!("gramian `{label}` skipped: {e}"),
    };
    if let Some(e) = &ecg {
        push(e.clone(), "ecg");
    }
    if let Some(m) = &mech {
        push(m.clone(), "mech");
    }
    if ecg.is_some() && mech.is_some() {
        push(0..obs.output_dim(), "ecg+mech");
    }
    let sensitivity = match sensitivity_curves(&report.probes, params, ecg, mech) {
        Ok(s) => Some(s),
        Err(e) => {
            log::warn!("sensitivity skipped: {e}");
            None
        }
    };
    Diagnostics { gramians, sensitivity }
}

/// Prediction-only probe of the estimated parameters around `at`
/// (physical values), observing every modality the scenario records.
/// `delta` is the log-2 spread of the probe particles.
pub fn probe_diagnostics(sc: &TwinScenario, at: &[f64], delta: f64) -> Result<Diagnostics> {
    let mut probe = sc.clone();
    if at.len() != probe.params.estimated.len() {
        return Err(Error::Dimension { context: "probe parameters", expected: probe.params.estimated.len(), got: at.len() });
    }
    for (name, v) in probe.params.estimated.clone().iter().zip(at) {
        probe.params.prior.insert(name.clone(), *v);
    }
    probe.filter.stimulus = true;
    probe.observe.obs = Some(if probe.mech.is_some() { ObsKind::Both } else { ObsKind::Ecg });
    probe.observe.start_ms = 0.0;
    probe.validate()?;
    let params = probe.estimated()?;
    let electro = probe.estimator_electro()?;
    let model = match probe.coupled(electro.clone())? {
        Some(c) => Model::Coupled(c),
        None => Model::Electro(electro),
    };
    let obs = probe.observation(probe.obs_kind())?;
    let x0 = model.resting(DVector::zeros(params.len()))?;
    let mech = obs.range("mech");
    let ecg = obs.range("ecg");
    let (ecg_every, mech_every) = (probe.observe.ecg_every_ms, probe.observe.mech_every_ms);
    let weights = |t: f64| {
        let mut w = obs.noise_norm(t);
        for (range, every) in [(&ecg, ecg_every), (&mech, mech_every)] {
            if let Some(r) = range {
                if !aligned(t, every) {
                    for c in r.clone() {
                        w[c] = 0.0;
                    }
                }
            }
        }
        w
    };
    let dt = probe.window_ms()?;
    let records = parameter_probe(model.op(), &obs, &x0, 0.0, probe.n_windows()?, delta, &weights)?;
    let mut gramians = Vec::new();
    if let Some(e) = &ecg {
        gramians.push(observability_gramian(&records, dt, e.clone(), "ecg")?);
    }
    if mech.is_some() {
        gramians.push(observability_gramian(&records, dt, 0..obs.output_dim(), "ecg+mech")?);
    }
    let sensitivity = Some(sensitivity_curves(&records, &params, ecg, mech)?);
    Ok(Diagnostics { gramians, sensitivity })
}

/// Everything one seed of a scenario produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: TwinScenario,
    pub noise: NoiseModel,
    pub truth: TruthRun,
    pub noisy: ObservationTable,
    pub estimate: EstimateOutput,
}

impl RunOutput {
    pub fn summary(&self) -> Summary {
        Summary::new(&self.scenario, &self.estimate.report)
    }
}

/// Simulates, perturbs and estimates one seed.
pub fn run_scenario(sc: &TwinScenario, seed: u64) -> Result<RunOutput> {
    let truth = simulate_truth(sc)?;
    run_with_truth(sc, truth, seed)
}

pub fn run_with_truth(sc: &TwinScenario, truth: TruthRun, seed: u64) -> Result<RunOutput> {
    let noise = noise_model(sc, &truth.clean, seed);
    let noisy = add_noise(&truth.clean, &noise)?;
    let estimate = estimate(sc, &noisy, Some(&truth))?;
    Ok(RunOutput { scenario: sc.clone(), noise, truth, noisy, estimate })
}

/// Final relative errors in the layout of a parameter identification table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub target: f64,
    pub prior: f64,
    pub prior_err: f64,
    pub estimate: f64,
    pub estimate_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn new(sc: &TwinScenario, report: &EstimationReport) -> Self {
        let last = report.final_physical();
        let rows = sc
            .params
            .estimated
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let target = sc.params.truth[name];
                let prior = sc.params.prior[name];
                let estimate = last.map_or(prior, |v| v[j]);
                SummaryRow {
                    name: name.clone(),
                    target,
                    prior,
                    prior_err: rel_err(prior, target),
                    estimate,
                    estimate_err: rel_err(estimate, target),
                }
            })
            .collect();
        Summary { rows }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<18} {:>10} {:>22} {:>22}\n", "parameter", "target", "prior (error)", "estimate (error)");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<18} {:>10.4} {:>22} {:>22}",
                r.name,
                r.target,
                format!("{:.4} ({:.2}%)", r.prior, 100.0 * r.prior_err),
                format!("{:.4} ({:.2}%)", r.estimate, 100.0 * r.estimate_err)
            );
        }
        s
    }
}

pub fn rel_err(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

pub fn estimate_csv(names: &[String], blocks: &[String], rows: &[EstimateRow], vm_err: &[Option<f64>]) -> String {
    let mut s = format!("{ESTIMATE_SCHEMA}\n");
    let head: Vec<String> = std::iter::once("time".to_string())
        .chain(names.iter().map(|n| format!("p.{n}")))
        .chain(names.iter().cloned())
        .chain(blocks.iter().map(|b| format!("innovation.{b}")))
        .chain(["u_min".to_string(), "vm_rel_err".to_string()])
        .collect();
    let _ = writeln!(s, "{}", head.join(","));
    for (k, r) in rows.iter().enumerate() {
        let mut f = vec![fmt(r.time)];
        f.extend(r.params.iter().chain(&r.physical).chain(&r.innovation).map(|v| fmt(*v)));
        f.push(fmt(r.u_min));
        f.push(vm_err.get(k).copied().flatten().map(fmt).unwrap_or_default());
        let _ = writeln!(s, "{}", f.join(","));
    }
    s
}

pub fn sensitivity_csv(tr: &SensitivityTrace) -> String {
    let mut s = format!("{SENSITIVITY_SCHEMA}\n");
    let head: Vec<String> = std::iter::once("time".to_string())
        .chain(if tr.s_e.is_empty() { vec![] } else { tr.names.iter().map(|n| format!("s_e.{n}")).collect() })
        .chain(if tr.s_m.is_empty() { vec![] } else { tr.names.iter().map(|n| format!("s_m.{n}")).collect() })
        .collect();
    let _ = writeln!(s, "{}", head.join(","));
    for (k, t) in tr.times.iter().enumerate() {
        let f: Vec<String> = std::iter::once(*t)
            .chain(tr.s_e.iter().map(|c| c[k]))
            .chain(tr.s_m.iter().map(|c| c[k]))
            .map(fmt)
            .collect();
        let _ = writeln!(s, "{}", f.join(","));
    }
    s
}

/// Resolved configuration of a run; re-running it reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema: String,
    pub version: String,
    pub seed: u64,
    pub filter: FilterKind,
    pub obs: ObsKind,
    pub window_ms: f64,
    pub noise: NoiseModel,
    pub pod_rank: usize,
    pub scenario: TwinScenario,
}

impl RunMeta {
    pub fn read(dir: &Path) -> Result<Self> {
        let p = dir.join("meta.json");
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: p.display().to_string(), msg: e.to_string() })
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::config(format!("serializing {}: {e}", path.display())))?;
    write(path, &(text + "\n"))
}

pub fn write_diagnostics(dir: &Path, d: &Diagnostics) -> Result<()> {
    if !d.gramians.is_empty() {
        write_json(&dir.join("gramian.json"), &d.gramians)?;
    }
    if let Some(s) = &d.sensitivity {
        write(&dir.join("sensitivity.csv"), &sensitivity_csv(s))?;
    }
    Ok(())
}

/// Writes the full artifact directory of one run.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let e = &out.estimate;
    out.truth.table.write(&dir.join("truth.csv"))?;
    out.truth.clean.write(&dir.join("observations_clean.csv"))?;
    out.noisy.write(&dir.join("observations.csv"))?;
    write(&dir.join("estimate.csv"), &estimate_csv(&e.report.names, &e.report.blocks, &e.report.rows, &e.vm_rel_err))?;
    write_diagnostics(dir, &e.diagnostics)?;
    let meta = RunMeta {
        schema: RUN_SCHEMA.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: out.noise.seed,
        filter: e.filter,
        obs: e.obs,
        window_ms: out.scenario.window_ms()?,
        noise: out.noise,
        pod_rank: e.pod_rank,
        scenario: out.scenario.clone(),
    };
    write_json(&dir.join("meta.json"), &meta)?;
    let mut text = format!(
        "scenario {}  filter {}  observations {}  seed {}\n\n",
        out.scenario.name,
        e.filter.as_str(),
        e.obs.as_str(),
        out.noise.seed
    );
    text.push_str(&out.summary().to_text());
    write(&dir.join("summary.txt"), &text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMeta {
    pub schema: String,
    pub version: String,
    pub scenario: TwinScenario,
}

/// Writes `truth.csv`, `observations_clean.csv` and `meta.json`.
pub fn write_simulation(dir: &Path, sc: &TwinScenario, truth: &TruthRun) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    truth.table.write(&dir.join("truth.csv"))?;
    truth.clean.write(&dir.join("observations_clean.csv"))?;
    let meta = SimulationMeta {
        schema: "cardassim simulation v1".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: sc.clone(),
    };
    write_json(&dir.join("meta.json"), &meta)
}

/// Scenario recorded in the `meta.json` of a simulation or run directory.
pub fn read_scenario(dir: &Path) -> Result<TwinScenario> {
    let p = dir.join("meta.json");
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    let perr = |msg: String| Error::Parse { path: p.display().to_string(), msg };
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| perr(e.to_string()))?;
    let sc = v.get_mut("scenario").map(serde_json::Value::take).ok_or_else(|| perr("no `scenario` entry".into()))?;
    let sc: TwinScenario = serde_json::from_value(sc).map_err(|e| perr(e.to_string()))?;
    sc.validate()?;
    Ok(sc)
}

/// Estimated parameter trajectories read back from a run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub names: Vec<String>,
    pub truth: Vec<f64>,
    pub prior: Vec<f64>,
    pub times: Vec<f64>,
    /// Physical values per row.
    pub physical: Vec<Vec<f64>>,
}

impl RunTrace {
    pub fn read(dir: &Path) -> Result<Self> {
        let meta = RunMeta::read(dir)?;
        let names = meta.scenario.params.estimated.clone();
        let truth = names.iter().map(|n| meta.scenario.params.truth[n]).collect();
        let prior = names.iter().map(|n| meta.scenario.params.prior[n]).collect();
        let p = dir.join("estimate.csv");
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let (head, body) = split_header(&p, &text, ESTIMATE_SCHEMA)?;
        let cols: Vec<usize> = names
            .iter()
            .map(|n| head.iter().position(|h| h == n).ok_or_else(|| super::tables::parse_err(&p, format!("missing column `{n}`"))))
            .collect::<Result<_>>()?;
        let mut times = Vec::new();
        let mut physical = Vec::new();
        for (k, line) in body {
            let f: Vec<&str> = line.split(',').collect();
            let num = |i: usize| {
                f.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| super::tables::parse_err(&p, format!("line {k}: bad field {i}")))
            };
            times.push(num(0)?);
            physical.push(cols.iter().map(|&c| num(c)).collect::<Result<Vec<_>>>()?);
        }
        Ok(RunTrace { names, truth, prior, times, physical })
    }

    pub fn final_errors(&self) -> Vec<f64> {
        match self.physical.last() {
            Some(v) => v.iter().zip(&self.truth).map(|(a, t)| rel_err(*a, *t)).collect(),
            None => vec![f64::NAN; self.names.len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub target: f64,
    pub prior: f64,
    pub est_a: f64,
    pub est_b: f64,
    pub err_a: f64,
    pub err_b: f64,
    /// `err_b − err_a`.
    pub delta: f64,
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Times shared by both runs with the per-parameter errors of A then B.
    pub series: Vec<(f64, Vec<f64>, Vec<f64>)>,
}

impl Comparison {
    /// B has the strictly smaller final error on every parameter.
    pub fn b_dominant(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.winner == Winner::B)
    }

    /// Identification table with one estimate column per run.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:<18} {:>10} {:>22} {:>22} {:>22}  winner\n",
            "parameter", "target", "prior (error)", "A estimate (error)", "B estimate (error)"
        );
        let cell = |v: f64, t: f64| format!("{v:.4} ({:.2}%)", 100.0 * rel_err(v, t));
        for r in &self.rows {
            let w = match r.winner {
                Winner::A => "A",
                Winner::B => "B",
                Winner::Tie => "-",
            };
            let _ = writeln!(
                s,
                "{:<18} {:>10.4} {:>22} {:>22} {:>22}  {w}",
                r.name,
                r.target,
                cell(r.prior, r.target),
                cell(r.est_a, r.target),
                cell(r.est_b, r.target)
            );
        }
        let _ = writeln!(s, "B dominant: {}", if self.b_dominant() { "yes" } else { "no" });
        s
    }

    pub fn series_csv(&self, names: &[String]) -> String {
        let mut s = String::from("time");
        for n in names {
            let _ = write!(s, ",err_a.{n}");
        }
        for n in names {
            let _ = write!(s, ",err_b.{n}");
        }
        s.push('\n');
        for (t, a, b) in &self.series {
            let f: Vec<String> = std::iter::once(*t).chain(a.iter().cloned()).chain(b.iter().cloned()).map(fmt).collect();
            let _ = writeln!(s, "{}", f.join(","));
        }
        s
    }
}

pub fn compare_runs(a: &RunTrace, b: &RunTrace) -> Result<Comparison> {
    if a.names != b.names {
        return Err(Error::Usage(format!("runs estimate different parameters: {:?} vs {:?}", a.names, b.names)));
    }
    if a.truth != b.truth {
        return Err(Error::Usage("runs have different truth values".into()));
    }
    let (ea, eb) = (a.final_errors(), b.final_errors());
    let last = |tr: &RunTrace, j: usize| tr.physical.last().map_or(f64::NAN, |v| v[j]);
    let rows = a
        .names
        .iter()
        .enumerate()
        .map(|(j, n)| ComparisonRow {
            name: n.clone(),
            target: a.truth[j],
            prior: a.prior[j],
            est_a: last(a, j),
            est_b: last(b, j),
            err_a: ea[j],
            err_b: eb[j],
            delta: eb[j] - ea[j],
            winner: if eb[j] < ea[j] {
                Winner::B
            } else if ea[j] < eb[j] {
                Winner::A
            } else {
                Winner::Tie
            },
        })
        .collect();
    let errs = |tr: &RunTrace, k: usize| tr.physical[k].iter().zip(&tr.truth).map(|(v, t)| rel_err(*v, *t)).collect::<Vec<_>>();
    let series = a
        .times
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let j = b.times.iter().position(|s| (s - t).abs() <= 1e-9 * (1.0 + t.abs()))?;
            Some((*t, errs(a, i), errs(b, j)))
        })
        .collect();
    Ok(Comparison { rows, series })
}
