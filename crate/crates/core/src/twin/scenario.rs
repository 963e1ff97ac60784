use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coupled::{CoupledModel, CoupledObserverConfig, StackedObservation};
use crate::electro::{
    Cable, CableConfig, CableModel, ElectroModel, IonicConfig, LeadField, LeadObservation, RegionPartition,
    StimulusProtocol,
};
use crate::error::{Error, Result};
use crate::filters::ParamSet;
use crate::mech::{DisplacementObservation, Fiber, FiberConfig, MeasuredRegion};
use crate::pod::GramKind;
use crate::statespace::ObservationOperator;

/// Complete twin experiment: truth model, estimator, noise and schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwinScenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "one")]
    pub beats: usize,
    #[serde(default = "default_beat")]
    pub beat_ms: f64,
    #[serde(default)]
    pub electro: ElectroSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mech: Option<MechSection>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub observe: ObserveSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pod: Option<PodSection>,
}

fn default_name() -> String {
    "twin".into()
}
fn one() -> usize {
    1
}
fn default_beat() -> f64 {
    800.0
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElectroSection {
    pub n_nodes: usize,
    pub length_mm: f64,
    pub dt_ms: f64,
    pub model: CableModel,
    pub sigma_i: f64,
    pub sigma_e: f64,
    pub am: f64,
    pub cm: f64,
    pub tau_in: f64,
    pub tau_out: f64,
    pub tau_open: f64,
    /// Per region; missing regions keep the defaults.
    pub tau_close: BTreeMap<String, f64>,
    pub v_gate: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub stimulus: StimulusSection,
    pub leads: LeadsSection,
}

impl Default for ElectroSection {
    fn default() -> Self {
        let c = CableConfig::default();
        let i = IonicConfig::default();
        let tau_close = c.regions.names.iter().cloned().zip(i.tau_close.iter().cloned()).collect();
        ElectroSection {
            n_nodes: c.n_nodes,
            length_mm: c.length,
            dt_ms: 0.1,
            model: c.model,
            sigma_i: c.sigma_i,
            sigma_e: c.sigma_e,
            am: c.am,
            cm: c.cm,
            tau_in: i.tau_in,
            tau_out: i.tau_out,
            tau_open: i.tau_open,
            tau_close,
            v_gate: i.v_gate,
            v_min: i.v_min,
            v_max: i.v_max,
            stimulus: StimulusSection::default(),
            leads: LeadsSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StimulusSection {
    /// Stimulated nodes; the left tenth of the cable when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
    pub amplitude: f64,
    pub onset_ms: f64,
    pub duration_ms: f64,
}

impl Default for StimulusSection {
    fn default() -> Self {
        StimulusSection { nodes: None, amplitude: 0.1, onset_ms: 0.0, duration_ms: 25.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeadsSection {
    /// CSV, one row per lead and one column per node. Synthetic leads when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<PathBuf>,
}

/// `"all"` or an explicit list of fiber nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasuredNodes {
    Named(String),
    List(Vec<usize>),
}

impl Default for MeasuredNodes {
    fn default() -> Self {
        MeasuredNodes::Named("all".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MechSection {
    pub n_nodes: usize,
    pub length_mm: f64,
    pub dt_ms: f64,
    pub rho: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub eta_s: f64,
    pub k_s: f64,
    pub c_s: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub k0: f64,
    pub sigma0: f64,
    pub mu: f64,
    pub n0: f64,
    pub gamma: f64,
    pub measured_nodes: MeasuredNodes,
}

impl Default for MechSection {
    fn default() -> Self {
        let f = FiberConfig::default();
        MechSection {
            n_nodes: f.n_nodes,
            length_mm: f.length,
            dt_ms: f.dt,
            rho: f.rho,
            e: f.e,
            eta_s: f.eta_s,
            k_s: f.k_s,
            c_s: f.c_s,
            a: f.a,
            b: f.b,
            alpha: f.alpha,
            k0: f.k0,
            sigma0: f.sigma0,
            mu: f.mu,
            n0: f.n0,
            gamma: 0.0,
            measured_nodes: MeasuredNodes::default(),
        }
    }
}

/// Named parameters: `truth` drives the twin, `prior` starts the estimator
/// on the names listed in `estimated`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub estimated: Vec<String>,
    pub truth: BTreeMap<String, f64>,
    pub prior: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    /// Standard deviation on the lead channels (mV).
    pub ecg_std: f64,
    /// Absolute displacement standard deviation (mm); overrides `mech_rel`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mech_std: Option<f64>,
    /// Displacement standard deviation as a fraction of the peak `|y|` on `ω`.
    pub mech_rel: f64,
    pub seeds: Vec<u64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection { ecg_std: 0.25, mech_std: None, mech_rel: 0.1, seeds: vec![1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObsKind {
    Ecg,
    Mech,
    Both,
}

impl ObsKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ecg" => Ok(ObsKind::Ecg),
            "mech" => Ok(ObsKind::Mech),
            "both" => Ok(ObsKind::Both),
            _ => Err(Error::config(format!("unknown observation set `{s}`, expected ecg, mech or both"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ObsKind::Ecg => "ecg",
            ObsKind::Mech => "mech",
            ObsKind::Both => "both",
        }
    }

    pub fn ecg(&self) -> bool {
        matches!(self, ObsKind::Ecg | ObsKind::Both)
    }

    pub fn mech(&self) -> bool {
        matches!(self, ObsKind::Mech | ObsKind::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObserveSection {
    pub ecg_every_ms: f64,
    pub mech_every_ms: f64,
    /// Observation set used by the estimator; `both` when mechanics is configured.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obs: Option<ObsKind>,
    /// The estimator starts from rest at this time.
    pub start_ms: f64,
}

impl Default for ObserveSection {
    fn default() -> Self {
        ObserveSection { ecg_every_ms: 1.0, mech_every_ms: 2.0, obs: None, start_ms: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    Ukf,
    Roukf,
    Roekf,
    PodRoukf,
    Coupled,
}

impl FilterKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ukf" => Ok(FilterKind::Ukf),
            "roukf" => Ok(FilterKind::Roukf),
            "roekf" => Ok(FilterKind::Roekf),
            "pod-roukf" => Ok(FilterKind::PodRoukf),
            "coupled" => Ok(FilterKind::Coupled),
            _ => Err(Error::config(format!(
                "unknown filter `{s}`, expected ukf, roukf, roekf, pod-roukf or coupled"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FilterKind::Ukf => "ukf",
            FilterKind::Roukf => "roukf",
            FilterKind::Roekf => "roekf",
            FilterKind::PodRoukf => "pod-roukf",
            FilterKind::Coupled => "coupled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<FilterKind>,
    /// Prior standard deviation of the log-2 parameters.
    pub param_std: f64,
    /// Prior standard deviation of the POD coordinates.
    pub alpha_std: f64,
    /// Full-state prior standard deviations of the UKF, `vm` then `w`.
    pub vm_std: f64,
    pub w_std: f64,
    /// Sample the POD coordinates along with the parameters.
    pub joint: bool,
    /// Noise levels assumed by the observation norms.
    pub ecg_sigma: f64,
    pub mech_sigma: f64,
    /// Whether the estimator applies the stimulus protocol.
    #[serde(default = "yes")]
    pub stimulus: bool,
}

impl Default for FilterSection {
    fn default() -> Self {
        FilterSection {
            kind: None,
            param_std: 1.0,
            alpha_std: 0.4,
            vm_std: 1.0,
            w_std: 1e-5,
            joint: true,
            ecg_sigma: 0.25,
            mech_sigma: 1.0,
            stimulus: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PodSection {
    /// One forward run per set of named ionic overrides.
    pub sets: Vec<BTreeMap<String, f64>>,
    pub every_ms: f64,
    /// Snapshot horizon; one beat when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end_ms: Option<f64>,
    pub rank: usize,
    pub gram: GramKind,
    /// Precomputed basis; snapshots are not simulated when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis_file: Option<PathBuf>,
}

impl Default for PodSection {
    fn default() -> Self {
        PodSection { sets: Vec::new(), every_ms: 5.0, t_end_ms: None, rank: 20, gram: GramKind::Mass, basis_file: None }
    }
}

impl TwinScenario {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sc: TwinScenario = toml::from_str(s).map_err(|e| Error::config(format!("scenario: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    /// Reads a scenario; relative file paths inside resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut sc = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(f) = p.as_mut() {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        };
        fix(&mut sc.electro.leads.matrix_file);
        if let Some(pod) = sc.pod.as_mut() {
            fix(&mut pod.basis_file);
        }
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beats == 0 || !(self.beat_ms > 0.0) {
            return Err(Error::config("beats and beat_ms must be positive"));
        }
        let p = &self.params;
        for name in &p.estimated {
            if !p.truth.contains_key(name) {
                return Err(Error::config(format!("params.truth is missing estimated parameter `{name}`")));
            }
            if !p.prior.contains_key(name) {
                return Err(Error::config(format!("params.prior is missing estimated parameter `{name}`")));
            }
        }
        if let Some(extra) = p.prior.keys().find(|k| !p.estimated.contains(k)) {
            return Err(Error::config(format!("params.prior.{extra} is not an estimated parameter")));
        }
        if self.noise.ecg_std < 0.0 || self.noise.mech_std.is_some_and(|s| s < 0.0) || self.noise.mech_rel < 0.0 {
            return Err(Error::config("noise standard deviations must be nonnegative"));
        }
        if self.noise.seeds.is_empty() {
            return Err(Error::config("noise.seeds must not be empty"));
        }
        let o = &self.observe;
        if !(o.ecg_every_ms > 0.0) || !(o.mech_every_ms > 0.0) || o.start_ms < 0.0 {
            return Err(Error::config("observation cadences must be positive and start_ms nonnegative"));
        }
        let obs = self.obs_kind();
        if obs.mech() && self.mech.is_none() {
            return Err(Error::config("mechanical observations need a [mech] section"));
        }
        let f = &self.filter;
        if !(f.param_std > 0.0) || !(f.alpha_std > 0.0) || !(f.ecg_sigma > 0.0) || !(f.mech_sigma > 0.0) {
            return Err(Error::config("filter standard deviations must be positive"));
        }
        match self.filter_kind() {
            FilterKind::Coupled if self.mech.is_none() => {
                return Err(Error::config("filter `coupled` needs a [mech] section"))
            }
            FilterKind::PodRoukf if self.pod.is_none() => {
                return Err(Error::config("filter `pod-roukf` needs a [pod] section"))
            }
            FilterKind::Ukf | FilterKind::Roekf if obs.mech() => {
                return Err(Error::config("ukf and roekf runs observe the electrical cable only"))
            }
            _ => {}
        }
        self.window_ms()?;
        if let Some(pod) = &self.pod {
            if pod.rank == 0 || !(pod.every_ms > 0.0) {
                return Err(Error::config("pod.rank and pod.every_ms must be positive"));
            }
            if pod.basis_file.is_none() && pod.sets.is_empty() {
                return Err(Error::config("pod needs snapshot sets or a basis_file"));
            }
        }
        Ok(())
    }

    pub fn obs_kind(&self) -> ObsKind {
        self.observe.obs.unwrap_or(if self.mech.is_some() { ObsKind::Both } else { ObsKind::Ecg })
    }

    pub fn filter_kind(&self) -> FilterKind {
        self.filter.kind.unwrap_or(match (&self.mech, &self.pod) {
            (Some(_), _) => FilterKind::Coupled,
            (None, Some(_)) => FilterKind::PodRoukf,
            (None, None) => FilterKind::Roukf,
        })
    }

    pub fn duration_ms(&self) -> f64 {
        self.beat_ms * self.beats as f64
    }

    /// Length of one assimilation window: the electrical cadence, or the
    /// mechanical one when only displacements are observed.
    pub fn window_ms(&self) -> Result<f64> {
        let o = &self.observe;
        let w = if self.obs_kind().ecg() { o.ecg_every_ms } else { o.mech_every_ms };
        let whole = |a: f64, b: f64| {
            let k = (a / b).round();
            k >= 1.0 && (k * b - a).abs() <= 1e-9 * a
        };
        if !whole(w, self.electro.dt_ms) {
            return Err(Error::config("the observation window must be a whole number of electrical steps"));
        }
        if self.mech.is_some() && !whole(o.mech_every_ms, w) {
            return Err(Error::config("observe.mech_every_ms must be a multiple of the observation window"));
        }
        if !whole(self.duration_ms(), w) || !whole(o.start_ms + w, w) {
            return Err(Error::config("duration and start_ms must align with the observation window"));
        }
        Ok(w)
    }

    pub fn n_windows(&self) -> Result<usize> {
        Ok((self.duration_ms() / self.window_ms()?).round() as usize)
    }

    pub fn cable(&self) -> Result<Cable> {
        let e = &self.electro;
        let cfg = CableConfig {
            n_nodes: e.n_nodes,
            length: e.length_mm,
            sigma_i: e.sigma_i,
            sigma_e: e.sigma_e,
            am: e.am,
            cm: e.cm,
            regions: RegionPartition::cardiac(e.n_nodes),
            model: e.model,
        };
        Cable::new(cfg)
    }

    /// Ionic constants of the electro section, without parameter overrides.
    pub fn base_ionic(&self, regions: &RegionPartition) -> Result<IonicConfig> {
        let e = &self.electro;
        let mut tau_close = IonicConfig::default().tau_close;
        tau_close.resize(regions.names.len(), *tau_close.last().unwrap_or(&100.0));
        for (name, v) in &e.tau_close {
            let k = regions.index(name).ok_or_else(|| Error::config(format!("electro.tau_close.{name}: unknown region")))?;
            tau_close[k] = *v;
        }
        Ok(IonicConfig {
            tau_in: e.tau_in,
            tau_out: e.tau_out,
            tau_open: e.tau_open,
            tau_close,
            v_gate: e.v_gate,
            v_min: e.v_min,
            v_max: e.v_max,
        })
    }

    pub fn truth_ionic(&self, regions: &RegionPartition) -> Result<IonicConfig> {
        let mut ionic = self.base_ionic(regions)?;
        for (name, v) in &self.params.truth {
            ionic.set(name, *v, regions).map_err(|e| Error::config(format!("params.truth: {e}")))?;
        }
        Ok(ionic)
    }

    pub fn stimulus(&self) -> Result<StimulusProtocol> {
        let s = &self.electro.stimulus;
        let n = self.electro.n_nodes;
        Ok(StimulusProtocol {
            nodes: s.nodes.clone().unwrap_or_else(|| (0..n.div_ceil(10)).collect()),
            amplitude: s.amplitude,
            onset_ms: s.onset_ms,
            duration_ms: s.duration_ms,
            period_ms: (self.beats > 1).then_some(self.beat_ms),
            n_nodes: n,
        })
    }

    pub fn leads(&self) -> Result<LeadField> {
        match &self.electro.leads.matrix_file {
            Some(p) => LeadField::from_csv(p, self.electro.n_nodes),
            None => Ok(LeadField::synthetic(self.electro.n_nodes)),
        }
    }

    pub fn estimated(&self) -> Result<ParamSet> {
        let specs = self.params.estimated.iter().map(|n| (n.clone(), self.params.prior[n])).collect();
        ParamSet::new(specs)
    }

    fn electro_model(&self, ionic: IonicConfig, stimulus: StimulusProtocol, params: ParamSet) -> Result<ElectroModel> {
        let window = self.window_ms()?;
        let substeps = (window / self.electro.dt_ms).round() as usize;
        ElectroModel::new(self.cable()?, ionic, stimulus, self.electro.dt_ms, substeps, params)
    }

    /// Truth cable with the `params.truth` overrides and no estimated block.
    pub fn truth_electro(&self) -> Result<ElectroModel> {
        let cable = self.cable()?;
        let ionic = self.truth_ionic(&cable.config.regions)?;
        self.electro_model(ionic, self.stimulus()?, ParamSet::empty())
    }

    /// Estimator cable: truth constants off the estimated names, the prior on them.
    pub fn estimator_electro(&self) -> Result<ElectroModel> {
        let cable = self.cable()?;
        let mut ionic = self.base_ionic(&cable.config.regions)?;
        for (name, v) in &self.params.truth {
            if !self.params.estimated.contains(name) {
                ionic.set(name, *v, &cable.config.regions)?;
            }
        }
        let stim = if self.filter.stimulus { self.stimulus()? } else { StimulusProtocol::none(self.electro.n_nodes) };
        self.electro_model(ionic, stim, self.estimated()?)
    }

    pub fn fiber(&self) -> Result<Option<(Fiber, MeasuredRegion)>> {
        let Some(m) = &self.mech else { return Ok(None) };
        let cfg = FiberConfig {
            n_nodes: m.n_nodes,
            length: m.length_mm,
            dt: m.dt_ms,
            rho: m.rho,
            e: m.e,
            eta_s: m.eta_s,
            k_s: m.k_s,
            c_s: m.c_s,
            a: m.a,
            b: m.b,
            alpha: m.alpha,
            k0: m.k0,
            sigma0: m.sigma0,
            mu: m.mu,
            n0: m.n0,
            n0_table: None,
        };
        let fiber = Fiber::new(cfg)?;
        let region = match &m.measured_nodes {
            MeasuredNodes::Named(s) if s == "all" => MeasuredRegion::all(fiber.n_nodes()),
            MeasuredNodes::Named(s) => {
                return Err(Error::config(format!("mech.measured_nodes: expected \"all\" or a list, got `{s}`")))
            }
            MeasuredNodes::List(v) => MeasuredRegion::new(v.clone(), fiber.n_nodes())?,
        };
        Ok(Some((fiber, region)))
    }

    pub fn coupled(&self, electro: ElectroModel) -> Result<Option<CoupledModel>> {
        match self.fiber()? {
            Some((fiber, region)) => {
                let gamma = self.mech.as_ref().map_or(0.0, |m| m.gamma);
                Ok(Some(CoupledModel::new(electro, fiber, region, gamma)?))
            }
            None => Ok(None),
        }
    }

    /// Stacked observation with the blocks selected by `obs`.
    pub fn observation(&self, obs: ObsKind) -> Result<StackedObservation> {
        let o = &self.observe;
        let mut parts: Vec<(String, Arc<dyn ObservationOperator + Send>)> = Vec::new();
        if obs.ecg() {
            let leads = LeadObservation {
                cable: self.cable()?,
                leads: self.leads()?,
                dt_obs: o.ecg_every_ms,
                sigma: self.filter.ecg_sigma,
            };
            parts.push(("ecg".into(), Arc::new(leads)));
        }
        if obs.mech() {
            let (_, region) = self.fiber()?.ok_or_else(|| Error::config("mechanical observations need a [mech] section"))?;
            let d = DisplacementObservation { region, dt_obs: o.mech_every_ms, sigma: self.filter.mech_sigma };
            parts.push(("mech".into(), Arc::new(d)));
        }
        StackedObservation::new(parts)
    }

    pub fn observer_config(&self) -> CoupledObserverConfig {
        CoupledObserverConfig {
            alpha_std: self.filter.alpha_std,
            param_std: self.filter.param_std,
            joint: self.filter.joint,
            keep_states: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scenario_uses_defaults() {
        let sc = TwinScenario::from_toml_str("").unwrap();
        assert_eq!(sc.electro.n_nodes, 200);
        assert_eq!(sc.obs_kind(), ObsKind::Ecg);
        assert_eq!(sc.filter_kind(), FilterKind::Roukf);
        assert_eq!(sc.window_ms().unwrap(), 1.0);
        assert_eq!(sc.n_windows().unwrap(), 800);
    }

    #[test]
    fn parses_sections() {
        let sc = TwinScenario::from_toml_str(
            r#"
            name = "tc"
            beats = 3
            [electro.tau_close]
            endo = 150.0
            [mech]
            E = 0.03
            measured_nodes = [0, 10, 20]
            [params]
            estimated = ["tau_close.endo"]
            truth = { "tau_close.endo" = 140.0 }
            prior = { "tau_close.endo" = 56.0 }
            [filter]
            kind = "coupled"
            "#,
        )
        .unwrap();
        assert_eq!(sc.obs_kind(), ObsKind::Both);
        let (fiber, region) = sc.fiber().unwrap().unwrap();
        assert_eq!(fiber.config.e, 0.03);
        assert_eq!(region.nodes(), &[0, 10, 20]);
        assert_eq!(sc.stimulus().unwrap().period_ms, Some(800.0));
        let truth = sc.truth_electro().unwrap();
        assert_eq!(truth.ionic.tau_close[0], 140.0);
        let est = sc.estimator_electro().unwrap();
        assert_eq!(est.ionic.tau_close[0], 150.0);
        assert_eq!(est.params.specs[0].1, 56.0);
    }

    #[test]
    fn rejects_inconsistent_params() {
        let r = TwinScenario::from_toml_str(
            r#"
            [params]
            estimated = ["tau_in"]
            truth = { tau_in = 1.0 }
            "#,
        );
        assert!(r.unwrap_err().is_config());
        let r = TwinScenario::from_toml_str("[filter]\nkind = \"coupled\"");
        assert!(r.is_err());
        let r = TwinScenario::from_toml_str("[electro]\nbogus = 1");
        assert!(r.is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let sc = TwinScenario::from_toml_str("[mech]\n[pod]\nsets = [{ tau_in = 0.8 }]").unwrap();
        let json = serde_json::to_string(&sc).unwrap();
        let back: TwinScenario = serde_json::from_str(&json).unwrap();
        assert_eq!(sc, back);
    }
}
