use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cardassim_core::pod::{build_pod, electro_snapshots, read_snapshots, state_gram, write_basis, write_snapshots, GramKind};
use cardassim_core::twin::{
    add_noise, compare_runs, estimate, noise_model, probe_diagnostics, read_scenario, run_with_truth, simulate_truth,
    write_diagnostics, write_json, write_run, write_simulation, FilterKind, ObsKind, ObservationTable, RunTrace,
    TruthRun, TruthTable, TwinScenario,
};
use cardassim_core::electro::ElectroModel;
use cardassim_core::filters::ParamSet;
use cardassim_core::Error;
use clap::{Parser, Subcommand};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_NOT_DOMINANT: u8 = 4;

#[derive(Parser)]
#[command(name = "cardassim", version, about = "Twin experiments for cardiac electromechanical data assimilation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the truth model and write the noise-free observations.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add the scenario noise to the clean observations of a simulation.
    Noise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate snapshots for the `[pod]` parameter sets.
    Snapshots {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a POD basis from a snapshot file.
    Pod {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value = "mass")]
        gram: String,
        /// Cable whose mass matrix and voltage range weight the state.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate states and parameters, one run directory per seed.
    Estimate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        filter: Option<String>,
        #[arg(long)]
        obs: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulation directory with `observations.csv` to use instead of simulating.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Observability gramian and sensitivity curves around the final estimate.
    Diagnose {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        gramian: bool,
        #[arg(long)]
        sensitivity: bool,
        /// Probe around the truth instead of the final estimate.
        #[arg(long)]
        at_truth: bool,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
    /// Compare the final parameter errors of two runs.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Error time series of both runs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = set_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if is_numerical(&e) {
                ExitCode::from(EXIT_NUMERICAL)
            } else {
                ExitCode::from(EXIT_CONFIG)
            }
        }
    }
}

fn is_numerical(e: &Error) -> bool {
    match e {
        Error::Numerical { .. } => true,
        Error::FilterStep { source, .. } => is_numerical(source),
        _ => false,
    }
}

fn set_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("CARDASSIM_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::config(format!("CARDASSIM_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::config(format!("thread pool: {e}")))
}

fn dispatch(cmd: Cmd) -> Result<ExitCode, Error> {
    match cmd {
        Cmd::Simulate { scenario, out } => {
            let sc = TwinScenario::from_file(&scenario)?;
            let truth = simulate_truth(&sc)?;
            write_simulation(&out, &sc, &truth)?;
            println!("wrote {} ({} observation rows)", out.display(), truth.clean.rows.len());
        }
        Cmd::Noise { input, seed } => {
            let sc = read_scenario(&input)?;
            let clean = ObservationTable::read(&input.join("observations_clean.csv"))?;
            let nm = noise_model(&sc, &clean, seed.unwrap_or(sc.noise.seeds[0]));
            add_noise(&clean, &nm)?.write(&input.join("observations.csv"))?;
            write_json(&input.join("noise.json"), &nm)?;
            println!("wrote {} (seed {})", input.join("observations.csv").display(), nm.seed);
        }
        Cmd::Snapshots { scenario, out } => {
            let sc = TwinScenario::from_file(&scenario)?;
            let pod = sc.pod.clone().ok_or_else(|| Error::config("scenario has no [pod] section"))?;
            let cable = sc.cable()?;
            let ionic = sc.base_ionic(&cable.config.regions)?;
            let model = ElectroModel::new(cable, ionic, sc.stimulus()?, sc.electro.dt_ms, 1, ParamSet::empty())?;
            let sets: Vec<Vec<(String, f64)>> =
                pod.sets.iter().map(|s| s.iter().map(|(k, v)| (k.clone(), *v)).collect()).collect();
            let snaps = electro_snapshots(&model, &sets, pod.t_end_ms.unwrap_or(sc.beat_ms), pod.every_ms)?;
            write_snapshots(&out, &snaps)?;
            println!("wrote {} snapshots to {}", snaps.len(), out.display());
        }
        Cmd::Pod { snapshots, rank, gram, scenario, out } => {
            let kind = GramKind::parse(&gram)?;
            let snaps = read_snapshots(&snapshots)?;
            let sc = match scenario {
                Some(p) => TwinScenario::from_file(&p)?,
                None => TwinScenario::from_toml_str("")?,
            };
            let cable = sc.cable()?;
            let ionic = sc.base_ionic(&cable.config.regions)?;
            if snaps.dim() != 2 * cable.n_nodes() {
                return Err(Error::config(format!(
                    "snapshots have dimension {}, the cable state has {}",
                    snaps.dim(),
                    2 * cable.n_nodes()
                )));
            }
            let basis = build_pod(&snaps, rank, &state_gram(&cable, &ionic, kind), kind)?;
            write_basis(&out, &basis)?;
            println!("wrote rank-{} basis to {}", basis.rank(), out.display());
        }
        Cmd::Estimate { scenario, filter, obs, seed, data, out } => {
            let mut sc = TwinScenario::from_file(&scenario)?;
            if let Some(f) = filter {
                sc.filter.kind = Some(FilterKind::parse(&f)?);
            }
            if let Some(o) = obs {
                sc.observe.obs = Some(ObsKind::parse(&o)?);
            }
            sc.validate()?;
            if let Some(dir) = data {
                return estimate_from_data(&sc, &dir, &out).map(|_| ExitCode::SUCCESS);
            }
            let seeds = match seed {
                Some(s) => vec![s],
                None => sc.noise.seeds.clone(),
            };
            let truth = simulate_truth(&sc)?;
            for s in &seeds {
                let dir = if seeds.len() == 1 { out.clone() } else { out.join(format!("seed-{s}")) };
                let run = run_with_truth(&sc, truth.clone(), *s)?;
                write_run(&dir, &run)?;
                println!("seed {s}: {}", dir.display());
                print!("{}", run.summary().to_text());
            }
        }
        Cmd::Diagnose { run, gramian, sensitivity, at_truth, delta } => {
            let sc = read_scenario(&run)?;
            let at: Vec<f64> = if at_truth {
                sc.params.estimated.iter().map(|n| sc.params.truth[n]).collect()
            } else {
                let tr = RunTrace::read(&run)?;
                tr.physical.last().cloned().ok_or_else(|| Error::config("run has no estimate rows"))?
            };
            let mut d = probe_diagnostics(&sc, &at, delta)?;
            // Neither flag selects both.
            let all = !gramian && !sensitivity;
            if !(gramian || all) {
                d.gramians.clear();
            }
            if !(sensitivity || all) {
                d.sensitivity = None;
            }
            write_diagnostics(&run, &d)?;
            for g in &d.gramians {
                println!(
                    "{:<9} lambda_min {:.6e}  threshold {:.3e}  {}",
                    g.label,
                    g.lambda_min,
                    g.threshold,
                    if g.satisfied { "observable" } else { "not observable" }
                );
            }
            if d.sensitivity.is_some() {
                println!("wrote {}", run.join("sensitivity.csv").display());
            }
        }
        Cmd::Compare { a, b, out } => {
            let ta = RunTrace::read(&a)?;
            let tb = RunTrace::read(&b)?;
            let c = compare_runs(&ta, &tb)?;
            print!("{}", c.to_text());
            if let Some(p) = out {
                std::fs::write(&p, c.series_csv(&ta.names)).map_err(|e| Error::io(&p, e))?;
            }
            if !c.b_dominant() {
                return Ok(ExitCode::from(EXIT_NOT_DOMINANT));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn estimate_from_data(sc: &TwinScenario, dir: &Path, out: &Path) -> Result<(), Error> {
    let noisy = ObservationTable::read(&dir.join("observations.csv"))?;
    let truth_path = dir.join("truth.csv");
    let truth = if truth_path.exists() {
        let clean = ObservationTable::read(&dir.join("observations_clean.csv"))?;
        Some(TruthRun { states: Vec::new(), table: TruthTable::read(&truth_path)?, clean })
    } else {
        None
    };
    let est = estimate(sc, &noisy, truth.as_ref())?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let csv = cardassim_core::twin::estimate_csv(&est.report.names, &est.report.blocks, &est.report.rows, &est.vm_rel_err);
    std::fs::write(out.join("estimate.csv"), csv).map_err(|e| Error::io(out, e))?;
    write_diagnostics(out, &est.diagnostics)?;
    let meta = data_meta(sc, &est, dir)?;
    write_json(&out.join("meta.json"), &meta)?;
    let summary = cardassim_core::twin::Summary::new(sc, &est.report);
    print!("{}", summary.to_text());
    Ok(())
}

fn data_meta(
    sc: &TwinScenario,
    est: &cardassim_core::twin::EstimateOutput,
    data: &Path,
) -> Result<cardassim_core::twin::RunMeta, Error> {
    let noise_path = data.join("noise.json");
    let noise = match std::fs::read_to_string(&noise_path) {
        Ok(t) => serde_json::from_str(&t).map_err(|e| Error::Parse { path: noise_path.display().to_string(), msg: e.to_string() })?,
        Err(_) => cardassim_core::twin::NoiseModel { ecg_std: 0.0, mech_std: 0.0, seed: 0 },
    };
    Ok(cardassim_core::twin::RunMeta {
        schema: "cardassim run v1".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: noise.seed,
        filter: est.filter,
        obs: est.obs,
        window_ms: sc.window_ms()?,
        noise,
        pod_rank: est.pod_rank,
        scenario: sc.clone(),
    })
}
