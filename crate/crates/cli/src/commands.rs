use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use gomimo::channel::{build_channel_matrix, ReceiverLocation};
use gomimo::detectors::DetectorKind;
use gomimo::harness::{
    self, interpolate_snr_at_ber, report, run_alpha_sweep, run_ber_sweep, run_input_ablation, run_mse_log,
    run_timing_benchmark, BerCurve, BerPoint, MseLog, READOUT_BER,
};
use gomimo::neural::{fit, read_model, write_model, NetworkFlavor, TrainConfig};
use gomimo::{ChannelMatrix, Detector, GomimoScheme};
use serde::Serialize;

use crate::config::RunConfig;
use crate::{figures, CliError, Command};

/// Output directory bookkeeping of one run.
pub struct Run {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(config: RunConfig) -> Result<Self, CliError> {
        let out_dir = config.output_dir();
        fs::create_dir_all(&out_dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", out_dir.display())))?;
        Ok(Self {
            config,
            out_dir,
            outputs: Vec::new(),
        })
    }

    /// Creates `<out_dir>/<name>` (with parent directories) and hands it to
    /// `write`.
    pub fn write(
        &mut self,
        name: &str,
        write: impl FnOnce(BufWriter<File>) -> gomimo::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        write(BufWriter::new(File::create(&path)?))?;
        self.outputs.push(PathBuf::from(name));
        Ok(path)
    }

    pub fn record(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    fn manifest(&self, command: &Command) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: String,
            argv: Vec<String>,
            seed: u64,
            output_dir: &'a Path,
            gomimo_version: &'static str,
            cli_version: &'static str,
            config: &'a RunConfig,
            outputs: &'a [PathBuf],
        }
        let m = Manifest {
            command: command.name(),
            argv: std::env::args().skip(1).collect(),
            seed: self.config.seed,
            output_dir: &self.out_dir,
            gomimo_version: gomimo::VERSION,
            cli_version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            outputs: &self.outputs,
        };
        let text = toml::to_string_pretty(&m).map_err(|e| CliError::Config(e.to_string()))?;
        fs::write(self.out_dir.join(format!("{}.manifest.toml", command.name())), text)?;
        Ok(())
    }
}

pub fn dispatch(command: &Command, config: RunConfig) -> Result<(), CliError> {
    let mut run = Run::new(config)?;
    let result = match command {
        Command::ChannelDump => channel_dump(&mut run),
        Command::CodebookDump => codebook_dump(&mut run),
        Command::Train => train(&mut run),
        Command::BerSweep => ber_sweep(&mut run),
        Command::MseLog => mse_log(&mut run),
        Command::AlphaSweep => alpha_sweep(&mut run),
        Command::AblateInput => ablate_input(&mut run),
        Command::Bench => bench(&mut run),
        Command::ReproduceFigure { figure } => figures::reproduce(&mut run, *figure),
    };
    // analysis failures still leave their CSVs behind, so record the run
    match &result {
        Ok(()) | Err(CliError::Analysis(_)) => run.manifest(command)?,
        Err(_) => {}
    }
    result
}

pub fn scheme(config: &RunConfig) -> Result<GomimoScheme, CliError> {
    let s = &config.scheme;
    Ok(GomimoScheme::new(s.kind, s.order, s.avg_power, s.nt, s.na)?)
}

pub fn channel(config: &RunConfig) -> Result<ChannelMatrix, CliError> {
    let geometry = config.geometry.layout().geometry(config.geometry.location()?)?;
    Ok(build_channel_matrix(&geometry, &config.geometry.optics())?)
}

fn flavor_of(kind: DetectorKind) -> Result<NetworkFlavor, CliError> {
    match kind {
        DetectorKind::BlindDnn => Ok(NetworkFlavor::Blind),
        DetectorKind::ZfDnn => Ok(NetworkFlavor::Zf),
        other => Err(CliError::Config(format!(
            "detector.kind = \"{other}\" has no network; use \"blind_dnn\" or \"zf_dnn\""
        ))),
    }
}

/// Prints the progress line of one training run.
pub fn fit_logged(
    scheme: &GomimoScheme,
    channel: &ChannelMatrix,
    location: &ReceiverLocation,
    config: &TrainConfig,
) -> Result<gomimo::neural::FittedNetwork<f64>, CliError> {
    let fitted = fit(scheme, channel, location, config)?;
    let o = &fitted.outcome;
    println!(
        "trained {:?} {} at {} dB: {} epochs, best validation MSE {:.6} (epoch {})",
        config.flavor,
        scheme.kind(),
        config.training_snr_db,
        o.log.len(),
        o.best_val_mse().unwrap_or(f64::NAN),
        o.best_epoch
    );
    Ok(fitted)
}

/// Any of the four detectors; networks are trained with `train` unless a
/// model file is supplied.
pub fn build_detector(
    kind: DetectorKind,
    config: &RunConfig,
    scheme: &GomimoScheme,
    channel: &ChannelMatrix,
    network: Option<(&Path, NetworkFlavor)>,
) -> Result<Detector, CliError> {
    Ok(match kind {
        DetectorKind::JointMl => Detector::joint_ml(channel, scheme),
        DetectorKind::ZfMl => Detector::zf_ml(channel, scheme, config.detector.spatial_rule)?,
        DetectorKind::ZfDnn | DetectorKind::BlindDnn => {
            let (path, flavor) = network.expect("network detectors come with a model path");
            load_network(path, flavor, config, scheme, channel)?
        }
    })
}

pub fn load_network(
    path: &Path,
    flavor: NetworkFlavor,
    config: &RunConfig,
    scheme: &GomimoScheme,
    channel: &ChannelMatrix,
) -> Result<Detector, CliError> {
    if !path.exists() {
        return Err(CliError::Config(format!(
            "no trained model at {} (run `gomimo train` or set detector.model)",
            path.display()
        )));
    }
    let (params, stored) = read_model::<f64>(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let train_config = match stored {
        Some(c) => c,
        None => config.train_config(flavor)?,
    };
    if train_config.flavor != flavor {
        return Err(CliError::Config(format!(
            "{} holds a {:?} network, detector needs {:?}",
            path.display(),
            train_config.flavor,
            flavor
        )));
    }
    let front: gomimo::FrontEnd = train_config.front_end(scheme, channel)?;
    Ok(Detector::dnn(front, params)?)
}

pub fn print_points(label: &str, points: &[BerPoint]) {
    for p in points {
        println!(
            "{label} snr {:>7.2} dB  bits {:>10}  errors {:>8}  ber {:.3e}{}",
            p.snr_db,
            p.bits,
            p.errors,
            p.ber,
            if p.censored { "  (censored)" } else { "" }
        );
    }
}

fn channel_dump(run: &mut Run) -> Result<(), CliError> {
    let h = channel(&run.config)?;
    run.write("channel.csv", |w| report::write_channel(w, &h))?;
    println!("channel {}x{} written", h.nr(), h.nt());
    Ok(())
}

fn codebook_dump(run: &mut Run) -> Result<(), CliError> {
    let cb = scheme(&run.config)?.enumerate_codebook();
    run.write("codebook.csv", |w| report::write_codebook(w, &cb))?;
    println!("codebook with {} entries written", cb.len());
    Ok(())
}

fn train(run: &mut Run) -> Result<(), CliError> {
    let flavor = flavor_of(run.config.detector.kind)?;
    let (s, h) = (scheme(&run.config)?, channel(&run.config)?);
    let location = run.config.geometry.location()?;
    let tc = run.config.train_config(flavor)?;
    let fitted = fit_logged(&s, &h, &location, &tc)?;
    for r in &fitted.outcome.log {
        println!("epoch {:>3}  train {:.6}  validation {:.6}", r.epoch, r.train_mse, r.val_mse);
    }
    let path = run.config.model_path();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    write_model(&path, &fitted.outcome.params, Some(&tc))?;
    run.record(&path);
    let log = [MseLog {
        training_snr_db: tc.training_snr_db,
        records: fitted.outcome.log,
    }];
    run.write("mse_log.csv", |w| report::write_mse_log(w, &log))?;
    println!("model written to {}", path.display());
    Ok(())
}

fn ber_sweep(run: &mut Run) -> Result<(), CliError> {
    let c = &run.config;
    let (s, h) = (scheme(c)?, channel(c)?);
    let kind = c.detector.kind;
    let model = c.model_path();
    let network = flavor_of(kind).ok().map(|f| (model.as_path(), f));
    let detector = build_detector(kind, c, &s, &h, network)?;
    let points = run_ber_sweep(&s, &h, &detector, &c.sweep_config())?;
    print_points(kind.name(), &points);
    let curve = BerCurve {
        detector: kind.name().into(),
        scheme: s.kind(),
        location: c.geometry.location()?.label(),
        points,
    };
    run.write("ber_sweep.csv", |w| report::write_ber_sweep(w, &[curve]))?;
    Ok(())
}

pub fn mse_logs(config: &RunConfig) -> Result<Vec<MseLog>, CliError> {
    let (s, h) = (scheme(config)?, channel(config)?);
    let base = config.train_config(NetworkFlavor::Blind)?;
    let configs: Vec<TrainConfig> = config
        .experiment
        .training_snrs_db
        .iter()
        .map(|&snr| TrainConfig {
            training_snr_db: snr,
            ..base.clone()
        })
        .collect();
    let logs = run_mse_log(&s, &h, &config.geometry.location()?, &configs)?;
    for l in &logs {
        if let Some(best) = l.records.iter().map(|r| r.val_mse).reduce(f64::min) {
            println!("training snr {} dB: best validation MSE {best:.6}", l.training_snr_db);
        }
    }
    Ok(logs)
}

fn mse_log(run: &mut Run) -> Result<(), CliError> {
    let logs = mse_logs(&run.config)?;
    run.write("mse_log.csv", |w| report::write_mse_log(w, &logs))?;
    Ok(())
}

pub fn alpha_cells(config: &RunConfig) -> Result<Vec<harness::AlphaCell>, CliError> {
    let (s, h) = (scheme(config)?, channel(config)?);
    let tc = config.train_config(NetworkFlavor::Blind)?;
    let mut sweep = config.sweep_config();
    sweep.snr_list_db = config.experiment.alpha_snrs_db.clone();
    let cells = run_alpha_sweep(&s, &h, &config.geometry.location()?, &tc, &config.experiment.alphas, &sweep)?;
    for c in &cells {
        match (&c.point, &c.failure) {
            (Some(p), _) => println!("alpha {:.1e}  snr {} dB  ber {:.3e}", c.alpha, c.snr_db, p.ber),
            (None, Some(f)) => println!("alpha {:.1e}  snr {} dB  {f}", c.alpha, c.snr_db),
            (None, None) => {}
        }
    }
    Ok(cells)
}

fn alpha_sweep(run: &mut Run) -> Result<(), CliError> {
    let cells = alpha_cells(&run.config)?;
    run.write("alpha_sweep.csv", |w| report::write_alpha_sweep(w, &cells))?;
    Ok(())
}

pub fn ablation(config: &RunConfig) -> Result<harness::AblationReport, CliError> {
    let (s, h) = (scheme(config)?, channel(config)?);
    let tc = config.train_config(NetworkFlavor::Blind)?;
    let r = run_input_ablation(&s, &h, &config.geometry.location()?, &tc, &config.sweep_config())?;
    print_points("alpha_f_y", &r.mapping);
    print_points("alpha_y", &r.identity);
    match r.gain_db {
        Some(g) => println!("{}: gain of αFy over αy at BER {READOUT_BER:e}: {g:.2} dB", s.kind()),
        None => println!("{}: gain at BER {READOUT_BER:e} is not bracketed by the sweep", s.kind()),
    }
    Ok(r)
}

fn ablate_input(run: &mut Run) -> Result<(), CliError> {
    let r = ablation(&run.config)?;
    let kind = run.config.scheme.kind;
    let unbracketed = r.gain_db.is_none();
    run.write("ablation.csv", |w| report::write_ablation(w, &[(kind, r)]))?;
    if unbracketed {
        return Err(CliError::Analysis(format!(
            "BER {READOUT_BER:e} is not bracketed by both ablation curves; widen sweep.snr_db"
        )));
    }
    Ok(())
}

/// Builds all four detectors (training both networks) and times them on
/// one vector stream.
pub fn timing(config: &RunConfig) -> Result<Vec<harness::TimingReport>, CliError> {
    let (s, h) = (scheme(config)?, channel(config)?);
    let location = config.geometry.location()?;
    let mut detectors = vec![
        Detector::joint_ml(&h, &s),
        Detector::zf_ml(&h, &s, config.detector.spatial_rule)?,
    ];
    for flavor in [NetworkFlavor::Zf, NetworkFlavor::Blind] {
        detectors.push(fit_logged(&s, &h, &location, &config.train_config(flavor)?)?.detector()?);
    }
    let e = &config.experiment;
    let reports = run_timing_benchmark(
        &s,
        &h,
        &detectors,
        e.timing_snr_db,
        e.timing_vectors,
        config.sweep.chunk_size,
        config.seed,
    )?;
    for r in &reports {
        println!(
            "{} {:<10} {:>9} vectors  {:.4} s  ({:.3} µs/vector, {} bit errors)",
            s.kind(),
            r.detector.name(),
            r.vectors,
            r.wall_seconds,
            r.per_vector_us,
            r.bit_errors
        );
    }
    Ok(reports)
}

fn bench(run: &mut Run) -> Result<(), CliError> {
    let reports = timing(&run.config)?;
    let kind = run.config.scheme.kind;
    run.write("timing.csv", |w| report::write_timing(w, &[(kind, reports)]))?;
    Ok(())
}

/// SNR at BER 10⁻³, if the curve brackets it.
pub fn readout(points: &[BerPoint]) -> Option<f64> {
    interpolate_snr_at_ber(points, READOUT_BER).ok()
}
