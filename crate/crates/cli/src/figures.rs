//! `reproduce-figure N`: the figure pipelines on top of the
//! configured sizes (sweep, training and experiment sections). Each figure
//! fixes the scheme, receiver location and training SNRs it needs.

use gomimo::channel::ReceiverLocation;
use gomimo::detectors::{feature_matrix, DetectorKind};
use gomimo::harness::{report, run_ber_sweep, BerCurve};
use gomimo::modulation::SchemeKind;
use gomimo::neural::NetworkFlavor;
use gomimo::Detector;

use crate::commands::{self, fit_logged, print_points, readout, Run};
use crate::config::{LocationSpec, RunConfig};
use crate::CliError;

pub fn reproduce(run: &mut Run, figure: u8) -> Result<(), CliError> {
    match figure {
        2 => preprocessing(run),
        3 => mse(run),
        4 => ber(run, SchemeKind::Gosm),
        5 => ber(run, SchemeKind::Gosmp),
        6 => ablation(run),
        7 => alpha(run),
        8 => timing(run),
        _ => Err(CliError::Config(format!("no pipeline for figure {figure}; expected 2–8"))),
    }
}

fn at(config: &RunConfig, kind: SchemeKind, location: ReceiverLocation) -> RunConfig {
    let mut c = config.clone();
    c.scheme.kind = kind;
    c.geometry.location = match location {
        ReceiverLocation::Center => LocationSpec::Named("center".into()),
        ReceiverLocation::Corner => LocationSpec::Named("corner".into()),
        ReceiverLocation::Point(p) => LocationSpec::Point(p),
    };
    c
}

const SCHEMES: [SchemeKind; 2] = [SchemeKind::Gosm, SchemeKind::Gosmp];

/// Inputs of the pre-processing stage: channel, both codebooks and the
/// feature matrix.
fn preprocessing(run: &mut Run) -> Result<(), CliError> {
    let h = commands::channel(&run.config)?;
    run.write("channel.csv", |w| report::write_channel(w, &h))?;
    for kind in SCHEMES {
        let s = commands::scheme(&at(&run.config, kind, run.config.geometry.location()?))?;
        let cb = s.enumerate_codebook();
        run.write(&format!("codebook_{kind}.csv"), |w| report::write_codebook(w, &cb))?;
    }
    let s = commands::scheme(&run.config)?;
    let f = gomimo::ChannelMatrix::from_matrix(feature_matrix::<f64>(s.patterns(), h.nr())?)?;
    run.write("feature_matrix.csv", |w| report::write_channel(w, &f))?;
    println!("pre-processing inputs written to {}", run.out_dir.display());
    Ok(())
}

fn mse(run: &mut Run) -> Result<(), CliError> {
    for kind in SCHEMES {
        let logs = commands::mse_logs(&at(&run.config, kind, ReceiverLocation::Center))?;
        run.write(&format!("{kind}/mse_log.csv"), |w| report::write_mse_log(w, &logs))?;
    }
    Ok(())
}

/// Joint ML, ZF-ML, ZF-DNN at its optimal training SNR and the blind DNN
/// at three training SNRs, for center and corner.
fn ber(run: &mut Run, kind: SchemeKind) -> Result<(), CliError> {
    let mut curves = Vec::new();
    for (location, optimum, blind_snrs) in [
        (ReceiverLocation::Center, 140.0, [130.0, 140.0, 150.0]),
        (ReceiverLocation::Corner, 160.0, [140.0, 150.0, 160.0]),
    ] {
        let c = at(&run.config, kind, location);
        let (s, h) = (commands::scheme(&c)?, commands::channel(&c)?);
        let sweep = c.sweep_config();
        let mut detectors: Vec<(String, Detector)> = vec![
            ("joint_ml".into(), Detector::joint_ml(&h, &s)),
            ("zf_ml".into(), Detector::zf_ml(&h, &s, c.detector.spatial_rule)?),
        ];
        let mut zf = c.train_config(NetworkFlavor::Zf)?;
        zf.training_snr_db = optimum;
        detectors.push(("zf_dnn".into(), fit_logged(&s, &h, &location, &zf)?.detector()?));
        for snr in blind_snrs {
            let mut blind = c.train_config(NetworkFlavor::Blind)?;
            blind.training_snr_db = snr;
            let label = format!("{}@{snr}dB", DetectorKind::BlindDnn.name());
            detectors.push((label, fit_logged(&s, &h, &location, &blind)?.detector()?));
        }
        for (label, d) in detectors {
            let points = run_ber_sweep(&s, &h, &d, &sweep)?;
            print_points(&format!("{} {label}", location.label()), &points);
            if let Some(snr) = readout(&points) {
                println!("{} {label}: BER 1e-3 at {snr:.2} dB", location.label());
            }
            curves.push(BerCurve {
                detector: label,
                scheme: kind,
                location: location.label(),
                points,
            });
        }
    }
    run.write("ber_sweep.csv", |w| report::write_ber_sweep(w, &curves))?;
    Ok(())
}

fn ablation(run: &mut Run) -> Result<(), CliError> {
    let mut reports = Vec::new();
    for kind in SCHEMES {
        reports.push((kind, commands::ablation(&at(&run.config, kind, ReceiverLocation::Center))?));
    }
    let unbracketed = reports.iter().any(|(_, r)| r.gain_db.is_none());
    run.write("ablation.csv", |w| report::write_ablation(w, &reports))?;
    if unbracketed {
        return Err(CliError::Analysis(
            "BER 1e-3 is not bracketed by every ablation curve; widen sweep.snr_db".into(),
        ));
    }
    Ok(())
}

fn alpha(run: &mut Run) -> Result<(), CliError> {
    let location = run.config.geometry.location()?;
    for kind in SCHEMES {
        let cells = commands::alpha_cells(&at(&run.config, kind, location))?;
        run.write(&format!("{kind}/alpha_sweep.csv"), |w| report::write_alpha_sweep(w, &cells))?;
    }
    Ok(())
}

fn timing(run: &mut Run) -> Result<(), CliError> {
    let mut reports = Vec::new();
    for kind in SCHEMES {
        reports.push((kind, commands::timing(&at(&run.config, kind, ReceiverLocation::Center))?));
    }
    run.write("timing.csv", |w| report::write_timing(w, &reports))?;
    Ok(())
}
