//! CSV output of every experiment. One header row, `.` decimals, floats in
//! shortest round-trip form (channel gains in fixed 17-digit scientific
//! notation) so identical runs produce identical bytes.

use std::io::Write;

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::modulation::{Codebook, SchemeKind};
use crate::scalar::Scalar;

use super::experiments::{AblationReport, AlphaCell, MseLog, TimingReport};
use super::sweep::{BerCurve, BerPoint};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_owned()
    } else {
        // `{}` on f64 is the shortest representation that round-trips
        format!("{v}")
    }
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub const BER_SWEEP_HEADER: [&str; 9] = [
    "detector", "scheme", "location", "snr_db", "bits", "errors", "ber", "stderr", "censored",
];

fn point_fields(p: &BerPoint) -> [String; 6] {
    [
        float(p.snr_db),
        p.bits.to_string(),
        p.errors.to_string(),
        float(p.ber),
        float(p.stderr),
        p.censored.to_string(),
    ]
}

/// `ber_sweep.csv`: one row per (curve, SNR point).
pub fn write_ber_sweep<W: Write>(out: W, curves: &[BerCurve]) -> Result<()> {
    let rows = curves.iter().flat_map(|c| {
        c.points.iter().map(move |p| {
            let mut row = vec![c.detector.clone(), c.scheme.name().to_owned(), c.location.clone()];
            row.extend(point_fields(p));
            row
        })
    });
    write_rows(out, &BER_SWEEP_HEADER, rows)
}

pub const MSE_LOG_HEADER: [&str; 4] = ["training_snr_db", "epoch", "train_mse", "val_mse"];

pub fn write_mse_log<W: Write>(out: W, logs: &[MseLog]) -> Result<()> {
    let rows = logs.iter().flat_map(|l| {
        l.records.iter().map(move |r| {
            vec![
                float(l.training_snr_db),
                r.epoch.to_string(),
                float(r.train_mse),
                float(r.val_mse),
            ]
        })
    });
    write_rows(out, &MSE_LOG_HEADER, rows)
}

pub const ALPHA_SWEEP_HEADER: [&str; 3] = ["alpha", "snr_db", "ber"];

/// `alpha_sweep.csv`; cells whose training diverged carry `nan`.
pub fn write_alpha_sweep<W: Write>(out: W, cells: &[AlphaCell]) -> Result<()> {
    let rows = cells
        .iter()
        .map(|c| vec![float(c.alpha), float(c.snr_db), float(c.ber().unwrap_or(f64::NAN))]);
    write_rows(out, &ALPHA_SWEEP_HEADER, rows)
}

pub const ABLATION_HEADER: [&str; 9] = [
    "scheme", "input", "snr_db", "bits", "errors", "ber", "stderr", "censored", "gain_db",
];

/// `ablation.csv`: both arms' curves; `gain_db` repeats the readout gain of
/// the scheme (empty when unbracketed).
pub fn write_ablation<W: Write>(out: W, reports: &[(SchemeKind, AblationReport)]) -> Result<()> {
    let rows = reports.iter().flat_map(|(kind, r)| {
        let gain = r.gain_db.map(float).unwrap_or_default();
        [("alpha_f_y", &r.mapping), ("alpha_y", &r.identity)]
            .into_iter()
            .flat_map(move |(input, points)| {
                let gain = gain.clone();
                points.iter().map(move |p| {
                    let mut row = vec![kind.name().to_owned(), input.to_owned()];
                    row.extend(point_fields(p));
                    row.push(gain.clone());
                    row
                })
            })
    });
    write_rows(out, &ABLATION_HEADER, rows)
}

pub const TIMING_HEADER: [&str; 6] = ["scheme", "detector", "vectors", "wall_seconds", "per_vector_us", "bit_errors"];

pub fn write_timing<W: Write>(out: W, reports: &[(SchemeKind, Vec<TimingReport>)]) -> Result<()> {
    let rows = reports.iter().flat_map(|(kind, rs)| {
        rs.iter().map(move |r| {
            vec![
                kind.name().to_owned(),
                r.detector.name().to_owned(),
                r.vectors.to_string(),
                float(r.wall_seconds),
                float(r.per_vector_us),
                r.bit_errors.to_string(),
            ]
        })
    });
    write_rows(out, &TIMING_HEADER, rows)
}

/// Channel matrix, row = PD, column = LED, 17 significant digits.
pub fn write_channel<W: Write, T: Scalar>(out: W, channel: &ChannelMatrix<T>) -> Result<()> {
    let mut header = vec!["pd".to_owned()];
    header.extend((0..channel.nt()).map(|t| format!("led_{t}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = channel.matrix().row_iter().enumerate().map(|(r, row)| {
        let mut fields = vec![r.to_string()];
        fields.extend(row.iter().map(|v| format!("{:.16e}", v.as_f64())));
        fields
    });
    write_rows(out, &header, rows)
}

/// Codebook, one row per frame in index order: bit string, then the
/// transmit vector.
pub fn write_codebook<W: Write, T: Scalar>(out: W, codebook: &Codebook<T>) -> Result<()> {
    let nt = codebook.entries().first().map_or(0, |(_, x)| x.len());
    let mut header = vec!["bits".to_owned()];
    header.extend((0..nt).map(|t| format!("x_{t}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = codebook.entries().iter().map(|(frame, x)| {
        let mut fields = vec![frame.to_string()];
        fields.extend(x.iter().map(|v| float(v.as_f64())));
        fields
    });
    write_rows(out, &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::GomimoScheme;

    #[test]
    fn ber_sweep_layout() {
        let curve = BerCurve {
            detector: "joint_ml".into(),
            scheme: SchemeKind::Gosm,
            location: "center".into(),
            points: vec![BerPoint::from_counts(130.0, 1000, 4, 8), BerPoint::from_counts(140.0, 1000, 4, 0)],
        };
        let mut buf = Vec::new();
        write_ber_sweep(&mut buf, &[curve]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "detector,scheme,location,snr_db,bits,errors,ber,stderr,censored");
        assert!(lines[1].starts_with("joint_ml,gosm,center,130,4000,8,0.002,"));
        assert!(lines[2].ends_with(",0,0,0,true"));
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn codebook_rows() {
        let mut buf = Vec::new();
        write_codebook(&mut buf, &GomimoScheme::<f64>::standard(SchemeKind::Gosmp).enumerate_codebook()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert!(text.starts_with("bits,x_0,x_1,x_2,x_3\n000000,"));
    }

    #[test]
    fn alpha_divergence_is_nan() {
        let cell = AlphaCell {
            alpha: 1e-3,
            snr_db: 140.0,
            point: None,
            failure: Some("diverged".into()),
        };
        let mut buf = Vec::new();
        write_alpha_sweep(&mut buf, &[cell]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "alpha,snr_db,ber\n0.001,140,nan\n");
    }
}
