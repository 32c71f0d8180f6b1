//! Waveform files (header row plus one row per sample) and the JSON
//! ground-truth sidecar.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::record::WaveformRecord;

use super::scenario::GroundTruth;

pub const WAVEFORM_HEADER: [&str; 7] = ["t_s", "ia_s", "ib_s", "ic_s", "ia_r", "ib_r", "ic_r"];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

pub fn write_waveform<W: Write>(record: &WaveformRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(WAVEFORM_HEADER).map_err(csv_err)?;
    let mut row = [0.0f64; 7];
    for k in 0..record.len() {
        row[0] = record.time_of(k);
        for p in 0..3 {
            row[1 + p] = record.sending[p][k];
            row[4 + p] = record.receiving[p][k];
        }
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a waveform file. The sample rate is inferred from the time column,
/// which must be uniformly spaced.
pub fn read_waveform<R: Read>(input: R) -> Result<WaveformRecord> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("waveform file lacks a `{name}` column")))
    };
    let idx: Vec<usize> = WAVEFORM_HEADER
        .iter()
        .map(|n| col(n))
        .collect::<Result<_>>()?;
    let mut t = Vec::new();
    let mut sending: [Vec<f64>; 3] = Default::default();
    let mut receiving: [Vec<f64>; 3] = Default::default();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let get = |i: usize| -> Result<f64> {
            let field = rec.get(idx[i]).unwrap_or("");
            field.trim().parse::<f64>().map_err(|_| {
                Error::Parse(format!(
                    "row {}: `{field}` in column {} is not a number",
                    line + 2,
                    WAVEFORM_HEADER[i]
                ))
            })
        };
        t.push(get(0)?);
        for p in 0..3 {
            sending[p].push(get(1 + p)?);
            receiving[p].push(get(4 + p)?);
        }
    }
    if t.len() < 2 {
        return Err(Error::Validation(
            "waveform file needs at least two samples".into(),
        ));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Validation("time column must increase".into()));
    }
    if t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-3 * dt) {
        return Err(Error::Validation(
            "time column is not uniformly sampled".into(),
        ));
    }
    let mut record = WaveformRecord::new(1.0 / dt, sending, receiving)?;
    record.t0 = t[0];
    Ok(record)
}

pub fn write_waveform_csv(record: &WaveformRecord, path: &Path) -> Result<()> {
    write_waveform(record, BufWriter::new(File::create(path)?))
}

pub fn read_waveform_csv(path: &Path) -> Result<WaveformRecord> {
    read_waveform(BufReader::new(File::open(path)?))
}

pub fn write_truth(truth: &GroundTruth, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, truth)?;
    f.flush()?;
    Ok(())
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedersim::config::{FaultSpec, ScenarioConfig};
    use crate::feedersim::scenario::simulate_scenario;
    use crate::label::FaultLabel;

    #[test]
    fn waveform_round_trip_is_exact() {
        let cfg = ScenarioConfig {
            duration_s: 0.05,
            snr_db: Some(30.0),
            seed: 3,
            ..ScenarioConfig::default()
        };
        let fault = FaultSpec {
            t_f: 0.03,
            label: FaultLabel::Bcg,
            r_f: Some(20.0),
            location_frac: 0.4,
            internal: true,
        };
        let (rec, truth) = simulate_scenario(&cfg, Some(fault)).unwrap();
        let mut buf = Vec::new();
        write_waveform(&rec, &mut buf).unwrap();
        let back = read_waveform(buf.as_slice()).unwrap();
        assert_eq!(back.sending, rec.sending);
        assert_eq!(back.receiving, rec.receiving);
        assert!((back.sample_rate_hz - 1e4).abs() < 1e-6);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        write_truth(&truth, &p).unwrap();
        assert_eq!(read_truth(&p).unwrap(), truth);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let missing = "t_s,ia_s,ib_s,ic_s,ia_r,ib_r\n0,1,2,3,4,5\n";
        assert!(matches!(
            read_waveform(missing.as_bytes()),
            Err(Error::Parse(_))
        ));
        let text = "t_s,ia_s,ib_s,ic_s,ia_r,ib_r,ic_r\n0,1,2,3,4,5,x\n0.1,1,2,3,4,5,6\n";
        assert!(matches!(
            read_waveform(text.as_bytes()),
            Err(Error::Parse(_))
        ));
        let uneven =
            "t_s,ia_s,ib_s,ic_s,ia_r,ib_r,ic_r\n0,1,2,3,4,5,6\n0.1,1,2,3,4,5,6\n0.3,1,2,3,4,5,6\n";
        assert!(matches!(
            read_waveform(uneven.as_bytes()),
            Err(Error::Validation(_))
        ));
    }
}
