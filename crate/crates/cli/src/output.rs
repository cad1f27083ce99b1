//! CSV series and JSON reports.

use std::io::Write;
use std::path::Path;

use blackstock::EnergySample;
use serde::Serialize;

use crate::CliError;

/// Column names of `series.csv`.
pub const SERIES_HEADER: [&str; 11] = [
    "t", "E", "E1", "E2", "F1", "F2", "F3", "L", "D_cum", "w_ptt", "w_lap_vt",
];

fn row(s: &EnergySample) -> [f64; 11] {
    [
        s.t, s.e, s.e1, s.e2, s.f1, s.f2, s.f3, s.l, s.d_cum, s.w_ptt, s.w_lap_vt,
    ]
}

/// Writes samples as CSV with 17 significant digits.
pub fn write_series<W: Write>(out: W, samples: &[EnergySample]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    for s in samples {
        w.write_record(row(s).iter().map(|x| format!("{x:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_file(path: &Path, samples: &[EnergySample]) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_series(std::io::BufWriter::new(file), samples)
        .map_err(|e| CliError::Config(format!("writing {}: {e}", path.display())))
}

/// Reads the `t` and `E` columns of a series file.
pub fn read_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = r
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{} has no {name:?} column", path.display())))
    };
    let (ti, ei) = (column("t")?, column("E")?);
    let (mut times, mut energies) = (Vec::new(), Vec::new());
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let parse = |i: usize| {
            record
                .get(i)
                .and_then(|x| x.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "{}: bad number on data row {}",
                        path.display(),
                        line + 1
                    ))
                })
        };
        times.push(parse(ti)?);
        energies.push(parse(ei)?);
    }
    Ok((times, energies))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
