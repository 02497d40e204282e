//! Per-trial CSV output and the matching reader.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::risks::{Mode, RiskRecord, TrialDiagnostics};

use super::runner::SweepResult;

pub const CSV_HEADER: [&str; 12] = [
    "config_id",
    "mode",
    "n",
    "trial",
    "seed",
    "alpha",
    "rel_l2_error",
    "rel_excess_risk",
    "cond_RRstar",
    "c_value",
    "resamples",
    "wall_ms",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn io(e: csv::Error) -> Error {
    Error::Io(e.into())
}

/// Writes `records` sorted by (mode, n, trial).
pub fn write_records<W: Write>(records: &[RiskRecord], out: W) -> Result<()> {
    let mut sorted: Vec<&RiskRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.mode, r.n, r.trial));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in sorted {
        let (cond, c) = match r.diagnostics {
            Some(d) => (format_float(d.cond_rrstar), format_float(d.c_value)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.config_id.clone(),
            r.mode.to_string(),
            r.n.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            format_float(r.alpha),
            format_float(r.rel_l2_error),
            format_float(r.rel_excess_risk),
            cond,
            c,
            r.resamples.to_string(),
            r.wall_ms.map(|v| v.to_string()).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(res: &SweepResult, path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_records(&res.records, file)
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RiskRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(io)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Csv(format!("unexpected header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(|e| Error::Csv(e.to_string()))?;
        let line = i + 2;
        let field = |k: usize| row.get(k).unwrap_or("");
        let bad = |k: usize| Error::Csv(format!("line {line}: bad {} '{}'", CSV_HEADER[k], field(k)));
        let real = |k: usize| field(k).parse::<f64>().map_err(|_| bad(k));
        let opt_real = |k: usize| if field(k).is_empty() { Ok(None) } else { real(k).map(Some) };
        let diagnostics = match (opt_real(8)?, opt_real(9)?) {
            (Some(cond_rrstar), Some(c_value)) => Some(TrialDiagnostics { cond_rrstar, c_value }),
            (None, None) => None,
            _ => return Err(Error::Csv(format!("line {line}: cond_RRstar and c_value must both be present or absent"))),
        };
        out.push(RiskRecord {
            config_id: field(0).to_string(),
            mode: Mode::parse(field(1)).ok_or_else(|| bad(1))?,
            n: field(2).parse().map_err(|_| bad(2))?,
            trial: field(3).parse().map_err(|_| bad(3))?,
            seed: field(4).parse().map_err(|_| bad(4))?,
            alpha: real(5)?,
            rel_l2_error: real(6)?,
            rel_excess_risk: real(7)?,
            diagnostics,
            resamples: field(10).parse().map_err(|_| bad(10))?,
            wall_ms: if field(11).is_empty() {
                None
            } else {
                Some(field(11).parse().map_err(|_| bad(11))?)
            },
        });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<RiskRecord>> {
    read_records(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(mode: Mode, n: usize, trial: usize) -> RiskRecord {
        RiskRecord {
            config_id: "c".into(),
            mode,
            n,
            trial,
            seed: 12345678901234567890,
            alpha: 1e-3,
            rel_l2_error: 0.1 + n as f64 * 1e-3,
            rel_excess_risk: 1.0 / 3.0,
            diagnostics: None,
            resamples: 0,
            wall_ms: None,
        }
    }

    fn to_string(records: &[RiskRecord]) -> String {
        let mut buf = Vec::new();
        write_records(records, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_only_when_empty() {
        assert_eq!(
            to_string(&[]),
            "config_id,mode,n,trial,seed,alpha,rel_l2_error,rel_excess_risk,cond_RRstar,c_value,resamples,wall_ms\n"
        );
    }

    #[test]
    fn one_record_two_lines() {
        let text = to_string(&[record(Mode::Gaussian, 10, 0)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[1],
            "c,gaussian,10,0,12345678901234567890,1.0000000000000000e-3,1.1000000000000000e-1,3.3333333333333331e-1,,,0,"
        );
    }

    #[test]
    fn rows_sorted() {
        let recs = vec![
            record(Mode::Gaussian, 10, 1),
            record(Mode::Binary, 32, 0),
            record(Mode::Gaussian, 10, 0),
            record(Mode::Binary, 10, 5),
        ];
        let back = read_records(to_string(&recs).as_bytes()).unwrap();
        let keys: Vec<_> = back.iter().map(|r| (r.mode, r.n, r.trial)).collect();
        assert_eq!(
            keys,
            vec![(Mode::Binary, 10, 5), (Mode::Binary, 32, 0), (Mode::Gaussian, 10, 0), (Mode::Gaussian, 10, 1)]
        );
    }

    #[test]
    fn round_trip_exact() {
        let mut r = record(Mode::Binary, 100, 7);
        r.rel_l2_error = 0.1 + 0.2;
        r.diagnostics = Some(TrialDiagnostics {
            cond_rrstar: 123.456_789_012_345_67,
            c_value: f64::MIN_POSITIVE,
        });
        r.resamples = 2;
        r.wall_ms = Some(17);
        let back = read_records(to_string(std::slice::from_ref(&r)).as_bytes()).unwrap();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_records("a,b\n".as_bytes()).is_err());
        let mut text = to_string(&[record(Mode::Binary, 10, 0)]);
        text = text.replace("binary", "ternary");
        assert!(matches!(read_records(text.as_bytes()), Err(Error::Csv(_))));
    }
}
