//! Text output. Every float is written with 17 significant digits
//! (`{:.16e}`), which round-trips any `f64` exactly.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::probability::{OutputDistribution, QMarginalDistribution};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `serde_json` formatter that writes floats via [`fmt_f64`].
#[derive(Debug, Default, Clone, Copy)]
pub struct SigDigitsFormatter;

impl Formatter for SigDigitsFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitsFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Numerical(format!("JSON serialization failed: {e}")))?;
    String::from_utf8(out).map_err(|e| Error::Numerical(e.to_string()))
}

/// Writes `header` and `rows` as CSV, quoting fields only where needed.
pub fn csv_table<R, I>(header: &[&str], rows: R) -> Result<String>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Numerical(format!("CSV write failed: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Numerical(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// `occupations,q_value,probability`; the occupation list is one quoted field.
pub fn distribution_csv(dist: &OutputDistribution) -> Result<String> {
    csv_table(
        &["occupations", "q_value", "probability"],
        dist.entries()
            .iter()
            .map(|(s, p)| [join(s.occupations()), s.q_value().to_string(), fmt_f64(*p)]),
    )
}

pub fn q_marginals_csv(q: &QMarginalDistribution) -> Result<String> {
    csv_table(
        &["q", "probability"],
        q.probabilities()
            .iter()
            .enumerate()
            .map(|(k, p)| [k.to_string(), fmt_f64(*p)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::qft_matrix;
    use crate::probability::output_distribution;
    use crate::states::{FockState, PartitionState};

    #[test]
    fn floats_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            0.815,
            1e-300,
            0.0,
            -2.5e17,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(digits.len(), 17);
        }
    }

    #[test]
    fn json_uses_17_digits() {
        let s = to_json(&serde_json::json!({"p": 0.5, "n": 3})).unwrap();
        assert_eq!(s, r#"{"n":3,"p":5.0000000000000000e-1}"#);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["p"].as_f64(), Some(0.5));
    }

    #[test]
    fn distribution_table() {
        let u = qft_matrix(2).unwrap();
        let r = PartitionState::indistinguishable(FockState::new(vec![1, 1]).unwrap());
        let csv = distribution_csv(&output_distribution(&u, &r).unwrap()).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("occupations,q_value,probability"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("\"2,0\",0,"), "{first}");
        let mut reader = csv::Reader::from_reader(csv.as_bytes());
        let total: f64 = reader
            .records()
            .map(|r| r.unwrap()[2].parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
