//! Report serialization: JSON with 17 significant digits, the CSV sidecar and plot data.

use std::io::{self, Write};

use hardylab_core::verify::harness::{Check, TrialRecord};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// Pretty JSON whose floats are written as `{:.16e}`; non-finite floats become `null`.
pub struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Default for ExactFloats<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::with_indent(b"  "))
    }
}

pub fn write_float<W: ?Sized + Write>(w: &mut W, v: f64) -> io::Result<()> {
    if v.is_finite() {
        write!(w, "{v:.16e}")
    } else {
        w.write_all(b"null")
    }
}

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write_float(w, v)
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write_float(w, v as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ExactFloats::default());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Single-line variant, used where a value is compared rather than read.
pub fn to_json_compact<T: Serialize>(value: &T) -> serde_json::Result<String> {
    struct Compact;
    impl Formatter for Compact {
        fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
            write_float(w, v)
        }
    }
    let mut out = Vec::new();
    value.serialize(&mut serde_json::Serializer::with_formatter(&mut out, Compact))?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

pub const CSV_HEADER: [&str; 6] = ["trial_id", "seed", "lhs", "rhs", "ratio", "flags"];

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// One row per trial; empty cells for missing numbers, flags joined by `;`.
pub fn summary_csv(trials: &[TrialRecord]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for t in trials {
        w.write_record([
            t.trial_id.clone(),
            t.seed.to_string(),
            cell(t.lhs),
            cell(t.rhs),
            cell(t.ratio),
            t.flags.join(";"),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Two-column plot data with a `# x y` header.
pub fn plot_data(x_label: &str, y_label: &str, rows: &[(f64, f64)]) -> Vec<u8> {
    let mut out = format!("# {x_label} {y_label}\n");
    for (x, y) in rows {
        out.push_str(&format!("{x:.16e} {y:.16e}\n"));
    }
    out.into_bytes()
}

/// Histogram of `log10(ratio)` over positive ratios, quarter-decade bins (bin center, count).
pub fn ratio_histogram(trials: &[TrialRecord], check: Check) -> Vec<(f64, f64)> {
    let logs: Vec<f64> = trials
        .iter()
        .filter(|t| t.check == check)
        .filter_map(|t| t.ratio)
        .filter(|r| *r > 0.0)
        .map(f64::log10)
        .collect();
    if logs.is_empty() {
        return Vec::new();
    }
    let width = 0.25;
    let lo = (logs.iter().cloned().fold(f64::INFINITY, f64::min) / width).floor() as i64;
    let hi = (logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / width).floor() as i64;
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for v in &logs {
        counts[((v / width).floor() as i64 - lo) as usize] += 1;
    }
    counts.iter().enumerate().map(|(k, c)| ((lo + k as i64) as f64 * width + 0.5 * width, *c as f64)).collect()
}

/// `(log distance, log |T|)` pairs recorded by decay trials.
pub fn decay_points(trial: &TrialRecord) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 0.. {
        let (Some(Some(x)), Some(Some(y))) = (
            trial.extra.get(&format!("probe{k}_log_distance")),
            trial.extra.get(&format!("probe{k}_log_value")),
        ) else {
            break;
        };
        out.push((*x, *y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let vals: [f64; 6] = [0.1, 1.0 / 3.0, 6.02214076e23, -2.2250738585072014e-308, 5e-324, 1e300];
        let text = to_json(&vals.to_vec()).unwrap();
        let back: Vec<f64> = serde_json::from_slice(&text).unwrap();
        for (a, b) in vals.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(String::from_utf8(text).unwrap().contains("4.9406564584124654e-324"));
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(to_json_compact(&vec![f64::NAN, 1.0]).unwrap(), "[null,1.0000000000000000e0]");
    }

    #[test]
    fn plot_header_and_rows() {
        let text = String::from_utf8(plot_data("x", "y", &[(1.0, 2.0)])).unwrap();
        assert_eq!(text, "# x y\n1.0000000000000000e0 2.0000000000000000e0\n");
    }
}
