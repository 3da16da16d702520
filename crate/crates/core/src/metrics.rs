//! Landmark evaluation: normalized mean error, failure rate and CED curves.
//!
//! Normalization constants (inter-pupil, inter-ocular or face size) come with
//! each record. A failure is an NME strictly above the threshold; a CED
//! fraction counts records with NME at or below each threshold.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::heatmap::ShapeSet;

/// NME above which an image counts as a failure.
pub const DEFAULT_FAILURE_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub predicted: ShapeSet,
    pub truth: ShapeSet,
    pub norm_constant: f64,
}

impl EvalRecord {
    pub fn new(predicted: ShapeSet, truth: ShapeSet, norm_constant: f64) -> Result<Self> {
        let rec = Self {
            predicted,
            truth,
            norm_constant,
        };
        rec.validate()?;
        Ok(rec)
    }

    fn validate(&self) -> Result<()> {
        if self.predicted.len() != self.truth.len() {
            return invalid(format!(
                "landmark counts differ: {} vs {}",
                self.predicted.len(),
                self.truth.len()
            ));
        }
        if self.truth.is_empty() {
            return invalid("record has no landmarks");
        }
        if !(self.norm_constant > 0.0 && self.norm_constant.is_finite()) {
            return invalid(format!(
                "normalization constant must be > 0, got {}",
                self.norm_constant
            ));
        }
        Ok(())
    }
}

/// Distance between landmarks `i` and `j` of a shape, e.g. the outer eye
/// corners for inter-ocular normalization.
pub fn inter_landmark_distance(shape: &ShapeSet, i: usize, j: usize) -> Result<f64> {
    match (shape.landmarks.get(i), shape.landmarks.get(j)) {
        (Some(a), Some(b)) => Ok(a.distance(b)),
        _ => invalid(format!(
            "landmark index out of range ({i}, {j}) for {} landmarks",
            shape.len()
        )),
    }
}

pub fn nme(rec: &EvalRecord) -> Result<f64> {
    rec.validate()?;
    let total: f64 = rec
        .predicted
        .landmarks
        .iter()
        .zip(&rec.truth.landmarks)
        .map(|(p, t)| p.distance(t))
        .sum();
    Ok(total / rec.truth.len() as f64 / rec.norm_constant)
}

fn nmes(records: &[EvalRecord]) -> Result<Vec<f64>> {
    if records.is_empty() {
        return invalid("no records to evaluate");
    }
    records.iter().map(nme).collect()
}

/// Fraction of records whose NME is strictly greater than `threshold`.
pub fn failure_rate(records: &[EvalRecord], threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return invalid(format!("failure threshold must be > 0, got {threshold}"));
    }
    let values = nmes(records)?;
    Ok(failure_fraction(&values, threshold))
}

fn failure_fraction(values: &[f64], threshold: f64) -> f64 {
    values.iter().filter(|&&e| e > threshold).count() as f64 / values.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CedCurve {
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl CedCurve {
    /// `threshold,fraction` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "threshold,fraction")?;
        for (t, f) in self.thresholds.iter().zip(&self.fractions) {
            writeln!(w, "{},{}", format_sig9(*t), format_sig9(*f))?;
        }
        Ok(())
    }
}

/// Cumulative error distribution on `steps` evenly spaced thresholds
/// covering `[0, max_threshold]`.
pub fn ced_curve(records: &[EvalRecord], max_threshold: f64, steps: usize) -> Result<CedCurve> {
    let values = nmes(records)?;
    ced_from_nmes(&values, max_threshold, steps)
}

pub fn ced_from_nmes(values: &[f64], max_threshold: f64, steps: usize) -> Result<CedCurve> {
    if values.is_empty() {
        return invalid("no records to evaluate");
    }
    if steps < 2 {
        return invalid(format!("CED needs at least 2 steps, got {steps}"));
    }
    if !(max_threshold > 0.0 && max_threshold.is_finite()) {
        return invalid(format!("max threshold must be > 0, got {max_threshold}"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = (steps - 1) as f64;
    let thresholds: Vec<f64> = (0..steps)
        .map(|i| max_threshold * i as f64 / last)
        .collect();
    let fractions = thresholds
        .iter()
        .map(|&t| sorted.partition_point(|&e| e <= t) as f64 / sorted.len() as f64)
        .collect();
    Ok(CedCurve {
        thresholds,
        fractions,
    })
}

/// One row of an NME (std) results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub nme: f64,
    /// Population standard deviation of the per-image NME.
    pub std: f64,
    pub failure: f64,
}

impl Summary {
    pub const CSV_HEADER: &'static str = "name,nme,std,failure";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.name,
            format_sig9(self.nme),
            format_sig9(self.std),
            format_sig9(self.failure)
        )
    }
}

pub fn summarize(name: &str, records: &[EvalRecord], failure_threshold: f64) -> Result<Summary> {
    if !(failure_threshold > 0.0) {
        return invalid(format!(
            "failure threshold must be > 0, got {failure_threshold}"
        ));
    }
    let values = nmes(records)?;
    let (mean, std) = mean_std(&values);
    Ok(Summary {
        name: name.to_string(),
        nme: mean,
        std,
        failure: failure_fraction(&values, failure_threshold),
    })
}

/// Mean and population standard deviation (two-pass).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Format with nine significant digits, `%.9g` style, `.` as the decimal
/// separator.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatmap::Landmark;
    use proptest::prelude::*;

    type Pair = ((f64, f64), (f64, f64));

    fn rec(pairs: &[Pair], norm: f64) -> EvalRecord {
        let p = pairs.iter().map(|(a, _)| Landmark::new(a.0, a.1)).collect();
        let t = pairs.iter().map(|(_, b)| Landmark::new(b.0, b.1)).collect();
        EvalRecord::new(ShapeSet::new(p).unwrap(), ShapeSet::new(t).unwrap(), norm).unwrap()
    }

    fn off(dx: f64, norm: f64) -> EvalRecord {
        rec(&[((dx, 0.0), (0.0, 0.0))], norm)
    }

    #[test]
    fn nme_examples() {
        assert_eq!(nme(&rec(&[((1.0, 2.0), (1.0, 2.0))], 5.0)).unwrap(), 0.0);
        assert_eq!(
            nme(&rec(&[((13.0, 24.0), (10.0, 20.0))], 100.0)).unwrap(),
            0.05
        );
        let two = rec(&[((1.0, 0.0), (0.0, 0.0)), ((0.0, 3.0), (0.0, 0.0))], 10.0);
        assert_eq!(nme(&two).unwrap(), 0.2);
    }

    #[test]
    fn nme_rejects_bad_records() {
        let s = ShapeSet::from(Landmark::default());
        assert!(EvalRecord::new(s.clone(), s.clone(), 0.0).is_err());
        let two = ShapeSet::new(vec![Landmark::default(); 2]).unwrap();
        assert!(EvalRecord::new(s.clone(), two, 1.0).is_err());
        let bad = EvalRecord {
            predicted: s.clone(),
            truth: s,
            norm_constant: 0.0,
        };
        assert!(nme(&bad).is_err());
    }

    #[test]
    fn failure_rate_examples() {
        let ok = vec![off(5.0, 100.0); 3];
        assert_eq!(failure_rate(&ok, 0.10).unwrap(), 0.0);
        let half = vec![off(5.0, 100.0), off(12.0, 100.0)];
        assert_eq!(failure_rate(&half, 0.10).unwrap(), 0.5);
        let boundary = vec![off(10.0, 100.0)];
        assert_eq!(nme(&boundary[0]).unwrap(), 0.1);
        assert_eq!(failure_rate(&boundary, 0.10).unwrap(), 0.0);
        assert!(failure_rate(&[], 0.1).is_err());
        assert!(failure_rate(&ok, 0.0).is_err());
    }

    #[test]
    fn ced_examples() {
        let perfect = vec![off(0.0, 1.0); 4];
        let c = ced_curve(&perfect, 0.1, 11).unwrap();
        assert!(c.fractions.iter().all(|&f| f == 1.0));

        let recs = vec![off(2.0, 100.0), off(6.0, 100.0)];
        let c = ced_curve(&recs, 0.08, 5).unwrap();
        assert_eq!(c.thresholds, vec![0.0, 0.02, 0.04, 0.06, 0.08]);
        assert_eq!(c.fractions, vec![0.0, 0.5, 0.5, 1.0, 1.0]);

        assert!(ced_curve(&[], 0.1, 5).is_err());
        assert!(ced_curve(&recs, 0.1, 1).is_err());
    }

    #[test]
    fn ced_csv() {
        let c = ced_from_nmes(&[0.02, 0.06], 0.08, 3).unwrap();
        let mut out = Vec::new();
        c.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "threshold,fraction\n0,0\n0.04,0.5\n0.08,1\n"
        );
    }

    #[test]
    fn summary_row() {
        let recs = vec![off(2.0, 100.0), off(6.0, 100.0), off(12.0, 100.0)];
        let s = summarize("toy", &recs, 0.1).unwrap();
        assert!((s.nme - 0.2 / 3.0).abs() < 1e-15);
        let mean = 0.2 / 3.0;
        let var = [0.02, 0.06, 0.12]
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / 3.0;
        assert!((s.std - var.sqrt()).abs() < 1e-15);
        assert!((s.failure - 1.0 / 3.0).abs() < 1e-15);
        assert!(s.csv_row().starts_with("toy,0.0666666667,"));
    }

    #[test]
    fn inter_landmark_helper() {
        let s = ShapeSet::new(vec![Landmark::new(0.0, 0.0), Landmark::new(3.0, 4.0)]).unwrap();
        assert_eq!(inter_landmark_distance(&s, 0, 1).unwrap(), 5.0);
        assert!(inter_landmark_distance(&s, 0, 2).is_err());
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.25), "0.25");
        assert_eq!(format_sig9(24.2), "24.2");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(-123456.7891), "-123456.789");
        assert_eq!(format_sig9(1.5e-7), "1.5e-7");
        assert_eq!(format_sig9(2.0e12), "2e12");
        assert_eq!(format_sig9(123456789.4), "123456789");
    }

    proptest! {
        #[test]
        fn nme_scale_covariant(
            pts in proptest::collection::vec(((-50.0f64..50.0, -50.0f64..50.0), (-50.0f64..50.0, -50.0f64..50.0)), 1..20),
            norm in 0.5f64..200.0,
            k in prop_oneof![Just(2.0), Just(0.5), Just(4.0), Just(0.125)],
        ) {
            let a = nme(&rec(&pts, norm)).unwrap();
            let scaled: Vec<_> = pts.iter().map(|((a, b), (c, d))| ((a * k, b * k), (c * k, d * k))).collect();
            let b = nme(&rec(&scaled, norm * k)).unwrap();
            let ulp = f64::EPSILON * a.abs().max(f64::MIN_POSITIVE);
            prop_assert!((a - b).abs() <= ulp, "{} vs {}", a, b);
        }

        #[test]
        fn ced_monotone_and_failure_bounded(
            vals in proptest::collection::vec(0.0f64..0.3, 1..50),
            steps in 2usize..40,
        ) {
            let c = ced_from_nmes(&vals, 0.2, steps).unwrap();
            prop_assert!(c.fractions.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(*c.fractions.last().unwrap() <= 1.0);
            let f = failure_fraction(&vals, 0.1);
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }
}
