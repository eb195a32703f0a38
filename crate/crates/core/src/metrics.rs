//! Confusion matrices, one-vs-rest recall / precision / accuracy, and the
//! FPS-per-peak-FLOPS efficiency ratio.
//!
//! Undefined ratios (zero denominators) are `None`, never 0 or NaN.

use std::fmt;

use crate::error::{Error, Result};

/// `counts[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        ConfusionMatrix { labels, counts: vec![vec![0; n]; n] }
    }

    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = labels.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig(format!("confusion matrix must be {n}x{n}")));
        }
        Ok(ConfusionMatrix { labels, counts })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Records one (actual, predicted) pair by class index.
    pub fn record(&mut self, actual: usize, predicted: usize) -> Result<()> {
        let n = self.labels.len();
        for i in [actual, predicted] {
            if i >= n {
                return Err(Error::ClassOutOfRange { index: i, classes: n });
            }
        }
        self.counts[actual][predicted] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, actual: usize) -> u64 {
        self.counts[actual].iter().sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        self.counts.iter().map(|r| r[predicted]).sum()
    }

    /// Multiclass accuracy `trace / total`. For two classes this equals
    /// [`acc`] of either class's tally; with more classes the per-class
    /// one-vs-rest accuracy also credits true negatives and is higher.
    pub fn overall_accuracy(&self) -> Option<f64> {
        ratio(self.trace(), self.total())
    }

    pub fn per_class(&self) -> Vec<ClassMetrics> {
        (0..self.labels.len())
            .map(|i| {
                let t = self.tally_at(i);
                ClassMetrics { label: self.labels[i].clone(), tally: t, tpr: tpr(&t), ppv: ppv(&t), acc: acc(&t) }
            })
            .collect()
    }

    fn tally_at(&self, pos: usize) -> BinaryTally {
        let tp = self.counts[pos][pos];
        let fn_ = self.row_sum(pos) - tp;
        let fp = self.col_sum(pos) - tp;
        BinaryTally { tp, fp, fn_, tn: self.total() - tp - fn_ - fp }
    }

    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["actual\\predicted".to_string()];
        head.extend(self.labels.iter().cloned());
        head.extend(["tpr", "ppv", "acc"].map(String::from));
        w.write_record(&head)?;
        for (row, m) in self.counts.iter().zip(self.per_class()) {
            let mut rec = vec![m.label.clone()];
            rec.extend(row.iter().map(u64::to_string));
            rec.extend([m.tpr, m.ppv, m.acc].map(fmt_metric));
            w.write_record(&rec)?;
        }
        let mut last = vec!["overall_accuracy".to_string()];
        last.extend(std::iter::repeat_n(String::new(), self.labels.len() + 2));
        last.push(fmt_metric(self.overall_accuracy()));
        w.write_record(&last)?;
        w.flush()?;
        Ok(())
    }
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(8);
        write!(f, "{:>width$}", "actual\\pred")?;
        for l in &self.labels {
            write!(f, " {l:>width$}")?;
        }
        writeln!(f)?;
        for (l, row) in self.labels.iter().zip(&self.counts) {
            write!(f, "{l:>width$}")?;
            for c in row {
                write!(f, " {c:>width$}")?;
            }
            writeln!(f)?;
        }
        writeln!(f)?;
        writeln!(f, "{:>width$} {:>9} {:>9} {:>9}", "class", "TPR", "PPV", "ACC")?;
        for m in self.per_class() {
            writeln!(
                f,
                "{:>width$} {:>9} {:>9} {:>9}",
                m.label,
                fmt_metric(m.tpr),
                fmt_metric(m.ppv),
                fmt_metric(m.acc)
            )?;
        }
        write!(f, "overall accuracy {}", fmt_metric(self.overall_accuracy()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub label: String,
    pub tally: BinaryTally,
    pub tpr: Option<f64>,
    pub ppv: Option<f64>,
    pub acc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BinaryTally {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

/// Counts `(actual, predicted)` label pairs.
pub fn confusion_from_predictions<A, P>(pairs: &[(A, P)], labels: &[String]) -> Result<ConfusionMatrix>
where
    A: AsRef<str>,
    P: AsRef<str>,
{
    let mut m = ConfusionMatrix::new(labels.to_vec());
    for (a, p) in pairs {
        let a = m.index_of(a.as_ref())?;
        let p = m.index_of(p.as_ref())?;
        m.counts[a][p] += 1;
    }
    Ok(m)
}

/// One-vs-rest reduction for `positive`.
pub fn binary_tally(matrix: &ConfusionMatrix, positive: &str) -> Result<BinaryTally> {
    Ok(matrix.tally_at(matrix.index_of(positive)?))
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Recall, `TP / (TP + FN)`.
pub fn tpr(t: &BinaryTally) -> Option<f64> {
    ratio(t.tp, t.tp + t.fn_)
}

/// Precision, `TP / (TP + FP)`.
pub fn ppv(t: &BinaryTally) -> Option<f64> {
    ratio(t.tp, t.tp + t.fp)
}

/// `(TP + TN) / (TP + TN + FP + FN)`.
pub fn acc(t: &BinaryTally) -> Option<f64> {
    ratio(t.tp + t.tn, t.tp + t.tn + t.fp + t.fn_)
}

/// Frames per second per GFLOPS of device peak; `peak_flops` is in FLOPS.
pub fn efficiency(fps: f64, peak_flops: f64) -> Result<f64> {
    if !(peak_flops.is_finite() && peak_flops > 0.0) {
        return Err(Error::NonPositive { what: "peak FLOPS", value: peak_flops });
    }
    Ok(fps / (peak_flops / 1e9))
}
