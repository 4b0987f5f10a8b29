//! Confusion matrices, one-vs-rest rates, per-mother tables and the
//! ultrasound/device/mother detection-overlap table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dsp::segment::Label;
use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes, both in order 1, 2, 3.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn col_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }
}

pub fn confusion(preds: &[Label], labels: &[Label]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::Shape(format!("{} predictions for {} labels", preds.len(), labels.len())));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, l) in preds.iter().zip(labels) {
        cm.counts[l.ordinal()][p.ordinal()] += 1;
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub tpr: [f64; 3],
    pub fpr: [f64; 3],
}

impl Rates {
    pub fn macro_tpr(&self) -> f64 {
        self.tpr.iter().sum::<f64>() / 3.0
    }
}

/// `tpr_k = cm[k][k] / row_k`, `fpr_k = (col_k − cm[k][k]) / (total − row_k)`.
pub fn rates(cm: &ConfusionMatrix) -> Result<Rates> {
    let total = cm.total();
    let mut tpr = [0.0; 3];
    let mut fpr = [0.0; 3];
    for k in 0..3 {
        let row = cm.row_sum(k);
        if row == 0 {
            return Err(Error::Data(format!("no test segments of class {}", k + 1)));
        }
        tpr[k] = cm.counts[k][k] as f64 / row as f64;
        fpr[k] = (cm.col_sum(k) - cm.counts[k][k]) as f64 / (total - row) as f64;
    }
    Ok(Rates { tpr, fpr })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerMotherRow {
    pub mother_id: String,
    pub class1_segments: usize,
    pub tpr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerMotherTable {
    /// Sorted by descending TPR, then mother id.
    pub rows: Vec<PerMotherRow>,
    /// Mothers without any class-1 segment, for which TPR is undefined.
    pub excluded: Vec<String>,
}

/// Class-1 TPR per mother from `(mother_id, true label, predicted label)`.
pub fn per_mother_tpr<'a>(records: impl IntoIterator<Item = (&'a str, Label, Label)>) -> PerMotherTable {
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (mother, truth, pred) in records {
        let entry = tally.entry(mother).or_default();
        if truth == Label::Fetal {
            entry.0 += 1;
            if pred == Label::Fetal {
                entry.1 += 1;
            }
        }
    }
    let mut table = PerMotherTable::default();
    for (mother, (n, hit)) in tally {
        if n == 0 {
            log::info!("mother {mother} has no class-1 segments; excluded from the per-mother table");
            table.excluded.push(mother.to_string());
        } else {
            table.rows.push(PerMotherRow { mother_id: mother.to_string(), class1_segments: n, tpr: hit as f64 / n as f64 });
        }
    }
    table.rows.sort_by(|a, b| b.tpr.total_cmp(&a.tpr).then_with(|| a.mother_id.cmp(&b.mother_id)));
    table
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub ultrasound: bool,
    pub device: bool,
    pub mother: bool,
    pub count: usize,
    pub percentage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapTable {
    pub rows: Vec<OverlapRow>,
    /// Number of ultrasound events.
    pub total: usize,
    pub tol_s: f64,
}

impl OverlapTable {
    pub fn row(&self, device: bool, mother: bool) -> Option<&OverlapRow> {
        self.rows.iter().find(|r| r.device == device && r.mother == mother)
    }
}

fn distance_to(t: f64, (a, b): (f64, f64)) -> f64 {
    if t < a {
        a - t
    } else if t > b {
        t - b
    } else {
        0.0
    }
}

/// Channels of one session: ultrasound event times, device detection
/// intervals and mother button press times.
#[derive(Clone, Copy, Debug)]
pub struct OverlapInput<'a> {
    pub ultrasound: &'a [f64],
    pub device: &'a [(f64, f64)],
    pub mother: &'a [f64],
}

/// Match each ultrasound event against device detections (intervals, any
/// within `tol_s`) and mother button presses (each press used at most
/// once, nearest first). Rows (1,0,0), (1,1,0), (1,1,1) are always
/// present; (1,0,1) appears only when it occurs.
pub fn overlap_table(ultrasound: &[f64], device: &[(f64, f64)], mother: &[f64], tol_s: f64) -> Result<OverlapTable> {
    overlap_table_sessions(&[OverlapInput { ultrasound, device, mother }], tol_s)
}

/// Pooled over sessions; events are only matched within their own session.
pub fn overlap_table_sessions(sessions: &[OverlapInput<'_>], tol_s: f64) -> Result<OverlapTable> {
    if !(tol_s >= 0.0) {
        return Err(Error::InvalidParameter(format!("overlap tolerance {tol_s} s must be non-negative")));
    }
    let mut counts: BTreeMap<(bool, bool), usize> = BTreeMap::new();
    let mut total = 0;
    for s in sessions {
        let mut events = s.ultrasound.to_vec();
        events.sort_by(f64::total_cmp);
        let mut used = vec![false; s.mother.len()];
        for &t in &events {
            let dev = s.device.iter().any(|&iv| distance_to(t, iv) <= tol_s);
            let nearest = s
                .mother
                .iter()
                .enumerate()
                .filter(|(i, m)| !used[*i] && (*m - t).abs() <= tol_s)
                .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()));
            if let Some((i, _)) = nearest {
                used[i] = true;
            }
            *counts.entry((dev, nearest.is_some())).or_default() += 1;
        }
        total += events.len();
    }
    let pct = |c: usize| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 };
    let mut rows = Vec::new();
    for (dev, mom) in [(false, false), (true, false), (true, true), (false, true)] {
        let count = counts.get(&(dev, mom)).copied().unwrap_or(0);
        if (dev, mom) == (false, true) && count == 0 {
            continue;
        }
        rows.push(OverlapRow { ultrasound: true, device: dev, mother: mom, count, percentage: pct(count) });
    }
    Ok(OverlapTable { rows, total, tol_s })
}

/// Segment class counts by gestational-age bucket.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub rows: Vec<ClassCountRow>,
    pub total: [u64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCountRow {
    pub bucket: String,
    pub counts: [u64; 3],
}

pub fn age_bucket(weeks: u32) -> &'static str {
    match weeks {
        0..=26 => "<27",
        27..=31 => "27-31",
        32..=35 => "32-35",
        _ => "36-40+",
    }
}

pub fn class_counts<'a>(records: impl IntoIterator<Item = (u32, Label)> + 'a) -> ClassCounts {
    let order = ["<27", "27-31", "32-35", "36-40+"];
    let mut by_bucket: BTreeMap<&str, [u64; 3]> = BTreeMap::new();
    let mut total = [0; 3];
    for (weeks, label) in records {
        by_bucket.entry(age_bucket(weeks)).or_default()[label.ordinal()] += 1;
        total[label.ordinal()] += 1;
    }
    let rows = order
        .iter()
        .filter(|b| **b != "<27" || by_bucket.contains_key(*b))
        .map(|b| ClassCountRow { bucket: b.to_string(), counts: by_bucket.get(b).copied().unwrap_or_default() })
        .collect();
    ClassCounts { rows, total }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub algorithm: u8,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub tpr: [f64; 3],
    pub fpr: [f64; 3],
    pub macro_tpr: f64,
    pub per_mother: PerMotherTable,
    pub overlap: OverlapTable,
    pub corpus: ClassCounts,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("true,pred_1,pred_2,pred_3\n");
        for (k, row) in self.confusion.counts.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{}", k + 1, row[0], row[1], row[2]);
        }
        s
    }

    pub fn rates_csv(&self) -> String {
        let mut s = String::from("class,tpr,fpr\n");
        for k in 0..3 {
            let _ = writeln!(s, "{},{:.6},{:.6}", k + 1, self.tpr[k], self.fpr[k]);
        }
        let _ = writeln!(s, "macro,{:.6},", self.macro_tpr);
        s
    }

    pub fn per_mother_csv(&self) -> String {
        let mut s = String::from("mother_id,class1_segments,tpr\n");
        for r in &self.per_mother.rows {
            let _ = writeln!(s, "{},{},{:.6}", r.mother_id, r.class1_segments, r.tpr);
        }
        s
    }

    pub fn overlap_csv(&self) -> String {
        let mut s = String::from("ultrasound,device,mother,count,percentage\n");
        for r in &self.overlap.rows {
            let _ = writeln!(s, "{},{},{},{},{:.2}", u8::from(r.ultrasound), u8::from(r.device), u8::from(r.mother), r.count, r.percentage);
        }
        s
    }

    /// `(file name, contents)` for every CSV report.
    pub fn csv_files(&self) -> [(&'static str, String); 4] {
        [
            ("confusion.csv", self.confusion_csv()),
            ("rates.csv", self.rates_csv()),
            ("per_mother.csv", self.per_mother_csv()),
            ("overlap.csv", self.overlap_csv()),
        ]
    }
}

/// Human-readable tables. With several reports, the confusion matrices are
/// listed per algorithm and the per-mother table gets one column each.
pub fn render_markdown(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    if let Some(first) = reports.first() {
        s.push_str("## Segment classes by gestational age\n\n| Fetal age (weeks) | Class 1 | Class 2 | Class 3 |\n|---|---|---|---|\n");
        for r in &first.corpus.rows {
            let _ = writeln!(s, "| {} | {} | {} | {} |", r.bucket, r.counts[0], r.counts[1], r.counts[2]);
        }
        let t = first.corpus.total;
        let _ = writeln!(s, "| **Total** | **{}** | **{}** | **{}** |\n", t[0], t[1], t[2]);

        s.push_str("## Detection overlap\n\n| Ultrasound | Device | Mother's response | Detected kicks | Percentage (%) |\n|---|---|---|---|---|\n");
        for r in &first.overlap.rows {
            let _ = writeln!(s, "| {} | {} | {} | {} | {:.2} |", u8::from(r.ultrasound), u8::from(r.device), u8::from(r.mother), r.count, r.percentage);
        }
        s.push('\n');
    }
    for r in reports {
        let _ = writeln!(s, "## Algorithm {} confusion matrix\n\n| True \\ Predicted | 1 | 2 | 3 | TPR | FPR |\n|---|---|---|---|---|---|", r.algorithm);
        for k in 0..3 {
            let c = r.confusion.counts[k];
            let _ = writeln!(s, "| {} | {} | {} | {} | {:.2}% | {:.2}% |", k + 1, c[0], c[1], c[2], 100.0 * r.tpr[k], 100.0 * r.fpr[k]);
        }
        let _ = writeln!(s, "\nMacro TPR: {:.2}%\n", 100.0 * r.macro_tpr);
    }
    if !reports.is_empty() {
        s.push_str(&per_mother_markdown(reports));
    }
    s
}

fn per_mother_markdown(reports: &[EvalReport]) -> String {
    let mut s = String::from("## Class-1 true positive rate per mother\n\n| Mother index | Mother |");
    for r in reports {
        let _ = write!(s, " A{} (%) |", r.algorithm);
    }
    s.push_str("\n|---|---|");
    s.push_str(&"---|".repeat(reports.len()));
    s.push('\n');
    for (i, row) in reports[0].per_mother.rows.iter().enumerate() {
        let _ = write!(s, "| {} | {} |", i + 1, row.mother_id);
        for r in reports {
            match r.per_mother.rows.iter().find(|x| x.mother_id == row.mother_id) {
                Some(x) => {
                    let _ = write!(s, " {:.2} |", 100.0 * x.tpr);
                }
                None => s.push_str(" - |"),
            }
        }
        s.push('\n');
    }
    s
}

/// The same tables as CSV blocks separated by blank lines.
pub fn render_csv(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    if let Some(first) = reports.first() {
        s.push_str("bucket,class_1,class_2,class_3\n");
        for r in &first.corpus.rows {
            let _ = writeln!(s, "{},{},{},{}", r.bucket, r.counts[0], r.counts[1], r.counts[2]);
        }
        let t = first.corpus.total;
        let _ = writeln!(s, "total,{},{},{}\n", t[0], t[1], t[2]);
        s.push_str(&first.overlap_csv());
        s.push('\n');
    }
    for r in reports {
        let _ = writeln!(s, "algorithm,{}", r.algorithm);
        s.push_str(&r.confusion_csv());
        s.push_str(&r.rates_csv());
        s.push('\n');
    }
    if let Some(first) = reports.first() {
        s.push_str("mother_index,mother_id");
        for r in reports {
            let _ = write!(s, ",a{}_tpr", r.algorithm);
        }
        s.push('\n');
        for (i, row) in first.per_mother.rows.iter().enumerate() {
            let _ = write!(s, "{},{}", i + 1, row.mother_id);
            for r in reports {
                match r.per_mother.rows.iter().find(|x| x.mother_id == row.mother_id) {
                    Some(x) => {
                        let _ = write!(s, ",{:.6}", x.tpr);
                    }
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::seed;

    const L: [Label; 3] = Label::ALL;

    #[test]
    fn perfect_and_constant_predictions() {
        let labels = [L[0], L[1], L[2], L[2], L[0]];
        let cm = confusion(&labels, &labels).unwrap();
        assert_eq!(cm.counts, [[2, 0, 0], [0, 1, 0], [0, 0, 2]]);
        let r = rates(&cm).unwrap();
        assert_eq!(r.tpr, [1.0; 3]);
        assert_eq!(r.fpr, [0.0; 3]);
        let cm = confusion(&[L[0]; 5], &labels).unwrap();
        assert!(cm.counts.iter().all(|row| row[1] == 0 && row[2] == 0));
        assert!(confusion(&[L[0]], &labels).is_err());
    }

    #[test]
    fn tally_matches_brute_force() {
        let mut rng = seed::rng(77);
        let labels: Vec<Label> = (0..1000).map(|_| L[rng.random_range(0..3)]).collect();
        let preds: Vec<Label> = (0..1000).map(|_| L[rng.random_range(0..3)]).collect();
        let cm = confusion(&preds, &labels).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let n = (0..1000).filter(|&k| labels[k] == L[i] && preds[k] == L[j]).count() as u64;
                assert_eq!(cm.counts[i][j], n);
            }
        }
        assert_eq!(cm.total(), 1000);
    }

    #[test]
    fn rates_on_stated_counts() {
        let cm = ConfusionMatrix { counts: [[86, 7, 7], [10, 80, 10], [4, 3, 93]] };
        let r = rates(&cm).unwrap();
        assert!((r.tpr[0] - 0.86).abs() < 1e-12);
        assert!((r.tpr[1] - 0.80).abs() < 1e-12);
        assert!((r.fpr[0] - 14.0 / 200.0).abs() < 1e-12);
        assert!((r.fpr[2] - 17.0 / 200.0).abs() < 1e-12);
        assert!(rates(&ConfusionMatrix { counts: [[1, 0, 0], [0, 0, 0], [0, 0, 1]] }).is_err());
    }

    #[test]
    fn swapping_classes_two_and_three_swaps_their_rates() {
        let mut rng = seed::rng(3);
        let labels: Vec<Label> = (0..300).map(|_| L[rng.random_range(0..3)]).collect();
        let preds: Vec<Label> = (0..300).map(|_| L[rng.random_range(0..3)]).collect();
        let swap = |l: &Label| match l {
            Label::Laugh => Label::Respiratory,
            Label::Respiratory => Label::Laugh,
            x => *x,
        };
        let a = rates(&confusion(&preds, &labels).unwrap()).unwrap();
        let sp: Vec<Label> = preds.iter().map(swap).collect();
        let sl: Vec<Label> = labels.iter().map(swap).collect();
        let b = rates(&confusion(&sp, &sl).unwrap()).unwrap();
        assert_eq!(a.tpr[0], b.tpr[0]);
        assert_eq!(a.tpr[1], b.tpr[2]);
        assert_eq!(a.tpr[2], b.tpr[1]);
    }

    #[test]
    fn per_mother_sorting_and_exclusion() {
        let recs = [
            ("A", L[0], L[0]),
            ("A", L[0], L[1]),
            ("B", L[0], L[0]),
            ("C", L[2], L[2]),
            ("A", L[2], L[0]),
        ];
        let t = per_mother_tpr(recs);
        assert_eq!(t.rows.iter().map(|r| r.mother_id.as_str()).collect::<Vec<_>>(), ["B", "A"]);
        assert_eq!(t.rows[0].tpr, 1.0);
        assert_eq!(t.rows[1].tpr, 0.5);
        assert_eq!(t.excluded, vec!["C".to_string()]);
    }

    #[test]
    fn identical_channels_fall_in_the_all_three_row() {
        let t = [10.0, 30.0, 55.0];
        let dev: Vec<(f64, f64)> = t.iter().map(|&x| (x, x + 1.0)).collect();
        let table = overlap_table(&t, &dev, &t, 2.0).unwrap();
        assert_eq!(table.row(true, true).unwrap().percentage, 100.0);
        assert_eq!(table.rows.len(), 3);
    }

    #[test]
    fn table_layout_and_percentages() {
        // 17 ultrasound-only, 14 with device, 59 with all three.
        let us: Vec<f64> = (0..90).map(|i| 10.0 * i as f64).collect();
        let dev: Vec<(f64, f64)> = us[17..].iter().map(|&t| (t, t + 0.5)).collect();
        let mom: Vec<f64> = us[31..].iter().map(|t| t + 0.7).collect();
        let table = overlap_table(&us, &dev, &mom, 2.0).unwrap();
        let got: Vec<(bool, bool, bool, usize, String)> = table
            .rows
            .iter()
            .map(|r| (r.ultrasound, r.device, r.mother, r.count, format!("{:.2}", r.percentage)))
            .collect();
        assert_eq!(
            got,
            vec![
                (true, false, false, 17, "18.89".into()),
                (true, true, false, 14, "15.56".into()),
                (true, true, true, 59, "65.56".into()),
            ]
        );
        let sum: f64 = table.rows.iter().map(|r| r.percentage).sum();
        assert!((sum - 100.0).abs() <= 0.01);
    }

    #[test]
    fn mother_presses_are_not_reused() {
        let table = overlap_table(&[10.0, 11.0], &[], &[10.5], 2.0).unwrap();
        assert_eq!(table.row(false, true).unwrap().count, 1);
        assert_eq!(table.row(false, false).unwrap().count, 1);
        assert!(overlap_table(&[1.0], &[], &[], -0.5).is_err());
    }

    #[test]
    fn class_counts_by_age() {
        let c = class_counts([(28, L[0]), (33, L[1]), (40, L[2]), (44, L[0]), (30, L[2])]);
        assert_eq!(c.rows.len(), 3);
        assert_eq!(c.rows[0].counts, [1, 0, 1]);
        assert_eq!(c.rows[2].counts, [1, 0, 1]);
        assert_eq!(c.total, [2, 1, 2]);
        assert_eq!(class_counts([(22, L[0])]).rows[0].bucket, "<27");
    }
}
