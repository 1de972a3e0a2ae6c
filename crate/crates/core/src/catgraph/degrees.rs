use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::CategoryGraph;

/// Which histogram bins enter the log-log least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWindow {
    /// The run of consecutive nonzero bins starting at the smallest
    /// positive degree. The sparse tail, where single observations sit at scattered
    /// degrees, would otherwise flatten the slope.
    #[default]
    ContiguousPrefix,
    /// Every nonzero bin with degree >= 1.
    AllNonzero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Exponent of `count ~ degree^-alpha`; NaN when `defined` is false.
    pub alpha: f64,
    pub defined: bool,
    pub bins_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    /// Degree -> number of categories. In-degree counts members and
    /// subcategories; out-degree counts parents.
    pub in_histogram: BTreeMap<u64, u64>,
    pub out_histogram: BTreeMap<u64, u64>,
    pub in_fit: PowerLawFit,
    pub out_fit: PowerLawFit,
}

impl DegreeStats {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (name, fit) in [("in", &self.in_fit), ("out", &self.out_fit)] {
            writeln!(out, "# alpha_{name}\t{}\tdefined={}\tbins={}", fit.alpha, fit.defined, fit.bins_used)?;
        }
        writeln!(out, "direction\tdegree\tcount")?;
        for (name, hist) in [("in", &self.in_histogram), ("out", &self.out_histogram)] {
            for (d, c) in hist {
                writeln!(out, "{name}\t{d}\t{c}")?;
            }
        }
        Ok(())
    }
}

/// Least-squares slope of `ln count` against `ln degree`, negated.
pub fn fit_power_law(histogram: &BTreeMap<u64, u64>, window: FitWindow) -> PowerLawFit {
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut previous: Option<u64> = None;
    for (&d, &c) in histogram.range(1..) {
        if c == 0 {
            if window == FitWindow::ContiguousPrefix && previous.is_some() {
                break;
            }
            continue;
        }
        if window == FitWindow::ContiguousPrefix && previous.is_some_and(|p| d != p + 1) {
            break;
        }
        points.push(((d as f64).ln(), (c as f64).ln()));
        previous = Some(d);
    }
    let n = points.len();
    let undefined = PowerLawFit { alpha: f64::NAN, defined: false, bins_used: n };
    if n < 2 {
        return undefined;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return undefined;
    }
    PowerLawFit { alpha: -sxy / sxx, defined: true, bins_used: n }
}

pub fn degree_stats(graph: &CategoryGraph, window: FitWindow) -> DegreeStats {
    let cats: Vec<_> = graph.categories().collect();
    let mut indeg: BTreeMap<u64, u64> = cats.iter().map(|c| (c.id, 0)).collect();
    for e in graph.edges() {
        *indeg.get_mut(&e.to.id).expect("edge into unknown category") += 1;
    }
    let mut in_histogram = BTreeMap::new();
    for d in indeg.values() {
        *in_histogram.entry(*d).or_insert(0) += 1;
    }
    let mut out_histogram = BTreeMap::new();
    for c in &cats {
        *out_histogram.entry(graph.out_edges(*c).len() as u64).or_insert(0) += 1;
    }
    DegreeStats {
        in_fit: fit_power_law(&in_histogram, window),
        out_fit: fit_power_law(&out_histogram, window),
        in_histogram,
        out_histogram,
    }
}
