//! Per-unit records and the summary tables aggregated from them. Every
//! table is a pure function of the records, so a table can always be rebuilt
//! from a persisted `records.csv`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluators::{
    ic, paired_onesided_ttest, relative_error, ttest_replication_average, Method, ReplicationStats,
};
use crate::prob::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// Log predictive density of a unit.
    LogPpd,
    /// Mid-p cross-validated p-value of a unit.
    MidP,
    /// Whole-model DIC (no unit).
    Dic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub replication: usize,
    pub model: String,
    pub quantity: Quantity,
    pub method: Method,
    /// 1-based; empty for whole-model quantities.
    pub unit: Option<usize>,
    pub value: f64,
    pub mc_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub model: String,
    pub method: Method,
    pub mean: f64,
    /// Empty with a single replication.
    pub sd: Option<f64>,
    pub replications: usize,
}

impl TableRow {
    fn new(model: &str, method: Method, values: &[f64]) -> Self {
        let s = ReplicationStats::from_values(values);
        Self {
            model: model.to_string(),
            method,
            mean: s.mean,
            sd: s.sd.is_finite().then_some(s.sd),
            replications: s.count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub method: Method,
    pub model: String,
    pub selected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestRow {
    pub larger: String,
    pub smaller: String,
    pub method: Method,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub model: String,
    pub unit: usize,
    pub method: Method,
    pub actual: f64,
    pub estimate: f64,
}

const METHOD_ORDER: [Method; 8] = [
    Method::Dic,
    Method::Nwaic,
    Method::Nis,
    Method::Iwaic,
    Method::Iis,
    Method::Ghosting,
    Method::PosteriorCheck,
    Method::Actual,
];

fn method_rank(m: Method) -> usize {
    METHOD_ORDER.iter().position(|&x| x == m).unwrap_or(usize::MAX)
}

/// Models in order of first appearance.
pub fn model_order(records: &[Record]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in records {
        if !out.contains(&r.model) {
            out.push(r.model.clone());
        }
    }
    out
}

type Key = (usize, String, Method);

/// Per-replication log PPD vectors (sorted by unit) for each model and method.
pub fn log_ppd_runs(records: &[Record]) -> BTreeMap<Key, Vec<f64>> {
    let mut by: BTreeMap<Key, Vec<(usize, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.quantity == Quantity::LogPpd) {
        by.entry((r.replication, r.model.clone(), r.method))
            .or_default()
            .push((r.unit.unwrap_or(0), r.value));
    }
    by.into_iter()
        .map(|(k, mut v)| {
            v.sort_by_key(|p| p.0);
            (k, v.into_iter().map(|p| p.1).collect())
        })
        .collect()
}

/// Information criteria per replication: `-2 sum log PPD`, or DIC directly.
/// Runs with fewer units than the model's most complete run are dropped.
pub fn ic_values(records: &[Record]) -> BTreeMap<Key, f64> {
    let runs = log_ppd_runs(records);
    let mut full: BTreeMap<&str, usize> = BTreeMap::new();
    for ((_, model, _), v) in &runs {
        let e = full.entry(model.as_str()).or_default();
        *e = (*e).max(v.len());
    }
    let mut out: BTreeMap<Key, f64> = runs
        .iter()
        .filter(|((_, model, _), v)| v.len() == full[model.as_str()])
        .map(|(k, v)| (k.clone(), ic(v)))
        .collect();
    for r in records.iter().filter(|r| r.quantity == Quantity::Dic) {
        out.insert((r.replication, r.model.clone(), Method::Dic), r.value);
    }
    out
}

fn rows_from(values: BTreeMap<Key, f64>, models: &[String]) -> Vec<TableRow> {
    let mut cells: BTreeMap<(usize, usize), (String, Method, Vec<f64>)> = BTreeMap::new();
    for ((_, model, method), v) in values {
        let mi = models.iter().position(|m| *m == model).unwrap_or(usize::MAX);
        cells
            .entry((mi, method_rank(method)))
            .or_insert_with(|| (model.clone(), method, Vec::new()))
            .2
            .push(v);
    }
    cells.into_values().map(|(m, k, v)| TableRow::new(&m, k, &v)).collect()
}

/// Mean and sd of each information criterion over replications.
pub fn criteria_table(records: &[Record]) -> Vec<TableRow> {
    rows_from(ic_values(records), &model_order(records))
}

fn midp_runs(records: &[Record]) -> BTreeMap<Key, Vec<(usize, f64)>> {
    let mut by: BTreeMap<Key, Vec<(usize, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.quantity == Quantity::MidP) {
        by.entry((r.replication, r.model.clone(), r.method))
            .or_default()
            .push((r.unit.unwrap_or(0), r.value));
    }
    by.values_mut().for_each(|v| v.sort_by_key(|p| p.0));
    by
}

/// Relative error (percent) of each p-value method against the actual
/// leave-one-out values of the same replication.
pub fn relative_error_values(records: &[Record]) -> Result<BTreeMap<Key, f64>> {
    let runs = midp_runs(records);
    let mut out = BTreeMap::new();
    for ((rep, model, method), est) in &runs {
        if *method == Method::Actual {
            continue;
        }
        let Some(actual) = runs.get(&(*rep, model.clone(), Method::Actual)) else {
            continue;
        };
        let (mut e, mut a) = (Vec::new(), Vec::new());
        for &(u, v) in est {
            if let Some(&(_, p)) = actual.iter().find(|x| x.0 == u) {
                e.push(v);
                a.push(p);
            }
        }
        if !e.is_empty() {
            out.insert((*rep, model.clone(), *method), relative_error(&e, &a)?);
        }
    }
    Ok(out)
}

pub fn relative_error_table(records: &[Record]) -> Result<Vec<TableRow>> {
    Ok(rows_from(relative_error_values(records)?, &model_order(records)))
}

/// How often each model has the smallest criterion value in a replication.
pub fn selection_table(records: &[Record]) -> Vec<SelectionRow> {
    let models = model_order(records);
    let mut best: BTreeMap<(usize, Method), (f64, String)> = BTreeMap::new();
    for ((rep, model, method), v) in ic_values(records) {
        let e = best.entry((rep, method)).or_insert((f64::INFINITY, String::new()));
        if v < e.0 {
            *e = (v, model);
        }
    }
    let mut counts: BTreeMap<(usize, usize), SelectionRow> = BTreeMap::new();
    let methods: Vec<Method> = best.keys().map(|k| k.1).collect();
    for &method in &methods {
        for (mi, model) in models.iter().enumerate() {
            counts.entry((method_rank(method), mi)).or_insert(SelectionRow {
                method,
                model: model.clone(),
                selected: 0,
            });
        }
    }
    for ((_, method), (_, model)) in best {
        if let Some(mi) = models.iter().position(|m| *m == model) {
            counts.get_mut(&(method_rank(method), mi)).expect("row exists").selected += 1;
        }
    }
    counts.into_values().collect()
}

/// One-sided paired t-tests of each model against the previous one in
/// `models`. With several replications, runs are paired at random `draws`
/// times and the p-values averaged.
pub fn ttest_table(records: &[Record], models: &[String], draws: usize, seed: u64) -> Result<Vec<TTestRow>> {
    let runs = log_ppd_runs(records);
    let mut out = Vec::new();
    for pair in models.windows(2) {
        let (smaller, larger) = (&pair[0], &pair[1]);
        for method in METHOD_ORDER {
            let collect = |model: &String| -> Vec<Vec<f64>> {
                runs.iter()
                    .filter(|((_, m, k), _)| m == model && *k == method)
                    .map(|(_, v)| v.clone())
                    .collect()
            };
            let (a, b) = (collect(larger), collect(smaller));
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let p = if a.len() == 1 && b.len() == 1 {
                paired_onesided_ttest(&a[0], &b[0])?.p_value
            } else {
                let mut rng = RngStream::new(
                    seed,
                    crate::prob::stream_id(&[method_rank(method) as u64, out.len() as u64]),
                );
                ttest_replication_average(&a, &b, draws, &mut rng)?
            };
            out.push(TTestRow {
                larger: larger.clone(),
                smaller: smaller.clone(),
                method,
                p_value: p,
            });
        }
    }
    Ok(out)
}

/// Estimated against actual p-values for one replication.
pub fn pvalue_scatter(records: &[Record], replication: usize) -> Vec<ScatterRow> {
    let runs = midp_runs(records);
    let mut out = Vec::new();
    for model in model_order(records) {
        let Some(actual) = runs.get(&(replication, model.clone(), Method::Actual)) else {
            continue;
        };
        for &(unit, p) in actual {
            for method in METHOD_ORDER {
                if method == Method::Actual {
                    continue;
                }
                if let Some(est) = runs.get(&(replication, model.clone(), method)) {
                    if let Some(&(_, e)) = est.iter().find(|x| x.0 == unit) {
                        out.push(ScatterRow {
                            model: model.clone(),
                            unit,
                            method,
                            actual: p,
                            estimate: e,
                        });
                    }
                }
            }
        }
    }
    out
}

pub fn write_csv<W: std::io::Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read, T: serde::de::DeserializeOwned>(r: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(rep: usize, model: &str, q: Quantity, method: Method, unit: Option<usize>, value: f64) -> Record {
        Record {
            replication: rep,
            model: model.into(),
            quantity: q,
            method,
            unit,
            value,
            mc_se: 0.0,
        }
    }

    #[test]
    fn tables_rebuild_from_csv() {
        let mut records = Vec::new();
        for rep in 0..3 {
            for (mi, model) in ["k2", "k3"].iter().enumerate() {
                for u in 1..=4 {
                    let v = -1.0 - 0.1 * u as f64 - 0.05 * rep as f64 + 0.2 * mi as f64;
                    records.push(rec(rep, model, Quantity::LogPpd, Method::Iis, Some(u), v));
                    records.push(rec(
                        rep,
                        model,
                        Quantity::LogPpd,
                        Method::Nis,
                        Some(u),
                        v + 0.01 * u as f64,
                    ));
                }
                records.push(rec(rep, model, Quantity::Dic, Method::Dic, None, 10.0 + rep as f64));
            }
        }
        let table = criteria_table(&records);
        assert_eq!(table.len(), 6);
        assert_eq!(table[0].model, "k2");
        assert_eq!(table[0].method, Method::Dic);
        assert_eq!(table[0].mean, 11.0);
        let iis_k2 = table
            .iter()
            .find(|r| r.model == "k2" && r.method == Method::Iis)
            .unwrap();
        let expect: f64 = (0..3)
            .map(|rep| -2.0 * (1..=4).map(|u| -1.0 - 0.1 * u as f64 - 0.05 * rep as f64).sum::<f64>())
            .sum::<f64>()
            / 3.0;
        assert!((iis_k2.mean - expect).abs() < 1e-12);

        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let back: Vec<Record> = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, records);
        assert_eq!(criteria_table(&back), table);

        let mut buf = Vec::new();
        write_csv(&mut buf, &table).unwrap();
        let t2: Vec<TableRow> = read_csv(buf.as_slice()).unwrap();
        assert_eq!(t2, table);

        let sel = selection_table(&records);
        let iis_k3 = sel.iter().find(|r| r.model == "k3" && r.method == Method::Iis).unwrap();
        assert_eq!(iis_k3.selected, 3);
        let tt = ttest_table(&records, &["k2".into(), "k3".into()], 50, 1).unwrap();
        assert!(tt.iter().all(|r| r.p_value < 0.01));
    }

    #[test]
    fn single_replication_has_no_sd() {
        let records = vec![rec(0, "m", Quantity::LogPpd, Method::Iis, Some(1), -1.0)];
        let t = criteria_table(&records);
        assert_eq!(t[0].sd, None);
        assert_eq!(t[0].mean, 2.0);
    }

    #[test]
    fn incomplete_runs_are_dropped() {
        let records = vec![
            rec(0, "m", Quantity::LogPpd, Method::Actual, Some(1), -1.0),
            rec(0, "m", Quantity::LogPpd, Method::Actual, Some(2), -1.0),
            rec(1, "m", Quantity::LogPpd, Method::Actual, Some(1), -1.0),
        ];
        let t = criteria_table(&records);
        assert_eq!(t[0].replications, 1);
    }

    #[test]
    fn relative_error_and_scatter() {
        let mut records = Vec::new();
        for u in 1..=3 {
            records.push(rec(0, "seeds", Quantity::MidP, Method::Actual, Some(u), 0.25));
            records.push(rec(0, "seeds", Quantity::MidP, Method::Iis, Some(u), 0.30));
            records.push(rec(0, "seeds", Quantity::MidP, Method::Ghosting, Some(u), 0.25));
        }
        let t = relative_error_table(&records).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].method, Method::Iis);
        assert!((t[0].mean - 20.0).abs() < 1e-12);
        assert_eq!(t[1].mean, 0.0);
        assert_eq!(pvalue_scatter(&records, 0).len(), 6);
    }
}
