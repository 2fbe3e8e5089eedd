//! Labeled traffic records extracted from simulation traces, plus the
//! split/fold machinery feeding the classifiers.
//!
//! A record is one (alive node, round) observation with twenty fields. Three
//! of them (`N_n`, `C_n`, `I_fn`) restate the label and are stored for
//! schema fidelity but excluded from training features unless explicitly
//! requested for ablation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::attack::{behavior_label, label_behavior};
use crate::error::{Error, Result};
use crate::network::Behavior;
use crate::sim::{substream_rng, trace_rows, SimulationTrace, TraceRow};

/// CSV column order; `A_y` is the label, everything else is a field.
pub const CSV_HEADER: &str =
    "ID,F_ID,t,N_n,C_n,R_n,R_n_u,E,E_Tx,R_no,D_Tr,I_fn,D_Tx,D_Rx,R_k,S_c,IS_Rn,E_Rem,A_y,E_init";

/// Canonical class order; class indices everywhere refer to this list.
pub const CLASS_NAMES: [&str; 5] = [
    "Normal",
    "Selective Forwarding",
    "Black hole",
    "Flooding",
    "Gray hole",
];

/// Feature columns that restate the label and leak it to a classifier.
pub const LEAKY_FEATURES: [&str; 3] = ["N_n", "C_n", "I_fn"];

pub fn class_index(behavior: Behavior) -> usize {
    match behavior {
        Behavior::Honest => 0,
        Behavior::SelectiveForwarding => 1,
        Behavior::BlackHole => 2,
        Behavior::Flooding => 3,
        Behavior::GrayHole => 4,
    }
}

/// One row of the generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficRecord {
    /// Sensor node id (ID).
    pub id: u32,
    /// Serving fog id (F_ID).
    pub fog_id: u32,
    /// Simulation time of the round (t).
    pub time: f64,
    /// Normal-node flag (N_n).
    pub normal: bool,
    /// Compromised-node flag (C_n).
    pub compromised: bool,
    /// Relay-contact flag (R_n).
    pub relay_contact: bool,
    /// Fraction of relays among alive nodes this round (R_n_u).
    pub relay_fraction: f64,
    /// Node degree in the link graph (E).
    pub degree: u32,
    /// Transmit energy spent this round in joules (E_Tx).
    pub tx_energy: f64,
    /// Round index (R_no).
    pub round: u64,
    /// Packets transmitted this round, data plus adverts (D_Tr).
    pub tx_rate: u64,
    /// Identification-function flag (I_fn).
    pub flagged: bool,
    /// Data packets transmitted toward the fogs (D_Tx).
    pub data_tx: u64,
    /// Packets the serving fog received this round (D_Rx).
    pub fog_rx: u64,
    /// TDMA slot within the relay group (R_k).
    pub rank: u64,
    /// Send code: next-hop id of the round's own transmission (S_c).
    pub send_code: u32,
    /// Relay flag this round (IS_Rn).
    pub is_relay: bool,
    /// Remaining energy at the end of the round in joules (E_Rem).
    pub e_rem: f64,
    /// Attack class (A_y).
    pub label: Behavior,
    /// Initial energy in joules (E_init).
    pub e_init: f64,
}

/// An ordered, rectangular collection of records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<TrafficRecord>,
}

/// Random partition of record indices into K near-equal folds.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index in [0, k) per record.
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    /// Record indices of the given fold's complement and of the fold itself.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut val = Vec::new();
        for (i, &f) in self.assignment.iter().enumerate() {
            if f == fold {
                val.push(i);
            } else {
                train.push(i);
            }
        }
        (train, val)
    }
}

/// Dense row-major numeric matrix used across the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl DataMatrix {
    pub fn zeros(rows: usize, cols: usize) -> DataMatrix {
        DataMatrix {
            values: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<DataMatrix> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::data("matrix rows must have equal length"));
        }
        Ok(DataMatrix {
            values: rows.iter().flatten().copied().collect(),
            rows: n,
            cols: m,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn select_columns(&self, columns: &[usize]) -> Result<DataMatrix> {
        if columns.iter().any(|&c| c >= self.cols) {
            return Err(Error::data("column index out of range"));
        }
        let mut out = DataMatrix::zeros(self.rows, columns.len());
        for i in 0..self.rows {
            for (jj, &c) in columns.iter().enumerate() {
                out.set(i, jj, self.get(i, c));
            }
        }
        Ok(out)
    }

    pub fn select_rows(&self, indices: &[usize]) -> DataMatrix {
        let mut out = DataMatrix::zeros(indices.len(), self.cols);
        for (ii, &i) in indices.iter().enumerate() {
            out.values[ii * self.cols..(ii + 1) * self.cols].copy_from_slice(self.row(i));
        }
        out
    }
}

/// Rounds a value to 12 significant digits, the precision the CSV carries.
pub fn round_energy(v: f64) -> f64 {
    format!("{v:.11e}").parse().expect("formatted float parses")
}

fn record_from_row(row: &TraceRow) -> TrafficRecord {
    let normal = row.label == Behavior::Honest;
    TrafficRecord {
        id: row.node_id,
        fog_id: row.served_fog,
        time: row.time,
        normal,
        compromised: !normal,
        relay_contact: row.relay_contact,
        relay_fraction: row.relay_fraction,
        degree: row.degree,
        tx_energy: round_energy(row.tx_energy),
        round: row.round,
        tx_rate: row.data_tx + row.advert_tx,
        flagged: row.flagged,
        data_tx: row.data_tx,
        fog_rx: row.served_fog_rx,
        rank: row.rank,
        send_code: row.send_code,
        is_relay: row.is_relay,
        e_rem: round_energy(row.e_rem),
        label: row.label,
        e_init: round_energy(row.e_init),
    }
}

/// Builds a dataset from trace rows, one record per (alive node, round).
pub fn records_from_rows(rows: &[TraceRow]) -> Dataset {
    Dataset {
        records: rows.iter().map(record_from_row).collect(),
    }
}

/// Extracts the labeled dataset from a simulation trace.
pub fn extract_records(trace: &SimulationTrace) -> Result<Dataset> {
    if trace.ledgers.is_empty() {
        return Err(Error::data("extract_records: trace has no rounds"));
    }
    Ok(records_from_rows(&trace_rows(trace)))
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_names(&self) -> Vec<String> {
        CLASS_NAMES.iter().map(|s| s.to_string()).collect()
    }

    /// Record count per class, in canonical class order.
    pub fn class_distribution(&self) -> Vec<(String, usize)> {
        let mut counts = vec![0usize; CLASS_NAMES.len()];
        for r in &self.records {
            counts[class_index(r.label)] += 1;
        }
        CLASS_NAMES
            .iter()
            .zip(counts)
            .map(|(name, c)| (name.to_string(), c))
            .collect()
    }

    /// Feature names in column order, with or without the leaky columns.
    pub fn feature_names(include_leaky: bool) -> Vec<&'static str> {
        let all = [
            "ID", "F_ID", "t", "N_n", "C_n", "R_n", "R_n_u", "E", "E_Tx", "R_no", "D_Tr",
            "I_fn", "D_Tx", "D_Rx", "R_k", "S_c", "IS_Rn", "E_Rem", "E_init",
        ];
        all.into_iter()
            .filter(|name| include_leaky || !LEAKY_FEATURES.contains(name))
            .collect()
    }

    /// Numeric feature matrix plus class labels. The label itself and, by
    /// default, the label-restating flags never enter the matrix.
    pub fn to_matrix(&self, include_leaky: bool) -> (DataMatrix, Vec<usize>, Vec<&'static str>) {
        let names = Self::feature_names(include_leaky);
        let mut matrix = DataMatrix::zeros(self.len(), names.len());
        let mut labels = Vec::with_capacity(self.len());
        for (i, r) in self.records.iter().enumerate() {
            for (j, &name) in names.iter().enumerate() {
                let v = match name {
                    "ID" => r.id as f64,
                    "F_ID" => r.fog_id as f64,
                    "t" => r.time,
                    "N_n" => r.normal as u8 as f64,
                    "C_n" => r.compromised as u8 as f64,
                    "R_n" => r.relay_contact as u8 as f64,
                    "R_n_u" => r.relay_fraction,
                    "E" => r.degree as f64,
                    "E_Tx" => r.tx_energy,
                    "R_no" => r.round as f64,
                    "D_Tr" => r.tx_rate as f64,
                    "I_fn" => r.flagged as u8 as f64,
                    "D_Tx" => r.data_tx as f64,
                    "D_Rx" => r.fog_rx as f64,
                    "R_k" => r.rank as f64,
                    "S_c" => r.send_code as f64,
                    "IS_Rn" => r.is_relay as u8 as f64,
                    "E_Rem" => r.e_rem,
                    "E_init" => r.e_init,
                    other => unreachable!("unmapped feature {other}"),
                };
                matrix.set(i, j, v);
            }
            labels.push(class_index(r.label));
        }
        (matrix, labels, names)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}

/// Number of test records an n-record dataset yields at the given ratio.
pub fn test_size(n: usize, train_ratio: f64) -> usize {
    let exact = (1.0 - train_ratio) * n as f64;
    (exact + 1e-9 * (1.0 + exact.abs())).floor() as usize
}

/// Splits into train and test by a seeded shuffle, stratified by class so
/// every populated class keeps its share of the test set. Record order
/// within each part follows the original dataset order.
pub fn train_test_split(ds: &Dataset, train_ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::config("train_ratio must lie in (0,1)"));
    }
    if ds.len() < 2 {
        return Err(Error::data("train_test_split: need at least 2 records"));
    }
    let n = ds.len();
    let want_test = test_size(n, train_ratio);

    let mut per_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in ds.records.iter().enumerate() {
        per_class.entry(class_index(r.label)).or_default().push(i);
    }

    // Largest-remainder allocation of the exact test total across classes.
    let mut quotas: Vec<(usize, usize, f64)> = per_class
        .iter()
        .map(|(&c, idx)| {
            let exact = want_test as f64 * idx.len() as f64 / n as f64;
            let base = (exact + 1e-9).floor() as usize;
            (c, base.min(idx.len()), exact - base as f64)
        })
        .collect();
    let mut assigned: usize = quotas.iter().map(|q| q.1).sum();
    quotas.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
    let mut qi = 0;
    while assigned < want_test && qi < quotas.len() {
        let class_size = per_class[&quotas[qi].0].len();
        if quotas[qi].1 < class_size {
            quotas[qi].1 += 1;
            assigned += 1;
        }
        qi += 1;
        if qi == quotas.len() && assigned < want_test {
            qi = 0; // another pass when rounding left room
        }
    }

    let mut rng = substream_rng(seed, 101, 0);
    let mut is_test = vec![false; n];
    let mut sorted_quotas = quotas;
    sorted_quotas.sort_by_key(|q| q.0);
    for (c, quota, _) in sorted_quotas {
        let mut idx = per_class[&c].clone();
        idx.shuffle(&mut rng);
        for &i in idx.iter().take(quota) {
            is_test[i] = true;
        }
    }

    let test: Vec<usize> = (0..n).filter(|&i| is_test[i]).collect();
    let train: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Fold assignment over n records: seeded shuffle dealt into K folds whose
/// sizes differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::config("K must be at least 2"));
    }
    if k > n {
        return Err(Error::data(format!("K={k} exceeds the record count {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = substream_rng(seed, 102, 0);
    order.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut assignment = vec![0usize; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &order[pos..pos + size] {
            assignment[i] = fold;
        }
        pos += size;
    }
    Ok(assignment)
}

/// K-fold plan over a dataset.
pub fn kfold_plan(train: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    Ok(FoldPlan {
        k,
        assignment: kfold_indices(train.len(), k, seed)?,
    })
}

/// Per-feature mean and population standard deviation.
pub type ScaleStats = Vec<(f64, f64)>;

/// Z-scores both matrices using the training statistics only. Zero-variance
/// features pass through unchanged.
pub fn standardize(
    train: &DataMatrix,
    test: &DataMatrix,
) -> Result<(DataMatrix, DataMatrix, ScaleStats)> {
    if train.cols != test.cols {
        return Err(Error::data("standardize: column count mismatch"));
    }
    if train.rows == 0 {
        return Err(Error::data("standardize: empty training matrix"));
    }
    let stats = fit_scaler(train);
    Ok((
        apply_scaler(train, &stats),
        apply_scaler(test, &stats),
        stats,
    ))
}

pub fn fit_scaler(train: &DataMatrix) -> ScaleStats {
    let n = train.rows as f64;
    (0..train.cols)
        .map(|j| {
            let mean = (0..train.rows).map(|i| train.get(i, j)).sum::<f64>() / n;
            let var = (0..train.rows)
                .map(|i| {
                    let d = train.get(i, j) - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            (mean, var.sqrt())
        })
        .collect()
}

pub fn apply_scaler(m: &DataMatrix, stats: &ScaleStats) -> DataMatrix {
    let mut out = m.clone();
    for j in 0..m.cols {
        let (mean, std) = stats[j];
        if std > 0.0 {
            for i in 0..m.rows {
                out.set(i, j, (m.get(i, j) - mean) / std);
            }
        }
    }
    out
}

fn flag(b: bool) -> u8 {
    u8::from(b)
}

/// Writes the dataset as CSV with the exact schema header.
pub fn write_records(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &ds.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.11e},{},{},{},{},{},{},{},{},{:.11e},{},{:.11e}",
            r.id,
            r.fog_id,
            r.time,
            flag(r.normal),
            flag(r.compromised),
            flag(r.relay_contact),
            r.relay_fraction,
            r.degree,
            r.tx_energy,
            r.round,
            r.tx_rate,
            flag(r.flagged),
            r.data_tx,
            r.fog_rx,
            r.rank,
            r.send_code,
            flag(r.is_relay),
            r.e_rem,
            behavior_label(r.label),
            r.e_init,
        )
        .expect("write to string cannot fail");
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(value: &str, line: usize, name: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::data(format!("row {line}: invalid {name} value '{value}'")))
}

fn parse_flag(value: &str, line: usize, name: &str) -> Result<bool> {
    match value {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::data(format!(
            "row {line}: {name} must be 0 or 1, found '{value}'"
        ))),
    }
}

/// Reads a dataset CSV, validating the schema and per-row invariants.
/// Errors name the offending file line.
pub fn read_records(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open dataset {}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        Some((_, Err(e))) => return Err(e.into()),
        None => return Err(Error::data("dataset file is empty, missing header")),
    };
    check_header(header.trim_end())?;

    let expected = CSV_HEADER.split(',').count();
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != expected {
            return Err(Error::data(format!(
                "row {line_no}: expected {expected} columns, found {}",
                f.len()
            )));
        }
        let label = label_behavior(f[18])
            .ok_or_else(|| Error::data(format!("row {line_no}: unknown class '{}'", f[18])))?;
        let record = TrafficRecord {
            id: parse_field(f[0], line_no, "ID")?,
            fog_id: parse_field(f[1], line_no, "F_ID")?,
            time: parse_field(f[2], line_no, "t")?,
            normal: parse_flag(f[3], line_no, "N_n")?,
            compromised: parse_flag(f[4], line_no, "C_n")?,
            relay_contact: parse_flag(f[5], line_no, "R_n")?,
            relay_fraction: parse_field(f[6], line_no, "R_n_u")?,
            degree: parse_field(f[7], line_no, "E")?,
            tx_energy: parse_field(f[8], line_no, "E_Tx")?,
            round: parse_field(f[9], line_no, "R_no")?,
            tx_rate: parse_field(f[10], line_no, "D_Tr")?,
            flagged: parse_flag(f[11], line_no, "I_fn")?,
            data_tx: parse_field(f[12], line_no, "D_Tx")?,
            fog_rx: parse_field(f[13], line_no, "D_Rx")?,
            rank: parse_field(f[14], line_no, "R_k")?,
            send_code: parse_field(f[15], line_no, "S_c")?,
            is_relay: parse_flag(f[16], line_no, "IS_Rn")?,
            e_rem: parse_field(f[17], line_no, "E_Rem")?,
            label,
            e_init: parse_field(f[19], line_no, "E_init")?,
        };
        if record.normal == record.compromised {
            return Err(Error::data(format!(
                "row {line_no}: N_n and C_n must disagree"
            )));
        }
        if record.normal != (record.label == Behavior::Honest) {
            return Err(Error::data(format!(
                "row {line_no}: N_n contradicts A_y '{}'",
                behavior_label(record.label)
            )));
        }
        if record.e_rem > record.e_init {
            return Err(Error::data(format!("row {line_no}: E_Rem exceeds E_init")));
        }
        records.push(record);
    }
    Ok(Dataset { records })
}

fn check_header(header: &str) -> Result<()> {
    if header == CSV_HEADER {
        return Ok(());
    }
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    let found: Vec<&str> = header.split(',').collect();
    let missing: Vec<&str> = expected
        .iter()
        .filter(|sym| !found.contains(*sym))
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(Error::data(format!(
            "schema error: header is missing {}",
            missing.join(", ")
        )));
    }
    Err(Error::data(format!(
        "schema error: header must be '{CSV_HEADER}'"
    )))
}
