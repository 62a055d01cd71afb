//! Tabular input: a named numeric matrix with one response column and
//! optional frequency-style observation weights.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    names: Vec<String>,
    columns: Vec<Vec<T>>,
    response: usize,
    weights: Option<Vec<T>>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset after checking shape, finiteness and weights.
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<T>>,
        response: usize,
        weights: Option<Vec<T>>,
    ) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidDataset(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if columns.len() < 2 {
            return Err(Error::InvalidDataset(
                "need a response and at least one regressor".into(),
            ));
        }
        if response >= columns.len() {
            return Err(Error::InvalidDataset(format!(
                "response index {response} out of range"
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        let m = columns[0].len();
        if m < 3 {
            return Err(Error::InvalidDataset(format!(
                "need at least 3 rows, got {m}"
            )));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != m {
                return Err(Error::InvalidDataset(format!(
                    "column `{name}` has {} rows, expected {m}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "non-finite value in column `{name}` at row {}",
                    row + 1
                )));
            }
        }
        if let Some(w) = &weights {
            if w.len() != m {
                return Err(Error::InvalidDataset(format!(
                    "{} weights for {m} rows",
                    w.len()
                )));
            }
            if w.iter().any(|v| !v.is_finite() || *v < T::zero()) {
                return Err(Error::InvalidDataset(
                    "weights must be finite and non-negative".into(),
                ));
            }
            if w.iter().copied().sum::<T>() <= T::zero() {
                return Err(Error::InvalidDataset("weights sum to zero".into()));
            }
        }
        Ok(Dataset {
            names,
            columns,
            response,
            weights,
        })
    }

    /// Convenience constructor: response first, regressors after.
    pub fn from_response_and_regressors(
        response_name: &str,
        y: Vec<T>,
        regressors: Vec<(String, Vec<T>)>,
    ) -> Result<Self> {
        let mut names = vec![response_name.to_string()];
        let mut columns = vec![y];
        for (n, c) in regressors {
            names.push(n);
            columns.push(c);
        }
        Self::new(names, columns, 0, None)
    }

    pub fn with_weights(mut self, weights: Vec<T>) -> Result<Self> {
        self.weights = Some(weights);
        Self::new(self.names, self.columns, self.response, self.weights)
    }

    pub fn n_obs(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_regressors(&self) -> usize {
        self.columns.len() - 1
    }

    /// Σw for weighted data, the row count otherwise.
    pub fn effective_obs(&self) -> T {
        match &self.weights {
            Some(w) => w.iter().copied().sum(),
            None => T::from_usize_lossy(self.n_obs()),
        }
    }

    pub fn response_name(&self) -> &str {
        &self.names[self.response]
    }

    pub fn response(&self) -> &[T] {
        &self.columns[self.response]
    }

    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    fn column_of(&self, j: usize) -> usize {
        if j < self.response {
            j
        } else {
            j + 1
        }
    }

    pub fn check_regressor(&self, j: usize) -> Result<()> {
        if j >= self.n_regressors() {
            return Err(Error::IndexOutOfRange {
                index: j,
                n: self.n_regressors(),
            });
        }
        Ok(())
    }

    /// Regressor `j` (0-based, response excluded).
    pub fn regressor(&self, j: usize) -> &[T] {
        &self.columns[self.column_of(j)]
    }

    pub fn regressor_name(&self, j: usize) -> &str {
        &self.names[self.column_of(j)]
    }

    pub fn regressor_names(&self) -> Vec<String> {
        (0..self.n_regressors())
            .map(|j| self.regressor_name(j).to_string())
            .collect()
    }

    pub fn regressor_index(&self, name: &str) -> Option<usize> {
        (0..self.n_regressors()).find(|&j| self.regressor_name(j) == name)
    }

    /// Same design, new response values.
    pub fn with_response(&self, y: Vec<T>) -> Result<Self> {
        let mut columns = self.columns.clone();
        columns[self.response] = y;
        Self::new(
            self.names.clone(),
            columns,
            self.response,
            self.weights.clone(),
        )
    }

    /// Rows drawn by index (duplicates allowed), weights carried along.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&i| c[i]).collect())
            .collect();
        let weights = self
            .weights
            .as_ref()
            .map(|w| rows.iter().map(|&i| w[i]).collect());
        Self::new(self.names.clone(), columns, self.response, weights)
    }

    /// All rows except `row`.
    pub fn without_row(&self, row: usize) -> Result<Self> {
        let rows: Vec<usize> = (0..self.n_obs()).filter(|&i| i != row).collect();
        self.select_rows(&rows)
    }

    /// Keeps the response and the listed regressors, in the given order.
    pub fn select_regressors(&self, regs: &[usize]) -> Result<Self> {
        let mut names = vec![self.response_name().to_string()];
        let mut columns = vec![self.response().to_vec()];
        for &j in regs {
            self.check_regressor(j)?;
            names.push(self.regressor_name(j).to_string());
            columns.push(self.regressor(j).to_vec());
        }
        Self::new(names, columns, 0, self.weights.clone())
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        let conv = |v: &Vec<T>| -> Vec<U> {
            v.iter()
                .map(|x| U::from_f64(x.as_f64()).unwrap_or_else(U::nan))
                .collect()
        };
        Dataset {
            names: self.names.clone(),
            columns: self.columns.iter().map(conv).collect(),
            response: self.response,
            weights: self.weights.as_ref().map(conv),
        }
    }
}

/// Reads a headered CSV. Every cell must be a plain number; the weight
/// column, when named, is removed from the regressors.
pub fn load_csv(
    path: impl AsRef<Path>,
    response: &str,
    weight_col: Option<&str>,
) -> Result<Dataset<f64>> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: shown.clone(),
        source,
    })?;
    read_csv(file, &shown, response, weight_col)
}

/// Same as [`load_csv`] for an arbitrary reader; `source` names it in errors.
pub fn read_csv<R: std::io::Read>(
    reader: R,
    source: &str,
    response: &str,
    weight_col: Option<&str>,
) -> Result<Dataset<f64>> {
    let csv_err = |message: String| Error::Csv {
        path: source.to_string(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(csv_err("missing header row".into()));
    }
    if let Some(pos) = header.iter().position(|h| h.is_empty()) {
        return Err(csv_err(format!("empty header name in column {}", pos + 1)));
    }
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    let resp_idx = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::UnknownResponse(response.to_string()))?;
    let weight_idx = match weight_col {
        Some(w) => {
            let idx = header
                .iter()
                .position(|h| h == w)
                .ok_or_else(|| Error::UnknownColumn(w.to_string()))?;
            if idx == resp_idx {
                return Err(Error::InvalidArgument(
                    "weight column cannot be the response".into(),
                ));
            }
            Some(idx)
        }
        None => None,
    };

    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(e.to_string()))?;
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    row: r + 1,
                    column: header[c].clone(),
                    value: cell.to_string(),
                })?;
            raw[c].push(v);
        }
    }

    let weights = weight_idx.map(|i| raw[i].clone());
    let mut names = Vec::new();
    let mut columns = Vec::new();
    let mut response_pos = 0;
    for (i, (name, col)) in header.into_iter().zip(raw).enumerate() {
        if Some(i) == weight_idx {
            continue;
        }
        if i == resp_idx {
            response_pos = names.len();
        }
        names.push(name);
        columns.push(col);
    }
    let d = Dataset::new(names, columns, response_pos, weights)?;
    let y = d.response();
    if y.iter().all(|v| *v == y[0]) {
        return Err(Error::ZeroVariance(d.response_name().to_string()));
    }
    Ok(d)
}

/// Partition of (some of) the regressors into named groups.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupSpec {
    pub groups: Vec<(String, BTreeSet<usize>)>,
}

/// A player in the grouped game: one group, or one ungrouped regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct Player {
    pub label: String,
    pub members: Vec<usize>,
}

impl GroupSpec {
    pub fn new(groups: Vec<(String, BTreeSet<usize>)>, n: usize) -> Result<Self> {
        let mut used = BTreeSet::new();
        let mut labels = HashSet::new();
        for (label, members) in &groups {
            if label.is_empty() {
                return Err(Error::InvalidGroups("empty group label".into()));
            }
            if !labels.insert(label.as_str()) {
                return Err(Error::InvalidGroups(format!("duplicate group `{label}`")));
            }
            if members.is_empty() {
                return Err(Error::InvalidGroups(format!("group `{label}` is empty")));
            }
            for &j in members {
                if j >= n {
                    return Err(Error::InvalidGroups(format!(
                        "group `{label}`: index {j} out of range"
                    )));
                }
                if !used.insert(j) {
                    return Err(Error::InvalidGroups(format!(
                        "regressor {j} appears in more than one group"
                    )));
                }
            }
        }
        Ok(GroupSpec { groups })
    }

    /// Parses `size=x1,x2;region=x3,x4` against the regressor names.
    pub fn parse(text: &str, names: &[String]) -> Result<Self> {
        let mut groups = Vec::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (label, members) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidGroups(format!("`{part}` lacks `=`")))?;
            let mut set = BTreeSet::new();
            for m in members.split(',').map(str::trim) {
                if m.is_empty() {
                    return Err(Error::InvalidGroups(format!(
                        "empty member in group `{}`",
                        label.trim()
                    )));
                }
                let j = names
                    .iter()
                    .position(|n| n == m)
                    .ok_or_else(|| Error::InvalidGroups(format!("unknown regressor `{m}`")))?;
                set.insert(j);
            }
            groups.push((label.trim().to_string(), set));
        }
        if groups.is_empty() {
            return Err(Error::InvalidGroups("no groups given".into()));
        }
        Self::new(groups, names.len())
    }

    /// Players ordered by their smallest member index; ungrouped regressors
    /// become singletons labelled by their own name.
    pub fn players(&self, names: &[String]) -> Vec<Player> {
        let mut grouped = BTreeSet::new();
        let mut players: Vec<Player> = self
            .groups
            .iter()
            .map(|(label, members)| {
                grouped.extend(members.iter().copied());
                Player {
                    label: label.clone(),
                    members: members.iter().copied().collect(),
                }
            })
            .collect();
        for (j, name) in names.iter().enumerate() {
            if !grouped.contains(&j) {
                players.push(Player {
                    label: name.clone(),
                    members: vec![j],
                });
            }
        }
        players.sort_by_key(|p| p.members[0]);
        players
    }
}

/// One player per regressor.
pub fn singleton_players(names: &[String]) -> Vec<Player> {
    names
        .iter()
        .enumerate()
        .map(|(j, n)| Player {
            label: n.clone(),
            members: vec![j],
        })
        .collect()
}
