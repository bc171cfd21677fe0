//! Dataset loaders. The three named datasets have fixed sizes and are
//! rejected if a file would change them; synthetic files go through the
//! `read_*` functions with `expected = None`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CarModel, CarPrior, CarStructure, CarVariant, Plate};

pub const GALAXY_UNITS: usize = 82;
pub const LIPCANCER_UNITS: usize = 56;
pub const SEEDS_UNITS: usize = 21;

/// Velocities are stored in km/s and analysed in 1000 km/s.
pub const GALAXY_SCALE: f64 = 1000.0;

const GALAXY_CSV: &str = include_str!("../../data/galaxy.csv");
const LIPCANCER_CSV: &str = include_str!("../../data/lipcancer.csv");
const LIPCANCER_ADJ: &str = include_str!("../../data/lipcancer.adj");
const SEEDS_CSV: &str = include_str!("../../data/seeds.csv");

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::load(path, e.to_string()))
}

fn located<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Load { .. } => e,
        other => Error::load(path, other.to_string()),
    })
}

fn check_count(what: &str, got: usize, expected: Option<usize>) -> Result<()> {
    match expected {
        Some(n) if n != got => Err(Error::Argument(format!("{what}: expected {n} rows, found {got}"))),
        None if got == 0 => Err(Error::Argument(format!("{what}: no data rows"))),
        _ => Ok(()),
    }
}

#[derive(Deserialize)]
struct VelocityRow {
    velocity: f64,
}

/// One `velocity` column; values are returned divided by [`GALAXY_SCALE`].
pub fn read_velocities<R: Read>(r: R, expected: Option<usize>) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        let row: VelocityRow = row?;
        if !row.velocity.is_finite() {
            return Err(Error::arg(format!("velocity row {}: not finite", out.len() + 1)));
        }
        out.push(row.velocity / GALAXY_SCALE);
    }
    check_count("galaxy velocities", out.len(), expected)?;
    Ok(out)
}

pub fn load_galaxy(path: &Path) -> Result<Vec<f64>> {
    located(path, read_velocities(open(path)?, Some(GALAXY_UNITS)))
}

pub fn bundled_galaxy() -> Vec<f64> {
    read_velocities(GALAXY_CSV.as_bytes(), Some(GALAXY_UNITS)).expect("bundled galaxy data")
}

/// Writes raw velocities (km/s) in the loader's format.
pub fn write_velocities<W: Write>(w: W, velocities: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["velocity"])?;
    for v in velocities {
        out.write_record([v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// One observation per line under a `y` header; used for synthetic data.
pub fn read_values<R: Read>(r: R) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    struct Row {
        y: f64,
    }
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        let row: Row = row?;
        out.push(row.y);
    }
    check_count("values", out.len(), None)?;
    Ok(out)
}

pub fn write_values<W: Write>(w: W, y: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["y"])?;
    for v in y {
        out.write_record([v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// How one-sided neighbour listings are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjacencyPolicy {
    /// Add the missing direction and warn.
    #[default]
    Union,
    /// Reject the file, naming the first offending pair.
    Strict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Districts {
    pub y: Vec<u64>,
    pub expected: Vec<f64>,
    pub x: Vec<f64>,
    /// Zero-based neighbour lists, sorted.
    pub neighbors: Vec<Vec<usize>>,
}

impl Districts {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn structure(&self) -> Result<CarStructure> {
        CarStructure::new(self.expected.clone(), self.neighbors.clone())
    }

    pub fn model(&self, variant: CarVariant, prior: CarPrior) -> Result<CarModel> {
        CarModel::new(variant, self.y.clone(), self.x.clone(), self.structure()?, prior)
    }
}

#[derive(Deserialize)]
struct DistrictRow {
    district: usize,
    y: u64,
    #[serde(rename = "E")]
    expected: f64,
    x: f64,
}

/// Parses `district: neighbor neighbor ...` lines (1-based ids). Districts
/// without neighbours may be listed with nothing after the colon or omitted.
pub fn read_adjacency<R: Read>(r: R, n: usize, policy: AdjacencyPolicy) -> Result<Vec<Vec<usize>>> {
    let mut sets = vec![BTreeSet::new(); n];
    let mut seen = vec![false; n];
    let parse_id = |tok: &str, line: usize| -> Result<usize> {
        let id: usize = tok
            .parse()
            .map_err(|_| Error::arg(format!("adjacency line {line}: bad district id `{tok}`")))?;
        if id == 0 || id > n {
            return Err(Error::arg(format!(
                "adjacency line {line}: district {id} outside 1..={n}"
            )));
        }
        Ok(id - 1)
    };
    for (ln, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (head, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::arg(format!("adjacency line {}: missing ':'", ln + 1)))?;
        let i = parse_id(head.trim(), ln + 1)?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::arg(format!(
                "adjacency line {}: district {} listed twice",
                ln + 1,
                i + 1
            )));
        }
        for tok in rest
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            let j = parse_id(tok, ln + 1)?;
            if j == i {
                return Err(Error::arg(format!(
                    "adjacency line {}: district {} lists itself",
                    ln + 1,
                    i + 1
                )));
            }
            sets[i].insert(j);
        }
    }
    let mut one_sided = Vec::new();
    for i in 0..n {
        for &j in &sets[i] {
            if !sets[j].contains(&i) {
                one_sided.push((i, j));
            }
        }
    }
    if let Some(&(i, j)) = one_sided.first() {
        match policy {
            AdjacencyPolicy::Strict => {
                return Err(Error::arg(format!(
                    "adjacency not symmetric: {} lists {} but not the reverse",
                    i + 1,
                    j + 1
                )))
            }
            AdjacencyPolicy::Union => {
                warn!(
                    "adjacency: added {} missing reverse listing(s), first {} -> {}",
                    one_sided.len(),
                    j + 1,
                    i + 1
                );
                for (i, j) in one_sided {
                    sets[j].insert(i);
                }
            }
        }
    }
    Ok(sets.into_iter().map(|s| s.into_iter().collect()).collect())
}

pub fn read_districts<R: Read, A: Read>(
    data: R,
    adjacency: A,
    expected: Option<usize>,
    policy: AdjacencyPolicy,
) -> Result<Districts> {
    let mut rows: Vec<DistrictRow> = Vec::new();
    for row in csv::Reader::from_reader(data).deserialize() {
        rows.push(row?);
    }
    check_count("districts", rows.len(), expected)?;
    for (k, row) in rows.iter().enumerate() {
        if row.district != k + 1 {
            return Err(Error::arg(format!(
                "district row {}: id {} out of order",
                k + 1,
                row.district
            )));
        }
        if !(row.expected > 0.0) || !row.x.is_finite() {
            return Err(Error::arg(format!(
                "district {}: E must be positive and x finite",
                k + 1
            )));
        }
    }
    let neighbors = read_adjacency(adjacency, rows.len(), policy)?;
    Ok(Districts {
        y: rows.iter().map(|r| r.y).collect(),
        expected: rows.iter().map(|r| r.expected).collect(),
        x: rows.iter().map(|r| r.x).collect(),
        neighbors,
    })
}

pub fn load_lipcancer(data: &Path, adjacency: &Path, policy: AdjacencyPolicy) -> Result<Districts> {
    let adj = open(adjacency)?;
    located(data, read_districts(open(data)?, adj, Some(LIPCANCER_UNITS), policy))
}

pub fn bundled_lipcancer() -> Districts {
    read_districts(
        LIPCANCER_CSV.as_bytes(),
        LIPCANCER_ADJ.as_bytes(),
        Some(LIPCANCER_UNITS),
        AdjacencyPolicy::Strict,
    )
    .expect("bundled lip cancer data")
}

/// Columns `r, n, x1, x2` with binary factors.
pub fn read_plates<R: Read>(r: R, expected: Option<usize>) -> Result<Vec<Plate>> {
    let mut plates: Vec<Plate> = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        let p: Plate = row?;
        let k = plates.len() + 1;
        if p.r > p.n {
            return Err(Error::arg(format!("plate row {k}: r = {} exceeds n = {}", p.r, p.n)));
        }
        if ![p.x1, p.x2].iter().all(|&v| v == 0.0 || v == 1.0) {
            return Err(Error::arg(format!("plate row {k}: x1 and x2 must be 0 or 1")));
        }
        plates.push(p);
    }
    check_count("plates", plates.len(), expected)?;
    Ok(plates)
}

/// The named dataset must cover all four cells of the 2 x 2 layout.
pub fn check_factorial(plates: &[Plate]) -> Result<()> {
    for x1 in [0.0, 1.0] {
        for x2 in [0.0, 1.0] {
            if !plates.iter().any(|p| p.x1 == x1 && p.x2 == x2) {
                return Err(Error::arg(format!("no plate with x1 = {x1}, x2 = {x2}")));
            }
        }
    }
    Ok(())
}

pub fn load_seeds(path: &Path) -> Result<Vec<Plate>> {
    let plates = located(path, read_plates(open(path)?, Some(SEEDS_UNITS)))?;
    located(path, check_factorial(&plates))?;
    Ok(plates)
}

pub fn bundled_seeds() -> Vec<Plate> {
    read_plates(SEEDS_CSV.as_bytes(), Some(SEEDS_UNITS)).expect("bundled seeds data")
}

pub fn write_plates<W: Write>(w: W, plates: &[Plate]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in plates {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}
