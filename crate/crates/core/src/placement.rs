//! Per-station cache contents and their reduction to replica counts.
//!
//! The delay objective depends on a placement only through how many stations hold each
//! segment, so the optimizer works on [`ReplicaVector`]s and [`realize_placement`] turns the
//! result back into concrete cache contents.
//!
//! Sparse text format: one line `bs_index file_index segment_index` (zero-based, separated by
//! single spaces) per cached segment, lines sorted by the numeric triple, `#` starts a comment.

use std::fmt::Write as _;

use crate::delay_model::{ReplicaVector, Scenario};
use crate::error::{Error, Result};

/// `F x L x K` cache tensor; entry `(f, l, k)` is 1 when station `k` caches segment `l` of `f`.
///
/// Entries are stored as bytes so that a malformed tensor can be represented and reported by
/// [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementMatrix {
    num_files: usize,
    segments_per_file: usize,
    num_bs: usize,
    cache: Vec<u8>,
}

impl PlacementMatrix {
    pub fn empty(num_files: usize, segments_per_file: usize, num_bs: usize) -> Self {
        Self {
            num_files,
            segments_per_file,
            num_bs,
            cache: vec![0; num_files * segments_per_file * num_bs],
        }
    }

    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self::empty(scenario.num_files, scenario.segments_per_file, scenario.num_bs)
    }

    /// Builds a tensor from raw entries in `(file, segment, bs)` row-major order.
    pub fn from_entries(
        num_files: usize,
        segments_per_file: usize,
        num_bs: usize,
        cache: Vec<u8>,
    ) -> Result<Self> {
        let expected = num_files * segments_per_file * num_bs;
        if cache.len() != expected {
            return Err(Error::InvalidScenario(format!(
                "placement has {} entries, shape {num_files}x{segments_per_file}x{num_bs} needs {expected}",
                cache.len()
            )));
        }
        Ok(Self {
            num_files,
            segments_per_file,
            num_bs,
            cache,
        })
    }

    /// Builds a tensor from one `F x L` 0/1 matrix per station.
    pub fn from_station_matrices(matrices: &[Vec<Vec<u8>>]) -> Result<Self> {
        let num_bs = matrices.len();
        let num_files = matrices.first().map_or(0, Vec::len);
        let segments_per_file = matrices
            .first()
            .and_then(|m| m.first())
            .map_or(0, Vec::len);
        let mut placement = Self::empty(num_files, segments_per_file, num_bs);
        for (k, rows) in matrices.iter().enumerate() {
            if rows.len() != num_files || rows.iter().any(|r| r.len() != segments_per_file) {
                return Err(Error::InvalidScenario(format!(
                    "station {k} matrix shape differs from station 0"
                )));
            }
            for (f, row) in rows.iter().enumerate() {
                for (l, &c) in row.iter().enumerate() {
                    placement.set(f, l, k, c);
                }
            }
        }
        Ok(placement)
    }

    pub fn num_files(&self) -> usize {
        self.num_files
    }

    pub fn segments_per_file(&self) -> usize {
        self.segments_per_file
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    fn offset(&self, file: usize, segment: usize, bs: usize) -> usize {
        (file * self.segments_per_file + segment) * self.num_bs + bs
    }

    pub fn get(&self, file: usize, segment: usize, bs: usize) -> u8 {
        self.cache[self.offset(file, segment, bs)]
    }

    pub fn set(&mut self, file: usize, segment: usize, bs: usize, value: u8) {
        let i = self.offset(file, segment, bs);
        self.cache[i] = value;
    }

    /// Number of segments stored at `bs`.
    pub fn load(&self, bs: usize) -> usize {
        self.cache
            .iter()
            .skip(bs)
            .step_by(self.num_bs)
            .map(|&c| usize::from(c))
            .sum()
    }

    /// Relabels stations: station `k` of the result holds what station `perm[k]` held.
    pub fn permute_stations(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.num_bs, "permutation length must equal num_bs");
        let mut out = Self::empty(self.num_files, self.segments_per_file, self.num_bs);
        for (src, dst) in self
            .cache
            .chunks_exact(self.num_bs)
            .zip(out.cache.chunks_exact_mut(self.num_bs))
        {
            for (k, &p) in perm.iter().enumerate() {
                dst[k] = src[p];
            }
        }
        out
    }

    /// Serializes to the sparse text format.
    pub fn to_sparse(&self) -> String {
        let mut out = String::new();
        for bs in 0..self.num_bs {
            for f in 0..self.num_files {
                for l in 0..self.segments_per_file {
                    if self.get(f, l, bs) != 0 {
                        let _ = writeln!(out, "{bs} {f} {l}");
                    }
                }
            }
        }
        out
    }

    /// Parses the sparse text format for a tensor of the given shape.
    pub fn from_sparse(
        text: &str,
        num_files: usize,
        segments_per_file: usize,
        num_bs: usize,
    ) -> Result<Self> {
        let mut placement = Self::empty(num_files, segments_per_file, num_bs);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |reason: String| Error::Parse {
                line: lineno + 1,
                reason,
            };
            let fields: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|e| parse_err(format!("{t:?}: {e}"))))
                .collect::<Result<_>>()?;
            let [bs, f, l] = fields[..] else {
                return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
            };
            if bs >= num_bs || f >= num_files || l >= segments_per_file {
                return Err(parse_err(format!("entry ({bs}, {f}, {l}) is out of range")));
            }
            placement.set(f, l, bs, 1);
        }
        Ok(placement)
    }
}

/// Copies of each segment across stations, `x_{f*L + l} = sum_k c[f][l][k]`.
pub fn replica_counts(placement: &PlacementMatrix) -> ReplicaVector {
    let counts = if placement.num_bs == 0 {
        vec![0; placement.num_files * placement.segments_per_file]
    } else {
        placement
            .cache
            .chunks_exact(placement.num_bs)
            .map(|row| row.iter().map(|&c| usize::from(c)).sum())
            .collect()
    };
    ReplicaVector::from_vec_unchecked(counts)
}

/// Builds a placement whose replica counts are exactly `x` and that respects every cache.
///
/// Segments are taken in decreasing replica count (ties by index) and each is put on the
/// `x_i` stations with the smallest current load (ties by station index). Loads therefore never
/// differ by more than one, so no station exceeds `ceil(sum(x) / K) <= C`.
pub fn realize_placement(x: &ReplicaVector, scenario: &Scenario) -> Result<PlacementMatrix> {
    let x = ReplicaVector::new(x.as_slice().to_vec(), scenario)?;
    let l_count = scenario.segments_per_file;
    let mut placement = PlacementMatrix::for_scenario(scenario);

    let mut order: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0).collect();
    order.sort_by(|&a, &b| x[b].cmp(&x[a]).then(a.cmp(&b)));

    let mut load = vec![0usize; scenario.num_bs];
    let mut stations: Vec<usize> = (0..scenario.num_bs).collect();
    for i in order {
        stations.sort_by(|&a, &b| load[a].cmp(&load[b]).then(a.cmp(&b)));
        for &k in &stations[..x[i]] {
            placement.set(i / l_count, i % l_count, k, 1);
            load[k] += 1;
        }
    }
    debug_assert!(load.iter().all(|&c| c <= scenario.cache_capacity));
    Ok(placement)
}

/// A broken placement constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Tensor shape does not match the scenario.
    Shape {
        expected: (usize, usize, usize),
        found: (usize, usize, usize),
    },
    /// Station stores more than its capacity (C1).
    Capacity { bs: usize, load: usize, capacity: usize },
    /// Replica count outside `0..=K` (C2).
    ReplicaRange { file: usize, segment: usize, count: usize },
    /// Entry other than 0 or 1 (C3).
    NonBinary { file: usize, segment: usize, bs: usize, value: u8 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Shape { expected, found } => {
                write!(f, "shape {found:?} does not match scenario shape {expected:?}")
            }
            Violation::Capacity { bs, load, capacity } => {
                write!(f, "C1: station {bs} stores {load} segments, capacity {capacity}")
            }
            Violation::ReplicaRange {
                file,
                segment,
                count,
            } => write!(f, "C2: file {file} segment {segment} has {count} replicas"),
            Violation::NonBinary {
                file,
                segment,
                bs,
                value,
            } => write!(f, "C3: entry ({file}, {segment}, {bs}) is {value}"),
        }
    }
}

/// Lists every constraint the placement breaks; empty when it is feasible.
pub fn validate(placement: &PlacementMatrix, scenario: &Scenario) -> Vec<Violation> {
    let expected = (scenario.num_files, scenario.segments_per_file, scenario.num_bs);
    let found = (placement.num_files, placement.segments_per_file, placement.num_bs);
    if expected != found {
        return vec![Violation::Shape { expected, found }];
    }
    let mut violations = Vec::new();
    for bs in 0..placement.num_bs {
        let load = placement.load(bs);
        if load > scenario.cache_capacity {
            violations.push(Violation::Capacity {
                bs,
                load,
                capacity: scenario.cache_capacity,
            });
        }
    }
    let counts = replica_counts(placement);
    for (i, &count) in counts.as_slice().iter().enumerate() {
        if count > scenario.num_bs {
            violations.push(Violation::ReplicaRange {
                file: i / placement.segments_per_file,
                segment: i % placement.segments_per_file,
                count,
            });
        }
    }
    for f in 0..placement.num_files {
        for l in 0..placement.segments_per_file {
            for bs in 0..placement.num_bs {
                let value = placement.get(f, l, bs);
                if value > 1 {
                    violations.push(Violation::NonBinary {
                        file: f,
                        segment: l,
                        bs,
                        value,
                    });
                }
            }
        }
    }
    violations
}
