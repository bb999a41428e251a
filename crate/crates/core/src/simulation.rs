//! Ground-truth precision structures and Gaussian data generation.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rand_dist::RngStream;
use crate::telescoping::PrecisionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StructureKind {
    /// `0.25` on the first off-diagonals.
    Tridiagonal,
    /// `0.25` between every pair inside a group.
    Hubs,
    /// `-0.45` among the first `clique_size` members of each group.
    CliquesPositive,
    /// `0.75` among the first `clique_size` members of each group.
    CliquesNegative,
}

impl StructureKind {
    pub const ALL: [StructureKind; 4] = [
        StructureKind::Tridiagonal,
        StructureKind::Hubs,
        StructureKind::CliquesPositive,
        StructureKind::CliquesNegative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::Tridiagonal => "tridiagonal",
            StructureKind::Hubs => "hubs",
            StructureKind::CliquesPositive => "cliques_positive",
            StructureKind::CliquesNegative => "cliques_negative",
        }
    }

    fn grouped(self) -> bool {
        self != StructureKind::Tridiagonal
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        StructureKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown structure '{s}' (expected tridiagonal, hubs, cliques_positive or cliques_negative)"
                ))
            })
    }
}

/// A structure kind at a given dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureSpec {
    pub kind: StructureKind,
    pub p: usize,
    pub group_size: usize,
    pub clique_size: usize,
}

impl StructureSpec {
    /// Groups of 10 with cliques of 3.
    pub fn new(kind: StructureKind, p: usize) -> Self {
        Self { kind, p, group_size: 10, clique_size: 3 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Config("dimension p must be at least 1".into()));
        }
        if self.kind.grouped() {
            if self.group_size == 0 || !self.p.is_multiple_of(self.group_size) {
                return Err(Error::Config(format!(
                    "{} needs p divisible by the group size {} (got p = {})",
                    self.kind, self.group_size, self.p
                )));
            }
            if self.clique_size > self.group_size {
                return Err(Error::Config(format!(
                    "clique size {} exceeds group size {}",
                    self.clique_size, self.group_size
                )));
            }
        }
        Ok(())
    }
}

/// Builds the unit-diagonal precision matrix described by `spec`.
pub fn make_structure(spec: &StructureSpec) -> Result<PrecisionMatrix> {
    spec.validate()?;
    let p = spec.p;
    let mut m = DMatrix::<f64>::identity(p, p);
    let mut set = |i: usize, j: usize, v: f64| {
        m[(i, j)] = v;
        m[(j, i)] = v;
    };
    match spec.kind {
        StructureKind::Tridiagonal => {
            for i in 1..p {
                set(i - 1, i, 0.25);
            }
        }
        StructureKind::Hubs => {
            for g in (0..p).step_by(spec.group_size) {
                for i in g..g + spec.group_size {
                    for j in g..i {
                        set(j, i, 0.25);
                    }
                }
            }
        }
        StructureKind::CliquesPositive | StructureKind::CliquesNegative => {
            let v = if spec.kind == StructureKind::CliquesPositive { -0.45 } else { 0.75 };
            for g in (0..p).step_by(spec.group_size) {
                for i in g..g + spec.clique_size {
                    for j in g..i {
                        set(j, i, v);
                    }
                }
            }
        }
    }
    PrecisionMatrix::new(m).map_err(|_| {
        Error::Config(format!("{} structure at p = {p} is not positive definite", spec.kind))
    })
}

/// `n` rows drawn i.i.d. from `N(0, Θ₀⁻¹)` as `z L⁻ᵀ` with `Θ₀ = L Lᵀ`.
///
/// Normals are consumed row by row.
pub fn sample_mvn_data(theta0: &PrecisionMatrix, n: usize, rng: &mut RngStream) -> Result<DataMatrix> {
    let p = theta0.dim();
    let l = linalg::cholesky(theta0.matrix())
        .map_err(|k| Error::Domain(format!("Θ₀ is not positive definite (pivot {k})")))?;
    let mut y = DMatrix::<f64>::zeros(n, p);
    let mut row = vec![0.0; p];
    for i in 0..n {
        row.iter_mut().for_each(|v| *v = rng.standard_normal());
        linalg::solve_lower_transpose_in_place(&l, &mut row);
        for (j, v) in row.iter().enumerate() {
            y[(i, j)] = *v;
        }
    }
    DataMatrix::new(y)
}

/// The `(n, p)` grid of the simulation study, `n ≈ 24 ln p`.
pub fn study_dimension_grid() -> Vec<(usize, usize)> {
    vec![(110, 100), (120, 150), (127, 200), (132, 250), (137, 300)]
}
