//! Radial trees: direct-sum decomposition into half-line operators,
//! multiplicity-weighted spectral reports and finite discrete truncations.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::measure::{beta_from_b, Atom, AtomicMeasure, DiscreteBranchSequence, MeasureClass};
use crate::transfer::{simon_stolz_integral, simon_stolz_max_step, SimonStolz};
use crate::weyl::{spectral_density, spectral_density_limit, DensityReport};
use crate::{Error, Result};

/// Radial metric tree: vertices at distance `t_n` branch into `b_n` edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    /// `(t_n, b_n)` pairs.
    pub params: Vec<(f64, u32)>,
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl TreeSpec {
    pub fn new(params: Vec<(f64, u32)>, epsilon: f64, c: f64) -> Result<Self> {
        let tree = TreeSpec { params, epsilon, c };
        tree.check()?;
        Ok(tree)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Argument(format!("separation must be positive, got {}", self.epsilon)));
        }
        let mut prev = 0.0;
        for (i, &(t, b)) in self.params.iter().enumerate() {
            if b < 2 {
                return Err(Error::Argument(format!("branching b_{} = {b} must be at least 2", i + 1)));
            }
            if !(t.is_finite() && t - prev >= self.epsilon) {
                return Err(Error::Argument(format!(
                    "vertex {} at {t} is closer than {} to the previous one",
                    i + 1,
                    self.epsilon
                )));
            }
            prev = t;
        }
        Ok(())
    }

    pub fn generations(&self) -> usize {
        self.params.len()
    }

    /// The tree's own parameter measure `Σ β(b_n) δ_{t_n}`.
    pub fn measure(&self) -> Result<AtomicMeasure> {
        let atoms = self
            .params
            .iter()
            .map(|&(t, b)| Ok(Atom { t, beta: beta_from_b(b as f64)? }))
            .collect::<Result<Vec<_>>>()?;
        AtomicMeasure::new(atoms, self.epsilon, MeasureClass::HalfLine)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSpec {
    pub k: usize,
    /// Atoms `(t_n − t_k, β(b_n))` for `n > k`, Dirichlet condition at 0.
    pub measure: AtomicMeasure,
    pub multiplicity: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub components: Vec<ComponentSpec>,
    /// `b₁⋯b_K`: multiplicity carried by the generations beyond `K`.
    pub uncounted: u128,
}

fn overflow(k: usize) -> Error {
    Error::Argument(format!("multiplicity of generation {k} overflows 128 bits"))
}

/// Components `k = 0..=K` of the direct sum with their multiplicities.
pub fn decompose(tree: &TreeSpec, max_k: usize) -> Result<Decomposition> {
    tree.check()?;
    if max_k > tree.generations() {
        return Err(Error::Argument(format!(
            "K = {max_k} exceeds the {} represented generations",
            tree.generations()
        )));
    }
    let full = tree.measure()?;
    let mut components = Vec::with_capacity(max_k + 1);
    // running product b₁⋯b_{k−1}
    let mut prefix: u128 = 1;
    for k in 0..=max_k {
        let (measure, multiplicity) = if k == 0 {
            (full.clone(), 1)
        } else {
            let (tk, bk) = tree.params[k - 1];
            let atoms: Vec<Atom> = full.atoms()[k..].iter().map(|a| Atom { t: a.t - tk, beta: a.beta }).collect();
            let measure = AtomicMeasure::new(atoms, tree.epsilon, MeasureClass::HalfLine)?;
            let mult = prefix.checked_mul(bk as u128 - 1).ok_or_else(|| overflow(k))?;
            prefix = prefix.checked_mul(bk as u128).ok_or_else(|| overflow(k))?;
            (measure, mult)
        };
        components.push(ComponentSpec { k, measure, multiplicity });
    }
    Ok(Decomposition { components, uncounted: prefix })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentDensity {
    pub k: usize,
    pub multiplicity: u128,
    pub report: DensityReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeReport {
    pub energies: Vec<f64>,
    /// `η`, or `None` for extrapolated boundary values.
    pub eta: Option<f64>,
    /// `Σ_k multiplicity_k · density_k`.
    pub total: Vec<f64>,
    pub components: Vec<ComponentDensity>,
    pub uncounted: u128,
}

/// Multiplicity-weighted sum of the component densities up to generation `K`.
pub fn tree_spectral_report(
    tree: &TreeSpec,
    max_k: usize,
    energies: &[f64],
    eta: Option<f64>,
    delta: f64,
) -> Result<TreeReport> {
    let dec = decompose(tree, max_k)?;
    let components = dec
        .components
        .par_iter()
        .map(|c| {
            let report = match eta {
                Some(eta) => spectral_density(&c.measure, energies, eta, delta)?,
                None => spectral_density_limit(&c.measure, energies, delta)?,
            };
            Ok(ComponentDensity { k: c.k, multiplicity: c.multiplicity, report })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = (0..energies.len())
        .map(|i| {
            components
                .iter()
                .map(|c| c.multiplicity as f64 * c.report.rows[i].density)
                .sum()
        })
        .collect();
    Ok(TreeReport { energies: energies.to_vec(), eta, total, components, uncounted: dec.uncounted })
}

/// Simon–Stolz tables of every component up to generation `K`.
pub fn component_simon_stolz(tree: &TreeSpec, max_k: usize, energy: f64, x_max: f64) -> Result<Vec<SimonStolz>> {
    decompose(tree, max_k)?
        .components
        .par_iter()
        .map(|c| simon_stolz_integral(&c.measure, energy, x_max, simon_stolz_max_step(&c.measure, energy)))
        .collect()
}

pub const DEFAULT_VERTEX_CAP: usize = 4000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteSpectrum {
    pub depth: usize,
    pub vertices: usize,
    /// Sorted eigenvalues of `Σ_{y∼x} f(y)`.
    pub adjacency: Vec<f64>,
    /// Sorted eigenvalues of the Laplacian convention with `b(x) + 1`
    /// (`b(O)` at the root) on the diagonal.
    pub laplacian: Vec<f64>,
}

/// Eigenvalues of the tree truncated at `depth`, where a vertex at depth
/// `d` has `b_{d+1}` children.
pub fn discrete_truncation_spectrum(
    seq: &DiscreteBranchSequence,
    depth: usize,
    cap: usize,
) -> Result<DiscreteSpectrum> {
    let b = seq.values();
    if depth > seq.horizon() {
        return Err(Error::Argument(format!("depth {depth} is beyond the window of {} entries", b.len())));
    }
    let mut count = 1usize;
    let mut level = 1usize;
    for &bd in &b[..depth] {
        level = level.checked_mul(bd as usize).filter(|&l| l <= cap).ok_or_else(|| too_many(cap))?;
        count += level;
        if count > cap {
            return Err(too_many(cap));
        }
    }

    let mut adj = DMatrix::<f64>::zeros(count, count);
    let mut diag = vec![0.0; count];
    // vertices numbered level by level; children of a level are contiguous
    let mut first = 0usize;
    let mut size = 1usize;
    for d in 0..=depth {
        let next = first + size;
        let children = if d < depth { b[d] as usize } else { 0 };
        for v in 0..size {
            let x = first + v;
            for c in 0..children {
                let y = next + v * children + c;
                adj[(x, y)] = 1.0;
                adj[(y, x)] = 1.0;
            }
            // a leaf keeps its untruncated degree when the window knows it
            let forward = b.get(d).map_or(children, |&bd| bd as usize);
            diag[x] = forward as f64 + if d == 0 { 0.0 } else { 1.0 };
        }
        first = next;
        size *= children.max(1);
    }
    let mut lap = -adj.clone();
    for (i, &dg) in diag.iter().enumerate() {
        lap[(i, i)] = dg;
    }
    Ok(DiscreteSpectrum {
        depth,
        vertices: count,
        adjacency: sorted_eigenvalues(adj),
        laplacian: sorted_eigenvalues(lap),
    })
}

fn too_many(cap: usize) -> Error {
    Error::Argument(format!("truncated tree exceeds the cap of {cap} vertices"))
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Counts over `bins` equal bins on `[lo, hi]`; values outside are dropped.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Vec<usize>> {
    if bins == 0 || !(hi > lo) {
        return Err(Error::Argument("histogram needs bins ≥ 1 and hi > lo".into()));
    }
    let mut counts = vec![0; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(counts)
}
