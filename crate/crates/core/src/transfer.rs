//! Transfer matrices of `−f'' = z f` with jump conditions at the atoms.
//!
//! A transfer matrix maps `(f(y), f'(y))` to `(f(x), f'(x))`. Free intervals
//! contribute the cos/sin block, an atom with branching `b` contributes
//! `diag(√b, 1/√b)`.

use std::f64::consts::PI;
use std::ops::Mul;

use crate::measure::AtomicMeasure;
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Spectral parameter `z = k²` with the branch fixed once.
///
/// `Im k > 0` off `[0, ∞)`; on the positive axis `k = √E > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyPoint {
    pub z: C64,
    pub k: C64,
}

impl EnergyPoint {
    pub fn new(z: C64) -> Self {
        let k = if z.im == 0.0 && z.re >= 0.0 {
            C64::new(z.re.sqrt(), 0.0)
        } else {
            I * (-z).sqrt()
        };
        EnergyPoint { z, k }
    }

    /// `z = −κ²`, `k = iκ` exactly.
    pub fn negative(kappa: f64) -> Self {
        EnergyPoint { z: C64::new(-kappa * kappa, 0.0), k: C64::new(0.0, kappa) }
    }

    pub fn real(energy: f64) -> Self {
        Self::new(C64::new(energy, 0.0))
    }

    pub fn from_k(k: C64) -> Self {
        EnergyPoint { z: k * k, k }
    }

    /// True for `z ∈ [0, ∞)`, where the free resolvent does not exist.
    pub fn on_spectrum(&self) -> bool {
        self.z.im == 0.0 && self.z.re >= 0.0
    }

    pub fn conj(&self) -> Self {
        // −conj(k) keeps Im k > 0
        EnergyPoint { z: self.z.conj(), k: -self.k.conj() }
    }
}

/// 2×2 complex matrix, unit determinant for every product built here.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix2 {
    pub m: [[C64; 2]; 2],
}

impl TransferMatrix2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        TransferMatrix2 { m: [[a, b], [c, d]] }
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self::new(one, zero, zero, one)
    }

    pub fn diag(a: f64, d: f64) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self::new(C64::new(a, 0.0), zero, zero, C64::new(d, 0.0))
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Inverse via the adjugate.
    pub fn inverse(&self) -> Self {
        let d = self.det();
        let [[a, b], [c, e]] = self.m;
        Self::new(e / d, -b / d, -c / d, a / d)
    }

    pub fn scale(&self, s: f64) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self::new(a * s, b * s, c * s, d * s)
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Largest singular value, from the eigenvalues of `A A*` in closed form.
    pub fn norm(&self) -> f64 {
        let [[a, b], [c, d]] = self.m;
        let p = a.norm_sqr() + b.norm_sqr();
        let q = c.norm_sqr() + d.norm_sqr();
        let r = a * c.conj() + b * d.conj();
        let half_diff = 0.5 * (p - q);
        (0.5 * (p + q) + (half_diff * half_diff + r.norm_sqr()).sqrt()).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut out: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                out = out.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

impl Mul for TransferMatrix2 {
    type Output = TransferMatrix2;

    fn mul(self, rhs: Self) -> Self {
        let a = self.m;
        let b = rhs.m;
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TransferMatrix2 { m: out }
    }
}

/// `(cos x, sin x)` multiplied by `e^{−|Im x|}`; never overflows.
pub(crate) fn scaled_cos_sin(x: C64) -> (C64, C64) {
    let s = x.im;
    let phase = C64::from_polar(1.0, x.re);
    let (up, down) = if s >= 0.0 {
        (phase * (-2.0 * s).exp(), phase.conj())
    } else {
        (phase, phase.conj() * (2.0 * s).exp())
    };
    ((up + down) * 0.5, (up - down) / (2.0 * I))
}

/// Free propagator scaled by `e^{−|Im k|·|Δ|}`. Negative `Δ` propagates
/// leftward.
pub(crate) fn free_propagator_scaled(delta: f64, k: C64) -> TransferMatrix2 {
    if k == C64::new(0.0, 0.0) {
        return TransferMatrix2::new(
            C64::new(1.0, 0.0),
            C64::new(delta, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        );
    }
    let (c, s) = scaled_cos_sin(k * delta);
    TransferMatrix2::new(c, s / k, -k * s, c)
}

/// `[[cos kΔ, k⁻¹ sin kΔ], [−k sin kΔ, cos kΔ]]`, the limit `[[1, Δ], [0, 1]]`
/// at `z = 0`.
pub fn free_propagator(delta: f64, z: &EnergyPoint) -> Result<TransferMatrix2> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Argument(format!("interval length must be non-negative, got {delta}")));
    }
    let growth = (z.k.im.abs() * delta).exp();
    Ok(free_propagator_scaled(delta, z.k).scale(growth))
}

/// `diag(√b, 1/√b)`.
pub fn jump_matrix(b: f64) -> Result<TransferMatrix2> {
    if b.is_infinite() {
        return Err(Error::Unsupported(
            "b = ∞ has no jump matrix; use the projective propagation in weyl".into(),
        ));
    }
    if !(b > 1.0) {
        return Err(Error::Domain(format!("branching parameter must exceed 1, got {b}")));
    }
    let r = b.sqrt();
    Ok(TransferMatrix2::diag(r, 1.0 / r))
}

fn check_off_support(mu: &AtomicMeasure, points: &[f64]) -> Result<()> {
    let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for a in mu.iter().take_while(|a| a.t <= hi) {
        if points.contains(&a.t) {
            return Err(Error::Argument(format!("point {} lies on an atom", a.t)));
        }
    }
    Ok(())
}

/// `T(x, y, z)` for `y ≤ x`: ordered product of free blocks and jump matrices
/// of the atoms in `(y, x)`.
pub fn transfer(mu: &AtomicMeasure, x: f64, y: f64, z: &EnergyPoint) -> Result<TransferMatrix2> {
    if !(y <= x) {
        return Err(Error::Argument(format!("transfer needs y ≤ x, got y = {y}, x = {x}")));
    }
    check_off_support(mu, &[x, y])?;
    let mut out = TransferMatrix2::identity();
    let mut pos = y;
    for atom in mu.atoms_in(y, x) {
        if atom.is_dirichlet() {
            return Err(Error::Unsupported(format!(
                "atom at {} has b = ∞; matrix transfer is undefined across it",
                atom.t
            )));
        }
        out = jump_matrix(atom.b())? * free_propagator(atom.t - pos, z)? * out;
        pos = atom.t;
    }
    Ok(free_propagator(x - pos, z)? * out)
}

/// Values `(f, f')` at each grid point of the solution with
/// `(f(0), f'(0)) = init`.
pub fn solution_eval(
    mu: &AtomicMeasure,
    z: &EnergyPoint,
    init: [C64; 2],
    grid: &[f64],
) -> Result<Vec<[C64; 2]>> {
    grid.iter()
        .map(|&x| {
            let t = if x >= 0.0 {
                transfer(mu, x, 0.0, z)?
            } else {
                transfer(mu, 0.0, x, z)?.inverse()
            };
            Ok(t.apply(init))
        })
        .collect()
}

/// One free interval `(t_n, t_{n+1})` of the Simon–Stolz integral.
#[derive(Clone, Debug, PartialEq)]
pub struct SimonStolzInterval {
    /// Number of atoms left of the interval.
    pub n: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// `(t_{n+1} − t_n) / (max(k, 1/k)^{2n+2} Π_{m≤n} b_m)`.
    pub lower_bound: f64,
    /// Midpoint-rule value of `∫ dx / ‖T(x, 0, E)‖²` over the interval.
    pub numeric: f64,
    pub cumulative_integral: f64,
    pub cumulative_lower_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimonStolz {
    pub energy: f64,
    pub x_max: f64,
    pub step: f64,
    pub integral: f64,
    pub intervals: Vec<SimonStolzInterval>,
}

/// Largest admissible quadrature step: `min(ε, π/(4k))/8`.
pub fn simon_stolz_max_step(mu: &AtomicMeasure, energy: f64) -> f64 {
    mu.epsilon().min(PI / (4.0 * energy.sqrt())) / 8.0
}

/// `∫_0^X dx / ‖T(x, 0, E)‖²` by the composite midpoint rule, with the
/// per-interval lower bounds from the free-block norm bound `max(k, 1/k)`.
pub fn simon_stolz_integral(mu: &AtomicMeasure, energy: f64, x_max: f64, step: f64) -> Result<SimonStolz> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::Domain(format!("energy must be positive, got {energy}")));
    }
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(Error::Argument(format!("X must be positive, got {x_max}")));
    }
    if !(step > 0.0) {
        return Err(Error::Argument(format!("quadrature step must be positive, got {step}")));
    }
    let h = step.min(simon_stolz_max_step(mu, energy));
    let z = EnergyPoint::real(energy);
    let k = energy.sqrt();
    let free_bound = k.max(1.0 / k);

    let atoms = mu.atoms_in(0.0, x_max);
    let mut edges = vec![0.0];
    edges.extend(atoms.iter().map(|a| a.t));
    edges.push(x_max);

    let mut at_start = TransferMatrix2::identity();
    let mut log_b_product = 0.0;
    let mut cumulative = 0.0;
    let mut cumulative_lower = 0.0;
    let mut intervals = Vec::with_capacity(edges.len() - 1);
    for n in 0..edges.len() - 1 {
        let (a, b) = (edges[n], edges[n + 1]);
        if n > 0 {
            let atom = atoms[n - 1];
            if atom.is_dirichlet() {
                return Err(Error::Unsupported(format!(
                    "atom at {} has b = ∞; the transfer norm is undefined",
                    atom.t
                )));
            }
            log_b_product += atom.b().ln();
            at_start = jump_matrix(atom.b())? * at_start;
        }
        let len = b - a;
        let pieces = (len / h).ceil().max(1.0) as usize;
        let dx = len / pieces as f64;
        let mut numeric = 0.0;
        for i in 0..pieces {
            let offset = (i as f64 + 0.5) * dx;
            let t = free_propagator(offset, &z)? * at_start;
            let nrm = t.norm();
            numeric += dx / (nrm * nrm);
        }
        let log_bound = (2 * n + 2) as f64 * free_bound.ln() + log_b_product;
        let lower_bound = len * (-log_bound).exp();
        cumulative += numeric;
        cumulative_lower += lower_bound;
        intervals.push(SimonStolzInterval {
            n,
            t_start: a,
            t_end: b,
            lower_bound,
            numeric,
            cumulative_integral: cumulative,
            cumulative_lower_bound: cumulative_lower,
        });
        at_start = free_propagator(len, &z)? * at_start;
    }
    Ok(SimonStolz { energy, x_max, step: h, integral: cumulative, intervals })
}
