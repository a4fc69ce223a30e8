//! Krein-type resolvent formula for the half-line operator.
//!
//! With `g_z` the Dirichlet Green kernel of `−d²/dt²` on `(0, ∞)` and
//! `γf = (f(t_n), f'(t_n))_n` the trace at the atoms,
//!
//! ```text
//! (A − z)⁻¹ = (A₀ − z)⁻¹ + (γ(A₀ − z̄)⁻¹)* (T(z) + B)⁻¹ γ(A₀ − z)⁻¹
//! ```
//!
//! where `T(z)` and `B` are block operators on `ℓ²(J, C²)`. Everything here
//! works on a finite truncation of the atom list.

use nalgebra::DMatrix;

use crate::measure::{Atom, AtomicMeasure};
use crate::transfer::EnergyPoint;
use crate::weyl::{MSample, Route, Side};
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// 2×2 block of an operator on `ℓ²(J, C²)`.
pub type Block = [[C64; 2]; 2];

/// Constant in the recorded tail bound `c·max(1,|k|)·e^{−Im k·t_{N+1}}/(1 − e^{−Im k·ε})`.
pub const TAIL_CONSTANT: f64 = 1.0;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Largest truncation the adaptive search will assemble.
pub const MAX_TRUNCATION: usize = 400;

/// Condition numbers above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e14;

fn require_resolvent_set(z: &EnergyPoint) -> Result<()> {
    if z.on_spectrum() || !(z.k.im > 0.0) {
        return Err(Error::Domain(format!(
            "z = {} lies on [0, ∞); the free resolvent is undefined there",
            z.z
        )));
    }
    Ok(())
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn green_raw(t: f64, u: f64, k: C64) -> C64 {
    I / (2.0 * k) * ((I * k * (t - u).abs()).exp() - (I * k * (t + u)).exp())
}

/// `∂_u g_z(t, u)`; at `t = u` the kink is resolved with `sgn(0) = 0`.
fn green_du(t: f64, u: f64, k: C64) -> C64 {
    -0.5 * (sgn(u - t) * (I * k * (t - u).abs()).exp() - (I * k * (t + u)).exp())
}

/// `∂_t ∂_u g_z(t, u)` for `t ≠ u`.
fn green_dtdu(t: f64, u: f64, k: C64) -> C64 {
    // ∂_t of −½(σ e^{ik|t−u|} − e^{ik(t+u)}) with σ = sgn(u − t):
    // σ·sgn(t − u) = −1 away from the diagonal.
    -0.5 * I * k * (-(I * k * (t - u).abs()).exp() - (I * k * (t + u)).exp())
}

/// `∂_t g_z(t, u)`.
fn green_dt(t: f64, u: f64, k: C64) -> C64 {
    green_du(u, t, k)
}

/// `g_z(t, u) = (i/2k)(e^{ik|t−u|} − e^{ik(t+u)})`.
pub fn free_green(t: f64, u: f64, z: &EnergyPoint) -> Result<C64> {
    require_resolvent_set(z)?;
    Ok(green_raw(t, u, z.k))
}

fn t_block_raw(tn: f64, tm: f64, k: C64) -> Block {
    let near = (I * k * (tn - tm).abs()).exp();
    let far = (I * k * (tn + tm)).exp();
    let s_mn = sgn(tm - tn);
    let s_nm = sgn(tn - tm);
    [
        [(near - far) / (2.0 * I * k), 0.5 * (s_mn * near - far)],
        [0.5 * (s_nm * near - far), -(I * k) / 2.0 * (near + far)],
    ]
}

/// Block `T(z)_{nm}` (0-based indices into `atoms`).
pub fn t_block(n: usize, m: usize, atoms: &[Atom], z: &EnergyPoint) -> Result<Block> {
    require_resolvent_set(z)?;
    if n >= atoms.len() || m >= atoms.len() {
        return Err(Error::Argument(format!(
            "block ({n}, {m}) out of range for {} atoms",
            atoms.len()
        )));
    }
    Ok(t_block_raw(atoms[n].t, atoms[m].t, z.k))
}

/// `B_{nn} = (β/2)·[[0, 1], [1, 0]]`.
pub fn b_block(beta: f64) -> Result<[[f64; 2]; 2]> {
    if !(beta >= 1.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("weight must lie in [1, ∞), got {beta}")));
    }
    Ok([[0.0, beta / 2.0], [beta / 2.0, 0.0]])
}

/// How many atoms enter the block system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KreinOptions {
    /// Fixed truncation; `None` picks the smallest admissible one.
    pub truncation: Option<usize>,
    /// Bound on `tail_bound·‖(T+B)⁻¹‖²`.
    pub tolerance: f64,
}

impl Default for KreinOptions {
    fn default() -> Self {
        KreinOptions { truncation: None, tolerance: DEFAULT_TOLERANCE }
    }
}

impl KreinOptions {
    pub fn fixed(n: usize, tolerance: f64) -> Self {
        KreinOptions { truncation: Some(n), tolerance }
    }
}

/// Truncation of `T(z) + B` to the first `N` atoms, solved once.
#[derive(Clone, Debug)]
pub struct KreinSystem {
    pub z: EnergyPoint,
    pub atoms: Vec<Atom>,
    /// Flattened `2N × 2N` matrix of `T(z) + B`.
    pub matrix: DMatrix<C64>,
    pub inverse: DMatrix<C64>,
    pub tail_bound: f64,
    /// Frobenius norm of the inverse (an upper bound on its operator norm).
    pub inverse_norm: f64,
    /// 1-norm condition number.
    pub condition: f64,
}

impl KreinSystem {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn block(&self, n: usize, m: usize) -> Block {
        block_of(&self.matrix, n, m)
    }

    pub fn inverse_block(&self, n: usize, m: usize) -> Block {
        block_of(&self.inverse, n, m)
    }

    /// Error indicator compared against the tolerance.
    pub fn error_estimate(&self) -> f64 {
        let scale = 1.0 + self.inverse_norm;
        self.tail_bound * scale * scale
    }

    /// `Σ_{n,m} a_nᵀ (T+B)⁻¹_{nm} b_m` for trace vectors `a`, `b`.
    pub fn bilinear(&self, a: &[[C64; 2]], b: &[[C64; 2]]) -> C64 {
        let n = self.len();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..2 * n {
            let left = a[i / 2][i % 2];
            if left == C64::new(0.0, 0.0) {
                continue;
            }
            let mut row = C64::new(0.0, 0.0);
            for j in 0..2 * n {
                row += self.inverse[(i, j)] * b[j / 2][j % 2];
            }
            acc += left * row;
        }
        acc
    }
}

fn block_of(m: &DMatrix<C64>, n: usize, k: usize) -> Block {
    [
        [m[(2 * n, 2 * k)], m[(2 * n, 2 * k + 1)]],
        [m[(2 * n + 1, 2 * k)], m[(2 * n + 1, 2 * k + 1)]],
    ]
}

fn one_norm(m: &DMatrix<C64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn tail_bound(next: Option<&Atom>, z: &EnergyPoint, epsilon: f64) -> f64 {
    match next {
        None => 0.0,
        Some(a) => {
            let decay = z.k.im;
            TAIL_CONSTANT * z.k.norm().max(1.0) * (-decay * a.t).exp() / (1.0 - (-decay * epsilon).exp())
        }
    }
}

fn half_line_atoms(mu: &AtomicMeasure, count: usize) -> Result<Vec<Atom>> {
    let atoms: Vec<Atom> = mu.iter().take(count).collect();
    if let Some(a) = atoms.iter().find(|a| a.t <= 0.0) {
        return Err(Error::Domain(format!(
            "the Krein formula needs atoms in (0, ∞); found one at {}",
            a.t
        )));
    }
    Ok(atoms)
}

/// Assembles and inverts the truncation to the first `n` atoms.
pub fn assemble_krein(mu: &AtomicMeasure, z: &EnergyPoint, n: usize) -> Result<KreinSystem> {
    require_resolvent_set(z)?;
    let mut atoms = half_line_atoms(mu, n + 1)?;
    if atoms.len() < n {
        return Err(Error::Argument(format!(
            "truncation {n} exceeds the {} represented atoms",
            atoms.len()
        )));
    }
    let next = if atoms.len() > n { atoms.pop() } else { None };
    let tail = tail_bound(next.as_ref(), z, mu.epsilon());

    let dim = 2 * n;
    let mut matrix = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let mut blk = t_block_raw(atoms[i].t, atoms[j].t, z.k);
            if i == j {
                let b = b_block(atoms[i].beta)?;
                for (r, row) in blk.iter_mut().enumerate() {
                    for (c, cell) in row.iter_mut().enumerate() {
                        *cell += b[r][c];
                    }
                }
            }
            for r in 0..2 {
                for c in 0..2 {
                    matrix[(2 * i + r, 2 * j + c)] = blk[r][c];
                }
            }
        }
    }
    let inverse = if dim == 0 {
        DMatrix::zeros(0, 0)
    } else {
        matrix.clone().lu().try_inverse().ok_or_else(|| Error::Singular {
            message: format!("T(z) + B is singular at z = {} with N = {n}", z.z),
            condition: f64::INFINITY,
        })?
    };
    let condition = if dim == 0 { 1.0 } else { one_norm(&matrix) * one_norm(&inverse) };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular {
            message: format!("T(z) + B is numerically singular at z = {} with N = {n}", z.z),
            condition,
        });
    }
    let inverse_norm = inverse.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    Ok(KreinSystem { z: *z, atoms, matrix, inverse, tail_bound: tail, inverse_norm, condition })
}

/// Smallest truncation whose error estimate meets `tolerance`.
pub fn assemble_adaptive(mu: &AtomicMeasure, z: &EnergyPoint, tolerance: f64) -> Result<KreinSystem> {
    let mut last = None;
    for n in 0..=MAX_TRUNCATION {
        let available = mu.iter().take(n).count();
        if available < n {
            break;
        }
        let sys = assemble_krein(mu, z, n)?;
        if sys.error_estimate() <= tolerance {
            return Ok(sys);
        }
        last = Some(sys);
    }
    let (tail, n) = last.map_or((f64::INFINITY, 0), |s| (s.error_estimate(), s.len()));
    Err(Error::Truncation { required: n + 1, tail_bound: tail, tolerance })
}

/// Assembles per `opts`, refusing a fixed truncation that misses the tolerance.
pub fn assemble_with(mu: &AtomicMeasure, z: &EnergyPoint, opts: &KreinOptions) -> Result<KreinSystem> {
    match opts.truncation {
        None => assemble_adaptive(mu, z, opts.tolerance),
        Some(n) => {
            let sys = assemble_krein(mu, z, n)?;
            if sys.error_estimate() <= opts.tolerance {
                return Ok(sys);
            }
            let required = match assemble_adaptive(mu, z, opts.tolerance) {
                Ok(s) => s.len(),
                Err(Error::Truncation { required, .. }) => required,
                Err(e) => return Err(e),
            };
            Err(Error::Truncation { required, tail_bound: sys.error_estimate(), tolerance: opts.tolerance })
        }
    }
}

/// Trace row `(g_z(s, t_n), ∂_u g_z(s, u)|_{u=t_n})` for every atom.
fn trace_row(s: f64, atoms: &[Atom], k: C64) -> Vec<[C64; 2]> {
    atoms.iter().map(|a| [green_raw(s, a.t, k), green_du(s, a.t, k)]).collect()
}

fn trace_row_dt(s: f64, atoms: &[Atom], k: C64) -> Vec<[C64; 2]> {
    atoms.iter().map(|a| [green_dt(s, a.t, k), green_dtdu(s, a.t, k)]).collect()
}

fn check_point(mu: &AtomicMeasure, s: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Argument(format!("kernel argument must lie in [0, ∞), got {s}")));
    }
    if mu.iter().take_while(|a| a.t <= s).any(|a| a.t == s) {
        return Err(Error::Argument(format!("kernel argument {s} lies on an atom")));
    }
    Ok(())
}

/// Resolvent kernel `G_z(t, u)` evaluated against an assembled system.
pub fn resolvent_kernel_with(sys: &KreinSystem, t: f64, u: f64) -> C64 {
    let k = sys.z.k;
    green_raw(t, u, k) + sys.bilinear(&trace_row(t, &sys.atoms, k), &trace_row(u, &sys.atoms, k))
}

/// `∂_t G_z(t, u)` for `t ≠ u` off the atoms.
pub fn resolvent_kernel_dt_with(sys: &KreinSystem, t: f64, u: f64) -> C64 {
    let k = sys.z.k;
    green_dt(t, u, k) + sys.bilinear(&trace_row_dt(t, &sys.atoms, k), &trace_row(u, &sys.atoms, k))
}

/// `G_z(t, u)` of the half-line operator with jump conditions.
pub fn resolvent_kernel(mu: &AtomicMeasure, z: &EnergyPoint, t: f64, u: f64, opts: &KreinOptions) -> Result<C64> {
    check_point(mu, t)?;
    check_point(mu, u)?;
    let sys = assemble_with(mu, z, opts)?;
    Ok(resolvent_kernel_with(&sys, t, u))
}

/// `Σ_{n,m} e^{ik(t_n+t_m)} (1, ik) (T+B)⁻¹_{nm} (1, ik)ᵀ`, i.e. `m_+(z; 0) − ik`.
pub fn m_correction(sys: &KreinSystem) -> C64 {
    let k = sys.z.k;
    let v: Vec<[C64; 2]> = sys
        .atoms
        .iter()
        .map(|a| {
            let e = (I * k * a.t).exp();
            [e, I * k * e]
        })
        .collect();
    sys.bilinear(&v, &v)
}

/// `m_+(z; 0)` from the block formula.
pub fn m_plus_krein(mu: &AtomicMeasure, z: &EnergyPoint, opts: &KreinOptions) -> Result<MSample> {
    let sys = assemble_with(mu, z, opts)?;
    let m = I * z.k + m_correction(&sys);
    Ok(MSample {
        z: *z,
        t: 0.0,
        side: Side::Plus,
        state: [C64::new(1.0, 0.0), m],
        route: Route::Krein,
        uncertainty: sys.error_estimate(),
        truncation: Some(sys.len()),
    })
}

/// `(m_+(−κ²; 0) + κ) / (−((b₁−1)/(b₁+1))·2κ·e^{−2κ t₁})`, tending to 1.
pub fn asymptotic_ratio(mu: &AtomicMeasure, kappa: f64, opts: &KreinOptions) -> Result<f64> {
    let first = mu
        .iter()
        .next()
        .ok_or_else(|| Error::Domain("asymptotic ratio needs a non-empty measure".into()))?;
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("κ must be positive, got {kappa}")));
    }
    let b1 = first.b();
    let factor = if b1.is_infinite() { 1.0 } else { (b1 - 1.0) / (b1 + 1.0) };
    let sys = assemble_with(mu, &EnergyPoint::negative(kappa), opts)?;
    let correction = m_correction(&sys).re;
    let leading = -factor * 2.0 * kappa * (-2.0 * kappa * first.t).exp();
    Ok(correction / leading)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::MeasureClass;

    fn approx(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn green_examples() {
        let z = EnergyPoint::negative(1.0);
        for &u in &[0.0, 0.3, 2.0] {
            assert_eq!(free_green(0.0, u, &z).unwrap(), C64::new(0.0, 0.0));
        }
        for &t in &[0.1, 1.0, 5.0, 30.0] {
            let g = free_green(t, t, &z).unwrap();
            assert!(approx(g, C64::new(0.5 * (1.0 - (-2.0 * t).exp()), 0.0), 1e-15));
        }
        let zc = EnergyPoint::new(C64::new(0.7, 0.4));
        assert_eq!(free_green(0.3, 1.7, &zc).unwrap(), free_green(1.7, 0.3, &zc).unwrap());
        assert!(free_green(1.0, 1.0, &EnergyPoint::real(1.0)).is_err());
        assert!(free_green(1.0, 1.0, &EnergyPoint::real(0.0)).is_err());
    }

    #[test]
    fn t_block_diagonal_example() {
        let atoms = [Atom { t: 2f64.ln() / 2.0, beta: 3.0 }];
        let blk = t_block(0, 0, &atoms, &EnergyPoint::negative(1.0)).unwrap();
        let expected = [[-0.25, -0.25], [-0.25, 0.75]];
        for r in 0..2 {
            for c in 0..2 {
                assert!(approx(blk[r][c], C64::new(expected[r][c], 0.0), 1e-15));
            }
        }
    }

    #[test]
    fn t_block_far_atom_is_free_block() {
        let kappa = 1.7;
        let atoms = [Atom { t: 40.0, beta: 3.0 }];
        let blk = t_block(0, 0, &atoms, &EnergyPoint::negative(kappa)).unwrap();
        assert!(approx(blk[0][0], C64::new(-1.0 / (2.0 * kappa), 0.0), 1e-14));
        assert!(approx(blk[1][1], C64::new(kappa / 2.0, 0.0), 1e-14));
        assert!(blk[0][1].norm() < 1e-14 && blk[1][0].norm() < 1e-14);
    }

    #[test]
    fn t_block_off_diagonal_decay() {
        let atoms = [Atom { t: 1.0, beta: 2.0 }, Atom { t: 2.5, beta: 2.0 }];
        for &kappa in &[2.0, 5.0, 10.0] {
            let blk = t_block(0, 1, &atoms, &EnergyPoint::negative(kappa)).unwrap();
            let nrm = blk.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            assert!(nrm <= 2.0 * kappa * (-kappa * 1.5).exp(), "κ={kappa}: {nrm}");
        }
    }

    #[test]
    fn b_block_examples() {
        assert_eq!(b_block(3.0).unwrap(), [[0.0, 1.5], [1.5, 0.0]]);
        assert_eq!(b_block(1.0).unwrap(), [[0.0, 0.5], [0.5, 0.0]]);
        assert!(b_block(0.5).is_err());
    }

    #[test]
    fn t0_plus_b_eigenvalues_bounded_away() {
        // (T⁰ + B)_{nn} = [[−1/(2κ), β/2], [β/2, κ/2]]
        for &kappa in &[1.0f64, 4.0, 20.0] {
            for &beta in &[1.0f64, 1.5, 3.0, 10.0] {
                let (a, d, off) = (-1.0 / (2.0 * kappa), kappa / 2.0, beta / 2.0);
                let mean = 0.5 * (a + d);
                let rad = (0.25 * (a - d) * (a - d) + off * off).sqrt();
                let (neg, pos) = (mean - rad, mean + rad);
                assert!(pos > kappa / 2.0 - 1e-15);
                assert!(neg < -1.0 / (2.0 * kappa) + 1e-15);
            }
        }
    }

    #[test]
    fn single_atom_system() {
        let mu = AtomicMeasure::from_tb(&[(1.0, 4.0)], 1.0).unwrap();
        let z = EnergyPoint::negative(1.3);
        let sys = assemble_krein(&mu, &z, 1).unwrap();
        let t = t_block(0, 0, &mu.atoms(), &z).unwrap();
        let b = b_block(3.0).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!(approx(sys.block(0, 0)[r][c], t[r][c] + b[r][c], 1e-15));
            }
        }
        assert_eq!(sys.tail_bound, 0.0);
    }

    #[test]
    fn adjoint_symmetry() {
        let mu = AtomicMeasure::from_tb(&[(0.5, 4.0), (1.2, 9.0), (2.0, 3.0)], 0.5).unwrap();
        let z = EnergyPoint::new(C64::new(-0.4, 0.8));
        let a = assemble_krein(&mu, &z, 3).unwrap();
        let b = assemble_krein(&mu, &z.conj(), 3).unwrap();
        let diff = (a.matrix.adjoint() - &b.matrix).iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-14, "{diff}");
    }

    #[test]
    fn empty_measure_reduces_to_free() {
        let empty = AtomicMeasure::empty(1.0, MeasureClass::HalfLine);
        let opts = KreinOptions::default();
        for &kappa in &[0.5, 1.0, 3.0] {
            let m = m_plus_krein(&empty, &EnergyPoint::negative(kappa), &opts).unwrap();
            assert_eq!(m.value(), C64::new(-kappa, 0.0));
        }
        let z = EnergyPoint::new(C64::new(0.5, 0.5));
        let g = resolvent_kernel(&empty, &z, 0.7, 1.9, &opts).unwrap();
        assert_eq!(g, free_green(0.7, 1.9, &z).unwrap());
    }

    #[test]
    fn one_atom_m_matches_closed_form() {
        // m(1−) = b·(−κ); then one free step back to 0.
        let kappa: f64 = 1.0;
        let m1 = -4.0 * kappa;
        let (ch, sh) = (kappa.cosh(), kappa.sinh());
        let expected = (m1 * ch - kappa * sh) / (ch - m1 / kappa * sh);
        let mu = AtomicMeasure::from_tb(&[(1.0, 4.0)], 1.0).unwrap();
        let m = m_plus_krein(&mu, &EnergyPoint::negative(kappa), &KreinOptions::default()).unwrap();
        assert!((m.value().re - expected).abs() < 1e-12, "{} vs {expected}", m.value());
        assert!((expected - (-1.17676)).abs() < 1e-5);
    }

    #[test]
    fn dirichlet_atom_m() {
        let mu = AtomicMeasure::from_tb(&[(1.0, f64::INFINITY)], 1.0).unwrap();
        let m = m_plus_krein(&mu, &EnergyPoint::negative(1.0), &KreinOptions::default()).unwrap();
        let expected = -1.0 / 1f64.tanh();
        assert!((m.value().re - expected).abs() < 1e-12);
        assert!(m.value().im.abs() < 1e-15);
    }

    #[test]
    fn dirichlet_atom_kernel_is_interval_kernel() {
        let t1 = 2.0;
        let mu = AtomicMeasure::from_tb(&[(t1, f64::INFINITY)], 1.0).unwrap();
        for &kappa in &[0.5f64, 1.0, 2.5] {
            let z = EnergyPoint::negative(kappa);
            for &(t, u) in &[(0.3, 1.1), (1.7, 0.2), (0.9, 0.9), (1.99, 0.01)] {
                let g = resolvent_kernel(&mu, &z, t, u, &KreinOptions::default()).unwrap();
                let (lo, hi) = if t < u { (t, u) } else { (u, t) };
                let expected = (kappa * lo).sinh() * (kappa * (t1 - hi)).sinh() / (kappa * (kappa * t1).sinh());
                assert!((g - C64::new(expected, 0.0)).norm() < 1e-12, "κ={kappa} ({t},{u}): {g} vs {expected}");
            }
        }
    }

    #[test]
    fn kernel_rejects_atoms_and_spectrum() {
        let mu = AtomicMeasure::from_tb(&[(1.0, 4.0)], 1.0).unwrap();
        let opts = KreinOptions::default();
        assert!(resolvent_kernel(&mu, &EnergyPoint::negative(1.0), 1.0, 0.5, &opts).is_err());
        assert!(resolvent_kernel(&mu, &EnergyPoint::real(1.0), 0.2, 0.5, &opts).is_err());
    }

    #[test]
    fn fixed_truncation_refusal_reports_requirement() {
        let atoms: Vec<(f64, f64)> = (1..=30).map(|n| (n as f64 * 0.5, 4.0)).collect();
        let mu = AtomicMeasure::from_tb(&atoms, 0.5).unwrap();
        let z = EnergyPoint::negative(2.0);
        match m_plus_krein(&mu, &z, &KreinOptions::fixed(2, 1e-10)) {
            Err(Error::Truncation { required, .. }) => assert!(required > 2 && required <= 30),
            other => panic!("expected refusal, got {other:?}"),
        }
        let sys = assemble_adaptive(&mu, &z, 1e-10).unwrap();
        assert!(sys.len() < 30);
        assert!(sys.error_estimate() <= 1e-10);
    }

    #[test]
    fn asymptotic_ratio_errors() {
        let empty = AtomicMeasure::empty(1.0, MeasureClass::HalfLine);
        assert!(matches!(
            asymptotic_ratio(&empty, 5.0, &KreinOptions::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn asymptotic_ratio_one_atom() {
        // closed form: 1 / (1 + ((1 − b)/(1 + b)) e^{−2κ t₁})
        let mu = AtomicMeasure::from_tb(&[(1.0, 4.0)], 1.0).unwrap();
        for &kappa in &[2.0f64, 5.0, 10.0] {
            let r = asymptotic_ratio(&mu, kappa, &KreinOptions::default()).unwrap();
            let expected = 1.0 / (1.0 - 0.6 * (-2.0 * kappa).exp());
            assert!((r - expected).abs() < 1e-9, "κ={kappa}: {r} vs {expected}");
        }
    }
}
