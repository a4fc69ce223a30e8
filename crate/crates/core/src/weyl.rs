//! Weyl–Titchmarsh m-functions by projective transfer propagation.
//!
//! `m_±(z; t) = ±f'_±(z; t)/f_±(z; t)` where `f_±` is the solution that is
//! square integrable at `±∞`. The solution is carried as a projective pair
//! `[f : f']`, so decoupling vertices (`b = ∞`) and poles of `m` are passed
//! exactly instead of overflowing.

use rayon::prelude::*;
use serde::Serialize;

use crate::measure::{Atom, AtomicMeasure, Tail};
use crate::transfer::{free_propagator_scaled, EnergyPoint, TransferMatrix2};
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Krein,
    Riccati,
}

/// One evaluation of `m_±(z; t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MSample {
    pub z: EnergyPoint,
    pub t: f64,
    pub side: Side,
    /// Projective solution `[f : f']` at `t`.
    pub state: [C64; 2],
    pub route: Route,
    /// Tail error estimate (Krein), extrapolation spread (boundary values)
    /// or zero for exact closures.
    pub uncertainty: f64,
    /// Atoms entering the Krein system, when that route was used.
    pub truncation: Option<usize>,
}

impl MSample {
    /// The m-value; complex infinity when `f(t) = 0`.
    pub fn value(&self) -> C64 {
        let [f, df] = self.state;
        if f == ZERO {
            return C64::new(f64::INFINITY, 0.0);
        }
        match self.side {
            Side::Plus => df / f,
            Side::Minus => -df / f,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.state[0] == ZERO
    }
}

fn normalize(v: [C64; 2]) -> [C64; 2] {
    let s = v[0].norm().max(v[1].norm());
    if s == 0.0 || !s.is_finite() {
        return v;
    }
    [v[0] / s, v[1] / s]
}

/// Moves the state from `x` to `x + delta` (either direction).
fn step(v: [C64; 2], delta: f64, k: C64) -> [C64; 2] {
    if delta == 0.0 {
        return v;
    }
    normalize(free_propagator_scaled(delta, k).apply(v))
}

/// `[f(t+) : f'(t+)]` to `[f(t−) : f'(t−)]`.
fn cross_leftward(v: [C64; 2], atom: &Atom) -> [C64; 2] {
    if atom.is_dirichlet() {
        return [ZERO, ONE];
    }
    let r = atom.b().sqrt();
    normalize([v[0] / r, v[1] * r])
}

/// `[f(t−) : f'(t−)]` to `[f(t+) : f'(t+)]`.
fn cross_rightward(v: [C64; 2], atom: &Atom) -> [C64; 2] {
    if atom.is_dirichlet() {
        return [ONE, ZERO];
    }
    let r = atom.b().sqrt();
    normalize([v[0] * r, v[1] / r])
}

fn check_off_support(mu: &AtomicMeasure, t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::Argument(format!("base point must be finite, got {t}")));
    }
    if mu.iter().take_while(|a| a.t <= t).any(|a| a.t == t) {
        return Err(Error::Argument(format!("m-functions are not defined on the atom at {t}")));
    }
    Ok(())
}

/// Cap on generated atoms when a sparse-gap tail is closed off as free.
const SPARSE_TAIL_ATOMS: usize = 64;

/// Right closure: a position, the state of `f_+` there, and the atoms in
/// `(t, position)` still to be crossed.
fn right_closure(mu: &AtomicMeasure, z: &EnergyPoint, t: f64) -> Result<(f64, [C64; 2], Vec<Atom>)> {
    let k = z.k;
    let outgoing = normalize([ONE, I * k]);
    match *mu.tail() {
        Tail::None => {
            let atoms: Vec<Atom> = mu.iter().filter(|a| a.t > t).collect();
            let pos = atoms.last().map_or(t, |a| a.t);
            Ok((pos, outgoing, atoms))
        }
        Tail::SparseGaps { .. } => {
            let horizon = if k.im > 0.0 { 40.0 / k.im } else { f64::INFINITY };
            let explicit = mu.len();
            let atoms: Vec<Atom> = mu
                .iter()
                .take(explicit + SPARSE_TAIL_ATOMS)
                .take_while(|a| a.t - t <= horizon || a.t <= t)
                .filter(|a| a.t > t)
                .collect();
            let pos = atoms.last().map_or(t, |a| a.t);
            Ok((pos, outgoing, atoms))
        }
        Tail::Periodic { period, cell } => {
            let n = mu.len();
            let first = mu.atom(n - cell).t;
            let last = mu.atom(n - 1).t;
            let start = first - 0.5 * (first + period - last);
            let cell_atoms: Vec<Atom> = (n - cell..n).map(|i| mu.atom(i)).collect();
            let eigen = periodic_state(&cell_atoms, start, period, z)?;
            let copies = if t <= start { 0.0 } else { ((t - start) / period).ceil() };
            let pos = start + copies * period;
            let atoms: Vec<Atom> = mu.iter().take_while(|a| a.t < pos).filter(|a| a.t > t).collect();
            Ok((pos, eigen, atoms))
        }
    }
}

/// Monodromy over one period `(start, start + period)`, scaled.
fn monodromy(cell: &[Atom], start: f64, period: f64, k: C64) -> Result<TransferMatrix2> {
    let mut m = TransferMatrix2::identity();
    let mut pos = start;
    for a in cell {
        if a.is_dirichlet() {
            return Err(Error::Unsupported("periodic tails with b = ∞ atoms".into()));
        }
        let r = a.b().sqrt();
        m = TransferMatrix2::diag(r, 1.0 / r) * free_propagator_scaled(a.t - pos, k) * m;
        pos = a.t;
    }
    Ok(free_propagator_scaled(start + period - pos, k) * m)
}

/// Eigenvector of the monodromy for the solution decaying to the right
/// (or, inside a band on the real axis, the one with `Im m > 0`).
fn periodic_state(cell: &[Atom], start: f64, period: f64, z: &EnergyPoint) -> Result<[C64; 2]> {
    let m = monodromy(cell, start, period, z.k)?;
    let tr = m.trace();
    let det = m.det();
    let disc = (tr * tr - 4.0 * det).sqrt();
    let big = if (tr + disc).norm() >= (tr - disc).norm() { (tr + disc) / 2.0 } else { (tr - disc) / 2.0 };
    let small = if big == ZERO { ZERO } else { det / big };
    let vector = |lambda: C64| -> Option<[C64; 2]> {
        let [[a, b], [c, d]] = m.m;
        let v1 = [b, lambda - a];
        let v2 = [lambda - d, c];
        let n1 = v1[0].norm().max(v1[1].norm());
        let n2 = v2[0].norm().max(v2[1].norm());
        let scale = m.max_abs().max(1e-300);
        if n1.max(n2) <= 1e-14 * scale {
            return None;
        }
        Some(normalize(if n1 >= n2 { v1 } else { v2 }))
    };
    let band = (big.norm() - small.norm()).abs() <= 1e-12 * big.norm().max(1e-300);
    if !band {
        return Ok(vector(small).unwrap_or_else(|| normalize([ONE, I * z.k])));
    }
    for lambda in [small, big] {
        if let Some(v) = vector(lambda) {
            if v[0] != ZERO && (v[1] / v[0]).im > 0.0 {
                return Ok(v);
            }
        }
    }
    Ok(normalize([ONE, I * z.k]))
}

/// `m_+(z; t)` by leftward propagation from the tail closure.
pub fn riccati_m_plus(mu: &AtomicMeasure, z: &EnergyPoint, t: f64) -> Result<MSample> {
    check_off_support(mu, t)?;
    let (mut pos, mut v, atoms) = right_closure(mu, z, t)?;
    for a in atoms.iter().rev() {
        v = step(v, a.t - pos, z.k);
        v = cross_leftward(v, a);
        pos = a.t;
    }
    v = step(v, t - pos, z.k);
    Ok(MSample {
        z: *z,
        t,
        side: Side::Plus,
        state: v,
        route: Route::Riccati,
        uncertainty: 0.0,
        truncation: None,
    })
}

/// `m_−(z; t)` for a measure that is free to the left of its first atom.
pub fn m_minus(mu: &AtomicMeasure, z: &EnergyPoint, t: f64) -> Result<MSample> {
    check_off_support(mu, t)?;
    let atoms: Vec<Atom> = mu.iter().take_while(|a| a.t < t).collect();
    // f_− ∝ e^{−ikx} to the left, so f'/f = −ik and m_− = ik.
    let mut v = normalize([ONE, -I * z.k]);
    let mut pos = atoms.first().map_or(t, |a| a.t);
    for a in &atoms {
        v = step(v, a.t - pos, z.k);
        v = cross_rightward(v, a);
        pos = a.t;
    }
    v = step(v, t - pos, z.k);
    Ok(MSample {
        z: *z,
        t,
        side: Side::Minus,
        state: v,
        route: Route::Riccati,
        uncertainty: 0.0,
        truncation: None,
    })
}

/// Disk (or, for `z < 0`, interval) of possible `m_+(z; 0)` over all
/// completions of `μ` beyond depth `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeylDisk {
    #[serde(skip)]
    pub z: EnergyPoint,
    pub depth: f64,
    #[serde(serialize_with = "ser_complex")]
    pub center: C64,
    pub radius: f64,
}

fn ser_complex<S: serde::Serializer>(c: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&c.re)?;
    t.serialize_element(&c.im)?;
    t.end()
}

impl WeylDisk {
    pub fn contains(&self, m: C64, tol: f64) -> bool {
        (m - self.center).norm() <= self.radius + tol * (1.0 + self.radius + self.center.norm())
    }
}

/// Möbius image of the closed upper half-plane (for `Im z > 0`) or of
/// `[−∞, 0]` (for `z < 0`) under `T_z(N)⁻¹`.
pub fn weyl_disk(mu: &AtomicMeasure, z: &EnergyPoint, depth: f64) -> Result<WeylDisk> {
    let negative = z.z.im == 0.0 && z.z.re < 0.0;
    if !(z.z.im > 0.0 || negative) {
        return Err(Error::Argument(format!("Weyl disks need Im z > 0 or z < 0, got {}", z.z)));
    }
    if !(depth > 0.0) {
        return Err(Error::Argument(format!("depth must be positive, got {depth}")));
    }
    check_off_support(mu, depth)?;
    let atoms = mu.atoms_in(0.0, depth);
    let k = z.k;

    // A decoupling vertex inside (0, N) fixes m(0) regardless of the tail.
    if let Some(idx) = atoms.iter().rposition(Atom::is_dirichlet) {
        let mut v = [ZERO, ONE];
        let mut pos = atoms[idx].t;
        for a in atoms[..idx].iter().rev() {
            v = step(v, a.t - pos, k);
            v = cross_leftward(v, a);
            pos = a.t;
        }
        v = step(v, -pos, k);
        let center = if v[0] == ZERO { C64::new(f64::INFINITY, 0.0) } else { v[1] / v[0] };
        return Ok(WeylDisk { z: *z, depth, center, radius: 0.0 });
    }

    let mut back = TransferMatrix2::identity();
    let mut pos = depth;
    for a in atoms.iter().rev() {
        back = free_propagator_scaled(a.t - pos, k) * back;
        let r = a.b().sqrt();
        back = TransferMatrix2::diag(1.0 / r, r) * back;
        let s = back.max_abs();
        back = back.scale(1.0 / s);
        pos = a.t;
    }
    back = free_propagator_scaled(-pos, k) * back;
    let [[a, b], [c, d]] = back.m;
    // m(0) = (c + d·m_N) / (a + b·m_N)
    if negative {
        let at_zero = c / a;
        let at_infinity = d / b;
        let center = (at_zero + at_infinity) / 2.0;
        let radius = (at_zero - at_infinity).norm() / 2.0;
        return Ok(WeylDisk { z: *z, depth, center: C64::new(center.re, 0.0), radius });
    }
    let im_ab = (a * b.conj()).im;
    if im_ab == 0.0 {
        return Err(Error::Singular {
            message: "degenerate Möbius map for the Weyl disk".into(),
            condition: f64::INFINITY,
        });
    }
    let center = I * (a.conj() * d - c * b.conj()) / (2.0 * im_ab);
    let on_circle = if a.norm() >= b.norm() { c / a } else { d / b };
    let radius = (on_circle - center).norm();
    Ok(WeylDisk { z: *z, depth, center, radius })
}

/// Decreasing imaginary parts `η_j = η₀·2^{−j}` for boundary values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EtaSchedule {
    pub eta0: f64,
    pub levels: usize,
    /// Successive extrapolants closer than `tolerance·max(1, |m|)` count as
    /// converged.
    pub tolerance: f64,
}

impl EtaSchedule {
    pub fn for_energy(energy: f64) -> Self {
        EtaSchedule { eta0: 1e-2 * (1.0 + energy.abs()), levels: 40, tolerance: 1e-8 }
    }

    pub fn eta(&self, j: usize) -> f64 {
        self.eta0 * 0.5f64.powi(j as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryValue {
    pub energy: f64,
    pub value: C64,
    pub converged: bool,
    /// Last difference between successive extrapolants.
    pub spread: f64,
    /// Smallest `η` evaluated.
    pub eta_min: f64,
}

impl BoundaryValue {
    pub fn sample(&self, t: f64, side: Side) -> MSample {
        let state = match side {
            Side::Plus => [ONE, self.value],
            Side::Minus => [ONE, -self.value],
        };
        MSample {
            z: EnergyPoint::real(self.energy),
            t,
            side,
            state,
            route: Route::Riccati,
            uncertainty: self.spread,
            truncation: None,
        }
    }
}

/// Three-point Richardson extrapolation of `f(E + iη_j)` to `η = 0`.
pub fn extrapolate_boundary<F>(energy: f64, schedule: &EtaSchedule, f: F) -> Result<BoundaryValue>
where
    F: Fn(&EnergyPoint) -> Result<C64>,
{
    if !(schedule.eta0 > 0.0) || schedule.levels < 3 {
        return Err(Error::Argument("η schedule needs η₀ > 0 and at least 3 levels".into()));
    }
    let mut values = Vec::with_capacity(schedule.levels);
    let mut previous: Option<C64> = None;
    let mut spread = f64::INFINITY;
    let mut best = ZERO;
    for j in 0..schedule.levels {
        let eta = schedule.eta(j);
        values.push(f(&EnergyPoint::new(C64::new(energy, eta)))?);
        if values.len() < 3 {
            continue;
        }
        let n = values.len();
        let (m0, m1, m2) = (values[n - 3], values[n - 2], values[n - 1]);
        let r0 = 2.0 * m1 - m0;
        let r1 = 2.0 * m2 - m1;
        let extrapolant = (4.0 * r1 - r0) / 3.0;
        best = extrapolant;
        if let Some(prev) = previous {
            spread = (extrapolant - prev).norm();
            if spread < schedule.tolerance * extrapolant.norm().max(1.0) {
                return Ok(BoundaryValue { energy, value: extrapolant, converged: true, spread, eta_min: eta });
            }
        }
        previous = Some(extrapolant);
    }
    Ok(BoundaryValue {
        energy,
        value: best,
        converged: false,
        spread,
        eta_min: schedule.eta(schedule.levels - 1),
    })
}

/// `m_+(E + i0; t)`; non-convergence is flagged, not raised.
pub fn boundary_value(mu: &AtomicMeasure, energy: f64, t: f64, schedule: &EtaSchedule) -> Result<BoundaryValue> {
    if !(energy > 0.0) {
        return Err(Error::Domain(format!("boundary values need E > 0, got {energy}")));
    }
    check_off_support(mu, t)?;
    extrapolate_boundary(energy, schedule, |z| Ok(riccati_m_plus(mu, z, t)?.value()))
}

/// `m_−(E + i0; t)`.
pub fn boundary_value_minus(mu: &AtomicMeasure, energy: f64, t: f64, schedule: &EtaSchedule) -> Result<BoundaryValue> {
    if !(energy > 0.0) {
        return Err(Error::Domain(format!("boundary values need E > 0, got {energy}")));
    }
    check_off_support(mu, t)?;
    extrapolate_boundary(energy, schedule, |z| Ok(m_minus(mu, z, t)?.value()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefectRow {
    pub energy: f64,
    pub m_plus: C64,
    pub m_minus: C64,
    /// `|m_+(E+i0; t) + conj(m_−(E+i0; t))|`.
    pub defect: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReflectionlessReport {
    pub t: f64,
    pub rows: Vec<DefectRow>,
    pub sup: f64,
    pub mean: f64,
}

/// Distance from the reflectionless identity `m_+ = −conj(m_−)` on a grid.
pub fn reflectionless_defect(mu: &AtomicMeasure, energies: &[f64], t: f64) -> Result<ReflectionlessReport> {
    check_off_support(mu, t)?;
    let rows = energies
        .par_iter()
        .map(|&e| {
            let schedule = EtaSchedule::for_energy(e);
            let plus = boundary_value(mu, e, t, &schedule)?;
            let minus = boundary_value_minus(mu, e, t, &schedule)?;
            Ok(DefectRow {
                energy: e,
                m_plus: plus.value,
                m_minus: minus.value,
                defect: (plus.value + minus.value.conj()).norm(),
                converged: plus.converged && minus.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sup = rows.iter().map(|r| r.defect).fold(0.0, f64::max);
    let mean = if rows.is_empty() { 0.0 } else { rows.iter().map(|r| r.defect).sum::<f64>() / rows.len() as f64 };
    Ok(ReflectionlessReport { t, rows, sup, mean })
}

pub const DEFAULT_SIGMA_DELTA: f64 = 1e-3;

/// Grid indicator of `{E : δ < Im m_+(E + i0; 0) < 1/δ}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralSet {
    pub energies: Vec<f64>,
    pub indicator: Vec<bool>,
    pub delta: f64,
}

impl SpectralSet {
    pub fn from_values(energies: &[f64], values: &[C64], delta: f64) -> Self {
        let indicator = values.iter().map(|m| m.im > delta && m.im < 1.0 / delta).collect();
        SpectralSet { energies: energies.to_vec(), indicator, delta }
    }

    /// Fraction of grid points in the set.
    pub fn coverage(&self) -> f64 {
        if self.indicator.is_empty() {
            return 0.0;
        }
        self.indicator.iter().filter(|&&b| b).count() as f64 / self.indicator.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityRow {
    pub energy: f64,
    /// Imaginary part used; zero for extrapolated boundary values.
    pub eta: f64,
    pub m_plus: C64,
    /// `π⁻¹ Im m_+`.
    pub density: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityReport {
    pub rows: Vec<DensityRow>,
    pub set: SpectralSet,
}

fn density_report(rows: Vec<DensityRow>, delta: f64) -> DensityReport {
    let energies: Vec<f64> = rows.iter().map(|r| r.energy).collect();
    let values: Vec<C64> = rows.iter().map(|r| r.m_plus).collect();
    let set = SpectralSet::from_values(&energies, &values, delta);
    DensityReport { rows, set }
}

/// `π⁻¹ Im m_+(E + iη; 0)` at fixed `η > 0`.
pub fn spectral_density(mu: &AtomicMeasure, energies: &[f64], eta: f64, delta: f64) -> Result<DensityReport> {
    if !(eta > 0.0) {
        return Err(Error::Argument(format!("η must be positive, got {eta}")));
    }
    let rows = energies
        .par_iter()
        .map(|&e| {
            let m = riccati_m_plus(mu, &EnergyPoint::new(C64::new(e, eta)), 0.0)?.value();
            Ok(DensityRow { energy: e, eta, m_plus: m, density: m.im / std::f64::consts::PI, converged: true })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(density_report(rows, delta))
}

/// Density from extrapolated boundary values `m_+(E + i0; 0)`.
pub fn spectral_density_limit(mu: &AtomicMeasure, energies: &[f64], delta: f64) -> Result<DensityReport> {
    let rows = energies
        .par_iter()
        .map(|&e| {
            let bv = boundary_value(mu, e, 0.0, &EtaSchedule::for_energy(e))?;
            Ok(DensityRow {
                energy: e,
                eta: 0.0,
                m_plus: bv.value,
                density: bv.value.im / std::f64::consts::PI,
                converged: bv.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(density_report(rows, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::MeasureClass;

    fn empty() -> AtomicMeasure {
        AtomicMeasure::empty(1.0, MeasureClass::HalfLine)
    }

    #[test]
    fn free_m_plus() {
        for &kappa in &[0.3, 1.0, 7.0] {
            let m = riccati_m_plus(&empty(), &EnergyPoint::negative(kappa), 0.0).unwrap();
            assert!((m.value() - C64::new(-kappa, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn one_atom_m_plus() {
        let mu = AtomicMeasure::from_tb(&[(1.0, 4.0)], 1.0).unwrap();
        let m = riccati_m_plus(&mu, &EnergyPoint::negative(1.0), 0.0).unwrap().value();
        let (ch, sh) = (1f64.cosh(), 1f64.sinh());
        let expected = (-4.0 * ch - sh) / (ch + 4.0 * sh);
        assert!((m.re - expected).abs() < 1e-14);
        assert!(m.im.abs() < 1e-15);
    }

    #[test]
    fn dirichlet_vertex_m_plus() {
        let mu = AtomicMeasure::from_tb(&[(1.0, f64::INFINITY)], 1.0).unwrap();
        let m = riccati_m_plus(&mu, &EnergyPoint::negative(1.0), 0.0).unwrap().value();
        assert!((m.re + 1.0 / 1f64.tanh()).abs() < 1e-14);
        // just left of the vertex the state is exactly [0 : 1]
        let at = riccati_m_plus(&mu, &EnergyPoint::negative(1.0), 1.0 - 1e-9).unwrap();
        assert!(at.value().norm() > 1e8);
    }

    #[test]
    fn m_plus_rejects_atoms() {
        let mu = AtomicMeasure::from_tb(&[(1.0, 4.0)], 1.0).unwrap();
        assert!(riccati_m_plus(&mu, &EnergyPoint::negative(1.0), 1.0).is_err());
        assert!(m_minus(&mu, &EnergyPoint::negative(1.0), 1.0).is_err());
    }

    #[test]
    fn m_minus_free_left() {
        let mu = AtomicMeasure::from_tb(&[(1.0, 4.0), (2.0, 3.0)], 1.0).unwrap();
        let z = EnergyPoint::new(C64::new(0.4, 0.3));
        let m = m_minus(&mu, &z, 0.0).unwrap();
        assert!((m.value() - I * z.k).norm() < 1e-15);
        let free = m_minus(&empty(), &EnergyPoint::real(2.0), 0.0).unwrap().value();
        let plus = riccati_m_plus(&empty(), &EnergyPoint::real(2.0), 0.0).unwrap().value();
        assert!((-free.conj() - plus).norm() < 1e-15);
        assert!((plus - C64::new(0.0, 2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn mirror_swaps_sides_without_jumps() {
        // Jumps are oriented, so the swap is exact only for the free part.
        let z = EnergyPoint::new(C64::new(-0.3, 0.9));
        let whole = AtomicMeasure::empty(1.0, MeasureClass::WholeLine);
        for &t in &[-2.0, 0.0, 1.5] {
            let plus = riccati_m_plus(&whole, &z, t).unwrap().value();
            let minus = m_minus(&whole.reflect(t).unwrap(), &z, t).unwrap().value();
            assert!((plus - minus).norm() < 1e-15);
        }
        let mu = AtomicMeasure::from_tb(&[(0.7, 4.0)], 0.5).unwrap();
        let plus = riccati_m_plus(&mu, &z, 0.0).unwrap().value();
        let minus = m_minus(&mu.reflect(0.0).unwrap(), &z, 0.0).unwrap().value();
        assert!((plus - minus).norm() > 1e-3);
    }

    #[test]
    fn herglotz_on_small_samples() {
        let mu = AtomicMeasure::from_tb(&[(0.5, 2.0), (1.5, f64::INFINITY), (2.0, 30.0)], 0.5).unwrap();
        for &(re, im) in &[(-2.0, 0.01), (0.5, 0.2), (3.0, 1.0), (20.0, 0.5)] {
            for &t in &[0.0, 0.7, 1.7, 3.0] {
                let m = riccati_m_plus(&mu, &EnergyPoint::new(C64::new(re, im)), t).unwrap();
                assert!(m.value().im > 0.0, "z = {re}+{im}i, t = {t}: {}", m.value());
            }
        }
    }

    #[test]
    fn free_weyl_disk_shrinks_to_minus_one() {
        let z = EnergyPoint::negative(1.0);
        let mut last = f64::INFINITY;
        for &n in &[0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let disk = weyl_disk(&empty(), &z, n).unwrap();
            // explicit free T_z(N): endpoints −tanh N and −coth N
            assert!((disk.center.re + 0.5 * (n.tanh() + 1.0 / n.tanh())).abs() < 1e-12);
            assert!((disk.radius - 0.5 * (1.0 / n.tanh() - n.tanh())).abs() < 1e-12);
            assert!(disk.radius <= last);
            last = disk.radius;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn disk_contains_completions() {
        let mu = AtomicMeasure::from_tb(&[(0.6, 4.0), (1.4, 2.0)], 0.5).unwrap();
        let z = EnergyPoint::new(C64::new(1.2, 0.4));
        let disk = weyl_disk(&mu, &z, 2.0).unwrap();
        let completions = [
            vec![(0.6, 4.0), (1.4, 2.0)],
            vec![(0.6, 4.0), (1.4, 2.0), (2.5, 9.0)],
            vec![(0.6, 4.0), (1.4, 2.0), (2.1, f64::INFINITY)],
            vec![(0.6, 4.0), (1.4, 2.0), (2.2, 1.5), (3.0, 50.0), (3.3, 2.0)],
        ];
        for c in completions {
            let ext = AtomicMeasure::from_tb(&c, 0.1).unwrap();
            let m = riccati_m_plus(&ext, &z, 0.0).unwrap().value();
            assert!(disk.contains(m, 1e-12), "{m} not in {disk:?}");
        }
    }

    #[test]
    fn disk_through_dirichlet_vertex_is_a_point() {
        let mu = AtomicMeasure::from_tb(&[(1.0, f64::INFINITY)], 1.0).unwrap();
        let z = EnergyPoint::new(C64::new(0.5, 0.5));
        let disk = weyl_disk(&mu, &z, 2.0).unwrap();
        assert_eq!(disk.radius, 0.0);
        let m = riccati_m_plus(&mu, &z, 0.0).unwrap().value();
        assert!((disk.center - m).norm() < 1e-13);
        assert!(weyl_disk(&mu, &EnergyPoint::real(1.0), 2.0).is_err());
    }

    #[test]
    fn free_boundary_values() {
        for &(e, expected) in &[(1.0, 1.0), (4.0, 2.0)] {
            let bv = boundary_value(&empty(), e, 0.0, &EtaSchedule::for_energy(e)).unwrap();
            assert!(bv.converged);
            assert!((bv.value - C64::new(0.0, expected)).norm() < 1e-8, "{bv:?}");
        }
        assert!(boundary_value(&empty(), 0.0, 0.0, &EtaSchedule::for_energy(0.0)).is_err());
    }

    #[test]
    fn free_density_shape() {
        let rep = spectral_density_limit(&empty(), &[1.0, 4.0], DEFAULT_SIGMA_DELTA).unwrap();
        let d1 = rep.rows[0].density;
        let d4 = rep.rows[1].density;
        assert!((d1 - 1.0 / std::f64::consts::PI).abs() < 1e-8);
        assert!((d4 / d1 - 2.0).abs() < 1e-8);
        assert_eq!(rep.set.indicator, vec![true, true]);
        assert!(spectral_density(&empty(), &[1.0], 0.0, 1e-3).is_err());
    }

    #[test]
    fn periodic_tail_matches_long_truncation() {
        // t_n = n, b = 4: off the real axis the periodic closure must agree
        // with a long explicit window closed off as free.
        let z = EnergyPoint::new(C64::new(1.3, 0.5));
        let periodic = AtomicMeasure::from_tb(&[(1.0, 4.0)], 1.0)
            .unwrap()
            .with_tail(Tail::Periodic { period: 1.0, cell: 1 })
            .unwrap();
        let long: Vec<(f64, f64)> = (1..=400).map(|n| (n as f64, 4.0)).collect();
        let long = AtomicMeasure::from_tb(&long, 1.0).unwrap();
        for &t in &[0.0, 0.5, 3.5, 10.25] {
            let a = riccati_m_plus(&periodic, &z, t).unwrap().value();
            let b = riccati_m_plus(&long, &z, t).unwrap().value();
            assert!((a - b).norm() < 1e-10, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn reflectionless_free_line() {
        let e = AtomicMeasure::empty(1.0, MeasureClass::WholeLine);
        let rep = reflectionless_defect(&e, &[0.5, 1.0, 2.0], 0.0).unwrap();
        assert!(rep.sup < 1e-8, "{rep:?}");
    }

    #[test]
    fn defect_translation_covariant() {
        let mu = AtomicMeasure::new(
            vec![Atom { t: -0.8, beta: 2.0 }, Atom { t: 1.0, beta: 3.0 }],
            0.5,
            MeasureClass::WholeLine,
        )
        .unwrap();
        let a = reflectionless_defect(&mu, &[0.7, 1.9], 0.3).unwrap();
        let b = reflectionless_defect(&mu.shift(-2.5), &[0.7, 1.9], 2.8).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.defect - y.defect).abs() < 1e-7);
        }
    }
}
