//! Atomic measures `μ = Σ β_n δ_{t_n}` encoding tree parameters.
//!
//! A branching number `b ∈ (1, ∞]` is carried as the weight
//! `β = (√b + 1)/(√b − 1)`, with `β = 1` standing for `b = ∞` (the vertex
//! decouples: `f(t−) = 0`, `f'(t+) = 0`). Infinite measures are represented by
//! an explicit window of atoms plus a [`Tail`] generator rule.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn beta_from_b(b: f64) -> Result<f64> {
    if b.is_nan() || b <= 1.0 {
        return Err(Error::Domain(format!("branching parameter must exceed 1, got {b}")));
    }
    if b.is_infinite() {
        return Ok(1.0);
    }
    let r = b.sqrt();
    Ok((r + 1.0) / (r - 1.0))
}

/// Inverse of [`beta_from_b`]; `β = 1` maps to `b = ∞`.
pub fn b_from_beta(beta: f64) -> Result<f64> {
    if beta.is_nan() || beta < 1.0 || beta.is_infinite() {
        return Err(Error::Domain(format!("weight must lie in [1, ∞), got {beta}")));
    }
    if beta == 1.0 {
        return Ok(f64::INFINITY);
    }
    let q = (beta + 1.0) / (beta - 1.0);
    Ok(q * q)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub t: f64,
    pub beta: f64,
}

impl Atom {
    pub fn from_b(t: f64, b: f64) -> Result<Self> {
        Ok(Atom { t, beta: beta_from_b(b)? })
    }

    pub fn from_beta(t: f64, beta: f64) -> Result<Self> {
        b_from_beta(beta)?;
        Ok(Atom { t, beta })
    }

    /// Branching parameter; `f64::INFINITY` for a decoupling vertex.
    pub fn b(&self) -> f64 {
        b_from_beta(self.beta).unwrap_or(f64::NAN)
    }

    pub fn is_dirichlet(&self) -> bool {
        self.beta == 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureClass {
    /// Support in `[ε, ∞)`.
    HalfLine,
    /// Support anywhere on the line.
    WholeLine,
}

/// Generator rule continuing the explicit atoms to the right.
#[derive(Clone, Debug, PartialEq)]
pub enum Tail {
    None,
    /// The last `cell` explicit atoms repeat with translation `period`.
    Periodic { period: f64, cell: usize },
    /// Atom number `n` (counted over the whole measure) sits at distance
    /// `max(n^{2n}, ε)` to the right of atom `n − 1`, all with weight `beta`.
    SparseGaps { beta: f64 },
}

/// `n^{2n}` in floating point; infinite once it overflows.
pub fn sparse_gap(n: usize) -> f64 {
    (n as f64).powf(2.0 * n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureClassBounds {
    pub epsilon: f64,
    pub c: f64,
}

impl MeasureClassBounds {
    pub fn new(epsilon: f64, c: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(c >= 2.0 && c.is_finite()) {
            return Err(Error::Argument(format!("weight bound C must be at least 2, got {c}")));
        }
        Ok(MeasureClassBounds { epsilon, c })
    }

    pub fn weight_ok(&self, beta: f64) -> bool {
        beta >= 1.0 + 1.0 / self.c && beta <= self.c
    }
}

/// Finite window of atoms, optionally continued by a tail rule.
///
/// Positions are stored relative to an internal offset so that repeated
/// shifts compose without rounding drift.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    base: Vec<Atom>,
    offset: f64,
    epsilon: f64,
    class: MeasureClass,
    tail: Tail,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>, epsilon: f64, class: MeasureClass) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Argument(format!("separation must be positive, got {epsilon}")));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !a.t.is_finite() {
                return Err(Error::Argument(format!("atom {} has non-finite position", i + 1)));
            }
            b_from_beta(a.beta)?;
            if i > 0 && atoms[i - 1].t >= a.t {
                return Err(Error::Argument(format!(
                    "atom positions must be strictly increasing (index {})",
                    i + 1
                )));
            }
        }
        Ok(AtomicMeasure { base: atoms, offset: 0.0, epsilon, class, tail: Tail::None })
    }

    pub fn empty(epsilon: f64, class: MeasureClass) -> Self {
        AtomicMeasure { base: Vec::new(), offset: 0.0, epsilon, class, tail: Tail::None }
    }

    /// Half-line measure from `(t, b)` pairs.
    pub fn from_tb(pairs: &[(f64, f64)], epsilon: f64) -> Result<Self> {
        let atoms = pairs.iter().map(|&(t, b)| Atom::from_b(t, b)).collect::<Result<Vec<_>>>()?;
        Self::new(atoms, epsilon, MeasureClass::HalfLine)
    }

    pub fn with_tail(mut self, tail: Tail) -> Result<Self> {
        match &tail {
            Tail::None => {}
            Tail::Periodic { period, cell } => {
                if *cell == 0 || *cell > self.base.len() {
                    return Err(Error::Argument(format!(
                        "periodic cell of {cell} atoms needs that many explicit atoms"
                    )));
                }
                let first = self.base[self.base.len() - cell].t;
                let last = self.base[self.base.len() - 1].t;
                if !(period.is_finite() && *period > last - first) {
                    return Err(Error::Argument(format!(
                        "period {period} must exceed the cell span {}",
                        last - first
                    )));
                }
            }
            Tail::SparseGaps { beta } => {
                b_from_beta(*beta)?;
            }
        }
        self.tail = tail;
        Ok(self)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn class(&self) -> MeasureClass {
        self.class
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    /// Number of explicit atoms.
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty() && matches!(self.tail, Tail::None)
    }

    pub fn has_generator(&self) -> bool {
        !matches!(self.tail, Tail::None)
    }

    pub fn atom(&self, i: usize) -> Atom {
        let a = self.base[i];
        Atom { t: a.t - self.offset, beta: a.beta }
    }

    /// Explicit atoms in window order.
    pub fn atoms(&self) -> Vec<Atom> {
        (0..self.base.len()).map(|i| self.atom(i)).collect()
    }

    /// All atoms, explicit then generated; infinite for periodic tails.
    pub fn iter(&self) -> AtomIter<'_> {
        AtomIter { measure: self, index: 0, prev_t: f64::NEG_INFINITY }
    }

    /// Atoms with `lo < t < hi`, including generated ones.
    pub fn atoms_in(&self, lo: f64, hi: f64) -> Vec<Atom> {
        self.iter().take_while(|a| a.t < hi).filter(|a| a.t > lo).collect()
    }

    /// Finite measure of the atoms in the open interval `(lo, hi)`.
    pub fn restrict(&self, lo: f64, hi: f64) -> AtomicMeasure {
        AtomicMeasure {
            base: self.atoms_in(lo, hi),
            offset: 0.0,
            epsilon: self.epsilon,
            class: self.class,
            tail: Tail::None,
        }
    }

    /// `μ(· + s)`: every atom moves to `t − s`. The result is whole-line class.
    pub fn shift(&self, s: f64) -> AtomicMeasure {
        AtomicMeasure {
            base: self.base.clone(),
            offset: self.offset + s,
            epsilon: self.epsilon,
            class: MeasureClass::WholeLine,
            tail: self.tail.clone(),
        }
    }

    /// Same atoms with positions materialised (offset folded in).
    pub fn normalized(&self) -> AtomicMeasure {
        AtomicMeasure {
            base: self.atoms(),
            offset: 0.0,
            epsilon: self.epsilon,
            class: self.class,
            tail: self.tail.clone(),
        }
    }

    pub fn with_class(mut self, class: MeasureClass) -> Self {
        self.class = class;
        self
    }

    /// Mirror image `t ↦ 2·center − t` of the explicit atoms (tail dropped).
    pub fn reflect(&self, center: f64) -> Result<AtomicMeasure> {
        if self.has_generator() {
            return Err(Error::Unsupported("reflecting a measure with a tail rule".into()));
        }
        let atoms = self
            .atoms()
            .into_iter()
            .rev()
            .map(|a| Atom { t: 2.0 * center - a.t, beta: a.beta })
            .collect();
        AtomicMeasure::new(atoms, self.epsilon, MeasureClass::WholeLine)
    }

    pub fn max_weight(&self) -> f64 {
        let tail_beta = match self.tail {
            Tail::SparseGaps { beta } => beta,
            _ => 1.0,
        };
        self.base.iter().map(|a| a.beta).fold(tail_beta, f64::max)
    }
}

pub struct AtomIter<'a> {
    measure: &'a AtomicMeasure,
    index: usize,
    prev_t: f64,
}

impl Iterator for AtomIter<'_> {
    type Item = Atom;

    fn next(&mut self) -> Option<Atom> {
        let m = self.measure;
        let n = m.base.len();
        let atom = if self.index < n {
            m.atom(self.index)
        } else {
            match m.tail {
                Tail::None => return None,
                Tail::Periodic { period, cell } => {
                    let j = self.index - n;
                    let copies = (j / cell + 1) as f64;
                    let src = m.atom(n - cell + j % cell);
                    Atom { t: src.t + copies * period, beta: src.beta }
                }
                Tail::SparseGaps { beta } => {
                    let gap = sparse_gap(self.index + 1).max(m.epsilon);
                    let start = if self.index == 0 { -m.offset } else { self.prev_t };
                    let t = start + gap;
                    if !t.is_finite() {
                        return None;
                    }
                    Atom { t, beta }
                }
            }
        };
        self.index += 1;
        self.prev_t = atom.t;
        Some(atom)
    }
}

/// Outcome of checking a measure against [`MeasureClassBounds`].
///
/// Indices are 1-based atom numbers; a gap violation is reported at the later
/// atom of the offending pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub gap_violations: Vec<usize>,
    pub first_atom_violation: bool,
    pub weight_violations: Vec<usize>,
    pub tail_violation: Option<String>,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.gap_violations.is_empty()
            && !self.first_atom_violation
            && self.weight_violations.is_empty()
            && self.tail_violation.is_none()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passes() {
            return write!(f, "pass");
        }
        let mut parts = Vec::new();
        if !self.gap_violations.is_empty() {
            parts.push(format!("gap below epsilon at {:?}", self.gap_violations));
        }
        if self.first_atom_violation {
            parts.push("first atom closer than epsilon to the origin".to_string());
        }
        if !self.weight_violations.is_empty() {
            parts.push(format!("weight outside [1+1/C, C] at {:?}", self.weight_violations));
        }
        if let Some(t) = &self.tail_violation {
            parts.push(format!("tail: {t}"));
        }
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks gap, first-atom and weight constraints of `M_a^{ε,C,+}` (the first
/// atom check only applies to half-line measures).
pub fn validate(mu: &AtomicMeasure, bounds: &MeasureClassBounds) -> ValidationReport {
    let atoms = mu.atoms();
    let mut report = ValidationReport::default();
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 && a.t - atoms[i - 1].t < bounds.epsilon {
            report.gap_violations.push(i + 1);
        }
        if !bounds.weight_ok(a.beta) {
            report.weight_violations.push(i + 1);
        }
    }
    if mu.class() == MeasureClass::HalfLine {
        if let Some(first) = mu.iter().next() {
            if first.t < bounds.epsilon {
                report.first_atom_violation = true;
            }
        }
    }
    match *mu.tail() {
        Tail::None => {}
        Tail::Periodic { period, cell } => {
            let n = atoms.len();
            let wrap = atoms[n - cell].t + period - atoms[n - 1].t;
            if wrap < bounds.epsilon {
                report.tail_violation = Some(format!("periodic wrap gap {wrap} below epsilon"));
            }
        }
        Tail::SparseGaps { beta } => {
            if !bounds.weight_ok(beta) {
                report.tail_violation = Some(format!("generated weight {beta} out of bounds"));
            }
        }
    }
    report
}

/// Bounded-Lipschitz distance of the restrictions to the open window `(−W, W)`:
/// `sup |∫f dμ − ∫f dν|` over `|f| ≤ 1`, `Lip f ≤ 1`, `supp f ⊂ [−W, W]`.
///
/// Exact for atomic measures: the supremum is a linear program along the
/// merged atom chain, solved by propagating a concave piecewise-linear value
/// function.
pub fn weak_distance(mu: &AtomicMeasure, nu: &AtomicMeasure, window: f64) -> Result<f64> {
    if !(window > 0.0) {
        return Err(Error::Argument(format!("window must be positive, got {window}")));
    }
    let mut points: Vec<(f64, f64)> = mu
        .atoms_in(-window, window)
        .into_iter()
        .map(|a| (a.t, a.beta))
        .chain(nu.atoms_in(-window, window).into_iter().map(|a| (a.t, -a.beta)))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for (x, w) in points {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += w,
            _ => merged.push((x, w)),
        }
    }
    merged.retain(|p| p.1 != 0.0);
    if merged.is_empty() {
        return Ok(0.0);
    }

    let cap = |x: f64| (window - x.abs()).min(1.0);
    let (x0, w0) = merged[0];
    let u0 = cap(x0);
    let mut value = ConcavePl { xs: vec![-u0, u0], ys: vec![-w0 * u0, w0 * u0] };
    for pair in merged.windows(2) {
        let (xa, _) = pair[0];
        let (xb, wb) = pair[1];
        value.dilate(xb - xa);
        let u = cap(xb);
        value.clip(-u, u);
        value.add_linear(wb);
    }
    Ok(value.max())
}

/// Concave piecewise-linear function on `[xs[0], xs[last]]`.
struct ConcavePl {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl ConcavePl {
    fn max(&self) -> f64 {
        self.ys.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `g ↦ max_{|f − g| ≤ d} V(f)`.
    fn dilate(&mut self, d: f64) {
        let top = self.max();
        let first = self.ys.iter().position(|&y| y == top).unwrap();
        let last = self.ys.iter().rposition(|&y| y == top).unwrap();
        let mut xs = Vec::with_capacity(self.xs.len() + 1);
        let mut ys = Vec::with_capacity(self.xs.len() + 1);
        for i in 0..=first {
            xs.push(self.xs[i] - d);
            ys.push(self.ys[i]);
        }
        for i in last..self.xs.len() {
            xs.push(self.xs[i] + d);
            ys.push(self.ys[i]);
        }
        self.xs = xs;
        self.ys = ys;
    }

    fn eval(&self, x: f64) -> f64 {
        let i = self.xs.partition_point(|&p| p <= x).clamp(1, self.xs.len() - 1);
        let (xa, xb) = (self.xs[i - 1], self.xs[i]);
        let (ya, yb) = (self.ys[i - 1], self.ys[i]);
        if xb == xa {
            return ya.max(yb);
        }
        ya + (yb - ya) * (x - xa) / (xb - xa)
    }

    fn clip(&mut self, lo: f64, hi: f64) {
        let lo = lo.max(self.xs[0]);
        let hi = hi.min(*self.xs.last().unwrap());
        let mut xs = vec![lo];
        let mut ys = vec![self.eval(lo)];
        for (&x, &y) in self.xs.iter().zip(&self.ys) {
            if x > lo && x < hi {
                xs.push(x);
                ys.push(y);
            }
        }
        xs.push(hi);
        ys.push(self.eval(hi));
        self.xs = xs;
        self.ys = ys;
    }

    fn add_linear(&mut self, w: f64) {
        for (x, y) in self.xs.iter().zip(self.ys.iter_mut()) {
            *y += w * x;
        }
    }
}

/// Result of a right-limit extraction on a finite window.
#[derive(Clone, Debug)]
pub struct RightLimit {
    /// Last observed shifted window; the right-limit when `converged`.
    pub measure: AtomicMeasure,
    pub converged: bool,
    /// First index (0-based into the shift list) from which all windows match.
    pub stable_from: usize,
    pub window: f64,
}

fn windows_match(a: &[Atom], b: &[Atom], pos_tol: f64, weight_tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x.t - y.t).abs() <= pos_tol && (x.beta - y.beta).abs() <= weight_tol)
}

/// Looks for the weak limit of `μ(· + s_j)` on `(−W, W)`.
///
/// Positions are compared within `tol·ε` and weights within `tol·C`, with `C`
/// the largest weight of `μ`. The candidate counts as converged when at least
/// the last two windows agree with it.
pub fn right_limit(mu: &AtomicMeasure, shifts: &[f64], window: f64, tol: f64) -> Result<RightLimit> {
    if shifts.len() < 2 {
        return Err(Error::Argument("right-limit extraction needs at least two shifts".into()));
    }
    if shifts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("shifts must be strictly increasing".into()));
    }
    if !(window > 0.0) {
        return Err(Error::Argument(format!("window must be positive, got {window}")));
    }
    let windows: Vec<Vec<Atom>> =
        shifts.iter().map(|&s| mu.shift(s).atoms_in(-window, window)).collect();
    let pos_tol = tol * mu.epsilon();
    let weight_tol = tol * mu.max_weight();
    let candidate = windows.last().unwrap();
    let mut stable_from = windows.len() - 1;
    while stable_from > 0 && windows_match(&windows[stable_from - 1], candidate, pos_tol, weight_tol) {
        stable_from -= 1;
    }
    let measure = AtomicMeasure::new(candidate.clone(), mu.epsilon(), MeasureClass::WholeLine)?;
    Ok(RightLimit {
        measure,
        converged: stable_from + 2 <= windows.len(),
        stable_from,
        window,
    })
}

/// Number of new atoms written out explicitly by [`sparsify`]; the rest is
/// carried by a [`Tail::SparseGaps`] rule.
pub const SPARSIFY_EXPLICIT: usize = 4;

/// Keeps `μ` on `[0, R]` and continues it with gaps `t_n − t_{n−1} ≥ n^{2n}`.
///
/// New weights copy the last kept weight, or `C` when nothing is kept.
pub fn sparsify(mu: &AtomicMeasure, r: f64, bounds: &MeasureClassBounds) -> Result<AtomicMeasure> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Argument(format!("R must be positive, got {r}")));
    }
    let mut atoms: Vec<Atom> = mu.iter().take_while(|a| a.t <= r).collect();
    let kept = AtomicMeasure::new(atoms.clone(), bounds.epsilon, MeasureClass::HalfLine)?;
    let report = validate(&kept, bounds);
    if !report.passes() {
        return Err(Error::Validation(report));
    }
    let beta = atoms.last().map_or(bounds.c, |a| a.beta);
    let mut prev = atoms.last().map_or(0.0, |a| a.t).max(r);
    for _ in 0..SPARSIFY_EXPLICIT {
        let n = atoms.len() + 1;
        let t = prev + sparse_gap(n).max(bounds.epsilon);
        atoms.push(Atom { t, beta });
        prev = t;
    }
    AtomicMeasure::new(atoms, bounds.epsilon, MeasureClass::HalfLine)?
        .with_tail(Tail::SparseGaps { beta })
}

/// Window of an integer branching sequence `b_1, b_2, …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteBranchSequence {
    values: Vec<u32>,
    max_value: u32,
}

impl DiscreteBranchSequence {
    pub fn new(values: Vec<u32>, max_value: u32) -> Result<Self> {
        if let Some(i) = values.iter().position(|&b| b < 1 || b > max_value) {
            return Err(Error::Argument(format!(
                "entry {} = {} outside [1, {max_value}]",
                i + 1,
                values[i]
            )));
        }
        Ok(DiscreteBranchSequence { values, max_value })
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn max_value(&self) -> u32 {
        self.max_value
    }

    /// Length of the reliable window.
    pub fn horizon(&self) -> usize {
        self.values.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Periodicity {
    /// 1-based index from which the sequence repeats.
    pub start: usize,
    pub period: usize,
    /// Window length the answer is relative to.
    pub horizon: usize,
}

/// Lexicographically least `(N, p)` with `b_{n+p} = b_n` for every in-window
/// `n ≥ N`. A semi-decision: the answer only speaks about the window.
pub fn is_eventually_periodic(
    seq: &DiscreteBranchSequence,
    max_start: usize,
    max_period: usize,
) -> Result<Option<Periodicity>> {
    let b = seq.values();
    if max_start == 0 || max_period == 0 {
        return Err(Error::Argument("max start and max period must be at least 1".into()));
    }
    if b.len() <= max_start + 2 * max_period {
        return Err(Error::Argument(format!(
            "window of {} entries too short for max start {max_start} and max period {max_period}",
            b.len()
        )));
    }
    for start in 1..=max_start {
        for period in 1..=max_period {
            if (start - 1..b.len() - period).all(|i| b[i + period] == b[i]) {
                return Ok(Some(Periodicity { start, period, horizon: b.len() }));
            }
        }
    }
    Ok(None)
}

// JSON document form.

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BranchValue {
    Finite(f64),
    Named(InfinityTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfinityTag {
    #[serde(rename = "inf")]
    Inf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<BranchValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailDoc {
    None,
    Periodic { period: f64, cell: usize },
    Gaps { beta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(default = "default_class")]
    pub class: MeasureClass,
    pub atoms: Vec<AtomDoc>,
    #[serde(default = "default_tail")]
    pub tail: TailDoc,
}

fn default_class() -> MeasureClass {
    MeasureClass::HalfLine
}

fn default_tail() -> TailDoc {
    TailDoc::None
}

impl AtomDoc {
    pub fn to_atom(&self) -> Result<Atom> {
        match (self.b, self.beta) {
            (Some(BranchValue::Finite(b)), None) => Atom::from_b(self.t, b),
            (Some(BranchValue::Named(InfinityTag::Inf)), None) => Atom::from_b(self.t, f64::INFINITY),
            (None, Some(beta)) => Atom::from_beta(self.t, beta),
            _ => Err(Error::Argument(format!(
                "atom at t = {} must carry exactly one of b, beta",
                self.t
            ))),
        }
    }
}

impl From<Atom> for AtomDoc {
    fn from(a: Atom) -> Self {
        AtomDoc { t: a.t, b: None, beta: Some(a.beta) }
    }
}

impl MeasureDoc {
    pub fn to_measure(&self) -> Result<(AtomicMeasure, MeasureClassBounds)> {
        let bounds = MeasureClassBounds::new(self.epsilon, self.c)?;
        let atoms = self.atoms.iter().map(AtomDoc::to_atom).collect::<Result<Vec<_>>>()?;
        let tail = match self.tail {
            TailDoc::None => Tail::None,
            TailDoc::Periodic { period, cell } => Tail::Periodic { period, cell },
            TailDoc::Gaps { beta } => Tail::SparseGaps { beta },
        };
        let mu = AtomicMeasure::new(atoms, self.epsilon, self.class)?.with_tail(tail)?;
        Ok((mu, bounds))
    }

    pub fn from_measure(mu: &AtomicMeasure, c: f64) -> Self {
        let tail = match *mu.tail() {
            Tail::None => TailDoc::None,
            Tail::Periodic { period, cell } => TailDoc::Periodic { period, cell },
            Tail::SparseGaps { beta } => TailDoc::Gaps { beta },
        };
        MeasureDoc {
            epsilon: mu.epsilon(),
            c,
            class: mu.class(),
            atoms: mu.atoms().into_iter().map(AtomDoc::from).collect(),
            tail,
        }
    }
}

pub fn measure_from_json(text: &str) -> Result<(AtomicMeasure, MeasureClassBounds)> {
    let doc: MeasureDoc = serde_json::from_str(text)?;
    doc.to_measure()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half(pairs: &[(f64, f64)], eps: f64) -> AtomicMeasure {
        AtomicMeasure::new(
            pairs.iter().map(|&(t, beta)| Atom { t, beta }).collect(),
            eps,
            MeasureClass::HalfLine,
        )
        .unwrap()
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_from_b(4.0).unwrap(), 3.0);
        assert_eq!(beta_from_b(9.0).unwrap(), 2.0);
        assert_eq!(beta_from_b(f64::INFINITY).unwrap(), 1.0);
        assert!(matches!(beta_from_b(1.0), Err(Error::Domain(_))));
        assert!(matches!(beta_from_b(0.5), Err(Error::Domain(_))));
        assert_eq!(b_from_beta(1.0).unwrap(), f64::INFINITY);
        assert_eq!(b_from_beta(3.0).unwrap(), 4.0);
    }

    #[test]
    fn b_round_trip() {
        for &b in &[1.0001, 1.5, 2.0, 3.0, 7.0, 100.0, 1e6] {
            let back = b_from_beta(beta_from_b(b).unwrap()).unwrap();
            assert!((back - b).abs() <= 1e-9 * b, "{b} -> {back}");
        }
    }

    #[test]
    fn validate_examples() {
        let bounds = MeasureClassBounds::new(1.0, 4.0).unwrap();
        let ok = half(&[(1.0, 3.0), (2.0, 3.0), (3.0, 3.0)], 1.0);
        assert!(validate(&ok, &bounds).passes());

        let bad = half(&[(1.0, 3.0), (1.5, 3.0)], 1.0);
        let report = validate(&bad, &bounds);
        assert!(!report.passes());
        assert_eq!(report.gap_violations, vec![2]);

        let empty = AtomicMeasure::empty(1.0, MeasureClass::HalfLine);
        assert!(validate(&empty, &bounds).passes());
    }

    #[test]
    fn validate_lists_every_violation() {
        let bounds = MeasureClassBounds::new(1.0, 4.0).unwrap();
        let mu = half(&[(0.5, 1.1), (1.0, 3.0), (1.2, 5.0), (3.0, 2.0)], 0.1);
        let report = validate(&mu, &bounds);
        assert!(report.first_atom_violation);
        assert_eq!(report.gap_violations, vec![2, 3]);
        assert_eq!(report.weight_violations, vec![1, 3]);
    }

    #[test]
    fn shift_examples() {
        let mu = half(&[(5.0, 3.0)], 1.0);
        assert_eq!(mu.shift(5.0).atoms(), vec![Atom { t: 0.0, beta: 3.0 }]);
        let empty = AtomicMeasure::empty(1.0, MeasureClass::HalfLine);
        assert!(empty.shift(3.0).atoms().is_empty());
        let mu = half(&[(1.0, 2.0), (4.0, 3.0)], 1.0);
        assert_eq!(
            mu.shift(2.0).atoms(),
            vec![Atom { t: -1.0, beta: 2.0 }, Atom { t: 2.0, beta: 3.0 }]
        );
        assert_eq!(mu.shift(2.0).class(), MeasureClass::WholeLine);
    }

    #[test]
    fn weak_distance_examples() {
        let mu = half(&[(1.0, 3.0)], 1.0);
        let empty = AtomicMeasure::empty(1.0, MeasureClass::HalfLine);
        assert_eq!(weak_distance(&mu, &mu, 2.0).unwrap(), 0.0);
        // |f(1)| ≤ min(1, 2 − 1)
        assert_eq!(weak_distance(&mu, &empty, 2.0).unwrap(), 3.0);
        assert!(weak_distance(&mu, &empty, 0.5).unwrap() == 0.0);
        assert!(weak_distance(&mu, &mu, -1.0).is_err());
    }

    #[test]
    fn weak_distance_nearby_atoms() {
        // Equal weights β at 1 and 1 + h: optimum f(1) − f(1 + h) = h.
        let base = half(&[(1.0, 2.5)], 0.1);
        for j in [1usize, 2, 5, 10, 100, 1000] {
            let h = 1.0 / j as f64;
            let moved = half(&[(1.0 + h, 2.5)], 0.1);
            let d = weak_distance(&moved, &base, 10.0).unwrap();
            assert!((d - 2.5 * h).abs() < 1e-12, "j={j}: {d}");
        }
    }

    #[test]
    fn right_limit_rejects_short_lists() {
        let mu = half(&[(1.0, 3.0)], 1.0);
        assert!(right_limit(&mu, &[1.0], 3.0, 1e-9).is_err());
        assert!(right_limit(&mu, &[2.0, 1.0], 3.0, 1e-9).is_err());
    }

    #[test]
    fn right_limit_sparse_squares() {
        let atoms: Vec<(f64, f64)> = (1..=40).map(|n| ((n * n) as f64, 3.0)).collect();
        let mu = half(&atoms, 1.0);
        let shifts: Vec<f64> =
            (1..39).map(|j| (((j * j) + (j + 1) * (j + 1)) as f64) / 2.0).collect();
        let rl = right_limit(&mu, &shifts, 3.0, 1e-9).unwrap();
        assert!(rl.converged);
        assert!(rl.measure.atoms().is_empty());
        // windows are empty once the half-gap (2j+1)/2 exceeds 3
        assert_eq!(rl.stable_from, 2);
    }

    #[test]
    fn right_limit_periodic_defect() {
        let atoms: Vec<(f64, f64)> =
            (1..=80).filter(|&n| n != 10).map(|n| (n as f64, 3.0)).collect();
        let mu = half(&atoms, 1.0);
        let shifts: Vec<f64> = (20..60).map(|j| j as f64).collect();
        let rl = right_limit(&mu, &shifts, 3.0, 1e-9).unwrap();
        assert!(rl.converged);
        assert_eq!(rl.stable_from, 0);
        let expected: Vec<Atom> = (-2..=2).map(|t| Atom { t: t as f64, beta: 3.0 }).collect();
        assert_eq!(rl.measure.atoms(), expected);
    }

    #[test]
    fn right_limit_periodic_tail() {
        let mu = half(&[(1.0, 3.0)], 1.0).with_tail(Tail::Periodic { period: 1.0, cell: 1 }).unwrap();
        let shifts: Vec<f64> = (1..30).map(|j| j as f64).collect();
        let rl = right_limit(&mu, &shifts, 3.0, 0.0).unwrap();
        assert!(rl.converged);
        let expected: Vec<Atom> = (-2..=2).map(|t| Atom { t: t as f64, beta: 3.0 }).collect();
        assert_eq!(rl.measure.atoms(), expected);
    }

    #[test]
    fn sparsify_empty() {
        let bounds = MeasureClassBounds::new(1.0, 4.0).unwrap();
        let empty = AtomicMeasure::empty(1.0, MeasureClass::HalfLine);
        let s = sparsify(&empty, 1.0, &bounds).unwrap();
        let ts: Vec<f64> = s.atoms().iter().map(|a| a.t).collect();
        assert_eq!(ts, vec![2.0, 18.0, 747.0, 66283.0]);
        assert!(s.atoms().iter().all(|a| a.beta == 4.0));
        assert!(validate(&s, &bounds).passes());
        // generated continuation: gap before atom 5 is 5^10
        let fifth = s.iter().nth(4).unwrap();
        assert_eq!(fifth.t, 66283.0 + 9765625.0);
    }

    #[test]
    fn sparsify_keeps_prefix() {
        let bounds = MeasureClassBounds::new(1.0, 4.0).unwrap();
        let mu = half(&[(1.0, 3.0), (5.0, 2.0)], 1.0);
        let s = sparsify(&mu, 2.0, &bounds).unwrap();
        let atoms = s.atoms();
        assert_eq!(atoms[0], Atom { t: 1.0, beta: 3.0 });
        assert!(atoms[1].t - atoms[0].t >= 16.0);
        assert_eq!(atoms[1].beta, 3.0);
        assert_eq!(s.atoms_in(-1.0, 2.0 + 1e-12), mu.atoms_in(-1.0, 2.0 + 1e-12));
    }

    #[test]
    fn sparsify_propagates_violation() {
        let bounds = MeasureClassBounds::new(1.0, 4.0).unwrap();
        let mu = half(&[(1.0, 3.0), (1.5, 3.0)], 0.1);
        assert!(matches!(sparsify(&mu, 2.0, &bounds), Err(Error::Validation(_))));
    }

    #[test]
    fn periodicity_examples() {
        let seq = DiscreteBranchSequence::new(vec![2, 3, 2, 3, 2, 3, 2, 3], 10).unwrap();
        let p = is_eventually_periodic(&seq, 2, 2).unwrap().unwrap();
        assert_eq!((p.start, p.period), (1, 2));

        let seq = DiscreteBranchSequence::new(vec![5, 2, 3, 2, 3, 2, 3, 2], 10).unwrap();
        let p = is_eventually_periodic(&seq, 2, 2).unwrap().unwrap();
        assert_eq!((p.start, p.period), (2, 2));

        let seq = DiscreteBranchSequence::new(vec![2, 3, 5, 7, 11, 13, 17, 19], 20).unwrap();
        assert_eq!(is_eventually_periodic(&seq, 1, 3).unwrap(), None);
    }

    #[test]
    fn periodicity_window_too_short() {
        let seq = DiscreteBranchSequence::new(vec![2, 3, 2, 3], 10).unwrap();
        assert!(is_eventually_periodic(&seq, 1, 2).is_err());
        assert!(DiscreteBranchSequence::new(vec![0, 2], 10).is_err());
        assert!(DiscreteBranchSequence::new(vec![11], 10).is_err());
    }

    #[test]
    fn json_schema() {
        let text = r#"{"epsilon": 1, "C": 4, "atoms": [{"t": 1, "b": 4}, {"t": 2, "b": "inf"}, {"t": 3.5, "beta": 2}],
                       "tail": {"kind": "none"}}"#;
        let (mu, bounds) = measure_from_json(text).unwrap();
        assert_eq!(bounds.c, 4.0);
        let betas: Vec<f64> = mu.atoms().iter().map(|a| a.beta).collect();
        assert_eq!(betas, vec![3.0, 1.0, 2.0]);
        let doc = MeasureDoc::from_measure(&mu, 4.0);
        let (again, _) = doc.to_measure().unwrap();
        assert_eq!(again, mu);

        let both = r#"{"epsilon": 1, "C": 4, "atoms": [{"t": 1, "b": 4, "beta": 3}]}"#;
        assert!(measure_from_json(both).is_err());
        let unknown = r#"{"epsilon": 1, "C": 4, "atoms": [], "extra": 1}"#;
        assert!(measure_from_json(unknown).is_err());
        let periodic = r#"{"epsilon": 1, "C": 4, "atoms": [{"t": 1, "b": 4}],
                           "tail": {"kind": "periodic", "period": 1, "cell": 1}}"#;
        let (mu, _) = measure_from_json(periodic).unwrap();
        assert_eq!(mu.atoms_in(0.0, 4.5).len(), 4);
    }
}
