//! One function per subcommand: parse its parameters, compute, tabulate.

use rand::{Rng, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use treeweyl::krein::{
    assemble_with, asymptotic_ratio, m_plus_krein, resolvent_kernel_with, KreinOptions, DEFAULT_TOLERANCE,
};
use treeweyl::measure::{is_eventually_periodic, right_limit, sparsify, Atom, MeasureDoc, Periodicity};
use treeweyl::transfer::{simon_stolz_integral, simon_stolz_max_step, EnergyPoint};
use treeweyl::treeops::{decompose, discrete_truncation_spectrum, histogram, tree_spectral_report, DEFAULT_VERTEX_CAP};
use treeweyl::weyl::{reflectionless_defect, riccati_m_plus, spectral_density, spectral_density_limit, DEFAULT_SIGMA_DELTA};
use treeweyl::{Error, C64};

use crate::config::{parse, positive, sequence, GridDoc, RngAlgorithm, RunConfig, SchemaError};
use crate::output::{big, Artifact, Cell, Table};

#[derive(Debug)]
pub enum CliError {
    Schema(SchemaError),
    /// Well-formed input the numerics cannot honour.
    Refusal(Error),
    Invalid(Error),
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        CliError::Schema(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Truncation { .. } | Error::Singular { .. } | Error::Unsupported(_) => CliError::Refusal(e),
            other => CliError::Invalid(other),
        }
    }
}

type Outcome = Result<Artifact, CliError>;

fn n(x: f64) -> Cell {
    Cell::Num(x)
}

fn atom_b(a: &Atom) -> Cell {
    n(a.b())
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_delta() -> f64 {
    DEFAULT_SIGMA_DELTA
}

fn krein_options(truncation: Option<usize>, tolerance: f64) -> Result<KreinOptions, SchemaError> {
    positive(tolerance, "command.tolerance")?;
    Ok(KreinOptions { truncation, tolerance })
}

pub fn run(command: &str, text: &str, seed: Option<u64>) -> Result<(Artifact, Option<u64>), CliError> {
    let art = match command {
        "msweep" => {
            let cfg = parse::<MsweepParams>(text)?;
            let seed = seed.or(cfg.rng.map(|r| r.seed));
            return msweep(&cfg, seed);
        }
        "density" => density(&parse(text)?),
        "reflectionless" => reflectionless(&parse(text)?),
        "sparse" => sparse(&parse(text)?),
        "rightlimit" => rightlimit(&parse(text)?),
        "sparsify" => sparsify_cmd(&parse(text)?),
        "periodicity" => periodicity(&parse(text)?),
        "decompose" => decompose_cmd(&parse(text)?),
        "treereport" => treereport(&parse(text)?),
        "resolvent-probe" => resolvent_probe(&parse(text)?),
        "asymptotics" => asymptotics(&parse(text)?),
        "discrete" => discrete(&parse(text)?),
        other => return Err(SchemaError::new("command", format!("unknown command {other}")).into()),
    }?;
    Ok((art, None))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPoints {
    pub count: usize,
    /// Range of `Re z`.
    pub re: [f64; 2],
    /// Range of `Im z`; must lie in `(0, ∞)`.
    pub im: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsweepParams {
    /// `z = −κ²` samples.
    #[serde(default)]
    pub kappas: Vec<f64>,
    /// Explicit `[Re z, Im z]` samples.
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    #[serde(default)]
    pub random: Option<RandomPoints>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub truncation: Option<usize>,
}

fn random_points<R: Rng>(rng: &mut R, spec: &RandomPoints) -> Vec<C64> {
    (0..spec.count)
        .map(|_| {
            let re = rng.random_range(spec.re[0]..=spec.re[1]);
            let im = rng.random_range(spec.im[0]..=spec.im[1]);
            C64::new(re, im)
        })
        .collect()
}

fn msweep(cfg: &RunConfig<MsweepParams>, seed: Option<u64>) -> Result<(Artifact, Option<u64>), CliError> {
    let (mu, _) = cfg.measure()?;
    let p = &cfg.command;
    let opts = krein_options(p.truncation, p.tolerance)?;
    let mut zs = Vec::new();
    for (i, &kappa) in p.kappas.iter().enumerate() {
        positive(kappa, &format!("command.kappas[{i}]"))?;
        zs.push(C64::new(-kappa * kappa, 0.0));
    }
    for (i, &[re, im]) in p.points.iter().enumerate() {
        if !(re.is_finite() && im.is_finite()) || (im == 0.0 && re >= 0.0) {
            return Err(SchemaError::new(format!("command.points[{i}]"), "z must be finite and off [0, ∞)").into());
        }
        zs.push(C64::new(re, im));
    }
    let mut used_seed = None;
    if let Some(spec) = &p.random {
        if !(spec.re[0] <= spec.re[1] && spec.re.iter().all(|x| x.is_finite())) {
            return Err(SchemaError::new("command.random.re", "need a finite range lo ≤ hi").into());
        }
        if !(spec.im[0] > 0.0 && spec.im[0] <= spec.im[1] && spec.im[1].is_finite()) {
            return Err(SchemaError::new("command.random.im", "need a finite range 0 < lo ≤ hi").into());
        }
        let rng_doc = cfg.rng.ok_or_else(|| SchemaError::new("rng", "random sampling needs an rng section"))?;
        let s = seed.unwrap_or(rng_doc.seed);
        used_seed = Some(s);
        zs.extend(match rng_doc.algorithm {
            RngAlgorithm::Chacha8 => random_points(&mut ChaCha8Rng::seed_from_u64(s), spec),
            RngAlgorithm::Chacha20 => random_points(&mut ChaCha20Rng::seed_from_u64(s), spec),
        });
    }
    if zs.is_empty() {
        return Err(SchemaError::new("command", "no sample points: give kappas, points or random").into());
    }

    let rows = zs
        .par_iter()
        .map(|&z| {
            let z = EnergyPoint::new(z);
            let ric = riccati_m_plus(&mu, &z, 0.0)?.value();
            let kre = m_plus_krein(&mu, &z, &opts)?;
            let km = kre.value();
            Ok(vec![
                n(z.z.re),
                n(z.z.im),
                n(ric.re),
                n(ric.im),
                n(km.re),
                n(km.im),
                n((km - ric).norm()),
                Cell::Int(kre.truncation.unwrap_or(0) as i128),
                n(kre.uncertainty),
            ])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut table = Table::new(&[
        "re_z",
        "im_z",
        "re_m_riccati",
        "im_m_riccati",
        "re_m_krein",
        "im_m_krein",
        "disagreement",
        "truncation",
        "tail_estimate",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    let mut art = Artifact::new(table).num("krein_tolerance", p.tolerance);
    if let Some(t) = p.truncation {
        art = art.param("krein_truncation", t);
    }
    if let Some(r) = cfg.rng {
        art = art.param("rng", format!("{:?}", r.algorithm).to_lowercase());
    }
    Ok((art, used_seed))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityParams {
    pub energies: GridDoc,
    /// Fixed imaginary part; boundary values are extrapolated when absent.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn density(cfg: &RunConfig<DensityParams>) -> Outcome {
    let (mu, _) = cfg.measure()?;
    let p = &cfg.command;
    let energies = p.energies.points("command.energies")?;
    positive(p.delta, "command.delta")?;
    let rep = match p.eta {
        Some(eta) => spectral_density(&mu, &energies, positive(eta, "command.eta")?, p.delta)?,
        None => {
            if energies[0] <= 0.0 {
                return Err(SchemaError::new("command.energies[0]", "boundary values need E > 0").into());
            }
            spectral_density_limit(&mu, &energies, p.delta)?
        }
    };
    let mut table = Table::new(&["E", "eta", "re_m_plus", "im_m_plus", "density", "in_sigma", "converged"]);
    for (r, &inside) in rep.rows.iter().zip(&rep.set.indicator) {
        table.push(vec![
            n(r.energy),
            n(r.eta),
            n(r.m_plus.re),
            n(r.m_plus.im),
            n(r.density),
            Cell::Flag(inside),
            Cell::Flag(r.converged),
        ]);
    }
    let art = Artifact::new(table).num("sigma_delta", p.delta).num("sigma_coverage", rep.set.coverage());
    Ok(match p.eta {
        Some(eta) => art.num("eta", eta),
        None => art.param("eta", "extrapolated").num("extrapolation_tolerance", 1e-8),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectionlessParams {
    pub energies: GridDoc,
    #[serde(default)]
    pub t: f64,
}

fn reflectionless(cfg: &RunConfig<ReflectionlessParams>) -> Outcome {
    let (mu, _) = cfg.measure()?;
    let p = &cfg.command;
    let energies = p.energies.points("command.energies")?;
    if energies[0] <= 0.0 {
        return Err(SchemaError::new("command.energies[0]", "boundary values need E > 0").into());
    }
    let rep = reflectionless_defect(&mu, &energies, p.t)?;
    let mut table = Table::new(&[
        "E", "eta", "re_m_plus", "im_m_plus", "re_m_minus", "im_m_minus", "defect", "converged",
    ]);
    for r in &rep.rows {
        table.push(vec![
            n(r.energy),
            n(0.0),
            n(r.m_plus.re),
            n(r.m_plus.im),
            n(r.m_minus.re),
            n(r.m_minus.im),
            n(r.defect),
            Cell::Flag(r.converged),
        ]);
    }
    Ok(Artifact::new(table)
        .num("t", p.t)
        .num("extrapolation_tolerance", 1e-8)
        .param("defect_sup", format!("{:.16e}", rep.sup))
        .param("defect_mean", format!("{:.16e}", rep.mean)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseParams {
    pub energy: f64,
    pub x_max: f64,
    #[serde(default)]
    pub step: Option<f64>,
}

fn sparse(cfg: &RunConfig<SparseParams>) -> Outcome {
    let (mu, _) = cfg.measure()?;
    let p = &cfg.command;
    positive(p.energy, "command.energy")?;
    positive(p.x_max, "command.x_max")?;
    let step = match p.step {
        Some(s) => positive(s, "command.step")?,
        None => simon_stolz_max_step(&mu, p.energy),
    };
    let ss = simon_stolz_integral(&mu, p.energy, p.x_max, step)?;
    let mut table = Table::new(&[
        "n",
        "t_start",
        "t_end",
        "lower_bound",
        "numeric",
        "cumulative_integral",
        "cumulative_lower_bound",
    ]);
    for i in &ss.intervals {
        table.push(vec![
            Cell::Int(i.n as i128),
            n(i.t_start),
            n(i.t_end),
            n(i.lower_bound),
            n(i.numeric),
            n(i.cumulative_integral),
            n(i.cumulative_lower_bound),
        ]);
    }
    Ok(Artifact::new(table)
        .num("energy", p.energy)
        .num("step", ss.step)
        .param("integral", format!("{:.16e}", ss.integral)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RightLimitParams {
    pub shifts: GridDoc,
    pub window: f64,
    #[serde(default = "default_rl_tol")]
    pub tol: f64,
}

fn default_rl_tol() -> f64 {
    1e-9
}

fn atom_json(a: &Atom) -> Value {
    let b = a.b();
    json!({ "t": a.t, "beta": a.beta, "b": if b.is_finite() { json!(b) } else { json!("inf") } })
}

fn rightlimit(cfg: &RunConfig<RightLimitParams>) -> Outcome {
    let (mu, _) = cfg.measure()?;
    let p = &cfg.command;
    let shifts = p.shifts.points("command.shifts")?;
    positive(p.window, "command.window")?;
    if !(p.tol >= 0.0) {
        return Err(SchemaError::new("command.tol", "must be nonnegative").into());
    }
    let rl = right_limit(&mu, &shifts, p.window, p.tol)?;
    let atoms = rl.measure.atoms();
    let mut table = Table::new(&["t", "beta", "b"]);
    for a in &atoms {
        table.push(vec![n(a.t), n(a.beta), atom_b(a)]);
    }
    let doc = json!({
        "converged": rl.converged,
        "stable_from": rl.stable_from + 1,
        "window": rl.window,
        "atoms": atoms.iter().map(atom_json).collect::<Vec<_>>(),
    });
    Ok(Artifact::new(table)
        .num("window", p.window)
        .num("tol", p.tol)
        .param("converged", rl.converged)
        .param("stable_from_shift", rl.stable_from + 1)
        .with_document(doc))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparsifyParams {
    pub r: f64,
}

fn sparsify_cmd(cfg: &RunConfig<SparsifyParams>) -> Outcome {
    let (mu, bounds) = cfg.measure()?;
    positive(cfg.command.r, "command.r")?;
    let out = sparsify(&mu, cfg.command.r, &bounds)?;
    let mut table = Table::new(&["t", "beta", "b"]);
    for a in out.atoms() {
        table.push(vec![n(a.t), n(a.beta), atom_b(&a)]);
    }
    let doc = serde_json::to_value(MeasureDoc::from_measure(&out, bounds.c)).expect("serializable");
    Ok(Artifact::new(table).num("r", cfg.command.r).param("tail", "gaps").with_document(doc))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicityParams {
    pub sequence: Vec<u32>,
    pub max_value: u32,
    pub max_start: usize,
    pub max_period: usize,
}

fn periodicity(cfg: &RunConfig<PeriodicityParams>) -> Outcome {
    let p = &cfg.command;
    let seq = sequence(&p.sequence, p.max_value, "command.sequence")?;
    let found = is_eventually_periodic(&seq, p.max_start, p.max_period)?;
    let mut table = Table::new(&["start", "period"]);
    let doc = match found {
        Some(Periodicity { start, period, .. }) => {
            table.push(vec![Cell::Int(start as i128), Cell::Int(period as i128)]);
            json!({ "start": start, "period": period })
        }
        None => Value::Null,
    };
    Ok(Artifact::new(table)
        .param("horizon", seq.horizon())
        .param("max_start", p.max_start)
        .param("max_period", p.max_period)
        .with_document(doc))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeParams {
    pub k: usize,
}

fn decompose_cmd(cfg: &RunConfig<DecomposeParams>) -> Outcome {
    let tree = cfg.tree()?;
    let dec = decompose(&tree, cfg.command.k)?;
    let mut table = Table::new(&["k", "multiplicity", "atoms", "first_t"]);
    let mut doc = Vec::new();
    for c in &dec.components {
        let atoms = c.measure.atoms();
        table.push(vec![
            Cell::Int(c.k as i128),
            Cell::Big(c.multiplicity),
            Cell::Int(atoms.len() as i128),
            n(atoms.first().map_or(f64::NAN, |a| a.t)),
        ]);
        doc.push(json!({
            "k": c.k,
            "multiplicity": big(c.multiplicity),
            "atoms": atoms
                .iter()
                .zip(&tree.params[c.k..])
                .map(|(a, &(_, b))| json!({ "t": a.t, "beta": a.beta, "b": b }))
                .collect::<Vec<_>>(),
        }));
    }
    Ok(Artifact::new(table)
        .param("K", cfg.command.k)
        .param("uncounted_multiplicity", dec.uncounted)
        .with_document(Value::Array(doc)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeReportParams {
    pub k: usize,
    pub energies: GridDoc,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn treereport(cfg: &RunConfig<TreeReportParams>) -> Outcome {
    let tree = cfg.tree()?;
    let p = &cfg.command;
    let energies = p.energies.points("command.energies")?;
    positive(p.delta, "command.delta")?;
    if let Some(eta) = p.eta {
        positive(eta, "command.eta")?;
    } else if energies[0] <= 0.0 {
        return Err(SchemaError::new("command.energies[0]", "boundary values need E > 0").into());
    }
    let rep = tree_spectral_report(&tree, p.k, &energies, p.eta, p.delta)?;
    let mut columns = vec!["E".to_string(), "total_density".to_string()];
    columns.extend(rep.components.iter().map(|c| format!("density_{}", c.k)));
    let mut table = Table { columns, rows: Vec::new() };
    for (i, &e) in rep.energies.iter().enumerate() {
        let mut row = vec![n(e), n(rep.total[i])];
        row.extend(rep.components.iter().map(|c| n(c.report.rows[i].density)));
        table.push(row);
    }
    let mults: Vec<String> = rep.components.iter().map(|c| c.multiplicity.to_string()).collect();
    Ok(Artifact::new(table)
        .param("K", p.k)
        .param("eta", p.eta.map_or("extrapolated".to_string(), |e| format!("{e:e}")))
        .param("multiplicities", mults.join(" "))
        .param("uncounted_multiplicity", rep.uncounted))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventParams {
    /// `[Re z, Im z]`.
    pub z: [f64; 2],
    pub u: f64,
    pub t: GridDoc,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub truncation: Option<usize>,
}

fn resolvent_probe(cfg: &RunConfig<ResolventParams>) -> Outcome {
    let (mu, _) = cfg.measure()?;
    let p = &cfg.command;
    let opts = krein_options(p.truncation, p.tolerance)?;
    let ts = p.t.points("command.t")?;
    let on_atom = |x: f64| mu.atoms().iter().any(|a| a.t == x);
    if !(p.u >= 0.0) || on_atom(p.u) {
        return Err(SchemaError::new("command.u", "must be ≥ 0 and off the atoms").into());
    }
    if let Some(i) = ts.iter().position(|&t| t < 0.0 || on_atom(t)) {
        return Err(SchemaError::new(format!("command.t[{i}]"), "must be ≥ 0 and off the atoms").into());
    }
    let z = EnergyPoint::new(C64::new(p.z[0], p.z[1]));
    let sys = assemble_with(&mu, &z, &opts)?;
    let mut table = Table::new(&["t", "re_G", "im_G", "symmetry_defect"]);
    for &t in &ts {
        let g = resolvent_kernel_with(&sys, t, p.u);
        let gt = resolvent_kernel_with(&sys, p.u, t);
        table.push(vec![n(t), n(g.re), n(g.im), n((g - gt).norm())]);
    }
    Ok(Artifact::new(table)
        .param("z", format!("{} {}", p.z[0], p.z[1]))
        .num("u", p.u)
        .num("krein_tolerance", p.tolerance)
        .param("truncation", sys.len())
        .param("tail_estimate", format!("{:.16e}", sys.error_estimate()))
        .param("condition", format!("{:.16e}", sys.condition)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsParams {
    pub kappas: GridDoc,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub truncation: Option<usize>,
}

fn asymptotics(cfg: &RunConfig<AsymptoticsParams>) -> Outcome {
    let (mu, _) = cfg.measure()?;
    let p = &cfg.command;
    let opts = krein_options(p.truncation, p.tolerance)?;
    let kappas = p.kappas.points("command.kappas")?;
    if kappas[0] <= 0.0 {
        return Err(SchemaError::new("command.kappas[0]", "κ must be positive").into());
    }
    let first = mu.iter().next().ok_or_else(|| SchemaError::new("measure.atoms", "needs at least one atom"))?;
    let factor = if first.is_dirichlet() { 1.0 } else { (first.b() - 1.0) / (first.b() + 1.0) };
    let rows = kappas
        .par_iter()
        .map(|&kappa| {
            let ratio = asymptotic_ratio(&mu, kappa, &opts)?;
            let m = riccati_m_plus(&mu, &EnergyPoint::negative(kappa), 0.0)?.value().re;
            let leading = -factor * 2.0 * kappa * (-2.0 * kappa * first.t).exp();
            let oracle = (m + kappa) / leading;
            Ok(vec![n(kappa), n(ratio), n(oracle), n((ratio - 1.0).abs())])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut table = Table::new(&["kappa", "ratio", "ratio_riccati", "deviation"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(Artifact::new(table).num("krein_tolerance", p.tolerance).num("leading_factor", factor))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteParams {
    pub sequence: Vec<u32>,
    pub max_value: u32,
    pub depth: usize,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_cap() -> usize {
    DEFAULT_VERTEX_CAP
}

fn default_bins() -> usize {
    40
}

fn discrete(cfg: &RunConfig<DiscreteParams>) -> Outcome {
    let p = &cfg.command;
    let seq = sequence(&p.sequence, p.max_value, "command.sequence")?;
    if p.bins == 0 {
        return Err(SchemaError::new("command.bins", "must be at least 1").into());
    }
    let spec = discrete_truncation_spectrum(&seq, p.depth, p.cap)?;
    let mut table = Table::new(&["index", "adjacency", "laplacian"]);
    for (i, (a, l)) in spec.adjacency.iter().zip(&spec.laplacian).enumerate() {
        table.push(vec![Cell::Int(i as i128), n(*a), n(*l)]);
    }
    // spectra lie within ± the maximal degree, and the Laplacian below twice it
    let bound = p.max_value as f64 + 1.0;
    let lap_hi = 2.0 * bound;
    let doc = json!({
        "vertices": spec.vertices,
        "adjacency": spec.adjacency,
        "laplacian": spec.laplacian,
        "adjacency_histogram": { "lo": -bound, "hi": bound, "counts": histogram(&spec.adjacency, -bound, bound, p.bins)? },
        "laplacian_histogram": { "lo": 0.0, "hi": lap_hi, "counts": histogram(&spec.laplacian, 0.0, lap_hi, p.bins)? },
    });
    Ok(Artifact::new(table)
        .param("depth", p.depth)
        .param("vertices", spec.vertices)
        .param("cap", p.cap)
        .with_document(doc))
}
