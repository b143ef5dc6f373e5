//! Command-line drivers: `taudelta`, `state`, `trajectory`, `verify` and the
//! `figures` preset.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{density, ellipse_fit, expectation, trajectory_simple, EllipseFit, PositionModel};
use crate::output::{
    svg_plot, write_csv, write_json, write_text, GapRow, Series, TauDeltaRow, TrajectoryRow,
};
use crate::statevec_general::{
    constraint_drift, impose_constraints, integrate_f, reconstruct, BackgroundPath,
    ConstraintResiduals, GeneralModel,
};
use crate::statevec_simple::{EnergyBasis, SimpleSolution, StateVectorPair};
use crate::taudelta::{
    first_integral_raw, integrate, IntegratorOptions, PNegOneOrbit, PotentialSpec, Scheme,
    TauDeltaState,
};
use crate::verify::{self, commuting_operator, VerifyOptions};
use crate::{Error, ModelParams, ValidatedParams};

#[derive(Debug, Parser)]
#[command(name = "nlqm", version, about = "Two-state-vector nonlinear quantum dynamics")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "NLQM_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override every verification tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads for sweeps and the verification suite.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// κ(s), τ(s), δ(s) from the closed form and the integrator.
    Taudelta,
    /// State vectors and constraint residuals.
    State,
    /// Orbit of ⟨X⟩ and its ellipse fit.
    Trajectory,
    /// Run the invariant suite; exit status 0 only if every check passes.
    Verify,
    /// Taudelta run at N² = 25, c = 4, μ = -b/2, s ∈ [-2, 2].
    Figures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Both,
    Closed,
    Integrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TauDeltaConfig {
    pub c: f64,
    /// Starting `κ` at `s = 0`; `τ` is the positive on-shell value.
    pub kappa0: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub samples: usize,
    pub solver: Solver,
    pub scheme: Scheme,
    pub substep: f64,
}

impl Default for TauDeltaConfig {
    fn default() -> Self {
        let opts = IntegratorOptions::default();
        Self {
            c: 4.0,
            kappa0: 0.0,
            s_min: -2.0,
            s_max: 2.0,
            samples: 401,
            solver: Solver::Both,
            scheme: opts.scheme,
            substep: opts.substep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    #[default]
    FixedPoint,
    /// The oscillating `p = -1` orbit with constant `c`.
    Pneg1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateConfig {
    pub energies: Vec<f64>,
    pub t_max: f64,
    pub samples: usize,
    pub background: Background,
    /// `c` of the oscillating background.
    pub c: f64,
    pub gamma_phase: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            energies: vec![0.0, 0.5, 1.1, 1.8],
            t_max: 10.0,
            samples: 201,
            background: Background::FixedPoint,
            c: 4.0,
            gamma_phase: 0.0,
        }
    }
}

/// Explicit matrix elements `⟨A|Xᵢ|A⟩`, `⟨B|Xᵢ|B⟩`, `⟨A|Xᵢ|B⟩ = [re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionConfig {
    pub xaa: [f64; 3],
    pub xbb: [f64; 3],
    pub xab: [[f64; 2]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub energies: Vec<f64>,
    /// Length of the sampled window in orbital periods.
    pub periods: f64,
    pub samples: usize,
    /// When absent, seeded random operators commuting with `H` are used.
    pub position: Option<PositionConfig>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            energies: vec![0.0, 0.0, 0.7, 0.7, 1.5, 1.5],
            periods: 3.0,
            samples: 600,
            position: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "preset_params")]
    pub params: ModelParams,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub taudelta: TauDeltaConfig,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub verify: VerifyOptions,
    /// Parameter sets run independently by `state` and `trajectory`.
    #[serde(default)]
    pub sweep: Vec<ModelParams>,
}

/// `b = 1`, `μ = -1/2` (so `p = -1`), `N = 5`.
pub fn preset_params() -> ModelParams {
    ModelParams::new(0.0, 1.0, -0.5, 0.0, 5.0)
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: preset_params(),
            seed: None,
            taudelta: TauDeltaConfig::default(),
            state: StateConfig::default(),
            trajectory: TrajectoryConfig::default(),
            verify: VerifyOptions::default(),
            sweep: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("invalid run configuration")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text)
    }

    /// Schema-level checks that need no computation.
    pub fn check(&self) -> anyhow::Result<()> {
        let td = &self.taudelta;
        if !(td.s_max > td.s_min) || td.samples < 2 {
            bail!("taudelta: need s_min < s_max and at least 2 samples");
        }
        if !(td.substep > 0.0) {
            bail!("taudelta: substep must be positive");
        }
        if self.state.samples < 1 || !(self.state.t_max >= 0.0) {
            bail!("state: need t_max >= 0 and at least 1 sample");
        }
        if self.trajectory.samples < 8 || !(self.trajectory.periods > 0.0) {
            bail!("trajectory: need periods > 0 and at least 8 samples");
        }
        Ok(())
    }
}

/// Run the command; `Ok(false)` means a verification failure.
pub fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = match (&cli.config, cli.command) {
        (Some(_), Command::Figures) => bail!("figures is a fixed preset and takes no --config"),
        (Some(p), _) => RunConfig::load(p)?,
        (None, _) => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.max(1))
        .build()
        .context("building the worker pool")?;
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Taudelta => cmd_taudelta(&cfg.params, &cfg.taudelta, out)?,
        Command::Figures => cmd_taudelta(&preset_params(), &TauDeltaConfig::default(), out)?,
        Command::State => pool.install(|| sweep(&cfg, out, |p, dir| cmd_state(p, &cfg.state, seed, dir)))?,
        Command::Trajectory => {
            pool.install(|| sweep(&cfg, out, |p, dir| cmd_trajectory(p, &cfg.trajectory, seed, dir)))?
        }
        Command::Verify => {
            let mut opts = cfg.verify.clone();
            opts.seed = cli.seed.or(cfg.seed).unwrap_or(opts.seed);
            if cli.tol.is_some() {
                opts.tol = cli.tol;
            }
            let report = pool.install(|| verify::run(&opts));
            write_json(&out.join("verify.json"), &report)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn sweep(
    cfg: &RunConfig,
    out: &Path,
    f: impl Fn(&ModelParams, &Path) -> anyhow::Result<()> + Sync,
) -> anyhow::Result<()> {
    if cfg.sweep.is_empty() {
        return f(&cfg.params, out);
    }
    cfg.sweep
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let dir = out.join(format!("sweep_{i:03}"));
            fs::create_dir_all(&dir)?;
            f(p, &dir).with_context(|| format!("sweep entry {i}"))
        })
        .collect::<anyhow::Result<Vec<()>>>()
        .map(|_| ())
}

#[derive(Debug, Serialize)]
struct TauDeltaSummary {
    n: f64,
    c: f64,
    p: f64,
    kappa0: f64,
    tau0: f64,
    solver: Solver,
    max_gap: Option<f64>,
    energy_drift_closed: Option<f64>,
    energy_drift_integrated: Option<f64>,
}

fn td_rows(states: &[TauDeltaState], pot: &PotentialSpec, s_slope: f64) -> Vec<TauDeltaRow> {
    states
        .iter()
        .map(|st| TauDeltaRow {
            s: st.s,
            t: st.s / s_slope,
            kappa: st.kappa,
            tau: st.tau,
            delta: st.delta(),
            h: pot.energy(st),
            c_recovered: first_integral_raw(st.tau, st.delta(), pot.n_norm, pot.p),
        })
        .collect()
}

pub fn cmd_taudelta(params: &ModelParams, cfg: &TauDeltaConfig, out: &Path) -> anyhow::Result<()> {
    let v = params.validate()?;
    let d = v.derive()?;
    let n = v.n_norm;
    let pot = PotentialSpec::new(cfg.c, d.p, n)?;
    let wants_closed = cfg.solver != Solver::Integrated;
    if wants_closed && d.p != -1.0 {
        bail!(Error::Config(format!(
            "the closed-form orbit needs p = -1 (mu = -b/2), got p = {}; use solver \"integrated\"",
            d.p
        )));
    }
    let room = n * n - pot.potential(cfg.kappa0);
    if room < 0.0 {
        bail!(Error::EnergyBelowBarrier {
            energy: n * n,
            barrier: pot.potential(cfg.kappa0)
        });
    }
    let init = TauDeltaState::new(cfg.kappa0, room.sqrt(), 0.0)?;
    let grid: Vec<f64> = (0..cfg.samples)
        .map(|i| cfg.s_min + (cfg.s_max - cfg.s_min) * i as f64 / (cfg.samples - 1) as f64)
        .collect();

    let closed = if wants_closed {
        let orbit = PNegOneOrbit::new(n, cfg.c)?;
        // shift so the orbit passes through the configured starting point
        let s0 = orbit_phase(&orbit, &init)?;
        Some(
            grid.iter()
                .map(|&s| orbit.at(s + s0).map(|st| TauDeltaState { s, ..st }))
                .collect::<crate::Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let integrated = if cfg.solver != Solver::Closed {
        let opts = IntegratorOptions {
            substep: cfg.substep,
            scheme: cfg.scheme,
        };
        Some(integrate(init, &pot, &grid, &opts)?.states)
    } else {
        None
    };

    let drift = |s: &[TauDeltaState]| s.iter().map(|st| (pot.energy(st) - n * n).abs()).fold(0.0, f64::max);
    let mut summary = TauDeltaSummary {
        n,
        c: cfg.c,
        p: d.p,
        kappa0: init.kappa,
        tau0: init.tau,
        solver: cfg.solver,
        max_gap: None,
        energy_drift_closed: closed.as_deref().map(drift),
        energy_drift_integrated: integrated.as_deref().map(drift),
    };
    let mut plots: [Vec<Series>; 3] = Default::default();
    for (label, states) in [("closed form", &closed), ("integrator", &integrated)] {
        let Some(states) = states else { continue };
        let file = if label == "closed form" { "taudelta_closed.csv" } else { "taudelta_integrated.csv" };
        write_csv(&out.join(file), &td_rows(states, &pot, d.s_slope))?;
        for (k, get) in [|s: &TauDeltaState| s.kappa, |s: &TauDeltaState| s.tau, |s: &TauDeltaState| s.delta()]
            .iter()
            .enumerate()
        {
            plots[k].push(Series {
                label: label.into(),
                points: states.iter().map(|s| (s.s, get(s))).collect(),
            });
        }
    }
    if let (Some(a), Some(b)) = (&closed, &integrated) {
        let rows: Vec<GapRow> = a
            .iter()
            .zip(b)
            .map(|(x, y)| GapRow {
                s: x.s,
                kappa_gap: (x.kappa - y.kappa).abs(),
                tau_gap: (x.tau - y.tau).abs(),
                delta_gap: (x.delta() - y.delta()).abs(),
            })
            .collect();
        summary.max_gap = Some(
            rows.iter()
                .map(|r| r.kappa_gap.max(r.tau_gap).max(r.delta_gap))
                .fold(0.0, f64::max),
        );
        write_csv(&out.join("taudelta_gap.csv"), &rows)?;
    }
    let title = format!("N^2 = {}, c = {}", n * n, cfg.c);
    for ((name, sym), series) in [("kappa", "κ"), ("tau", "τ"), ("delta", "δ")].iter().zip(&plots) {
        let svg = svg_plot(&format!("{sym}(s) for {title}"), "s", sym, series, false);
        write_text(&out.join(format!("{name}.svg")), &svg)?;
    }
    write_json(&out.join("taudelta_summary.json"), &summary)?;
    Ok(())
}

/// The `s` at which the `p = -1` orbit passes through `init`.
fn orbit_phase(orbit: &PNegOneOrbit, init: &TauDeltaState) -> anyhow::Result<f64> {
    let period = orbit.period()?;
    let target = init.kappa;
    let at0 = orbit.at(0.0)?;
    if (at0.kappa - target).abs() <= 1e-14 * target.abs().max(1.0) && at0.tau * init.tau >= 0.0 {
        return Ok(0.0);
    }
    // over one period κ rises then falls; bracket on the branch whose τ has
    // the sign of init.tau, then bisect
    let steps = 512;
    let mut prev = orbit.at(0.0)?;
    for i in 1..=steps {
        let s = period * i as f64 / steps as f64;
        let cur = orbit.at(s)?;
        if (prev.kappa - target) * (cur.kappa - target) <= 0.0 && (prev.tau + cur.tau) * init.tau >= 0.0 {
            let (mut lo, mut hi) = (prev.s, s);
            let rising = cur.kappa > prev.kappa;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let k = orbit.at(mid)?.kappa;
                if (k < target) == rising {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev = cur;
    }
    bail!("starting point is not on the p = -1 orbit")
}

#[derive(Debug, Serialize)]
struct StateSummary {
    background: Background,
    dim: usize,
    seed: u64,
    theta: Option<f64>,
    gamma_phase_slope: f64,
    sigma: Option<f64>,
    s_plus: Option<f64>,
    s_minus: Option<f64>,
    max_norm_sum_resid: f64,
    max_tau_resid: f64,
    max_gamma_resid: f64,
    wronskian_drift: Option<f64>,
}

pub fn cmd_state(params: &ModelParams, cfg: &StateConfig, seed: u64, out: &Path) -> anyhow::Result<()> {
    let v = params.validate()?;
    let basis = EnergyBasis::new(cfg.energies.clone())?;
    let ts: Vec<f64> = if cfg.samples == 1 {
        vec![0.0]
    } else {
        (0..cfg.samples).map(|i| cfg.t_max * i as f64 / (cfg.samples - 1) as f64).collect()
    };
    let (states, rows, mut summary) = match cfg.background {
        Background::FixedPoint => state_fixed_point(&v, basis, cfg, seed, &ts)?,
        Background::Pneg1 => state_pneg1(&v, basis, cfg, seed, &ts)?,
    };
    summary.gamma_phase_slope = phase_slope(&states);
    write_json(&out.join("states.json"), &states)?;
    write_csv(&out.join("constraints.csv"), &rows)?;
    write_json(&out.join("state_summary.json"), &summary)?;
    Ok(())
}

type StateRun = (Vec<StateVectorPair>, Vec<ConstraintResiduals>, StateSummary);

fn state_fixed_point(
    v: &ValidatedParams,
    basis: EnergyBasis,
    cfg: &StateConfig,
    seed: u64,
    ts: &[f64],
) -> anyhow::Result<StateRun> {
    let dim = basis.dim();
    let sol = SimpleSolution::seeded(v, basis, seed)?.with_gamma_phase(cfg.gamma_phase);
    let gamma0 = sol.evolve(0.0).gamma();
    let states: Vec<StateVectorPair> = ts.iter().map(|&t| sol.evolve(t)).collect();
    let rows: Vec<ConstraintResiduals> = states
        .iter()
        .map(|st| ConstraintResiduals {
            t: st.t,
            norm_sum_resid: st.psi_norm_sqr() + st.phi_norm_sqr() - v.n_norm,
            tau_resid: st.psi_norm_sqr() - st.phi_norm_sqr(),
            gamma_resid: (st.gamma() - gamma0 * Complex64::from_polar(1.0, -sol.modes.theta * st.t)).norm(),
        })
        .collect();
    let summary = StateSummary {
        background: Background::FixedPoint,
        dim,
        seed,
        theta: Some(sol.modes.theta),
        gamma_phase_slope: 0.0,
        sigma: Some(sol.modes.sigma),
        s_plus: Some(sol.modes.s_plus),
        s_minus: Some(sol.modes.s_minus),
        max_norm_sum_resid: max_abs(rows.iter().map(|r| r.norm_sum_resid)),
        max_tau_resid: max_abs(rows.iter().map(|r| r.tau_resid)),
        max_gamma_resid: max_abs(rows.iter().map(|r| r.gamma_resid)),
        wronskian_drift: None,
    };
    Ok((states, rows, summary))
}

fn state_pneg1(
    v: &ValidatedParams,
    basis: EnergyBasis,
    cfg: &StateConfig,
    seed: u64,
    ts: &[f64],
) -> anyhow::Result<StateRun> {
    let d = v.derive()?;
    if d.p != -1.0 {
        bail!(Error::Config(format!("the pneg1 background needs mu = -b/2 (p = -1), got p = {}", d.p)));
    }
    let orbit = PNegOneOrbit::new(v.n_norm, cfg.c)?;
    let model = GeneralModel::new(v, BackgroundPath::pneg1(orbit, &d))?;
    let t1 = ts.last().copied().unwrap_or(0.0).max(1e-9);
    let fs = integrate_f(&model, 0.0, t1, (ts.len() / 4).max(8))?;
    let (p1, p2) = impose_constraints(&fs, &model, &basis, 0.0, seed)?;
    let states = ts
        .iter()
        .map(|&t| reconstruct(&fs, &model, &basis, &p1, &p2, t))
        .collect::<crate::Result<Vec<_>>>()?;
    let rows = constraint_drift(&fs, &model, &basis, &p1, &p2, ts)?;
    let summary = StateSummary {
        background: Background::Pneg1,
        dim: basis.dim(),
        seed,
        theta: None,
        gamma_phase_slope: 0.0,
        sigma: None,
        s_plus: None,
        s_minus: None,
        max_norm_sum_resid: max_abs(rows.iter().map(|r| r.norm_sum_resid)),
        max_tau_resid: max_abs(rows.iter().map(|r| r.tau_resid)),
        max_gamma_resid: max_abs(rows.iter().map(|r| r.gamma_resid)),
        wronskian_drift: Some(fs.max_wronskian_drift),
    };
    Ok((states, rows, summary))
}

fn max_abs(it: impl Iterator<Item = f64>) -> f64 {
    it.map(f64::abs).fold(0.0, f64::max)
}

/// Least-squares slope of `-arg⟨φ|ψ⟩` against `t`, with the phase unwrapped.
fn phase_slope(states: &[StateVectorPair]) -> f64 {
    if states.len() < 2 {
        return 0.0;
    }
    let mut phase = Vec::with_capacity(states.len());
    let mut acc = states[0].gamma().arg();
    phase.push(acc);
    for w in states.windows(2) {
        acc += (w[1].gamma() * w[0].gamma().conj()).arg();
        phase.push(acc);
    }
    let n = states.len() as f64;
    let tm = states.iter().map(|s| s.t).sum::<f64>() / n;
    let pm = phase.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (s, p) in states.iter().zip(&phase) {
        num += (s.t - tm) * (p - pm);
        den += (s.t - tm) * (s.t - tm);
    }
    -num / den
}

#[derive(Debug, Serialize)]
struct TrajectorySummary {
    sigma: f64,
    /// `π/σ`.
    period: f64,
    fit: EllipseFit,
    position: PositionModel,
    /// Largest gap between `Tr ρX` from the states and the analytic orbit,
    /// when explicit operators were generated.
    pipeline_max_gap: Option<f64>,
    warnings: Vec<String>,
}

pub fn cmd_trajectory(params: &ModelParams, cfg: &TrajectoryConfig, seed: u64, out: &Path) -> anyhow::Result<()> {
    let v = params.validate()?;
    let sol = SimpleSolution::seeded(&v, EnergyBasis::new(cfg.energies.clone())?, seed)?;
    let mut ops: Option<[DMatrix<Complex64>; 3]> = None;
    let pm = match &cfg.position {
        Some(p) => PositionModel::new(p.xaa, p.xbb, p.xab.map(|z| Complex64::new(z[0], z[1]))),
        None => {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let x: [DMatrix<Complex64>; 3] = std::array::from_fn(|_| commuting_operator(&cfg.energies, &mut r));
            let pm = PositionModel::from_operators(&x, &sol.a, &sol.b)?;
            ops = Some(x);
            pm
        }
    };
    let period = PI / sol.modes.sigma;
    let span = cfg.periods * period;
    let ts: Vec<f64> = (0..cfg.samples).map(|i| span * i as f64 / (cfg.samples - 1) as f64).collect();
    let traj = trajectory_simple(&pm, &sol.modes, &v, &ts)?;
    let fit = ellipse_fit(&traj)?;
    let pipeline_max_gap = match &ops {
        Some(x) => {
            let mut worst: f64 = 0.0;
            for (t, p) in ts.iter().zip(&traj.x) {
                let dm = density(&sol.evolve(*t), v.n_norm);
                for k in 0..3 {
                    worst = worst.max((expectation(&dm, &x[k])? - p[k]).abs());
                }
            }
            Some(worst)
        }
        None => None,
    };
    let mut warnings = Vec::new();
    if fit.degenerate {
        warnings.push("degenerate orbit: V and W are collinear or zero".to_string());
    }
    let rows: Vec<TrajectoryRow> = ts
        .iter()
        .zip(&traj.x)
        .map(|(&t, x)| TrajectoryRow { t, x1: x[0], x2: x[1], x3: x[2] })
        .collect();
    write_csv(&out.join("trajectory.csv"), &rows)?;
    let proj: Vec<(f64, f64)> = traj
        .x
        .iter()
        .map(|x| {
            let d: Vec<f64> = (0..3).map(|k| x[k] - fit.center[k]).collect();
            (
                (0..3).map(|k| d[k] * fit.e1[k]).sum(),
                (0..3).map(|k| d[k] * fit.e2[k]).sum(),
            )
        })
        .collect();
    let svg = svg_plot(
        "orbit of <X> in its plane",
        "major axis",
        "minor axis",
        &[Series { label: "<X>(t)".into(), points: proj }],
        true,
    );
    write_text(&out.join("orbit.svg"), &svg)?;
    let summary = TrajectorySummary {
        sigma: sol.modes.sigma,
        period,
        fit,
        position: pm,
        pipeline_max_gap,
        warnings,
    };
    write_json(&out.join("ellipse.json"), &summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"params": {"a": 0, "b": 1, "mu": -0.5, "lambda": 0, "N": 5}, "bogus": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"taudelta": {"c": 4, "sample": 3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"taudelta": {"c": 4}}"#).is_ok());
    }

    #[test]
    fn malformed_grids_are_rejected() {
        assert!(RunConfig::from_json(r#"{"taudelta": {"s_min": 1, "s_max": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"trajectory": {"samples": 3}}"#).is_err());
    }

    #[test]
    fn closed_solver_needs_p_minus_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = ModelParams::new(0.0, 1.0, -0.3, 0.0, 5.0);
        let err = cmd_taudelta(&p, &TauDeltaConfig::default(), dir.path()).unwrap_err();
        assert!(err.to_string().contains("p = -1"));
        let cfg = TauDeltaConfig { solver: Solver::Integrated, ..Default::default() };
        cmd_taudelta(&p, &cfg, dir.path()).unwrap();
    }
}
