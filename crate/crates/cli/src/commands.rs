use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use modal_steer::verifier::format_float;
use modal_steer::{
    block_expm, convergence_sweep, gap_series_partial_sums, synthesize, trajectory, ControlLaw,
    ConvergenceReport, GapSum, LawFile, StateVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::svg::log_chart;
use crate::CliError;

pub const DEFAULT_SEED: u64 = 0x5eed;

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub out: Option<PathBuf>,
    pub allow_overdamped: bool,
    pub seed: u64,
}

impl Default for Context {
    fn default() -> Self {
        Self {
            out: None,
            allow_overdamped: false,
            seed: DEFAULT_SEED,
        }
    }
}

impl Context {
    fn output(&self, configured: &Option<PathBuf>) -> Option<PathBuf> {
        self.out.clone().or_else(|| configured.clone())
    }
}

fn write_or_return(path: Option<&Path>, text: String) -> Result<Option<String>, CliError> {
    match path {
        Some(p) => {
            fs::write(p, text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCheck {
    pub rows: Vec<GapSum>,
    /// Set when the increments at the last checkpoint decay no faster
    /// than `1/K`, i.e. `K * dS_K` has not decreased since `K / 2`.
    pub diverging: bool,
    pub table: String,
}

impl GapCheck {
    pub fn warning(&self) -> Option<String> {
        let last = self.rows.last()?;
        self.diverging.then(|| {
            format!(
                "warning: frequency-gap partial sums are not settling (K = {}, increment {:e}); the series appears divergent",
                last.terms, last.increment
            )
        })
    }
}

/// Partial sums of the frequency-gap series at `checkpoints` (falls back to
/// the config's `gap_checkpoints`, then to the full mode count).
pub fn gap_check(cfg: &ExperimentConfig, checkpoints: &[usize], ctx: &Context) -> Result<GapCheck, CliError> {
    let mut ks: Vec<usize> = if !checkpoints.is_empty() {
        checkpoints.to_vec()
    } else if !cfg.gap_checkpoints.is_empty() {
        cfg.gap_checkpoints.clone()
    } else {
        vec![cfg.mode_count()?]
    };
    ks.sort_unstable();
    ks.dedup();
    let system = cfg.build_system(ctx.allow_overdamped)?;
    let omegas = system.omegas();
    let rows = gap_series_partial_sums(&omegas, &ks)?;

    let last = *rows.last().expect("nonempty checkpoints");
    let diverging = if last.terms >= 4 {
        let half = gap_series_partial_sums(&omegas, &[last.terms / 2])?[0];
        last.terms as f64 * last.increment >= half.terms as f64 * half.increment
    } else {
        false
    };

    let mut table = String::from("K,S_K,increment\n");
    for r in &rows {
        let _ = writeln!(table, "{},{},{}", r.terms, format_float(r.value), format_float(r.increment));
    }
    Ok(GapCheck { rows, diverging, table })
}

/// Human-readable summary of a law.
pub fn law_summary(law: &ControlLaw) -> String {
    format!(
        "N = {}, d_N = {}, tau = {}\nJ = {}\n||u||_L2 = {}\ncondition estimate = {:e}\nsolver residual = {:e}{}\n",
        law.order(),
        law.reduced.dim(),
        law.tau,
        format_float(law.control_cost()),
        format_float(law.l2_norm()),
        law.gramian.condition_estimate,
        law.residual,
        if law.approximate { "\n(approximate interpolation: ridge regularized)" } else { "" }
    )
}

pub struct Synthesized {
    pub law: ControlLaw,
    pub summary: String,
    /// Law JSON when no output path was given.
    pub stdout: Option<String>,
}

pub fn synthesize_cmd(cfg: &ExperimentConfig, ctx: &Context) -> Result<Synthesized, CliError> {
    let system = cfg.build_system(ctx.allow_overdamped)?;
    let law = synthesize(
        &system,
        cfg.order()?,
        cfg.tau,
        &cfg.weight()?,
        &cfg.x0(),
        &cfg.x1(),
        &cfg.synthesis_options(),
    )?;
    let json = law.to_file().to_json()?;
    let stdout = write_or_return(ctx.output(&cfg.outputs.law).as_deref(), json + "\n")?;
    Ok(Synthesized {
        summary: law_summary(&law),
        law,
        stdout,
    })
}

pub fn load_law(cfg: &ExperimentConfig, path: &Path, allow_overdamped: bool) -> Result<ControlLaw, CliError> {
    let system = cfg.build_system(allow_overdamped)?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    let file = LawFile::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(ControlLaw::from_file(&file, &system)?)
}

pub struct Simulated {
    pub samples: Vec<(f64, StateVector)>,
    pub csv: String,
    pub stdout: Option<String>,
}

/// Samples the mild solution over blocks `0..=m` under the stored law.
pub fn simulate_cmd(cfg: &ExperimentConfig, law_path: &Path, ctx: &Context) -> Result<Simulated, CliError> {
    let system = cfg.build_system(ctx.allow_overdamped)?;
    let law = load_law(cfg, law_path, ctx.allow_overdamped)?;
    if (law.tau - cfg.tau).abs() > 0.0 {
        return Err(CliError::Config(format!(
            "law horizon {} differs from config tau {}",
            law.tau, cfg.tau
        )));
    }
    let prop = cfg.propagation(&system, law.reduced.rate());
    let samples = trajectory(&system, &cfg.x0(), &law.as_fn(), law.tau, &prop, cfg.samples)?;

    let d = 2 * (cfg.m + 1);
    let mut csv = String::from("t");
    for k in 0..=cfg.m {
        let _ = write!(csv, ",xi_{k},eta_{k}");
    }
    csv.push('\n');
    for (t, x) in &samples {
        csv.push_str(&format_float(*t));
        for v in x.to_dense(d) {
            csv.push(',');
            csv.push_str(&format_float(v));
        }
        csv.push('\n');
    }
    let stdout = write_or_return(ctx.output(&cfg.outputs.trajectory).as_deref(), csv.clone())?;
    Ok(Simulated { samples, csv, stdout })
}

pub struct Converged {
    pub report: ConvergenceReport,
    pub csv: String,
    pub stdout: Option<String>,
}

/// Convergence sweep over the configured design orders.
pub fn converge_cmd(
    cfg: &ExperimentConfig,
    plot_data: Option<&Path>,
    svg: Option<&Path>,
    ctx: &Context,
) -> Result<Converged, CliError> {
    let system = cfg.build_system(ctx.allow_overdamped)?;
    let orders = cfg.orders()?;
    let fastest = *orders.last().expect("nonempty range");
    let prop = cfg.propagation(&system, system.block_kind(fastest).rate());
    let report = convergence_sweep(
        &system,
        &orders,
        cfg.tau,
        &cfg.weight()?,
        &cfg.x0(),
        &cfg.x1(),
        &prop,
        cfg.epsilon,
        &cfg.synthesis_options(),
    )?;
    let csv = report.to_csv_string()?;

    let plot_path = plot_data.map(Path::to_path_buf).or_else(|| cfg.outputs.plot_data.clone());
    if let Some(p) = plot_path {
        let mut s = String::from("N,projected_residual,full_residual,tail_bound,product\n");
        for r in &report.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.order,
                format_float(r.projected_residual),
                format_float(r.full_residual),
                format_float(r.tail_bound),
                format_float(r.product)
            );
        }
        fs::write(p, s)?;
    }
    let svg_path = svg.map(Path::to_path_buf).or_else(|| cfg.outputs.svg.clone());
    if let Some(p) = svg_path {
        let x: Vec<f64> = report.rows.iter().map(|r| r.order as f64).collect();
        let col = |f: fn(&modal_steer::SteeringReport) -> f64| report.rows.iter().map(f).collect::<Vec<_>>();
        let chart = log_chart(
            &format!("residual vs N (kappa = {}, tau = {}, M = {})", report.kappa, report.tau, report.truncation),
            &x,
            &[
                ("full residual", col(|r| r.full_residual)),
                ("||Q_N B|| ||u||", col(|r| r.product)),
                ("tail bound", col(|r| r.tail_bound)),
            ],
        );
        fs::write(p, chart)?;
    }
    let stdout = write_or_return(ctx.output(&cfg.outputs.report).as_deref(), csv.clone())?;
    Ok(Converged { report, csv, stdout })
}

/// System summary plus a seeded spot check of the block exponentials.
pub fn info_cmd(cfg: &ExperimentConfig, ctx: &Context) -> Result<String, CliError> {
    let system = cfg.build_system(ctx.allow_overdamped)?;
    let omegas = system.omegas();
    let min_omega = omegas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut s = String::new();
    let _ = writeln!(s, "modes stored: {}", system.mode_count());
    let _ = writeln!(s, "kappa: {}", system.kappa());
    let _ = writeln!(s, "omega range: [{}, {}]", min_omega, omegas.iter().copied().fold(0.0, f64::max));
    let _ = writeln!(s, "underdamped: {}", system.kappa() < min_omega);
    let _ = writeln!(s, "fingerprint: {}", system.fingerprint());
    let _ = writeln!(s, "||Q_m B||: {}", format_float(system.tail_input_norm(cfg.m)?));

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let (mut semigroup, mut liouville) = (0.0f64, 0.0f64);
    for _ in 0..64 {
        let k = rng.gen_range(0..=cfg.m);
        let kind = system.block_kind(k);
        let t = rng.gen_range(0.0..cfg.tau);
        let u = rng.gen_range(0.0..cfg.tau);
        let lhs = block_expm(kind, t + u)?;
        let rhs = block_expm(kind, t)? * block_expm(kind, u)?;
        semigroup = semigroup.max(lhs.max_abs_diff(&rhs));
        let trace = if k == 0 { 0.0 } else { -2.0 * system.kappa() };
        liouville = liouville.max((lhs.det() - (trace * (t + u)).exp()).abs());
    }
    let _ = writeln!(s, "seed {}: semigroup defect {:e}, determinant defect {:e}", ctx.seed, semigroup, liouville);
    Ok(s)
}
