//! `treepark` command-line front end.
//!
//! Exit codes: 0 on success, 1 when an estimate falls outside its 4-sigma
//! band, a reproduction criterion fails, or a computation does not
//! converge, and 2 for invalid arguments, configuration or input files.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigFile, ExperimentSpec};
use crate::dist_solver::{iterate_law_detailed, tail_rate};
use crate::error::{Error, Result};
use crate::harness::{
    cluster_experiment, conditioned_instance, derive_seed, estimate_flux_lln, estimate_giant_constant, fringe_census,
    mean_flux_report, root_parked_report, simulate_unconditioned, spine_parked_frequencies, tail_experiment,
    unconditioned_instance, EstimateReport,
};
use crate::model::{Model, Regime};
use crate::parking::{clusters, park};
use crate::repro::{Repro, CRITERIA, REPRO_SEED};
use crate::series::{f_series, puiseux_branch, puiseux_c, w_series, BranchSign, QuadraticPart};
use crate::treegen::{format_instance, parse_instance, DEFAULT_SIZE_CAP};

const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "treepark", version, about = "Parking on critical Galton-Watson trees")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model and experiment file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; falls back to TREEPARK_SEED, then the config file.
    #[arg(long, global = true, env = "TREEPARK_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Tree size of conditioned experiments.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print a JSON summary instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moments, theta, regime, t_max and the mean flux.
    Classify,
    /// Park one tree read from a file (degrees line, then cars line).
    Park {
        input: PathBuf,
    },
    /// Unconditioned or conditioned Monte Carlo estimates.
    Simulate {
        #[arg(long, value_enum)]
        experiment: Option<Experiment>,
        /// Dilution parameter of the mean-flux experiment.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        size_cap: Option<usize>,
        /// Write the first N replicate instances to trees.txt.
        #[arg(long)]
        dump_trees: Option<usize>,
        /// Unconditioned trees behind the supercritical flux-LLN reference.
        #[arg(long, default_value_t = 1_000_000)]
        root_reps: u64,
    },
    /// Law of the number of cars visiting the root.
    Law {
        #[arg(long)]
        truncation: Option<usize>,
        #[arg(long, default_value_t = 20_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
    },
    /// Series expansions: quadratic part, branches, generating function.
    Series {
        #[arg(long)]
        order: Option<usize>,
        /// Number of generating-function coefficients.
        #[arg(long, default_value_t = 20)]
        w_order: usize,
    },
    /// Fringe-subtree frequencies in conditioned trees.
    Fringe {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        max_pattern_size: Option<usize>,
    },
    /// Largest parked clusters in conditioned trees.
    Clusters {
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        dump_trees: Option<usize>,
    },
    /// Giant-cluster constant from truncated spine trees.
    Giant {
        #[arg(long, value_delimiter = ',')]
        heights: Option<Vec<usize>>,
        #[arg(long)]
        margin: Option<usize>,
        /// Vertex cap of each grafted subtree.
        #[arg(long, default_value_t = 100_000)]
        graft_cap: usize,
        /// Run without the supercritical check.
        #[arg(long)]
        force: bool,
    },
    /// Empirical survival function of the root flux.
    Tails {
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<u64>>,
        #[arg(long)]
        size_cap: Option<usize>,
    },
    /// The pinned reproduction suite.
    Repro {
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    RootParked,
    MeanFlux,
    FluxLln,
}

/// Outcome of a command before it is mapped to an exit code.
struct Outcome {
    in_band: bool,
}

impl Outcome {
    fn ok() -> Self {
        Self { in_band: true }
    }

    fn band(in_band: bool) -> Self {
        Self { in_band }
    }
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::NonCriticalOffspring { .. }
            | Error::DegenerateModel(_)
            | Error::NegativeProbability { .. }
            | Error::NotNormalized { .. }
            | Error::InvalidT(_)
            | Error::UnreachableSize { .. }
            | Error::InvalidExcursion(_)
            | Error::LengthMismatch { .. }
            | Error::NotSubcritical { .. }
            | Error::NotSupercritical { .. }
    )
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.common.threads {
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Error::Config(e.to_string())),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(o) if o.in_band => 0,
        Ok(_) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if is_input_error(&e) {
                2
            } else {
                1
            }
        }
    }
}

/// Resolved settings: command-line flags over the `[experiment]` section.
struct Ctx<'a> {
    common: &'a Common,
    config: Option<ConfigFile>,
    started: Instant,
}

impl<'a> Ctx<'a> {
    fn new(common: &'a Common) -> Result<Self> {
        let config = common.config.as_deref().map(ConfigFile::from_path).transpose()?;
        Ok(Self {
            common,
            config,
            started: Instant::now(),
        })
    }

    fn spec(&self) -> ExperimentSpec {
        self.config.as_ref().map(|c| c.experiment.clone()).unwrap_or_default()
    }

    fn model(&self) -> Result<Model> {
        self.config
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs --config".into()))?
            .build_model()
    }

    fn seed(&self) -> u64 {
        self.common.seed.or(self.spec().seed).unwrap_or(DEFAULT_SEED)
    }

    fn reps(&self, default: usize) -> Result<u64> {
        let reps = self.common.reps.or(self.spec().reps).unwrap_or(default);
        if reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        Ok(reps as u64)
    }

    fn n(&self, default: usize) -> usize {
        self.common.n.or(self.spec().n).unwrap_or(default)
    }

    fn out_dir(&self) -> Result<Option<PathBuf>> {
        let dir = self.common.out.clone().or(self.spec().out.map(PathBuf::from));
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(dir)
    }

    /// Writes `summary.json` (when `--out` is set) and prints the summary
    /// in JSON mode.
    fn finish(&self, command: &str, mut summary: Value, text: &str) -> Result<()> {
        let obj = summary.as_object_mut().expect("summary is an object");
        obj.insert("command".into(), json!(command));
        obj.insert("config".into(), json!(self.config));
        obj.insert("wall_time_seconds".into(), json!(self.started.elapsed().as_secs_f64()));
        if let Some(dir) = self.out_dir()? {
            write_json(&dir.join("summary.json"), &summary)?;
        }
        if self.common.json {
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
        } else {
            print!("{text}");
        }
        Ok(())
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "{}", serde_json::to_string_pretty(value).expect("serializable"))?;
    Ok(())
}

fn write_csv<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn report_text(r: &EstimateReport) -> String {
    let mut s = format!("{}: {:.7} +- {:.7} over {} replicates", r.name, r.estimate, r.std_error, r.reps);
    if r.censored > 0 {
        s += &format!(" ({} censored)", r.censored);
    }
    if let (Some(reference), Some(z)) = (r.reference, r.z_score) {
        s += &format!("\n  reference {reference:.7}, z = {z:.2}");
    }
    if r.diverges {
        s += "\n  reference is infinite (t beyond t_max)";
    }
    s + "\n"
}

fn in_band(reports: &[&EstimateReport]) -> bool {
    reports.iter().all(|r| r.z_score.is_none_or(|z| z.abs() <= 4.0))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let ctx = Ctx::new(&cli.common)?;
    match &cli.command {
        Command::Classify => classify(&ctx),
        Command::Park { input } => park_file(&ctx, input),
        Command::Simulate {
            experiment,
            t,
            size_cap,
            dump_trees,
            root_reps,
        } => simulate(&ctx, *experiment, *t, *size_cap, *dump_trees, *root_reps),
        Command::Law {
            truncation,
            max_iters,
            tol,
        } => law(&ctx, *truncation, *max_iters, *tol),
        Command::Series { order, w_order } => series(&ctx, *order, *w_order),
        Command::Fringe { k, max_pattern_size } => fringe(&ctx, *k, *max_pattern_size),
        Command::Clusters { n_list, dump_trees } => cluster_cmd(&ctx, n_list.clone(), *dump_trees),
        Command::Giant {
            heights,
            margin,
            graft_cap,
            force,
        } => giant(&ctx, heights.clone(), *margin, *graft_cap, *force),
        Command::Tails { thresholds, size_cap } => tails(&ctx, thresholds.clone(), *size_cap),
        Command::Repro { only } => repro(&ctx, only.clone()),
    }
}

fn classify(ctx: &Ctx) -> Result<Outcome> {
    let m = ctx.model()?;
    let mo = m.moments();
    let class = m.classify();
    let t_max = m.t_max();
    let phi1 = m.mean_flux_curve(1.0)?;
    let text = format!(
        "E_nu_bar[m] = {:.10}\nE_nu[m]     = {:.10}\nQ           = {:.10}\nSigma^2     = {:.10}\ntheta       = {:.10}\nregime      = {:?}\nhypothesis  = {}\nt_max       = {t_max:.10}\nPhi(1)      = {phi1:.10}\n",
        mo.e_sb_m, mo.e_m, mo.e_q, mo.sigma2, mo.theta, class.regime, class.hypothesis_holds
    );
    ctx.finish(
        "classify",
        json!({"moments": mo, "regime": format!("{:?}", class.regime), "hypothesis_holds": class.hypothesis_holds,
               "t_max": t_max, "phi_1": if phi1.is_finite() { json!(phi1) } else { json!("inf") }}),
        &text,
    )?;
    Ok(Outcome::ok())
}

fn park_file(ctx: &Ctx, input: &Path) -> Result<Outcome> {
    let text = fs::read_to_string(input).map_err(|e| Error::Config(format!("cannot read {}: {e}", input.display())))?;
    let (tree, cars) = parse_instance(&text)?;
    let r = park(&tree, &cars)?;
    let stats = clusters(&tree, &r.parked)?;
    let parked: Vec<usize> = (0..tree.len()).filter(|&v| r.parked[v]).collect();
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let text = format!(
        "vertices      {}\ncars          {}\nroot_flux     {}\nparked        {}\nedge_flux     {}\ncluster_sizes {}\n",
        tree.len(),
        cars.total(),
        r.root_flux,
        join(&parked),
        r.edge_flux.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
        join(&stats.sizes)
    );
    if let Some(dir) = ctx.out_dir()? {
        write_csv(
            &dir.join("vertices.csv"),
            (0..tree.len()).map(|v| VertexRow {
                vertex: v,
                degree: tree.degree(v),
                cars: cars.counts[v],
                visits: r.visits[v],
                parked: r.parked[v],
                edge_flux: r.edge_flux[v],
            }),
        )?;
    }
    ctx.finish("park", json!({"result": r, "clusters": stats}), &text)?;
    Ok(Outcome::ok())
}

#[derive(Serialize)]
struct VertexRow {
    vertex: usize,
    degree: usize,
    cars: u64,
    visits: u64,
    parked: bool,
    edge_flux: u64,
}

#[derive(Serialize)]
struct UnconditionedRow {
    rep: u64,
    visits: u64,
    flux: u64,
    size: usize,
    censored: bool,
}

fn simulate(
    ctx: &Ctx,
    experiment: Option<Experiment>,
    t: Option<f64>,
    size_cap: Option<usize>,
    dump_trees: Option<usize>,
    root_reps: u64,
) -> Result<Outcome> {
    let model = ctx.model()?;
    let spec = ctx.spec();
    let experiment = match experiment {
        Some(e) => e,
        None => match spec.name.as_deref() {
            None | Some("root-parked") => Experiment::RootParked,
            Some("mean-flux") => Experiment::MeanFlux,
            Some("flux-lln") => Experiment::FluxLln,
            Some(other) => return Err(Error::Config(format!("unknown experiment `{other}`"))),
        },
    };
    let seed = ctx.seed();
    let cap = size_cap.or(spec.size_cap).unwrap_or(DEFAULT_SIZE_CAP);
    let out = ctx.out_dir()?;
    let (reports, text) = match experiment {
        Experiment::RootParked | Experiment::MeanFlux => {
            let reps = ctx.reps(100_000)?;
            let t = t.or(spec.t).unwrap_or(1.0);
            let sim_model = if experiment == Experiment::MeanFlux { model.dilute(t)? } else { model.clone() };
            let (summary, records) = simulate_unconditioned(&sim_model, reps, cap, seed, out.is_some());
            let mut reports = vec![root_parked_report(&sim_model, &summary)];
            if experiment == Experiment::MeanFlux {
                reports.push(mean_flux_report(&model, t, &summary)?);
            } else {
                reports.push(mean_flux_report(&model, 1.0, &summary)?);
            }
            if let (Some(dir), Some(records)) = (&out, records) {
                write_csv(
                    &dir.join("replicates.csv"),
                    records.iter().enumerate().map(|(rep, o)| UnconditionedRow {
                        rep: rep as u64,
                        visits: o.visits,
                        flux: o.flux(),
                        size: o.size,
                        censored: o.censored,
                    }),
                )?;
                if let Some(k) = dump_trees {
                    let mut text = String::new();
                    for rep in 0..(k as u64).min(reps) {
                        text += &format!("# replicate {rep}\n");
                        match unconditioned_instance(&sim_model, seed, rep, cap) {
                            Ok((tree, cars)) => text += &format_instance(&tree, &cars),
                            Err(Error::SizeCapExceeded { .. }) => text += "# censored at the size cap\n",
                            Err(e) => return Err(e),
                        }
                    }
                    fs::write(dir.join("trees.txt"), text)?;
                }
            }
            let text = reports.iter().map(report_text).collect::<String>();
            (reports, text)
        }
        Experiment::FluxLln => {
            let reps = ctx.reps(500)?;
            let n = ctx.n(2000);
            let p_hat = if model.classify().regime == Regime::Supercritical {
                Some(root_parked_report(
                    &model,
                    &simulate_unconditioned(&model, root_reps.max(1), cap, derive_seed(seed, 1), false).0,
                ))
            } else {
                None
            };
            let (r, records) = estimate_flux_lln(&model, n, reps, seed, p_hat.as_ref())?;
            if let Some(dir) = &out {
                write_csv(&dir.join("replicates.csv"), &records)?;
                if let Some(k) = dump_trees {
                    dump_conditioned(&dir.join("trees.txt"), &model, n, seed, k.min(reps as usize))?;
                }
            }
            let mut reports = vec![r];
            reports.extend(p_hat);
            let text = reports.iter().map(report_text).collect::<String>();
            (reports, text)
        }
    };
    let band = in_band(&reports.iter().collect::<Vec<_>>());
    ctx.finish(
        "simulate",
        json!({"experiment": experiment, "seed": seed, "size_cap": cap, "estimates": reports, "in_band": band}),
        &text,
    )?;
    Ok(Outcome::band(band))
}

fn dump_conditioned(path: &Path, model: &Model, n: usize, seed: u64, count: usize) -> Result<()> {
    let mut text = String::new();
    for rep in 0..count as u64 {
        let (tree, cars) = conditioned_instance(model, n, seed, rep)?;
        text += &format!("# n {n}, replicate {rep}\n");
        text += &format_instance(&tree, &cars);
    }
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct LawRow {
    k: usize,
    p: f64,
}

fn law(ctx: &Ctx, truncation: Option<usize>, max_iters: usize, tol: f64) -> Result<Outcome> {
    let model = ctx.model()?;
    let n = truncation.or(ctx.spec().truncation).unwrap_or(400);
    let it = iterate_law_detailed(&model, n, max_iters, tol)?;
    let rho = tail_rate(&it.law, 50.min(n / 4)).ok();
    let pmf = it.law.pmf();
    let mut text = format!(
        "iterations  {}\nlast TV     {:e}\np_0         {:.12}\nmean        {:.12}\nmass_defect {:e}\ntail_rate   {}\n",
        it.iterations,
        it.last_distance,
        it.law.p0(),
        it.law.mean(),
        it.law.mass_defect(),
        rho.map_or("n/a".into(), |r| format!("{r:.8}"))
    );
    for (k, p) in pmf.iter().enumerate().take(11) {
        text += &format!("p_{k:<2} {p:.12e}\n");
    }
    if let Some(dir) = ctx.out_dir()? {
        write_csv(&dir.join("law.csv"), pmf.iter().enumerate().map(|(k, &p)| LawRow { k, p }))?;
    }
    ctx.finish(
        "law",
        json!({"truncation": n, "iterations": it.iterations, "last_distance": it.last_distance,
               "p0": it.law.p0(), "mean": it.law.mean(), "mass_defect": it.law.mass_defect(),
               "tail_rate": rho, "pmf": pmf}),
        &text,
    )?;
    Ok(Outcome::ok())
}

fn series(ctx: &Ctx, order: Option<usize>, w_order: usize) -> Result<Outcome> {
    let model = ctx.model()?;
    let d = order.or(ctx.spec().order).unwrap_or(8);
    let f = f_series(&model, 2.max(d.min(crate::series::MAX_BIVARIATE_ORDER)))?;
    let closed = QuadraticPart::of(&model);
    let mut text = format!(
        "theta {:.10}\na02 {:.10} (closed form {:.10})\na11 {:.10} (closed form {:.10})\na20 {:.10} (closed form {:.10})\n",
        model.theta(),
        f.coeff(0, 2),
        closed.a02,
        f.coeff(1, 1),
        closed.a11,
        f.coeff(2, 0),
        closed.a20
    );
    let mut branches = Vec::new();
    match puiseux_c(&model) {
        Ok((cm, cp)) => {
            text += &format!("c_- {cm:.10}\nc_+ {cp:.10}\n");
            for sign in [BranchSign::Minus, BranchSign::Plus] {
                let b = puiseux_branch(&model, sign, d)?;
                text += &format!("{sign:?} branch: {:?}\n", b.c);
                branches.push(b);
            }
        }
        Err(Error::NotSubcritical { .. }) => text += "branches: model is not subcritical\n",
        Err(e) => return Err(e),
    }
    let w = w_series(&model, w_order)?;
    text += &format!("W coefficients: {:?}\n", w.coeffs());
    if let Some(dir) = ctx.out_dir()? {
        write_csv(
            &dir.join("w_series.csv"),
            w.coeffs().iter().enumerate().map(|(k, &p)| LawRow { k, p }),
        )?;
    }
    ctx.finish(
        "series",
        json!({"theta": model.theta(), "f_coefficients": f.matrix(), "quadratic_closed_form": closed,
               "branches": branches, "w": w.coeffs()}),
        &text,
    )?;
    Ok(Outcome::ok())
}

#[derive(Serialize)]
struct FringeCsvRow {
    pattern: String,
    size: usize,
    depth_k_vertices: usize,
    empirical: f64,
    std_error: f64,
    exact: f64,
    z: f64,
}

fn fringe(ctx: &Ctx, k: Option<usize>, max_pattern_size: Option<usize>) -> Result<Outcome> {
    let model = ctx.model()?;
    let spec = ctx.spec();
    let k = k.or(spec.k).unwrap_or(0);
    let max = max_pattern_size.or(spec.max_pattern_size).unwrap_or(6);
    let census = fringe_census(&model, ctx.n(10_000), k, max, ctx.reps(200)?, ctx.seed())?;
    let band = census.rows.iter().all(|r| r.z_score().abs() <= 4.0);
    let mut text = format!("{:<20} {:>10} {:>10} {:>10} {:>7}\n", "pattern", "empirical", "se", "exact", "z");
    for r in &census.rows {
        text += &format!(
            "{:<20} {:>10.6} {:>10.6} {:>10.6} {:>7.2}\n",
            format!("{:?}", r.pattern),
            r.empirical,
            r.std_error,
            r.exact,
            r.z_score()
        );
    }
    text += &format!("residual {:.6} (exact {:.6})\n", census.residual_empirical, census.residual_exact);
    if let Some(dir) = ctx.out_dir()? {
        write_csv(
            &dir.join("fringe.csv"),
            census.rows.iter().map(|r| FringeCsvRow {
                pattern: r.pattern.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" "),
                size: r.pattern.len(),
                depth_k_vertices: r.depth_k_vertices,
                empirical: r.empirical,
                std_error: r.std_error,
                exact: r.exact,
                z: r.z_score(),
            }),
        )?;
    }
    ctx.finish("fringe", json!({"seed": ctx.seed(), "census": census, "in_band": band}), &text)?;
    Ok(Outcome::band(band))
}

fn cluster_cmd(ctx: &Ctx, n_list: Option<Vec<usize>>, dump_trees: Option<usize>) -> Result<Outcome> {
    let model = ctx.model()?;
    let n_list = n_list
        .or(ctx.spec().n_list)
        .unwrap_or_else(|| vec![1_000, 10_000, 100_000]);
    let reps = ctx.reps(200)?;
    let seed = ctx.seed();
    let (rows, records) = cluster_experiment(&model, &n_list, reps, seed)?;
    let mut text = String::new();
    for r in &rows {
        text += &format!(
            "n {:>7}: C_max/n {:.5} +- {:.5} [q10 {:.4}, q50 {:.4}, q90 {:.4}], C_2 mean {:.1} max {}, median C_max/ln n {:.3}\n",
            r.n,
            r.mean_cmax_over_n,
            r.se_cmax_over_n,
            r.q10_cmax_over_n,
            r.q50_cmax_over_n,
            r.q90_cmax_over_n,
            r.mean_c2,
            r.max_c2,
            r.median_cmax_over_ln_n
        );
    }
    if let Some(dir) = ctx.out_dir()? {
        write_csv(&dir.join("replicates.csv"), &records)?;
        write_csv(&dir.join("clusters.csv"), &rows)?;
        if let Some(k) = dump_trees {
            let n = *n_list.first().ok_or_else(|| Error::Config("empty n list".into()))?;
            dump_conditioned(
                &dir.join("trees.txt"),
                &model,
                n,
                derive_seed(seed, n as u64),
                k.min(reps as usize),
            )?;
        }
    }
    ctx.finish("clusters", json!({"seed": seed, "rows": rows}), &text)?;
    Ok(Outcome::ok())
}

fn giant(ctx: &Ctx, heights: Option<Vec<usize>>, margin: Option<usize>, graft_cap: usize, force: bool) -> Result<Outcome> {
    let model = ctx.model()?;
    let spec = ctx.spec();
    let heights = heights.or(spec.heights).unwrap_or_else(|| vec![20, 40, 80]);
    let margin = margin
        .or(spec.margin)
        .unwrap_or_else(|| (heights.iter().copied().min().unwrap_or(4) / 4).max(1));
    let reps = ctx.reps(10_000)?;
    let seed = ctx.seed();
    let report = if force {
        spine_parked_frequencies(&model, &heights, margin, reps, seed, graft_cap)?
    } else {
        estimate_giant_constant(&model, &heights, margin, reps, seed, graft_cap)?
    };
    let mut text = String::new();
    for (h, r) in &report.by_height {
        text += &format!("K {h:>4}: {:.5} +- {:.5}\n", r.estimate, r.std_error);
    }
    text += &format!(
        "margin {margin}, stabilized {}, saturated grafts {}\n",
        report.stabilized, report.saturated_grafts
    );
    if let Some(dir) = ctx.out_dir()? {
        #[derive(Serialize)]
        struct Row {
            k: usize,
            estimate: f64,
            std_error: f64,
            reps: u64,
        }
        write_csv(
            &dir.join("giant.csv"),
            report.by_height.iter().map(|(k, r)| Row {
                k: *k,
                estimate: r.estimate,
                std_error: r.std_error,
                reps: r.reps,
            }),
        )?;
    }
    if !report.stabilized {
        eprintln!("warning: estimates have not stabilized across heights");
    }
    ctx.finish("giant", json!({"seed": seed, "report": report}), &text)?;
    Ok(Outcome::ok())
}

fn tails(ctx: &Ctx, thresholds: Option<Vec<u64>>, size_cap: Option<usize>) -> Result<Outcome> {
    let model = ctx.model()?;
    let spec = ctx.spec();
    let thresholds = thresholds.or(spec.thresholds).unwrap_or_else(|| (0..=64).collect());
    let cap = size_cap.or(spec.size_cap).unwrap_or(100_000);
    let (report, _) = tail_experiment(&model, ctx.reps(1_000_000)?, &thresholds, cap, ctx.seed());
    if report.warning {
        eprintln!("warning: supercritical model; the flux concentrates instead of having a geometric tail");
    }
    let mut text = String::new();
    for r in report.rows.iter().filter(|r| r.hits > 0) {
        text += &format!("k {:>3}: {:>10} hits, survival {:.6e}\n", r.k, r.hits, r.survival);
    }
    text += &format!(
        "slope {:.5} (R^2 {:.5}), prefactor-corrected slope {:.5}, {} censored\n",
        report.slope, report.r_squared, report.corrected_slope, report.censored
    );
    if let Some(dir) = ctx.out_dir()? {
        write_csv(&dir.join("tails.csv"), &report.rows)?;
    }
    ctx.finish("tails", json!({"seed": ctx.seed(), "report": report}), &text)?;
    Ok(Outcome::ok())
}

fn repro(ctx: &Ctx, only: Option<Vec<u8>>) -> Result<Outcome> {
    let ids = only.unwrap_or_else(|| CRITERIA.iter().map(|(id, _)| *id).collect());
    let seed = ctx.common.seed.unwrap_or(REPRO_SEED);
    let quiet = ctx.common.json;
    let outcomes = Repro::new(seed).run(&ids, |o| {
        if !quiet {
            println!("{}", o.summary_line());
            for d in &o.details {
                println!("      {d}");
            }
        }
    })?;
    let all = outcomes.iter().all(|o| o.passed);
    let text = format!(
        "{}/{} criteria passed\n",
        outcomes.iter().filter(|o| o.passed).count(),
        outcomes.len()
    );
    ctx.finish("repro", json!({"seed": seed, "criteria": outcomes, "all_passed": all}), &text)?;
    Ok(Outcome::band(all))
}
