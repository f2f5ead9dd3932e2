//! Command-line driver for the scatterer-embedding experiments.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use embedscat::config::{validate_config, ExperimentConfig, Severity};
use embedscat::experiment::{
    emit_plot_script, output_grid, report_1d_csv, run_convergence_1d, run_convergence_3d, solve_effective,
    REPORT_FILE, REPORT_HEADER, TIMINGS_FILE,
};
use embedscat::fields::Point;
use embedscat::foldy_lax::{assemble_and_solve, FoldyLaxSystem};
use embedscat::io::{read_cloud, write_cloud, write_far_field_csv, write_grid_csv, write_line_csv, write_values_csv};
use embedscat::oned::{place1d, probe_points_1d, solve_fl_1d, solve_ls_1d, Ls1DOptions, OnAxis};
use embedscat::placement::{place, CountingLaw, Dim, ScattererCloud};
use embedscat::quad::SphereQuadrature;
use embedscat::{Error, Result};

#[derive(Parser)]
#[command(name = "embedscat", version, about = "Many small scatterers versus the effective potential they build")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Many-body solver mode: dense or iterative.
    #[arg(long)]
    mode: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Place scatterers and write the cloud file.
    Place {
        #[command(flatten)]
        common: Common,
        /// Radius to place; defaults to the first configured radius.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Solve the many-body system; writes u_m, a grid field and the far field.
    SolveFl {
        #[command(flatten)]
        common: Common,
        /// Cloud file from `place`; placed from the config when absent.
        #[arg(long)]
        cloud: Option<PathBuf>,
        #[arg(long)]
        radius: Option<f64>,
        /// Nodes per axis of the output grid (0 skips it).
        #[arg(long, default_value_t = 21)]
        grid: usize,
    },
    /// Solve the effective equation; writes the grid field and the far field.
    SolveLs {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the 1D segment system and the 1D effective equation.
    #[command(name = "solve-1d")]
    Solve1d {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Run the 3D convergence study.
    Converge {
        #[command(flatten)]
        common: Common,
    },
    /// Run the 1D convergence study.
    #[command(name = "converge-1d")]
    Converge1d {
        #[command(flatten)]
        common: Common,
    },
    /// Far-field amplitude on the configured sphere quadrature.
    Farfield {
        #[command(flatten)]
        common: Common,
        /// `fl` for the many-body field, `ls` for the effective one.
        #[arg(long, default_value = "ls")]
        solver: String,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Check a config and list every problem found.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Place { common, .. }
            | Command::SolveFl { common, .. }
            | Command::SolveLs { common }
            | Command::Solve1d { common, .. }
            | Command::Converge { common }
            | Command::Converge1d { common }
            | Command::Farfield { common, .. }
            | Command::Validate { common } => common,
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Io(_) => 4,
        Error::Config(_)
        | Error::Parse { .. }
        | Error::InvalidParameter(_)
        | Error::InfeasibleFactorization(_)
        | Error::Regime { .. }
        | Error::Resolution { .. } => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.command.common().threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set thread count: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&common.config).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", common.config.display())),
        e => e,
    })?;
    if let Some(mode) = &common.mode {
        cfg.solver.mode = mode.clone();
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    Ok((cfg, out))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn radius(cfg: &ExperimentConfig, given: Option<f64>) -> Result<f64> {
    given
        .or_else(|| cfg.scatterers.radii.first().copied())
        .ok_or_else(|| Error::Config("no radius given and scatterers.radii is empty".into()))
}

fn place_3d(cfg: &ExperimentConfig, a: f64) -> Result<ScattererCloud> {
    let spec = cfg.potential_spec()?;
    let law = CountingLaw::new(spec.n.clone(), a, Dim::Three)?;
    place(&cfg.domain()?, &law, &*spec.strength, &cfg.placement_params())
}

fn solve_3d(cfg: &ExperimentConfig, cloud: &ScattererCloud) -> Result<FoldyLaxSystem> {
    assemble_and_solve(cloud, &cfg.wave_context()?, &cfg.solver_options()?)
}

fn sphere_directions(cfg: &ExperimentConfig) -> Vec<Point> {
    SphereQuadrature::product(cfg.far_field.n_theta, cfg.far_field.n_phi).directions
}

fn run(command: &Command) -> Result<()> {
    let (cfg, out) = load(command.common())?;
    if !matches!(command, Command::Validate { .. }) {
        let errors: Vec<_> = validate_config(&cfg)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        if !errors.is_empty() {
            for d in &errors {
                eprintln!("{d}");
            }
            return Err(Error::Config(format!("{} problem(s) in {}", errors.len(), command.common().config.display())));
        }
    }
    match command {
        Command::Validate { .. } => {
            let diags = validate_config(&cfg);
            for d in &diags {
                println!("{d}");
            }
            if diags.iter().any(|d| d.severity == Severity::Error) {
                return Err(Error::Config("config is invalid".into()));
            }
            if diags.is_empty() {
                println!("ok");
            }
        }
        Command::Place { radius: r, .. } => {
            let a = radius(&cfg, *r)?;
            let cloud = if cfg.dimension == 1 {
                let spec = cfg.potential_spec()?;
                place1d(&cfg.interval()?, spec.n.clone(), a, &*spec.strength, &cfg.placement_params())?
            } else {
                place_3d(&cfg, a)?
            };
            std::fs::create_dir_all(&out)?;
            let path = out.join(format!("cloud_a{a}.txt"));
            write_cloud(&path, &cloud)?;
            println!("placed {} scatterers of radius {a} -> {}", cloud.len(), path.display());
        }
        Command::SolveFl {
            cloud: file,
            radius: r,
            grid,
            ..
        } => {
            let cloud = match file {
                Some(p) => read_cloud(p)?,
                None => place_3d(&cfg, radius(&cfg, *r)?)?,
            };
            let sys = solve_3d(&cfg, &cloud)?;
            let d = &sys.diagnostics;
            println!(
                "M = {}, ka = {:.3e}, iterations = {}, residual = {:.2e}",
                cloud.len(),
                d.ka,
                d.iterations,
                d.residual
            );
            let mut w = create(&out, "fl_values.csv")?;
            write_values_csv(&mut w, &cloud.centers, &sys.values)?;
            w.flush()?;
            if *grid > 0 {
                let field = sys.evaluate_field(&output_grid(&cfg.domain()?, *grid));
                let mut w = create(&out, "fl_grid.csv")?;
                write_grid_csv(&mut w, &field)?;
                w.flush()?;
            }
            let ff = sys.far_field(&sphere_directions(&cfg))?;
            let mut w = create(&out, "fl_farfield.csv")?;
            write_far_field_csv(&mut w, &ff)?;
            w.flush()?;
        }
        Command::SolveLs { .. } => {
            let sol = solve_effective(&cfg)?;
            println!(
                "nodes = {}, iterations = {}, residual = {:.2e}",
                sol.disc.len(),
                sol.diagnostics.iterations,
                sol.diagnostics.residual
            );
            let mut w = create(&out, "ls_grid.csv")?;
            write_grid_csv(&mut w, &sol.field)?;
            w.flush()?;
            let ff = sol.far_field(&sphere_directions(&cfg))?;
            let mut w = create(&out, "ls_farfield.csv")?;
            write_far_field_csv(&mut w, &ff)?;
            w.flush()?;
        }
        Command::Solve1d { radius: r, .. } => {
            if cfg.dimension != 1 {
                return Err(Error::Config("solve-1d needs dimension = 1".into()));
            }
            let spec = cfg.potential_spec()?;
            let interval = cfg.interval()?;
            let ctx = cfg.wave_context()?;
            let a = radius(&cfg, *r)?;
            let cloud = place1d(&interval, spec.n.clone(), a, &*spec.strength, &cfg.placement_params())?;
            let fl = solve_fl_1d(&cloud, &ctx)?;
            let ls = solve_ls_1d(&OnAxis(spec.q.clone()), &interval, &ctx, cfg.effective.h, &Ls1DOptions::default())?;
            let xs = probe_points_1d(&interval, cfg.probe.points_1d, &cloud);
            let u_m: Vec<_> = xs.iter().map(|&x| fl.evaluate(x)).collect();
            let u_e: Vec<_> = xs.iter().map(|&x| ls.evaluate(x)).collect();
            println!("M = {}, effective nodes = {}", cloud.len(), ls.nodes.len());
            let mut w = create(&out, "fl_1d.csv")?;
            write_line_csv(&mut w, &xs, &u_m)?;
            w.flush()?;
            let mut w = create(&out, "ls_1d.csv")?;
            write_line_csv(&mut w, &xs, &u_e)?;
            w.flush()?;
        }
        Command::Converge { .. } => {
            let mut w = create(&out, REPORT_FILE)?;
            writeln!(w, "{REPORT_HEADER}")?;
            w.flush()?;
            let report = run_convergence_3d(&cfg, &mut |row, _| {
                writeln!(w, "{}", row.csv_line())?;
                w.flush()?;
                Ok(())
            })?;
            drop(w);
            let mut t = create(&out, TIMINGS_FILE)?;
            t.write_all(report.timings_csv().as_bytes())?;
            t.flush()?;
            emit_plot_script(&report, &out)?;
            print!("{}", report.to_csv());
        }
        Command::Converge1d { .. } => {
            let rows = run_convergence_1d(&cfg)?;
            let text = report_1d_csv(&rows);
            embedscat::io::write_file(&out, "report_1d.csv", &text)?;
            print!("{text}");
        }
        Command::Farfield { solver, radius: r, .. } => {
            let dirs = sphere_directions(&cfg);
            let ff = match solver.as_str() {
                "ls" => solve_effective(&cfg)?.far_field(&dirs)?,
                "fl" => {
                    let cloud = place_3d(&cfg, radius(&cfg, *r)?)?;
                    solve_3d(&cfg, &cloud)?.far_field(&dirs)?
                }
                other => return Err(Error::Config(format!("unknown solver '{other}', use fl or ls"))),
            };
            let mut w = create(&out, &format!("{solver}_farfield.csv"))?;
            write_far_field_csv(&mut w, &ff)?;
            w.flush()?;
            println!("{} directions, max |A| = {:.6e}", ff.values.len(), ff.max_abs());
        }
    }
    Ok(())
}
