//! Experiment driver: runs a benchmark and writes CSV, SVG and dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::adapt::{
    fit_rate, run_adaptive_observed, AdaptConfig, AdaptVariant, Against, ConvergenceRecord, LevelState, Quantity,
};
use crate::assembly::norm_equivalence_constant;
use crate::bench::{benchmark, builtin_benchmarks};
use crate::elements::FamilyDegree;
use crate::error::{Error, Result};
use crate::linsolve::{infsup_probe, SolverConfig, PROBE_CAP};

#[derive(Parser, Debug)]
#[command(name = "natnorm", about = "Adaptive mixed finite elements in natural norms", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one adaptive (or uniform) experiment on a built-in benchmark.
    Run(RunArgs),
    /// List the built-in benchmarks.
    List,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Amfem,
    #[value(name = "amfem_m", alias = "amfem-m")]
    AmfemM,
    #[value(name = "amfem_approx", alias = "amfem-approx")]
    AmfemApprox,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Rt,
    Bdm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Direct,
    Minres,
}

#[derive(clap::Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub benchmark: String,
    #[arg(long, value_enum, default_value = "amfem")]
    pub variant: VariantArg,
    /// Bulk parameter in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Degree r of the discontinuous space (RT_r or BDM_{r+1} fluxes).
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub degree: u8,
    #[arg(long, value_enum, default_value = "rt")]
    pub family: FamilyArg,
    #[arg(long)]
    pub max_dofs: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value = "direct")]
    pub solver: SolverArg,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Write indicators_L.csv for every level.
    #[arg(long)]
    pub dump_indicators: bool,
    /// Write mesh_L.txt for every level.
    #[arg(long)]
    pub dump_meshes: bool,
    /// Probe inf-sup and norm-equivalence constants on small levels.
    #[arg(long)]
    pub infsup: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl RunArgs {
    pub fn element(&self) -> FamilyDegree {
        match self.family {
            FamilyArg::Rt => FamilyDegree::rt(self.degree as usize),
            FamilyArg::Bdm => FamilyDegree::bdm(self.degree as usize + 1),
        }
    }

    pub fn adapt_config(&self) -> Result<AdaptConfig> {
        let variant = match self.variant {
            VariantArg::Amfem => AdaptVariant::Amfem,
            VariantArg::AmfemM => AdaptVariant::AmfemM,
            VariantArg::AmfemApprox => AdaptVariant::AmfemApprox,
            VariantArg::Uniform => AdaptVariant::Uniform,
        };
        let mut cfg = AdaptConfig::new(variant, self.element()).with_theta(self.theta);
        cfg.max_dofs = self.max_dofs;
        cfg.tol = self.tol;
        cfg.solver = match self.solver {
            SolverArg::Direct => SolverConfig::direct(),
            SolverArg::Minres => SolverConfig::minres(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Caps the rayon pool at `NATNORM_THREADS` when set.
pub fn init_threads() {
    if let Some(n) = std::env::var("NATNORM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::debug!("thread pool already initialised: {e}");
        }
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    let res = match cli.command {
        Command::List => {
            for b in builtin_benchmarks() {
                println!("{:16} {}", b.name, b.description);
            }
            Ok(())
        }
        Command::Run(args) => run(&args).map(|_| ()),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs one experiment and writes its outputs below `args.out`.
pub fn run(args: &RunArgs) -> Result<ConvergenceRecord> {
    let b = benchmark(&args.benchmark)?;
    let cfg = args.adapt_config()?;
    fs::create_dir_all(&args.out)?;
    let out = args.out.clone();
    let mut probes = String::from("level,dofs,infsup,norm_equivalence\n");
    let mut observer = |s: &LevelState| -> Result<()> {
        if args.dump_meshes {
            fs::write(out.join(format!("mesh_{}.txt", s.level)), s.mesh.to_text())?;
        }
        if args.dump_indicators {
            write_indicators(&out.join(format!("indicators_{}.csv", s.level)), s)?;
        }
        if args.infsup && s.system.dim() <= PROBE_CAP {
            let beta = infsup_probe(s.system)?;
            let c = norm_equivalence_constant(s.mesh, s.system, 32, args.seed)?;
            let _ = writeln!(probes, "{},{},{beta:.10e},{c:.10e}", s.level, s.system.dim());
        }
        Ok(())
    };
    let record = match run_adaptive_observed(&b.spec, &b.mesh, &cfg, &mut observer) {
        Ok(r) => r,
        Err(Error::Level { level, source, partial }) => {
            // keep what was computed
            fs::write(args.out.join("record.csv"), partial.to_csv())?;
            return Err(Error::Level { level, source, partial });
        }
        Err(e) => return Err(e),
    };
    let rate = b.expected_rate(cfg.element);
    fs::write(args.out.join("record.csv"), record.to_csv())?;
    fs::write(args.out.join("plot.svg"), render_svg(&record, rate, b.name))?;
    if args.infsup {
        fs::write(args.out.join("infsup.csv"), probes)?;
    }
    println!(
        "{}: {} levels, stop {:?}, expected rate {rate}",
        b.name,
        record.rows.len(),
        record.stop
    );
    let skip = 2;
    for (label, q) in [("estimator", Quantity::Estimator), ("error", Quantity::ErrorTotal)] {
        match fit_rate(&record, q, skip, Against::Dofs) {
            Ok((s, r2)) => println!("fitted {label} rate {s:.4} (r^2 = {r2:.4})"),
            Err(e) => println!("fitted {label} rate unavailable: {e}"),
        }
    }
    Ok(record)
}

fn write_indicators(path: &Path, s: &LevelState) -> Result<()> {
    let mut text = String::from("element,indicator,osc\n");
    for (t, v) in s.indicators.values.iter().enumerate() {
        let _ = writeln!(text, "{t},{v:.12e},{:.12e}", s.indicators.osc[t]);
    }
    fs::write(path, text)?;
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 64.0;

/// Log-log plot of the estimator and error components against dofs, with a
/// reference line of slope `-rate`. Every marker carries the level it
/// comes from.
pub fn render_svg(record: &ConvergenceRecord, rate: f64, title: &str) -> String {
    type Getter = fn(&crate::adapt::LevelRow) -> Option<f64>;
    let series: [(&str, &str, Getter); 4] = [
        ("estimator", "#1f77b4", |r| Some(r.estimator)),
        ("err_sigma_vc", "#d62728", |r| r.errors.map(|e| e.sigma_vc())),
        ("err_div", "#2ca02c", |r| r.errors.map(|e| e.div)),
        ("err_u", "#9467bd", |r| r.errors.map(|e| e.u)),
    ];
    let pts: Vec<Vec<(usize, f64, f64)>> = series
        .iter()
        .map(|(_, _, get)| {
            record
                .rows
                .iter()
                .filter_map(|r| get(r).filter(|v| *v > 0.0).map(|v| (r.level, r.dofs as f64, v)))
                .collect()
        })
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(_, x, y) in all {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let sx = |x: f64| MARGIN + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
    let (left, right, top, bottom) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    for e in x0 as i32..=x1 as i32 {
        let x = sx(10f64.powi(e));
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{}" stroke="black"/>"#, bottom + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{e}</text>"#, bottom + 18.0);
    }
    for e in y0 as i32..=y1 as i32 {
        let y = sy(10f64.powi(e));
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#, left - 8.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">dofs</text>"#, W / 2.0, H - 20.0);

    for (k, ((name, color, _), p)) in series.iter().zip(&pts).enumerate() {
        if p.is_empty() {
            continue;
        }
        let line: Vec<String> = p.iter().map(|&(_, x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-series="{name}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            line.join(" ")
        );
        for &(level, x, y) in p {
            let _ = writeln!(
                s,
                r#"<circle data-series="{name}" data-level="{level}" cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = top + 16.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{name}</text>"#,
            right - 8.0
        );
    }
    // reference slope anchored at the first estimator point
    if let Some(&(_, xa, ya)) = pts[0].first() {
        let xb = 10f64.powf(x1);
        let yb = ya * (xb / xa).powf(-rate);
        let _ = writeln!(
            s,
            r##"<line class="reference" data-slope="{rate}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="6 4"/>"##,
            sx(xa),
            sy(ya * 2.0),
            sx(xb),
            sy(yb * 2.0)
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" fill="#555">slope -{rate}</text>"##,
            sx(xb) - 70.0,
            sy(yb * 2.0) - 6.0
        );
    }
    s.push_str("</svg>\n");
    s
}
