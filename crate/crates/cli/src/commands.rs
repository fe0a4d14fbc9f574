use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use polaron::coherent::{bound_table, System};
use polaron::ecg::{
    binding_curve, default_u_grid, estimate_uc, optimize_ansatz, pt_energy, Ansatz, CurveConfig, OptimizerConfig,
    PointStatus,
};
use polaron::fock::{
    build_modes, dispersion_scan, existence_criterion, toy_binding, Discretization, LanczosOptions, Lattice,
    TruncatedFockModel,
};
use polaron::gross::{admissible_threshold, constants, GrossConstants};
use polaron::pekar::{compute_cp, solve_choquard, ExtrapolationConfig, SCFConfig};
use polaron::radial::{RadialFunction, RadialGrid};
use serde_json::json;

use crate::config::{parse_vector, ConfigFile, Settings};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::svg::line_chart;
use crate::{Cli, Command, Format};

const DEFAULT_SEED: u64 = 0x5EED;

struct Context<'a> {
    cli: &'a Cli,
    manifest: RunManifest,
    started: Instant,
}

impl Context<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.cli.out.join(name);
        std::fs::write(&path, contents)?;
        self.manifest.outputs.push(path);
        Ok(())
    }

    fn finish(mut self, settings: Settings) -> Result<(), CliError> {
        self.manifest.config = settings.resolved;
        self.manifest.wall_time_seconds = self.started.elapsed().as_secs_f64();
        let path = self.manifest.write(&self.cli.out)?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    std::fs::create_dir_all(&cli.out)?;
    let name = match &cli.command {
        Command::Cp(_) => "cp",
        Command::Pt(_) => "pt",
        Command::Phase(_) => "phase",
        Command::Coherent(_) => "coherent",
        Command::Gross(_) => "gross",
        Command::Fock(_) => "fock",
    };
    let mut settings = Settings::new(&file, name);
    let seed = settings.value("seed", cli.seed, DEFAULT_SEED)?;
    let mut ctx = Context { cli, manifest: RunManifest::new(name, seed), started: Instant::now() };
    if let Some(p) = &cli.config {
        ctx.manifest.inputs.push(p.clone());
    }
    match &cli.command {
        Command::Cp(a) => cmd_cp(&mut ctx, &mut settings, a)?,
        Command::Pt(a) => cmd_pt(&mut ctx, &mut settings, a, seed)?,
        Command::Phase(a) => cmd_phase(&mut ctx, &mut settings, a, seed)?,
        Command::Coherent(a) => cmd_coherent(&mut ctx, &mut settings, a)?,
        Command::Gross(a) => cmd_gross(&mut ctx, &mut settings, a)?,
        Command::Fock(a) => cmd_fock(&mut ctx, &mut settings, a, seed)?,
    }
    ctx.finish(settings)
}

fn extrapolation_config(s: &mut Settings, a: &crate::CpArgs) -> Result<ExtrapolationConfig, CliError> {
    let d = ExtrapolationConfig::default();
    Ok(ExtrapolationConfig {
        spacings: s.list("spacing-ladder", a.spacing_ladder.as_deref(), "0.04,0.02,0.01")?,
        box_radius: s.value("box", a.box_radius, d.box_radius)?,
        mixing: s.value("mixing", a.mixing, d.mixing)?,
        max_iter: s.value("max-iter", a.max_iter, d.max_iter)?,
        ..d
    })
}

fn cmd_cp(ctx: &mut Context, s: &mut Settings, a: &crate::CpArgs) -> Result<(), CliError> {
    let cfg = extrapolation_config(s, a)?;
    ctx.manifest.tolerances.insert("energy_tol".into(), cfg.energy_tol);
    ctx.manifest.tolerances.insert("density_tol".into(), cfg.density_tol);
    let est = compute_cp(&cfg)?;
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    match ctx.cli.format {
        Format::Json => ctx.write("cp.json", &(serde_json::to_string_pretty(&est)? + "\n"))?,
        Format::Tsv => {
            let mut t = format!(
                "# c_p={} error_estimate={} box_sensitivity={:e}\nspacing\tbox_radius\tenergy\titerations\tvirial_defect\n",
                est.c_p,
                est.error_estimate.map_or("none".into(), |e| format!("{e:e}")),
                est.box_sensitivity
            );
            for l in &est.levels {
                let _ = writeln!(t, "{}\t{}\t{}\t{}\t{:e}", l.spacing, l.box_radius, l.energy, l.iterations, l.virial_defect);
            }
            ctx.write("cp.tsv", &t)?;
        }
    }
    println!("c_p = {:.12}", est.c_p);
    if let Some(e) = est.error_estimate {
        println!("error estimate = {e:.3e}");
    }
    Ok(())
}

fn optimizer_config(
    s: &mut Settings,
    basis: Option<usize>,
    restarts: Option<usize>,
    seed: u64,
) -> Result<OptimizerConfig, CliError> {
    let d = OptimizerConfig::default();
    Ok(OptimizerConfig {
        basis_size: s.value("basis-size", basis, d.basis_size)?,
        restarts: s.value("restarts", restarts, d.restarts)?,
        seed,
        ..d
    })
}

fn cmd_pt(ctx: &mut Context, s: &mut Settings, a: &crate::PtArgs, seed: u64) -> Result<(), CliError> {
    let u = s.value("u", a.u, SQRT_2)?;
    let (ansatz, breakdown) = match &a.ansatz {
        Some(path) => {
            ctx.manifest.inputs.push(path.clone());
            s.resolved.insert("ansatz".into(), path.display().to_string());
            let ansatz = Ansatz::from_text(&std::fs::read_to_string(path)?)?;
            let b = pt_energy(&ansatz, u)?;
            (ansatz, b)
        }
        None => {
            let cfg = optimizer_config(s, a.basis_size, a.restarts, seed)?;
            optimize_ansatz(u, &cfg)?
        }
    };
    ctx.write("pt_ansatz.txt", &ansatz.to_text())?;
    match ctx.cli.format {
        Format::Json => ctx.write("pt.json", &(serde_json::to_string_pretty(&json!({ "u": u, "breakdown": breakdown }))? + "\n"))?,
        Format::Tsv => ctx.write(
            "pt.tsv",
            &format!(
                "U\tkinetic\trepulsion\tattraction\ttotal\n{}\t{}\t{}\t{}\t{}\n",
                u, breakdown.kinetic, breakdown.repulsion, breakdown.attraction, breakdown.total
            ),
        )?,
    }
    println!("c_bp({u}) <= {:.10}", breakdown.total);
    Ok(())
}

fn cmd_phase(ctx: &mut Context, s: &mut Settings, a: &crate::PhaseArgs, seed: u64) -> Result<(), CliError> {
    let default_grid: Vec<String> = default_u_grid().iter().map(|u| u.to_string()).collect();
    let grid = s.list("u-grid", a.u_grid.as_deref(), &default_grid.join(","))?;
    let optimizer = optimizer_config(s, a.basis_size, a.restarts, seed)?;
    let d = CurveConfig::default();
    let cfg = CurveConfig {
        optimizer,
        bisection_tol: s.value("bisection-tol", a.bisection_tol, d.bisection_tol)?,
        ..d
    };
    ctx.manifest.tolerances.insert("bisection_tol".into(), cfg.bisection_tol);
    cfg.optimizer.validate()?;
    let cp = compute_cp(&ExtrapolationConfig::default())?;
    let curve = binding_curve(&grid, cp.c_p, &cfg)?;
    if curve.points.iter().all(|p| matches!(p.status, PointStatus::Failed { from_u: None, .. })) {
        return Err(CliError::Numerical(polaron::Error::OptimizerFailed { best: f64::INFINITY }));
    }
    let uc = estimate_uc(&curve)?;
    ctx.write("phase.tsv", &curve.to_tsv())?;
    ctx.write("phase.json", &(serde_json::to_string_pretty(&json!({ "curve": curve, "u_c": uc }))? + "\n"))?;
    let mut two = String::from("U\tbinding\n");
    for p in &curve.points {
        let _ = writeln!(two, "{}\t{}", p.u, p.binding);
    }
    ctx.write("phase_binding.tsv", &two)?;
    if a.svg {
        let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.u, p.binding)).collect();
        ctx.write("phase_binding.svg", &line_chart(&pts, "U", "2c_p - c_bp(U)"))?;
    }
    for p in &curve.points {
        println!("U = {:.6}  binding = {:+.6e}  [{}]", p.u, p.binding, p.status.label());
    }
    match (uc.u_c, uc.bracket.hi) {
        (Some(u), Some(hi)) => println!(
            "u_c ~ {u:.6} = {:.4}*sqrt(2) (lower estimate), bracket [{:.6}, {hi:.6}]",
            u / SQRT_2,
            uc.bracket.lo
        ),
        (_, Some(hi)) => eprintln!("warning: no sign change refined; bracket [{}, {hi}]", uc.bracket.lo),
        (_, None) => eprintln!("warning: binding positive on the whole grid; open bracket [{}, inf)", uc.bracket.lo),
    }
    Ok(())
}

fn trial_state(s: &mut Settings, a: &crate::CoherentArgs, ctx: &mut Context) -> Result<RadialFunction, CliError> {
    let which = s.text("phi", a.phi.as_deref(), "pekar");
    let spacing = s.value("spacing", a.spacing, 0.02)?;
    let box_radius = s.value("box", a.box_radius, 20.0)?;
    match which.as_str() {
        "gaussian" => Ok(RadialFunction::gaussian(RadialGrid::with_box(spacing, box_radius)?)),
        "pekar" => Ok(solve_choquard(&SCFConfig { spacing, box_radius, ..SCFConfig::default() })?.phi),
        path => {
            ctx.manifest.inputs.push(PathBuf::from(path));
            Ok(RadialFunction::from_tsv(&std::fs::read_to_string(Path::new(path))?)?)
        }
    }
}

fn cmd_coherent(ctx: &mut Context, s: &mut Settings, a: &crate::CoherentArgs) -> Result<(), CliError> {
    let alphas = s.list("alpha", a.alpha.as_deref(), "1")?;
    let kappas = s.list("kappa", a.kappa.as_deref(), "2,4,8,16,inf")?;
    let phi = trial_state(s, a, ctx)?;
    let system = match a.bipolaron_u0.or(s.value::<f64>("bipolaron-u0", None, f64::NAN).ok().filter(|v| v.is_finite())) {
        Some(u0) => System::ProductBipolaron { u0 },
        None => System::Polaron,
    };
    let table = bound_table(&alphas, &kappas, &phi, system)?;
    match ctx.cli.format {
        Format::Json => ctx.write("coherent.json", &(serde_json::to_string_pretty(&table)? + "\n"))?,
        Format::Tsv => ctx.write("coherent.tsv", &table.to_tsv())?,
    }
    print!("{}", table.to_tsv());
    Ok(())
}

fn cmd_gross(ctx: &mut Context, s: &mut Settings, a: &crate::GrossArgs) -> Result<(), CliError> {
    let alphas = s.list("alpha", a.alpha.as_deref(), "1")?;
    let splits = s.list("K", a.k_split.as_deref(), "1,5,10")?;
    let kappas = s.list("kappa", a.kappa.as_deref(), "inf")?;
    let mut rows: Vec<GrossConstants> = Vec::new();
    for &al in &alphas {
        for &k in &splits {
            for &kap in &kappas {
                rows.push(constants(al, k, kap)?);
            }
        }
    }
    let thresholds = alphas
        .iter()
        .map(|&al| admissible_threshold(al).map(|k| (al, k)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut tsv = String::from(GrossConstants::tsv_header());
    for r in &rows {
        tsv.push_str(&r.tsv_row());
    }
    match ctx.cli.format {
        Format::Json => ctx.write(
            "gross.json",
            &(serde_json::to_string_pretty(&json!({
                "rows": rows,
                "thresholds": thresholds.iter().map(|(a, k)| json!({"alpha": a, "K_star": k})).collect::<Vec<_>>(),
            }))? + "\n"),
        )?,
        Format::Tsv => ctx.write("gross.tsv", &tsv)?,
    }
    print!("{tsv}");
    for r in &rows {
        let rel = if r.e_cut_reference != 0.0 { (r.e_cut / r.e_cut_reference - 1.0).abs() } else { r.e_cut.abs() };
        println!(
            "alpha={} K={} kappa={}: E_cut closed-form relative deviation {rel:.2e}{}",
            r.alpha,
            r.k_split,
            r.kappa,
            if r.empty_shell { " (empty shell)" } else { "" }
        );
    }
    for (al, k) in thresholds {
        println!("alpha={al}: smallest admissible K = {k:.6}");
    }
    Ok(())
}

fn cmd_fock(ctx: &mut Context, s: &mut Settings, a: &crate::FockArgs, seed: u64) -> Result<(), CliError> {
    let d = Discretization::desk_default();
    let alpha = s.value("alpha", a.alpha, 1.0)?;
    let u0 = s.value("u0", a.u0, 0.0)?;
    let lattice = Lattice {
        points_per_axis: s.value("lattice", a.lattice, d.lattice.points_per_axis)?,
        spacing: s.value("spacing", a.spacing, d.lattice.spacing)?,
    };
    let kappa = s.value("kappa", a.kappa, d.modes.kappa)?;
    let shells = s.value("shells", a.shells, 2)?;
    let per_shell = s.value("per-shell", a.per_shell, 6)?;
    let n_max = s.value("n-max", a.n_max, d.n_max)?;
    let tol = s.value("tol", a.tol, LanczosOptions::default().tol)?;
    let disc = Discretization { lattice, modes: build_modes(kappa, shells, per_shell)?, n_max, max_dimension: d.max_dimension };
    let opts = LanczosOptions { tol, seed, ..LanczosOptions::default() };
    ctx.manifest.tolerances.insert("lanczos_residual".into(), tol);
    let mut ps: Vec<[f64; 3]> = vec![[0.0; 3]];
    let p_text = s.text("P", a.p.as_deref(), "0.2;0.4");
    for part in p_text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let p = parse_vector(part).map_err(CliError::Usage)?;
        for q in [p, [-p[0] + 0.0, -p[1] + 0.0, -p[2] + 0.0]] {
            if !ps.contains(&q) {
                ps.push(q);
            }
        }
    }
    let model = TruncatedFockModel { discretization: disc.clone(), alpha, u0, p: [0.0; 3] };
    let report = dispersion_scan(&model, &ps, &opts)?;
    println!(
        "dimension {}  E(0) = {:.12}  lower bound {:.6}",
        model.dimension(),
        report.e0,
        report.lower_bound
    );
    println!("symmetry |E(P) - E(-P)| max = {:.2e}", report.symmetry_defect);
    println!("E(0) <= E(P): {}", report.lower_holds);
    println!("E(P) <= E(0) + P^2/4 + {:e}: {}", report.upper_tolerance, report.upper_holds);
    if alpha == 0.0 {
        for r in &report.rows {
            if let Some(e) = r.energy {
                let exact = model.with_momentum(r.p).decoupled_energy();
                println!("free case P = {:?}: E - closed form = {:.2e}", r.p, e - exact);
            }
        }
    }
    let e_bin = match a.e_bin.or(s.value::<f64>("e-bin", None, f64::NAN).ok().filter(|v| v.is_finite())) {
        Some(e) => e,
        None => {
            let b = toy_binding(alpha, u0, &disc, &opts)?;
            println!("toy binding 2E_p - E_bp = {:.10} (E_p = {:.10}, E_bp = {:.10})", b.binding, b.polaron, b.bipolaron);
            b.binding
        }
    };
    let verdicts: Vec<_> = ps
        .iter()
        .map(|&p| {
            let (holds, gap) = existence_criterion(e_bin, p);
            println!("existence at P = {p:?} with E_bin = {e_bin}: {holds} (gap bound {gap:.6})");
            json!({ "P": p, "holds": holds, "gap_bound": gap })
        })
        .collect();
    match ctx.cli.format {
        Format::Json => ctx.write(
            "fock.json",
            &(serde_json::to_string_pretty(&json!({
                "model": model,
                "report": report,
                "e_bin": e_bin,
                "existence": verdicts,
            }))? + "\n"),
        )?,
        Format::Tsv => ctx.write("fock.tsv", &report.to_tsv())?,
    }
    if !report.passed() {
        eprintln!("warning: dispersion checks failed");
    }
    Ok(())
}
