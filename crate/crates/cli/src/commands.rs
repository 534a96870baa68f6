//! One function per command. Every command validates the whole config
//! before the first solve.

use std::collections::BTreeMap;
use std::path::PathBuf;

use inclusion_core::exec::Execution;
use inclusion_core::fundsol::{layered_h, layered_h_gradient, operator_residual, transmission_check};
use inclusion_core::geometry::{AugmentedDomain, InclusionShape, Point};
use inclusion_core::green::{bound_certificate, check_symmetry, relative_difference, RecursiveGreenSolver};
use inclusion_core::inverse::{
    bump_basis, cauchy_aperture, f_from_fields, misfit, probe_scan, s_boundary, s_volume, stability_sweep, Aperture, CauchyDataSet,
    Configuration, PoleGrid, TraceNorm,
};
use inclusion_core::io::Table;
use inclusion_core::media::build_medium;
use inclusion_core::solver::{cauchy_pair, DirichletProblem};
use num_complex::Complex64 as C;

use crate::config::RunConfig;
use crate::output::{Check, RunDir};
use crate::plot::{emit_plotdata, PlotKind};
use crate::{default_out_dir, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Forward,
    Green,
    FundsolCheck,
    Misfit,
    Aperture,
    Probe,
    Sweep,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Green => "green",
            Command::FundsolCheck => "fundsol-check",
            Command::Misfit => "misfit",
            Command::Aperture => "aperture",
            Command::Probe => "probe",
            Command::Sweep => "sweep",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    /// Output directory; defaults to [`default_out_dir`].
    pub out: Option<PathBuf>,
    pub resolution: Option<usize>,
    pub exec: Execution,
}

impl RunOptions {
    pub fn new(config: impl Into<PathBuf>) -> Self {
        RunOptions { config: config.into(), out: None, resolution: None, exec: Execution::default() }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub results: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn missing(what: &str) -> CliError {
    CliError::Config(format!("missing {what}"))
}

fn pole_grids(cfg: &RunConfig) -> Result<(&PoleGrid, &PoleGrid), CliError> {
    match (&cfg.poles.dy, &cfg.poles.dz) {
        (Some(dy), Some(dz)) => Ok((dy, dz)),
        _ => Err(missing("[poles.dy] and [poles.dz]")),
    }
}

fn require(cmd: Command, cfg: &RunConfig) -> Result<(), CliError> {
    match cmd {
        Command::Forward | Command::Aperture => Ok(()),
        Command::Green if cfg.poles.green.is_empty() => Err(missing("poles.green")),
        Command::Green => Ok(()),
        Command::FundsolCheck => cfg.fundsol.as_ref().map(|_| ()).ok_or_else(|| missing("[fundsol] section")),
        Command::Misfit | Command::VerifyAll => pole_grids(cfg).map(|_| ()),
        Command::Probe => cfg.probe.as_ref().map(|_| ()).ok_or_else(|| missing("[probe] section")),
        Command::Sweep => {
            pole_grids(cfg)?;
            cfg.sweep.as_ref().map(|_| ()).ok_or_else(|| missing("[sweep] section"))
        }
    }
}

/// Loads and validates the config, runs `cmd` and writes its artifacts.
/// `verify-all` returns [`CliError::Checks`] when any check fails; other
/// commands only record their checks.
pub fn run(cmd: Command, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let (mut cfg, hash) = RunConfig::load(&opts.config)?;
    if let Some(r) = opts.resolution {
        cfg.grid.resolution = r;
    }
    let aug = cfg.augmented()?;
    cfg.validate(&aug)?;
    require(cmd, &cfg)?;
    let dir = opts.out.clone().unwrap_or_else(|| default_out_dir(&opts.config, cmd));
    let mut out = RunDir::create(&dir, &hash)?;
    let exec = opts.exec;
    match cmd {
        Command::Forward => forward(&cfg, &aug, exec, &mut out)?,
        Command::Green => green(&cfg, &aug, exec, &mut out)?,
        Command::FundsolCheck => fundsol_check(&cfg, exec, &mut out)?,
        Command::Misfit => misfit_cmd(&cfg, &aug, exec, &mut out)?,
        Command::Aperture => {
            aperture_cmd(&cfg, &aug, exec, &mut out)?;
        }
        Command::Probe => probe(&cfg, &aug, exec, &mut out)?,
        Command::Sweep => sweep(&cfg, &aug, exec, &mut out)?,
        Command::VerifyAll => verify_all(&cfg, &aug, exec, &mut out)?,
    }
    let results = out.results.clone();
    let checks = out.finish(cmd.name(), &opts.config, cfg.grid.resolution, &cfg.tolerances, &cfg.solver)?;
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    if cmd == Command::VerifyAll && !failed.is_empty() {
        return Err(CliError::Checks(failed));
    }
    Ok(RunSummary { dir, results, checks })
}

fn forward(cfg: &RunConfig, aug: &AugmentedDomain, exec: Execution, out: &mut RunDir) -> Result<(), CliError> {
    let shape = InclusionShape::rasterize(cfg.inclusion.clone(), aug.grid())?;
    let medium = build_medium(&cfg.medium, aug, &shape)?;
    let basis = bump_basis(aug.omega_grid(), &aug.sigma);
    let indices = cfg.forward.as_ref().map(|f| f.inputs.clone()).unwrap_or_else(|| vec![0]);
    if let Some(&bad) = indices.iter().find(|&&i| i >= basis.len()) {
        return Err(CliError::Config(format!("forward input {bad} out of range (basis has {})", basis.len())));
    }
    let problem = DirichletProblem::new(aug, &medium, cfg.solver, exec)?;
    out.grid("chi.grid", aug.grid(), "chi", &medium.dump_values("chi")?)?;
    out.grid("sigma_trace.grid", aug.grid(), "sigma_trace", &medium.dump_values("sigma_trace")?)?;
    let grid = aug.omega_grid();
    let mut table = Table::new(&["input", "face", "x", "y", "z", "re_trace", "im_trace", "re_flux", "im_flux"]);
    for &i in &indices {
        let (u, report) = problem.solve(&basis[i])?;
        out.residual("forward_solve", report.relative_residual);
        out.grid(&format!("u_{i}_re.grid"), grid, "re_u", &u.real_values())?;
        let pair = cauchy_pair(&u, &medium, &aug.sigma, Some(&basis[i]))?;
        for (k, f) in pair.faces.iter().enumerate() {
            let p = grid.face_center(*f);
            table.push_numbers(&[i as f64, k as f64, p[0], p[1], p[2], pair.trace[k].re, pair.trace[k].im, pair.flux[k].re, pair.flux[k].im])?;
        }
    }
    out.csv("cauchy.csv", &table)?;
    out.result("inputs", indices.len() as f64);
    Ok(())
}

fn green(cfg: &RunConfig, aug: &AugmentedDomain, exec: Execution, out: &mut RunDir) -> Result<(), CliError> {
    let poles = &cfg.poles.green;
    let shape = InclusionShape::rasterize(cfg.inclusion.clone(), aug.grid())?;
    let conf = Configuration::new(aug, &cfg.medium, shape, cfg.solver, exec)?;
    let fields = conf.green_many(poles)?;
    let mut table = Table::new(&["pole", "x", "y", "z", "relative_residual", "bound_certificate"]);
    for (i, g) in fields.iter().enumerate() {
        out.residual("green_solve", g.report.relative_residual);
        out.grid(&format!("green_{i}_abs.grid"), aug.grid(), "abs_green", &g.values.abs_values())?;
        let p = g.pole;
        table.push_numbers(&[i as f64, p[0], p[1], p[2], g.report.relative_residual, bound_certificate(g)])?;
    }
    out.csv("green.csv", &table)?;
    if poles.len() >= 2 {
        let sym = check_symmetry(conf.solver(), poles)?;
        out.result("symmetry", sym);
        out.check(Check::at_most("symmetry", sym, cfg.tolerances.symmetry));
    }
    let rec = RecursiveGreenSolver::new(aug, &conf.medium, cfg.solver, exec)?.green(poles[0])?;
    out.residual("recursive_solve", rec.report.relative_residual);
    let diff = relative_difference(&rec, &fields[0]);
    out.result("recursion_difference", diff);
    out.check(Check::at_most("recursion", diff, cfg.tolerances.recursion));
    Ok(())
}

fn fundsol_check(cfg: &RunConfig, exec: Execution, out: &mut RunDir) -> Result<(), CliError> {
    let spec = cfg.fundsol.as_ref().ok_or_else(|| missing("[fundsol] section"))?;
    let k = spec.kernel()?;
    let y = spec.pole;
    let tol = &cfg.tolerances;
    if !spec.probes.is_empty() {
        let (dv, df) = transmission_check(&k, y, &spec.probes, spec.step)?;
        out.result("transmission_value", dv);
        out.result("transmission_flux", df);
        out.check(Check::at_most("transmission_value", dv, tol.transmission));
        out.check(Check::at_most("transmission_flux", df, tol.transmission));
    }
    let mut table = Table::new(&["resolution", "residual", "ratio"]);
    let mut prev: Option<f64> = None;
    for &n in &spec.resolutions {
        let r = operator_residual(&k, y, n, spec.exclude, exec)?;
        let ratio = prev.map_or(f64::NAN, |p| p / r);
        table.push_numbers(&[n as f64, r, ratio])?;
        out.residual(&format!("operator_{n}"), r);
        if prev.is_some() {
            out.check(Check::at_least(&format!("residual_ratio_{n}"), ratio, tol.residual_ratio));
        }
        prev = Some(r);
    }
    out.csv("operator_residual.csv", &table)?;
    let mut profile = Table::new(&["z", "h", "dh_dz"]);
    for i in 0..=100 {
        let z = -0.5 + i as f64 * 0.01;
        let x = [y[0] + 0.05, y[1], z];
        if let (Ok(v), Ok(g)) = (layered_h(x, y, &k), layered_h_gradient(x, y, &k)) {
            profile.push_numbers(&[z, v, g[2]])?;
        }
    }
    out.csv("profile.csv", &profile)?;
    out.result("square_root_defect", k.square_root_defect());
    Ok(())
}

/// `(s_boundary, s_volume, f)` for `G₁(·,y)` and `G₂(·,z)`.
fn identity_triple(aug: &AugmentedDomain, a: &Configuration, b: &Configuration, y: Point, z: Point, out: &mut RunDir) -> Result<(C, C, C), CliError> {
    let g1 = a.green(y)?;
    let g2 = b.green(z)?;
    out.residual("green_solve", g1.report.relative_residual.max(g2.report.relative_residual));
    let sb = s_boundary(aug, &g1, &g2, &a.medium, &b.medium)?;
    let sv = s_volume(aug, &g1, &g2, &a.medium, &b.medium)?;
    let f = f_from_fields(&a.medium, &b.medium, &g1, &g2)?.f;
    Ok((sb, sv, f))
}

fn relative(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm().max(1e-14)
}

fn identity_checks(cfg: &RunConfig, aug: &AugmentedDomain, a: &Configuration, b: &Configuration, out: &mut RunDir) -> Result<(), CliError> {
    let (dy, dz) = pole_grids(cfg)?;
    let (y, z) = (dy.points()[0], dz.points()[0]);
    let (sb, sv, f) = identity_triple(aug, a, b, y, z, out)?;
    out.result("s_boundary_abs", sb.norm());
    out.result("s_volume_abs", sv.norm());
    out.check(Check::at_most("identity", relative(sb, sv), cfg.tolerances.identity));
    out.check(Check::at_most("f_identity", relative(f, sv), cfg.tolerances.f_identity));
    Ok(())
}

fn misfit_cmd(cfg: &RunConfig, aug: &AugmentedDomain, exec: Execution, out: &mut RunDir) -> Result<(), CliError> {
    let (dy, dz) = pole_grids(cfg)?;
    let (a, b) = cfg.pair(aug, exec)?;
    let m = misfit(aug, &a, &b, dy, dz)?;
    let mut table = Table::new(&["i", "j", "y_x", "y_y", "y_z", "z_x", "z_y", "z_z", "re_s", "im_s"]);
    for (i, row) in m.s.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            let (y, z) = (m.y_poles[i], m.z_poles[j]);
            table.push_numbers(&[i as f64, j as f64, y[0], y[1], y[2], z[0], z[1], z[2], s.re, s.im])?;
        }
    }
    out.csv("s_matrix.csv", &table)?;
    out.result("misfit", m.value);
    out.result("weight", m.weight);
    out.check(Check::at_least("misfit_nonnegative", m.value, 0.0));
    if cfg.is_identical_pair() {
        out.check(Check::at_most("misfit_zero", m.value, cfg.tolerances.misfit_zero));
    }
    identity_checks(cfg, aug, &a, &b, out)
}

fn aperture_cmd(cfg: &RunConfig, aug: &AugmentedDomain, exec: Execution, out: &mut RunDir) -> Result<Aperture, CliError> {
    let norm = TraceNorm::new(aug.omega_grid(), &aug.sigma)?;
    let inputs = bump_basis(aug.omega_grid(), &aug.sigma);
    let mut sets = Vec::with_capacity(2);
    for (spec, kind) in [(&cfg.medium, &cfg.inclusion), (cfg.second_medium(), cfg.second_inclusion())] {
        let shape = InclusionShape::rasterize(kind.clone(), aug.grid())?;
        let medium = build_medium(spec, aug, &shape)?;
        sets.push(CauchyDataSet::build(aug, &medium, inputs.clone(), norm.clone(), cfg.solver, exec)?);
    }
    let ap = cauchy_aperture(&sets[0], &sets[1])?;
    let mut table = Table::new(&["value", "forward", "backward"]);
    table.push_numbers(&[ap.value, ap.forward, ap.backward])?;
    out.csv("aperture.csv", &table)?;
    out.result("aperture", ap.value);
    out.result("aperture_forward", ap.forward);
    out.result("aperture_backward", ap.backward);
    out.check(Check::within("aperture_range", ap.value, 0.0, 1.0));
    if ap.forward < 1.0 && ap.backward < 1.0 {
        out.check(Check::at_most("directed_agreement", (ap.forward - ap.backward).abs(), cfg.tolerances.directed_agreement));
    }
    if cfg.is_identical_pair() {
        out.check(Check::at_most("aperture_zero", ap.value, cfg.tolerances.aperture_zero));
    }
    Ok(ap)
}

fn probe(cfg: &RunConfig, aug: &AugmentedDomain, exec: Execution, out: &mut RunDir) -> Result<(), CliError> {
    let (origin, normal, h) = cfg.probe_geometry(aug)?;
    let (a, b) = cfg.pair(aug, exec)?;
    let res = probe_scan(&a, &b, origin, normal, &h, exec)?;
    let mut table = Table::new(&["h", "re_f", "im_f", "abs_f"]);
    for (t, f) in res.h.iter().zip(&res.f) {
        table.push_numbers(&[*t, f.re, f.im, f.norm()])?;
    }
    out.csv("probe.csv", &table)?;
    out.csv("probe_plot.csv", &emit_plotdata(&table, PlotKind::Probe)?)?;
    let max_f = res.f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    out.result("max_abs_f", max_f);
    match res.fit {
        Some(fit) => {
            out.result("slope", fit.slope);
            out.result("fit_residual", fit.residual);
            out.result("fit_points", fit.n as f64);
            let [lo, hi] = cfg.tolerances.probe_slope;
            out.check(Check::within("probe_slope", fit.slope, lo, hi));
        }
        None => {
            out.result("degenerate", 1.0);
            out.check(Check::at_most("f_zero", max_f, cfg.tolerances.f_zero));
        }
    }
    Ok(())
}

fn sweep(cfg: &RunConfig, aug: &AugmentedDomain, exec: Execution, out: &mut RunDir) -> Result<(), CliError> {
    let (dy, dz) = pole_grids(cfg)?;
    let family = cfg.sweep.as_ref().ok_or_else(|| missing("[sweep] section"))?;
    let res = stability_sweep(aug, &cfg.medium, family, dy, dz, cfg.solver, exec)?;
    let (eta, corr) = res.misfit_fit.map_or((f64::NAN, f64::NAN), |f| (f.eta, f.corr));
    let mut table = Table::new(&["trial", "factor", "d_h", "d_mu", "misfit", "aperture", "eta_fit", "corr"]);
    for r in &res.rows {
        table.push_numbers(&[r.trial as f64, r.factor, r.d_h, r.d_mu, r.misfit, r.aperture, eta, corr])?;
    }
    out.csv("sweep.csv", &table)?;
    let plot_eta = if eta.is_finite() { eta } else { 0.5 };
    out.csv("sweep_plot.csv", &emit_plotdata(&table, PlotKind::Sweep { eta: plot_eta })?)?;
    out.result("eta_misfit", eta);
    out.result("corr_misfit", corr);
    if let Some(f) = res.aperture_fit {
        out.result("eta_aperture", f.eta);
        out.result("corr_aperture", f.corr);
    }
    out.check(Check::holds("monotone", res.monotone()));
    out.check(Check::at_least("correlation", if corr.is_finite() { corr } else { f64::NEG_INFINITY }, cfg.tolerances.correlation));
    Ok(())
}

fn verify_all(cfg: &RunConfig, aug: &AugmentedDomain, exec: Execution, out: &mut RunDir) -> Result<(), CliError> {
    let tol = &cfg.tolerances;
    let (dy, dz) = pole_grids(cfg)?;
    let (a, b) = cfg.pair(aug, exec)?;
    if cfg.poles.green.len() >= 2 {
        let sym = check_symmetry(a.solver(), &cfg.poles.green)?;
        out.result("symmetry", sym);
        out.check(Check::at_most("symmetry", sym, tol.symmetry));
    }
    let y0 = dy.points()[0];
    let g = a.green(y0)?;
    let rec = RecursiveGreenSolver::new(aug, &a.medium, cfg.solver, exec)?.green(y0)?;
    out.check(Check::at_most("recursion", relative_difference(&rec, &g), tol.recursion));

    let m = misfit(aug, &a, &b, dy, dz)?;
    out.result("misfit", m.value);
    out.check(Check::at_least("misfit_nonnegative", m.value, 0.0));
    identity_checks(cfg, aug, &a, &b, out)?;
    let ap = aperture_cmd(cfg, aug, exec, out)?;
    let f = f_from_fields(&a.medium, &b.medium, &g, &b.green(y0)?)?.f;
    out.result("f_coincident_abs", f.norm());
    if cfg.is_identical_pair() {
        out.check(Check::at_most("misfit_zero", m.value, tol.misfit_zero));
        out.check(Check::at_most("f_zero", f.norm(), tol.f_zero));
    }
    out.result("aperture", ap.value);
    Ok(())
}
