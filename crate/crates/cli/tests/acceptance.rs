//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` still run and still print FAIL, but
//! do not fail the process; the README explains each entry.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use inclusion_cli::config::RunConfig;
use inclusion_cli::{run, Command, RunOptions, RunSummary};
use inclusion_core::exec::Execution;
use inclusion_core::fundsol::{layered_h, operator_residual, transmission_check, LayeredKernel};
use inclusion_core::geometry::{AugmentedDomain, Grid, InclusionShape, Point};
use inclusion_core::green::{
    check_symmetry, decay_fit, free_space_kernel, gradient_norm, relative_difference, GreenSolver, RecursiveGreenSolver,
};
use inclusion_core::inverse::{s_boundary, s_volume, subspace_aperture, Configuration, PoleGrid};
use inclusion_core::media::{build_medium, MediumField, MediumSpec, ScalarSpec, IDENTITY};
use inclusion_core::solver::{Impedance, SolverOptions};
use inclusion_core::Complex64 as C;
use nalgebra::DMatrix;

const KNOWN_FAILURES: &[usize] = &[6];

const DEFAULT_POLES: [Point; 3] = [[0.3, 0.4, 0.5], [0.7, 0.6, 0.45], [0.5, 0.5, -0.2]];

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Result<Outcome, String>;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&configs_dir().join(name)).expect("shipped config loads").0
}

fn at_resolution(mut cfg: RunConfig, n: usize) -> (RunConfig, AugmentedDomain) {
    cfg.grid.resolution = n;
    let aug = cfg.augmented().expect("augmented domain");
    (cfg, aug)
}

fn out_dir(tag: &str) -> PathBuf {
    std::env::temp_dir().join("inclusion-acceptance").join(tag)
}

fn cli(cmd: Command, config: &str) -> Result<RunSummary, String> {
    let mut opts = RunOptions::new(configs_dir().join(config));
    opts.out = Some(out_dir(&format!("{}-{}", config.trim_end_matches(".toml"), cmd.name())));
    run(cmd, &opts).map_err(|e| e.to_string())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const PAIRS: [&str; 5] = ["identical.toml", "ball_pair.toml", "anisotropic.toml", "ball_vs_empty.toml", "eigen_regime.toml"];

/// Every shipped medium with its inclusion, at 24³.
fn shipped_media() -> Vec<(String, RunConfig, MediumSpec, InclusionShape, AugmentedDomain)> {
    let mut out = Vec::new();
    for name in PAIRS {
        let (cfg, aug) = at_resolution(load(name), 24);
        let mut members = vec![(cfg.medium.clone(), cfg.inclusion.clone())];
        if !cfg.is_identical_pair() {
            members.push((cfg.second_medium().clone(), cfg.second_inclusion().clone()));
        }
        for (k, (m, s)) in members.into_iter().enumerate() {
            let shape = InclusionShape::rasterize(s, aug.grid()).unwrap();
            out.push((format!("{name}#{}", k + 1), cfg.clone(), m, shape, aug.clone()));
        }
    }
    let (cfg, aug) = at_resolution(load("sweep.toml"), 24);
    let family = cfg.sweep.clone().unwrap();
    let shape = InclusionShape::rasterize(family.base.clone(), aug.grid()).unwrap();
    out.push(("sweep.toml#base".into(), cfg.clone(), cfg.medium.clone(), shape, aug));
    out
}

fn c1_reciprocity() -> Result<Outcome, String> {
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut n = 0;
    for (_, cfg, spec, shape, aug) in shipped_media() {
        let start = Instant::now();
        let medium = build_medium(&spec, &aug, &shape).map_err(err)?;
        let solver = GreenSolver::new(&aug, &medium, Impedance::Plus, cfg.solver, Execution::default()).map_err(err)?;
        let poles = if cfg.poles.green.len() >= 3 { cfg.poles.green.clone() } else { DEFAULT_POLES.to_vec() };
        worst = worst.max(check_symmetry(&solver, &poles).map_err(err)?);
        slowest = slowest.max(start.elapsed().as_secs_f64());
        n += 1;
    }
    Ok(Outcome {
        pass: worst <= 2e-2 && slowest <= 300.0,
        detail: format!("{n} media at 24^3, max asymmetry {worst:.2e} (<= 2e-2), slowest {slowest:.1}s (<= 300s)"),
    })
}

fn c2_recursion() -> Result<Outcome, String> {
    let layout = |n: usize| AugmentedDomain::from_box([0.0; 3], [1.0; 3], [0.125, 0.125], [0.875, 0.875], 0.375, n).unwrap();
    let exec = Execution::default();
    let opts = SolverOptions::default();
    let a = layout(16);
    let y = [0.53125; 3];
    let free = MediumField::homogeneous(a.grid(), IDENTITY, 0.0);
    let direct = GreenSolver::new(&a, &free, Impedance::Plus, opts, exec).map_err(err)?.green(y).map_err(err)?;
    let rec = RecursiveGreenSolver::new(&a, &free, opts, exec).map_err(err)?.green(y).map_err(err)?;
    let exact = direct.values.values() == rec.values.values();
    let spec = MediumSpec { q_b: ScalarSpec::Constant(1.0), q_d: ScalarSpec::Constant(1.0), ..MediumSpec::default() };
    let mut diffs = Vec::new();
    for n in [16, 32] {
        let a = layout(n);
        let m = build_medium(&spec, &a, &InclusionShape::empty(a.grid())).map_err(err)?;
        let y = [0.5 + 0.5 / n as f64; 3];
        let d = GreenSolver::new(&a, &m, Impedance::Plus, opts, exec).map_err(err)?.green(y).map_err(err)?;
        let r = RecursiveGreenSolver::new(&a, &m, opts, exec).map_err(err)?.green(y).map_err(err)?;
        diffs.push(relative_difference(&r, &d));
    }
    let ratio = diffs[0] / diffs[1].max(f64::MIN_POSITIVE);
    let improving = ratio >= 1.8 || diffs.iter().all(|&d| d <= 1e-8);
    Ok(Outcome {
        pass: exact && diffs.iter().all(|&d| d <= 0.05) && improving,
        detail: format!(
            "q=0 identical: {exact}; |q|=1 difference 16^3 {:.2e}, 32^3 {:.2e} (<= 5e-2); ratio {ratio:.2} (>= 1.8 or both at round-off <= 1e-8)",
            diffs[0], diffs[1]
        ),
    })
}

fn c3_decay() -> Result<Outcome, String> {
    let n = 32;
    let g = Arc::new(Grid::build([0.0; 3], [1.0; 3], n).map_err(err)?);
    let m = MediumField::homogeneous(&g, IDENTITY, 0.0);
    let s = GreenSolver::on_grid(&g, &m, Impedance::Plus, SolverOptions::default(), Execution::default()).map_err(err)?;
    let h = g.spacing();
    let y = [0.5 + 0.5 * h; 3];
    let f = s
        .green_with_data(y, |p| {
            let r = ((p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2) + (p[2] - y[2]).powi(2)).sqrt();
            C::new(free_space_kernel(r), 0.0)
        })
        .map_err(err)?;
    let value = decay_fit(&f, &f.values.abs_values(), 3.0 * h, 30.0 * h, 8).map_err(err)?.slope;
    let grad: Vec<f64> = f.gradient().iter().map(gradient_norm).collect();
    let gradient = decay_fit(&f, &grad, 3.0 * h, 30.0 * h, 8).map_err(err)?.slope;
    Ok(Outcome {
        pass: (value + 1.0).abs() <= 0.2 && (gradient + 2.0).abs() <= 0.2,
        detail: format!("32^3 slopes over r in [3h, 30h]: |G| {value:.3} (-1 +- 0.2), |grad G| {gradient:.3} (-2 +- 0.2)"),
    })
}

fn c4_layered() -> Result<Outcome, String> {
    let k = LayeredKernel::isotropic(2.0, 1.0);
    let oracle = layered_h([0.0, 0.0, 0.1], [0.0, 0.0, 0.2], &k).map_err(err)?;
    let spec = load("fundsol.toml").fundsol.expect("fundsol section");
    let kernel = spec.kernel().map_err(err)?;
    let (dv, df) = transmission_check(&kernel, spec.pole, &spec.probes, spec.step).map_err(err)?;
    let r: Vec<f64> = spec
        .resolutions
        .iter()
        .map(|&n| operator_residual(&kernel, spec.pole, n, spec.exclude, Execution::default()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let ratio = r[0] / r[1];
    Ok(Outcome {
        pass: (oracle - 0.442097).abs() <= 1e-6 && dv <= 1e-4 && df <= 1e-4 && ratio >= 3.5,
        detail: format!(
            "H = {oracle:.7} (0.442097 +- 1e-6); value mismatch {dv:.1e}, flux mismatch {df:.1e} (<= 1e-4); residual ratio {ratio:.2} (>= 3.5)"
        ),
    })
}

fn identity_defect(aug: &AugmentedDomain, a: &Configuration, b: &Configuration, dy: &PoleGrid, dz: &PoleGrid) -> Result<f64, String> {
    let (ys, zs) = (dy.points(), dz.points());
    let picks = [(0, 0), (ys.len() / 2, zs.len() / 3), (ys.len() - 1, zs.len() - 1)];
    let mut worst: f64 = 0.0;
    for (i, j) in picks {
        let g1 = a.green(ys[i]).map_err(err)?;
        let g2 = b.green(zs[j]).map_err(err)?;
        let sb = s_boundary(aug, &g1, &g2, &a.medium, &b.medium).map_err(err)?;
        let sv = s_volume(aug, &g1, &g2, &a.medium, &b.medium).map_err(err)?;
        worst = worst.max((sb - sv).norm() / sv.norm().max(1e-14));
    }
    Ok(worst)
}

fn c5_identity() -> Result<Outcome, String> {
    let identical = load("identical.toml");
    let (dy, dz) = (identical.poles.dy.clone().unwrap(), identical.poles.dz.clone().unwrap());
    let exec = Execution::default();
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    let mut count = 0;
    for name in PAIRS {
        let (cfg, aug) = at_resolution(load(name), 24);
        let (a, b) = cfg.pair(&aug, exec).map_err(err)?;
        let gy = cfg.poles.dy.clone().unwrap_or_else(|| dy.clone());
        let gz = cfg.poles.dz.clone().unwrap_or_else(|| dz.clone());
        let d = identity_defect(&aug, &a, &b, &gy, &gz)?;
        if d > worst {
            worst = d;
            worst_at = name.to_string();
        }
        count += 1;
    }
    let (cfg, aug) = at_resolution(load("sweep.toml"), 24);
    let family = cfg.sweep.clone().unwrap();
    let shape = |f: f64| InclusionShape::rasterize(family.base.dilated(f).unwrap(), aug.grid()).unwrap();
    let base = Configuration::new(&aug, &cfg.medium, shape(1.0), cfg.solver, exec).map_err(err)?;
    for f in [family.factors[0], family.factors[family.factors.len() - 1]] {
        let trial = Configuration::new(&aug, &cfg.medium, shape(f), cfg.solver, exec).map_err(err)?;
        let d = identity_defect(&aug, &base, &trial, cfg.poles.dy.as_ref().unwrap(), cfg.poles.dz.as_ref().unwrap())?;
        if d > worst {
            worst = d;
            worst_at = format!("sweep.toml x{f}");
        }
        count += 1;
    }
    Ok(Outcome { pass: worst <= 5e-2, detail: format!("{count} pairs at 24^3, max |s_b - s_v| / max(|s_v|, 1e-14) = {worst:.2e} at {worst_at} (<= 5e-2)") })
}

fn c6_blow_up() -> Result<Outcome, String> {
    let start = Instant::now();
    let s = cli(Command::Probe, "ball_vs_empty.toml")?;
    let secs = start.elapsed().as_secs_f64();
    let rows = std::fs::read_to_string(s.dir.join("probe.csv")).map_err(err)?.lines().filter(|l| !l.starts_with('#')).count() - 1;
    let slope = s.results.get("slope").copied().unwrap_or(f64::NAN);
    Ok(Outcome {
        pass: (-1.35..=-0.65).contains(&slope) && secs <= 1200.0,
        detail: format!("ball vs empty at 32^3, {rows} offsets: slope {slope:.3} (in [-1.35, -0.65]), {secs:.0}s (<= 1200s)"),
    })
}

fn c7_degenerate() -> Result<Outcome, String> {
    let v = cli(Command::VerifyAll, "identical.toml")?;
    let p = cli(Command::Probe, "identical.toml")?;
    let misfit = v.results["misfit"];
    let aperture = v.results["aperture"];
    let f = v.results["f_coincident_abs"].max(p.results["max_abs_f"]);
    Ok(Outcome {
        pass: misfit <= 1e-12 && aperture <= 1e-8 && f <= 1e-10,
        detail: format!("misfit {misfit:.1e} (<= 1e-12), aperture {aperture:.1e} (<= 1e-8), max |f| {f:.1e} (<= 1e-10)"),
    })
}

fn c8_stability() -> Result<Outcome, String> {
    let s = cli(Command::Sweep, "sweep.toml")?;
    let monotone = s.checks.iter().any(|c| c.name == "monotone" && c.pass);
    let corr = s.results["corr_misfit"];
    let eta = s.results["eta_misfit"];
    Ok(Outcome {
        pass: monotone && corr >= 0.9,
        detail: format!("6 dilations at 24^3: monotone {monotone}; best eta {eta}, correlation {corr:.4} (>= 0.9)"),
    })
}

fn matrix(rows: usize, cols: usize, seed: f64) -> DMatrix<C> {
    DMatrix::from_fn(rows, cols, |i, j| {
        let t = seed + 1.7 * i as f64 + 0.61 * j as f64 + 0.13 * (i * j) as f64;
        C::new((3.1 * t).sin(), (1.3 * t + 0.4).cos())
    })
}

fn c9_aperture() -> Result<Outcome, String> {
    let col = |v: [f64; 2]| DMatrix::from_iterator(2, 1, v.iter().map(|&x| C::new(x, 0.0)));
    let e1 = col([1.0, 0.0]);
    let t = 30f64.to_radians();
    let cases = [(col([2.0, 0.0]), 0.0), (col([t.cos(), t.sin()]), 0.5), (col([0.0, 1.0]), 1.0)];
    let mut oracle: f64 = 0.0;
    for (b, want) in &cases {
        oracle = oracle.max((subspace_aperture(&e1, b).map_err(err)?.value - want).abs());
    }
    let mut agree: f64 = 0.0;
    let mut tested = 0;
    for (k, (n, d)) in [(6, 2), (10, 3), (16, 5), (32, 8)].into_iter().enumerate() {
        let a = matrix(n, d, k as f64);
        let b = &a + matrix(n, d, 10.0 + k as f64) * C::new(0.05 * (k + 1) as f64, 0.0);
        let ap = subspace_aperture(&a, &b).map_err(err)?;
        if ap.forward < 1.0 && ap.backward < 1.0 {
            agree = agree.max((ap.forward - ap.backward).abs());
            tested += 1;
        }
    }
    Ok(Outcome {
        pass: oracle <= 1e-9 && agree <= 1e-6 && tested > 0,
        detail: format!("2-D angles 0, 0.5, 1 max error {oracle:.1e} (<= 1e-9); directed agreement {agree:.1e} over {tested} pairs (<= 1e-6)"),
    })
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("Green reciprocity", c1_reciprocity),
        ("Recursion vs direct", c2_recursion),
        ("Pointwise decay", c3_decay),
        ("Layered kernel", c4_layered),
        ("Boundary-volume identity", c5_identity),
        ("Blow-up exponent", c6_blow_up),
        ("Degenerate-pair zeroing", c7_degenerate),
        ("Stability trend", c8_stability),
        ("Aperture oracle", c9_aperture),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|s| name.to_lowercase().contains(&s.to_lowercase()) || s == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = f().unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}") });
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (outcome.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("[{tag}] {id}. {name}: {} [{:.0}s]", outcome.detail, start.elapsed().as_secs_f64());
        if !outcome.pass && !known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
