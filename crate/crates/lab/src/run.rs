//! Subcommand pipelines. Each returns its check records; the caller writes
//! them and derives the exit code.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nonlocal_core::grid::Grid;
use nonlocal_core::lemma::{self, LemmaReport};
use nonlocal_core::levy::{check_h, default_grids, levy_density_sbm, psi_star, stable_levy_density, verify_nu_bounds};
use nonlocal_core::math::log_space;
use nonlocal_core::probe::{fit_holder, holder_seminorm_report, noise_floor, oscillation_profile, Fit};
use nonlocal_core::scaling::{check_weak_scaling, default_scaling_grids};
use nonlocal_core::solver::solve;
use nonlocal_core::{Error, GridFunction, Point, QuadratureConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{bernstein, Config};
use crate::report::{config_hash, emit_report, write_manifest, write_profile, write_solution, Format, Record, RunManifest};
use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    VerifyLemmas,
    Solve,
    Probe,
    Levy,
    Constants,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyLemmas => "verify-lemmas",
            Command::Solve => "solve",
            Command::Probe => "probe",
            Command::Levy => "levy",
            Command::Constants => "constants",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: Command,
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub tolerance_scale: f64,
}

/// Records, extra data files and manifest details of one pipeline.
#[derive(Debug, Default)]
pub struct Output {
    pub records: Vec<Record>,
    pub files: Vec<PathBuf>,
    pub details: BTreeMap<String, f64>,
}

impl Output {
    fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    fn lemma(&mut self, rep: &LemmaReport) {
        self.records.extend(rep.records.iter().map(Record::from));
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.pass)
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub output: Output,
    pub manifest: RunManifest,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.manifest.checks_failed == 0 {
            0
        } else {
            1
        }
    }
}

pub fn execute(opts: &RunOptions) -> Result<Outcome, LabError> {
    if !(opts.tolerance_scale > 0.0 && opts.tolerance_scale.is_finite()) {
        return Err(LabError::Config("--tolerance-scale must be positive".into()));
    }
    let (cfg, bytes) = Config::load(&opts.config)?;
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| LabError::Io(format!("{}: {e}", opts.out_dir.display())))?;
    let start = Instant::now();
    let mut out = dispatch(&cfg, opts)?;
    let report = emit_report(&out.records, opts.format, &opts.out_dir)?;
    out.files.insert(0, report);
    let failed = out.failures().count();
    let manifest = RunManifest {
        command: opts.command.name().into(),
        config_hash: config_hash(&bytes),
        seed: opts.seed,
        tolerance_scale: opts.tolerance_scale,
        wall_time_s: start.elapsed().as_secs_f64(),
        checks_passed: out.records.len() - failed,
        checks_failed: failed,
        outputs: out.files.iter().map(|p| p.display().to_string()).collect(),
        details: out.details.clone(),
    };
    write_manifest(&opts.out_dir, &manifest)?;
    Ok(Outcome { output: out, manifest })
}

pub fn dispatch(cfg: &Config, opts: &RunOptions) -> Result<Output, LabError> {
    match opts.command {
        Command::Constants => constants(cfg),
        Command::VerifyLemmas => verify_lemmas(cfg, opts.seed, opts.tolerance_scale),
        Command::Solve => solve_cmd(cfg, &opts.out_dir, opts.tolerance_scale),
        Command::Probe => probe(cfg, &opts.out_dir, opts.tolerance_scale),
        Command::Levy => levy(cfg, opts.tolerance_scale),
    }
}

pub fn constants(cfg: &Config) -> Result<Output, LabError> {
    let k = cfg.kernel.kernel()?;
    let class = cfg.class.class(&k)?;
    let quad = cfg.quadrature.config();
    let c = k.scaling.cert;
    let base = [("d", k.d as f64), ("a1", c.a1), ("a2", c.a2), ("delta1", c.delta1), ("delta2", c.delta2), ("r0", c.r0), ("m0", k.m0)];
    let mut out = Output::default();
    out.push(Record::value("C1", &base, lemma::wedge_constant(&k)));
    match lemma::theorem_constants(&class, &quad) {
        Ok((lc, g)) => {
            let cls = [("lambda", class.lambda), ("big_lambda", class.big_lambda), ("symmetric", class.symmetric as u8 as f64)];
            for (name, v) in [
                ("C2", lc.c2),
                ("C2_active", lc.c2_active),
                ("C3", lc.c3),
                ("epsilon", g.epsilon),
                ("eta1", lc.eta1),
                ("r1", lc.r1),
                ("theta", lc.theta),
                ("gamma", lc.gamma),
                ("alpha", lc.alpha),
            ] {
                out.push(Record::value(name, &cls, v));
            }
            out.details.insert("theta_capped".into(), lc.theta_capped as u8 as f64);
        }
        Err(Error::CaseMismatch(msg)) => {
            eprintln!("case condition: {msg}");
            out.push(Record::new("case_condition", &[("delta1", c.delta1), ("delta2", c.delta2)], c.delta1, 1.0, f64::NAN, false));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}

fn points(raw: &[[f64; 2]], d: usize) -> Vec<Point> {
    raw.iter().map(|&p| if d == 1 { Point([p[0], 0.0]) } else { Point(p) }).collect()
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Point {
    if d == 1 {
        return Point([if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0]);
    }
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    Point([t.cos(), t.sin()])
}

pub fn verify_lemmas(cfg: &Config, seed: u64, tol_scale: f64) -> Result<Output, LabError> {
    let k = cfg.kernel.kernel()?;
    let quad = cfg.quadrature.config();
    let lc = &cfg.lemmas;
    let tol = lc.tolerance * tol_scale;
    let r0 = k.r0();
    let mut out = Output::default();

    // A false certificate voids every later bound, so stop at its witness.
    let (sg, tg) = default_scaling_grids(r0);
    let ws = check_weak_scaling(&k.scaling, &sg, &tg)?;
    let (s, t) = ws.violation.unwrap_or((f64::NAN, f64::NAN));
    out.push(Record::new("weak_scaling:lower", &[("s", s), ("t", t)], 0.0 - ws.worst_lower_margin, 0.0, ws.worst_lower_margin, ws.worst_lower_margin >= -tol));
    out.push(Record::new("weak_scaling:upper", &[("s", s), ("t", t)], 0.0 - ws.worst_upper_margin, 0.0, ws.worst_upper_margin, ws.worst_upper_margin >= -tol));
    if !ws.pass {
        return Ok(out);
    }

    let radii = log_space(lc.r_min_fraction * r0, r0 * (1.0 - 1e-9), lc.radii);
    let base = points(&lc.base_points, k.d);
    out.lemma(&lemma::verify_lemma_integrals(&k, &radii, &base, tol, &quad)?);

    for &eps in &lc.epsilons {
        let g = lemma::find_eta_r(&k, eps, &quad)?;
        let d1 = k.scaling.cert.delta1;
        out.push(Record::new("growth:eta_range", &[("epsilon", eps)], g.eta_eps, d1, (d1 - g.eta_eps) / d1, g.eta_eps > 0.0 && g.eta_eps < d1));
        // fresh sample, offset from the one find_eta_r used
        let s = log_space(1.7e-3 * g.r_eps, 0.93 * g.r_eps, lc.growth_samples);
        out.lemma(&lemma::validate_growth(&k, &g, &s, &base, &quad)?);
    }

    let class = cfg.class.class(&k)?;
    match lemma::theorem_constants(&class, &quad) {
        Ok((consts, _)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<(Point, f64, Point)> = (0..lc.bump_samples)
                .map(|_| {
                    let z = random_unit(&mut rng, k.d) * rng.gen_range(0.0..0.5);
                    let r = r0 * rng.gen_range(0.05..1.0);
                    let x = z + random_unit(&mut rng, k.d) * (r * rng.gen_range(0.0..3.0));
                    (z, r, x)
                })
                .collect();
            out.lemma(&lemma::verify_bump_bound(&class, &consts, &samples, lc.bump_tolerance * tol_scale, &quad)?);
        }
        Err(Error::CaseMismatch(msg)) => {
            eprintln!("bump bound skipped: {msg}");
            out.details.insert("bump_skipped".into(), 1.0);
        }
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}

fn solver_failure(e: &Error) -> bool {
    matches!(e, Error::IterationBudget { .. } | Error::PolicyCycle(_))
}

fn solve_grid(cfg: &Config, quad: &QuadratureConfig, out: &mut Output) -> Result<Option<GridFunction>, LabError> {
    let spec = cfg.grid.problem(&cfg.kernel, &cfg.class, quad)?;
    match solve(&spec) {
        Ok(sol) => {
            out.details.insert("iterations".into(), sol.iterations as f64);
            out.details.insert("residual".into(), sol.residual);
            out.details.insert("unknowns".into(), sol.unknowns.len() as f64);
            out.push(Record::new("solve:converged", &[("cells", spec.cells as f64)], sol.residual, spec.tolerance, 0.0, true));
            Ok(Some(sol.u))
        }
        Err(e) if solver_failure(&e) => {
            eprintln!("solver: {e}");
            out.push(Record::new("solve:converged", &[("cells", spec.cells as f64)], f64::NAN, spec.tolerance, f64::NAN, false));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn solve_cmd(cfg: &Config, dir: &Path, tol_scale: f64) -> Result<Output, LabError> {
    let mut quad = cfg.quadrature.config();
    quad = quad.scaled(tol_scale);
    let mut out = Output::default();
    if let Some(u) = solve_grid(cfg, &quad, &mut out)? {
        let path = dir.join("solution.csv");
        write_solution(&path, &u)?;
        out.files.push(path);
        let (lo, hi) = u.range;
        let (min, max) = u.domain_nodes().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), n| (a.min(u.values[n]), b.max(u.values[n])));
        let slack = 1e-8 * tol_scale * (1.0 + lo.abs().max(hi.abs()));
        // discrete maximum principle against the exterior range
        out.push(Record::new("solve:max_principle", &[("lo", lo), ("hi", hi)], max, hi + slack, hi + slack - max, max <= hi + slack));
        out.push(Record::new("solve:min_principle", &[("lo", lo), ("hi", hi)], lo - slack, min, min - lo + slack, min >= lo - slack));
    }
    Ok(out)
}

/// `|x - c|^β` on the lattice of `[grid]`, with `c` snapped to a node.
fn fixture(cfg: &Config, centre: Point) -> Result<(GridFunction, Point), LabError> {
    let grid = Grid::covering(cfg.kernel.d, &cfg.grid.domain()?, cfg.grid.cells)?;
    let c = (0..grid.len()).map(|n| grid.node(n)).min_by(|a, b| a.dist(centre).total_cmp(&b.dist(centre))).unwrap_or(centre);
    let beta = cfg.probe.fixture_beta;
    let f = move |p: Point| p.dist(c).powf(beta);
    let values: Vec<f64> = grid.nodes().map(f).collect();
    let (lo, hi) = grid.hull();
    let bound = (lo.dist(c)).max(hi.dist(c)).max(Point([lo.x(), hi.y()]).dist(c)).max(Point([hi.x(), lo.y()]).dist(c)).powf(beta);
    let mask = vec![true; grid.len()];
    let u = GridFunction::with_range(grid, values, mask, Arc::new(move |p| f(p).min(bound)), (0.0, bound))?;
    Ok((u, c))
}

pub fn probe(cfg: &Config, dir: &Path, tol_scale: f64) -> Result<Output, LabError> {
    let pc = &cfg.probe;
    let quad = cfg.quadrature.config().scaled(tol_scale);
    let mut out = Output::default();
    let centres = points(&pc.centers, cfg.kernel.d);
    let is_fixture = match pc.source.as_str() {
        "solve" => false,
        "fixture" => true,
        other => return Err(LabError::Config(format!("unknown probe source `{other}`"))),
    };
    let solved = if is_fixture {
        None
    } else {
        match solve_grid(cfg, &quad, &mut out)? {
            Some(u) => Some(u),
            None => return Ok(out),
        }
    };
    let mut fitted = f64::INFINITY;
    let mut first: Option<(GridFunction, Point)> = None;
    for (i, &c0) in centres.iter().enumerate() {
        let (u, c) = match &solved {
            Some(u) => (u.clone(), c0),
            None => fixture(cfg, c0)?,
        };
        let floor = noise_floor(cfg.grid.tolerance * tol_scale, u.max_abs());
        let prof = oscillation_profile(&u, c, pc.scale, pc.depth, floor)?;
        let path = dir.join(format!("profile_{i}.csv"));
        write_profile(&path, &prof)?;
        out.files.push(path);
        let at = [("center", i as f64), ("x1", c.x()), ("x2", c.y()), ("levels", prof.osc.len() as f64)];
        out.push(Record::new("probe:non_increasing", &at, 0.0, 0.0, 0.0, prof.is_non_increasing()));
        match fit_holder(&prof)? {
            Fit::Flat => out.push(Record::value("probe:flat", &at, 0.0)),
            Fit::Holder(f) => {
                fitted = fitted.min(f.alpha_emp);
                out.push(Record::new("probe:r_squared", &at, pc.min_r_squared, f.r_squared, f.r_squared - pc.min_r_squared, f.r_squared >= pc.min_r_squared));
                if is_fixture {
                    let b = pc.fixture_beta;
                    let err = (f.alpha_emp - b).abs();
                    out.push(Record::new("probe:alpha_fixture", &at, err, 0.01, 0.01 - err, err <= 0.01));
                } else {
                    out.push(Record::new("probe:alpha_min", &at, pc.min_alpha, f.alpha_emp, f.alpha_emp - pc.min_alpha, f.alpha_emp > pc.min_alpha));
                }
                out.push(Record::value("probe:c_emp", &at, f.c_emp));
                out.push(Record::value("probe:gamma_emp", &at, f.gamma_emp));
            }
        }
        if first.is_none() {
            first = Some((u, c));
        }
    }
    if let Some((u, c)) = first {
        let alpha = pc.seminorm_alpha.unwrap_or(if fitted.is_finite() && fitted > 0.0 { fitted } else { 0.5 });
        let s = holder_seminorm_report(&u, c, pc.seminorm_radius, cfg.kernel.r0, alpha)?;
        out.push(Record::value("probe:seminorm", &[("alpha", alpha), ("r", pc.seminorm_radius)], s.seminorm));
        out.push(Record::value("probe:c_impl", &[("alpha", alpha), ("r", pc.seminorm_radius)], s.bound_constant));
        out.details.insert("seminorm_pairs_used".into(), s.pairs_used as f64);
        out.details.insert("seminorm_pairs_total".into(), s.pairs_total as f64);
        out.details.insert("seminorm_stride".into(), s.stride as f64);
    }
    Ok(out)
}

pub fn levy(cfg: &Config, tol_scale: f64) -> Result<Output, LabError> {
    let lc = &cfg.levy;
    let pi2 = std::f64::consts::PI.powi(2);
    let mut out = Output::default();
    for fam in &lc.families {
        let spec = bernstein(fam, lc.alpha, lc.beta, lc.p, lc.m)?;
        let name = spec.name();
        let r0 = spec.natural_r0();

        let ts = log_space(1e-3 / r0, 1e3 / r0, lc.samples);
        let worst = ts.iter().map(|&t| psi_star(&spec, t) / spec.psi(t)).fold(0.0, f64::max);
        out.push(Record::new(format!("levy:{name}:psi_star"), &[("samples", lc.samples as f64)], worst, pi2, (pi2 - worst) / pi2, worst <= pi2));

        let (sg, tg) = default_grids(r0);
        let fit = check_h(|t| spec.psi(t), r0, &sg, &tg);
        out.push(Record::new(
            format!("levy:{name}:scaling_fit"),
            &[("a1", fit.a1), ("a2", fit.a2), ("delta1", fit.delta1), ("delta2", fit.delta2), ("r0", r0)],
            fit.delta2,
            2.0,
            2.0 - fit.delta2,
            fit.pass,
        ));

        let radii = log_space(1e-3 * r0, r0, lc.radii);
        if name == "stable" {
            let mut worst: f64 = 0.0;
            for &r in &radii {
                let nu = levy_density_sbm(&spec, lc.d, r)?;
                let exact = stable_levy_density(lc.d, lc.alpha, r);
                worst = worst.max((nu - exact).abs() / exact);
            }
            let tol = 1e-6 * tol_scale;
            out.push(Record::new("levy:stable:density", &[("d", lc.d as f64), ("alpha", lc.alpha)], worst, tol, (tol - worst) / tol, worst <= tol));
        }
        match verify_nu_bounds(&spec, lc.d, &radii) {
            Ok(rep) => {
                let spread = rep.spread();
                let at = [("min_ratio", rep.min_ratio), ("max_ratio", rep.max_ratio), ("r0", r0)];
                if name == "relativistic" {
                    out.push(Record::new("levy:relativistic:spread", &at, spread, lc.max_spread, (lc.max_spread - spread) / lc.max_spread, rep.pass && spread < lc.max_spread));
                } else {
                    out.push(Record::new(format!("levy:{name}:ratios_positive"), &at, spread, f64::INFINITY, f64::INFINITY, rep.pass));
                }
            }
            Err(Error::Unsupported(msg)) => {
                eprintln!("{name}: density comparison not available: {msg}");
                out.details.insert(format!("{name}_density_unsupported"), 1.0);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}
