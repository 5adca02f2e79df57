//! The five configured experiments.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use tfloc::calculus::{self, CalculusWeights, ExpandOptions, MultiIndex, Windows};
use tfloc::fredholm::{self, Check, FredholmThresholds};
use tfloc::linalg::{self, CMatrix};
use tfloc::locop::{self, Direction, LocOpSpec, OperatorMatrix};
use tfloc::modspace::{m1_norm, MixedNormParams};
use tfloc::signal::{gaussian_window, inner};
use tfloc::stft::{covariance_check, StftEngine};
use tfloc::symbol::{SymbolExpr, SymbolSpec};
use tfloc::weights::{self, WeightSpec};
use tfloc::{PhasePlane, PhasePoint};

use crate::config::{Config, Experiment, UsageError};
use crate::report::{num, GridInfo, Metric, Report, Table};

pub const PROFILE_LEN: usize = 60;
pub const TAIL_INDEX: usize = 40;

#[derive(Debug)]
pub enum RunError {
    Usage(UsageError),
    Compute(tfloc::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Usage(e) => write!(f, "{e}"),
            RunError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<UsageError> for RunError {
    fn from(e: UsageError) -> Self {
        RunError::Usage(e)
    }
}

impl From<tfloc::Error> for RunError {
    fn from(e: tfloc::Error) -> Self {
        RunError::Compute(e)
    }
}

type Out<T> = std::result::Result<T, RunError>;

pub fn run(cfg: &Config, experiment: Experiment) -> Out<Report> {
    let grid = cfg.grid()?;
    let mut report = Report::new(experiment.name(), cfg.seed, GridInfo { width: grid.width(), points: grid.points() });
    match experiment {
        Experiment::StftIdentities => stft_identities(cfg, &mut report)?,
        Experiment::LocopBounds => locop_bounds(cfg, &mut report)?,
        Experiment::CalculusExpand => calculus_expand(cfg, &mut report)?,
        Experiment::FredholmCheck => fredholm_check(cfg, &mut report)?,
        Experiment::WeightsAudit => weights_audit(cfg, &mut report)?,
    }
    report.finish();
    Ok(report)
}

fn check_metric(c: &Check) -> Metric {
    if c.upper {
        Metric::at_most(c.name.clone(), c.value, c.threshold)
    } else {
        Metric::at_least(c.name.clone(), c.value, c.threshold)
    }
}

fn profile_table(columns: &[(&str, &[f64])]) -> Table {
    let mut header = vec!["index"];
    header.extend(columns.iter().map(|c| c.0));
    let mut t = Table::new(&header);
    let len = columns.iter().map(|c| c.1.len()).max().unwrap_or(0);
    for i in 0..len {
        let mut row = vec![(i + 1).to_string()];
        for (_, v) in columns {
            row.push(v.get(i).map(|x| num(*x)).unwrap_or_default());
        }
        t.push(row);
    }
    t
}

fn matrix_table(m: &CMatrix) -> Table {
    let mut t = Table::new(&["row", "col", "re", "im"]);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            t.push(vec![i.to_string(), j.to_string(), num(v.re), num(v.im)]);
        }
    }
    t
}

fn label(w: &WeightSpec) -> String {
    w.to_string()
}

// ---------------------------------------------------------------- stft

const STFT_KEYS: &[&str] = &["covariance_max", "inversion_max", "gaussian_max"];

fn stft_identities(cfg: &Config, report: &mut Report) -> Out<()> {
    cfg.check_threshold_keys(STFT_KEYS)?;
    let grid = cfg.grid()?;
    let engine = StftEngine::new(grid)?;
    let f = cfg.stft.signal.build(grid, &cfg.base_dir)?;
    let [g, ..] = cfg.windows()?;

    // covariance modulus identity over seeded lattice shifts
    let cov_tol = cfg.threshold("covariance_max", 1e-9);
    let scale = f.norm() * g.norm();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let reach = (grid.points() / 8).max(1) as i64;
    let mut table = Table::new(&["shift_x", "shift_omega", "deviation"]);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.stft.shifts {
        let p = rng.gen_range(-reach..=reach);
        let q = rng.gen_range(-reach..=reach);
        let y = PhasePoint::new(p as f64 * grid.step(), q as f64 * grid.freq_step());
        let dev = covariance_check(&f, &g, y)? / scale;
        worst = worst.max(dev);
        table.push(vec![num(y.x), num(y.omega), num(dev)]);
    }
    report.metric(Metric::at_most("covariance deviation / (|f| |g|)", worst, cov_tol));
    report.table("covariance.csv", table);

    // inversion V*_γ V_g f = ⟨γ, g⟩ f
    let inv_tol = cfg.threshold("inversion_max", 1e-8);
    let mut table = Table::new(&["pair", "inner_re", "inner_im", "relative_error"]);
    for (i, [gamma, win]) in cfg.stft.inversion_pairs.iter().enumerate() {
        let gamma = gamma.build(grid, &cfg.base_dir)?;
        let win = win.build(grid, &cfg.base_dir)?;
        let c = inner(&gamma, &win)?;
        if c.norm() < 1e-12 {
            return Err(UsageError(format!("inversion pair {i} has ⟨γ, g⟩ = 0")).into());
        }
        let rec = engine.adjoint(&engine.stft(&f, &win)?, &gamma)?.scale(c.inv());
        let err = rec.sub(&f)?.norm() / f.norm();
        report.metric(Metric::at_most(format!("inversion relative error, pair {}", i + 1), err, inv_tol));
        table.push(vec![(i + 1).to_string(), num(c.re), num(c.im), num(err)]);
    }
    report.table("inversion.csv", table);

    // Gaussian ground truth |V_{φ₀}φ₀| = 2^{-1/2} e^{-π|z|²/2}
    let phi0 = gaussian_window(grid);
    let v = engine.stft(&phi0, &phi0)?;
    let n = v.side();
    let mut table = Table::new(&["x", "omega", "measured", "closed_form"]);
    let mut err: f64 = 0.0;
    for (idx, val) in v.values().iter().enumerate() {
        let z = v.point(idx / n, idx % n);
        let exact = std::f64::consts::FRAC_1_SQRT_2 * (-std::f64::consts::PI * (z.x * z.x + z.omega * z.omega) / 2.0).exp();
        err = err.max((val.norm() - exact).abs());
        table.push(vec![num(z.x), num(z.omega), num(val.norm()), num(exact)]);
    }
    report.metric(Metric::at_most("gaussian STFT modulus max-abs error", err, cfg.threshold("gaussian_max", 1e-8)));
    report.table("stft_modulus.csv", table);
    report.metric(Metric::report("signal edge magnitude", f.edge_magnitude()));
    Ok(())
}

// ---------------------------------------------------------------- locop

const LOCOP_KEYS: &[&str] = &["identity_max", "identity_tail_min", "calibration_slack", "bound_constant"];

/// Norm in the direction's geometry: exact in the Hilbert case, otherwise a
/// probe lower bound. Returns `(value, is_lower_bound)`.
fn directed_norm(cfg: &Config, entries: &OperatorMatrix, seed: u64) -> Out<(f64, bool)> {
    let (src, tgt) = locop::mapping_geometry(&cfg.weights.m, &cfg.weights.mu, cfg.locop.direction);
    match cfg.locop.norms {
        Some(np) if !(np.p == 2.0 && np.q == 2.0) => {
            let s = MixedNormParams::new(np.p, np.q, src.m)?;
            let t = MixedNormParams::new(np.p, np.q, tgt.m)?;
            let op = entries.clone().with_norms(s, t);
            Ok((locop::probe_lower_bound(&op, cfg.locop.probes, seed)?, true))
        }
        _ => {
            let op = entries.clone().with_norms(src, tgt);
            Ok((locop::operator_norm_detailed(&op, seed)?.value, false))
        }
    }
}

/// `m(z)^{±1} Σ_k c_k cos(2π(ξ_k x + η_k ω) + θ_k)`, scaled into the
/// direction's symbol class.
fn band_limited_symbol(cfg: &Config, rng: &mut ChaCha8Rng) -> Out<SymbolSpec> {
    let grid = cfg.grid()?;
    let b = cfg.locop.bandwidth;
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-b..=b), rng.gen_range(-b..=b), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    let m = cfg.weights.m.clone();
    let dir = cfg.locop.direction;
    let values = PhasePlane::from_real_fn(grid, |z| {
        let trig: f64 = modes
            .iter()
            .map(|&(c, xi, eta, th)| c * (std::f64::consts::TAU * (xi * z.x + eta * z.omega) + th).cos())
            .sum();
        match dir {
            Direction::I => trig * m.eval(z),
            Direction::Ii => trig / m.eval(z),
        }
    });
    Ok(SymbolSpec::Sampled(values))
}

fn locop_bounds(cfg: &Config, report: &mut Report) -> Out<()> {
    cfg.check_threshold_keys(LOCOP_KEYS)?;
    let [phi1, phi2, ..] = cfg.windows()?;
    let a = cfg.symbol_a()?;
    let w = &cfg.weights;
    let dir = cfg.locop.direction;
    report.detail("direction", dir);

    let op = LocOpSpec::new(a.clone(), phi1.clone(), phi2.clone())?;
    let entries = locop::matrix(&op)?;
    let (norm, lower) = directed_norm(cfg, &entries, cfg.seed)?;
    let bound = locop::mapping_bound(&op, &w.m, &w.v, &w.w, &w.mu, dir)?;
    let ratio = if bound > 0.0 { norm / bound } else { f64::NAN };
    let (src, tgt) = locop::mapping_geometry(&w.m, &w.mu, dir);
    let profile = locop::compactness_profile(&entries.clone().with_norms(src.clone(), tgt.clone()), PROFILE_LEN.min(entries.entries.ncols()))?;
    let tail = locop::tail_ratio(&profile, TAIL_INDEX.min(profile.len()));
    report.metric(Metric::report(if lower { "norm lower bound" } else { "norm" }, norm));
    report.metric(Metric::report("bound", bound));
    report.metric(Metric::report("ratio", ratio));
    report.metric(Metric::report(format!("sigma_{TAIL_INDEX}/sigma_1"), tail));
    if let Some(c) = cfg.thresholds.get("bound_constant") {
        report.metric(Metric::at_most("norm / (C bound)", norm / (c * bound), 1.0));
    }
    report.series("sigma_profile", profile.clone());
    report.detail("summary", json!({ "norm": norm, "bound": bound, "ratio": ratio, "sigma_tail": tail, "lower_bound": lower }));

    let vw = WeightSpec::product(w.v.clone(), w.w.clone());
    let (w1, w2) = match dir {
        Direction::I => (vw, w.w.clone()),
        Direction::Ii => (w.w.clone(), vw),
    };
    report.metric(Metric::report("window norm phi1 (M1)", m1_norm(&phi1, &w1)?));
    report.metric(Metric::report("window norm phi2 (M1)", m1_norm(&phi2, &w2)?));

    let mut columns: Vec<(&str, Vec<f64>)> = vec![("sigma", profile)];
    if cfg.locop.identity_control {
        let phi = phi1.normalized()?;
        let id = locop::matrix(&LocOpSpec::new(SymbolExpr::constant(1.0), phi.clone(), phi)?)?;
        let n = id.entries.ncols();
        let err = linalg::spectral_norm(&(&id.entries - CMatrix::identity(n, n)));
        report.metric(Metric::at_most("identity operator |A - I|", err, cfg.threshold("identity_max", 1e-8)));
        let geo = MixedNormParams::hilbert(w.mu.clone());
        let prof = locop::compactness_profile(&id.with_norms(geo.clone(), geo), PROFILE_LEN.min(n))?;
        let t = locop::tail_ratio(&prof, TAIL_INDEX.min(prof.len()));
        report.metric(identity_control(t, cfg.threshold("identity_tail_min", 0.9)));
        report.series("sigma_profile_identity", prof.clone());
        columns.push(("sigma_identity", prof));
    }
    let cols: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    report.table("singular_values.csv", profile_table(&cols));

    if cfg.locop.random_symbols > 0 {
        let slack = cfg.threshold("calibration_slack", 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
        let mut table = Table::new(&["symbol", "norm", "bound", "ratio"]);
        let mut ratios = Vec::new();
        for k in 0..cfg.locop.random_symbols {
            let sym = band_limited_symbol(cfg, &mut rng)?;
            let o = LocOpSpec::new(sym, phi1.clone(), phi2.clone())?;
            let (n, _) = directed_norm(cfg, &locop::matrix(&o)?, cfg.seed + k as u64)?;
            let b = locop::mapping_bound(&o, &w.m, &w.v, &w.w, &w.mu, dir)?;
            ratios.push(n / b);
            table.push(vec![(k + 1).to_string(), num(n), num(b), num(n / b)]);
        }
        let frozen = slack * ratios[0];
        let worst = ratios.iter().cloned().fold(0.0, f64::max);
        report.metric(Metric::report("calibrated constant C", frozen));
        report.metric(Metric::at_most("max norm / (C bound) over random symbols", worst / frozen, 1.0));
        report.series("random_symbol_ratios", ratios);
        report.table("calibration.csv", table);
    }

    if cfg.locop.asymmetry {
        let swapped = LocOpSpec::new(a, phi2, phi1)?;
        let (ns, _) = directed_norm(cfg, &locop::matrix(&swapped)?, cfg.seed)?;
        let bs = locop::mapping_bound(&swapped, &w.m, &w.v, &w.w, &w.mu, dir)?;
        report.metric(Metric::report("swapped windows: norm", ns));
        report.metric(Metric::report("swapped windows: bound", bs));
        report.metric(Metric::report("norm ratio original / swapped", norm / ns));
        report.detail("asymmetry", json!({ "original": { "norm": norm, "bound": bound }, "swapped": { "norm": ns, "bound": bs } }));
    }
    Ok(())
}

// ---------------------------------------------------------------- calculus

const CALCULUS_KEYS: &[&str] = &[
    "kernel_vs_diff_max",
    "sign_audit_max",
    "sweep_factor_max",
    "measured_norm_max",
    "relative_remainder_max",
];

fn calculus_expand(cfg: &Config, report: &mut Report) -> Out<()> {
    cfg.check_threshold_keys(CALCULUS_KEYS)?;
    let c = &cfg.calculus;
    let [p1, p2, p3, p4] = cfg.windows()?;
    let windows = Windows::new(p1, p2, p3, p4)?;
    let a = cfg.symbol_a()?;
    let b = cfg.symbol_b()?;
    let weights = CalculusWeights {
        m: cfg.weights.m.clone(),
        v: cfg.weights.v.clone(),
        w: cfg.weights.w.clone(),
        mu: cfg.weights.mu.clone(),
    };
    let options = ExpandOptions {
        symmetric: c.symmetric,
        sign_rule: c.sign_rule,
        kernel: c.kernel,
        weights,
        seed: cfg.seed,
        integral_form_samples: c.integral_form_samples,
        ..ExpandOptions::default()
    };
    let rep = calculus::expand(&a, &b, c.n, &windows, &options)?;
    let relative = if rep.lhs_norm > 0.0 { rep.measured_norm / rep.lhs_norm } else { rep.measured_norm };
    let ratio = if rep.bound_value > 0.0 { rep.measured_norm / rep.bound_value } else { f64::NAN };
    report.detail("n", c.n);
    report.detail("symmetric", c.symmetric);
    report.detail("sign_rule", c.sign_rule);
    report.metric(match cfg.thresholds.get("measured_norm_max") {
        Some(&t) => Metric::at_most("measured_norm", rep.measured_norm, t),
        None => Metric::report("measured_norm", rep.measured_norm),
    });
    report.metric(Metric::report("lhs_norm", rep.lhs_norm));
    report.metric(match cfg.thresholds.get("relative_remainder_max") {
        Some(&t) => Metric::at_most("measured_norm / lhs_norm", relative, t),
        None => Metric::report("measured_norm / lhs_norm", relative),
    });
    report.metric(Metric::report("bound", rep.bound_value));
    report.metric(Metric::report("measured_norm / bound", ratio));
    if let Some(k) = c.bound_constant {
        report.metric(Metric::at_most("measured_norm / (C bound)", rep.measured_norm / (k * rep.bound_value), 1.0));
    }
    let kernel_max = cfg.threshold("kernel_vs_diff_max", 1e-4);
    match rep.kernel_vs_diff_error {
        Some(e) => report.metric(Metric::at_most("kernel vs difference remainder", e, kernel_max)),
        None if rep.remainder_kernel.is_some() => {
            report.metric(Metric::at_most("kernel remainder / lhs (difference vanishes)", rep.kernel_vs_lhs_error.unwrap_or(0.0), kernel_max))
        }
        None => {}
    }
    if let Some(s) = rep.seam_fraction {
        report.metric(Metric::report("seam fraction of kernel remainder", s));
    }
    if let Some(e) = rep.integral_form_error {
        report.metric(Metric::report("integral-form kernel entry error", e));
    }

    let mut terms = Table::new(&["alpha_x", "alpha_omega", "coefficient", "term_norm"]);
    let mut term_json = Vec::new();
    for t in &rep.terms {
        let tn = linalg::spectral_norm(&t.term_matrix.entries);
        terms.push(vec![t.alpha.x.to_string(), t.alpha.omega.to_string(), num(t.coefficient), num(tn)]);
        term_json.push(json!({ "alpha": [t.alpha.x, t.alpha.omega], "coefficient": t.coefficient, "norm": tn }));
    }
    report.table("terms.csv", terms);

    let n = rep.remainder_diff.entries.ncols();
    let len = PROFILE_LEN.min(n);
    let top = |m: &CMatrix| -> Vec<f64> { linalg::singular_values(m).into_iter().take(len).collect() };
    let sd = top(&rep.remainder_diff.entries);
    report.series("remainder_profile_diff", sd.clone());
    let sk = rep.remainder_kernel.as_ref().map(|k| top(&k.entries));
    match &sk {
        Some(sk) => {
            report.series("remainder_profile_kernel", sk.clone());
            report.table("remainder_profile.csv", profile_table(&[("sigma_diff", &sd), ("sigma_kernel", sk)]));
        }
        None => report.table("remainder_profile.csv", profile_table(&[("sigma_diff", &sd)])),
    }
    if c.matrices {
        report.table("lhs.csv", matrix_table(&rep.lhs_matrix.entries));
        report.table("remainder_diff.csv", matrix_table(&rep.remainder_diff.entries));
        if let Some(k) = &rep.remainder_kernel {
            report.table("remainder_kernel.csv", matrix_table(&k.entries));
        }
    }

    // sign audit against the moment oracle
    let audit_max = cfg.threshold("sign_audit_max", 1e-8);
    let mut audit = Table::new(&["alpha_x", "alpha_omega", "symmetric", "literal_error", "moment_matched_error", "matched"]);
    let mut audit_json = Vec::new();
    for order in 1..=c.n.saturating_sub(1).max(1) {
        for alpha in MultiIndex::of_order(order) {
            let s = calculus::audit_sign(alpha, &windows, c.symmetric)?;
            report.metric(Metric::at_most(format!("sign audit {alpha}: oracle error"), s.moment_matched_error, audit_max));
            report.metric(Metric::report(format!("sign audit {alpha}: literal error"), s.literal_error));
            audit.push(vec![
                alpha.x.to_string(),
                alpha.omega.to_string(),
                c.symmetric.to_string(),
                num(s.literal_error),
                num(s.moment_matched_error),
                serde_json::to_value(s.matched).unwrap().as_str().unwrap_or("").to_string(),
            ]);
            audit_json.push(json!({ "alpha": [alpha.x, alpha.omega], "matched": s.matched }));
        }
    }
    report.table("sign_audit.csv", audit);
    report.detail("sign_audit", audit_json);

    if !c.lambda_sweep.is_empty() {
        let target = if c.symmetric { &cfg.symbol.a } else { &cfg.symbol.b };
        let expr = target
            .expr()
            .ok_or_else(|| UsageError("lambda_sweep needs a closed-form expanded symbol".into()))?;
        let sweep_opts = ExpandOptions { kernel: false, ..options.clone() };
        let mut table = Table::new(&["lambda", "measured_norm", "bound", "ratio"]);
        let mut ratios = Vec::new();
        for &lam in &c.lambda_sweep {
            let dil: SymbolSpec = expr.clone().dilate(lam).into();
            let (sa, sb) = if c.symmetric { (dil, b.clone()) } else { (a.clone(), dil) };
            let r = calculus::expand(&sa, &sb, c.n, &windows, &sweep_opts)?;
            let q = r.measured_norm / r.bound_value;
            ratios.push(q);
            table.push(vec![num(lam), num(r.measured_norm), num(r.bound_value), num(q)]);
            if let Some(k) = c.bound_constant {
                report.metric(Metric::at_most(format!("lambda {lam}: measured_norm / (C bound)"), r.measured_norm / (k * r.bound_value), 1.0));
            }
        }
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        report.metric(Metric::at_most("lambda sweep: max/min of measured/bound", hi / lo, cfg.threshold("sweep_factor_max", 3.0)));
        report.series("lambda_sweep_ratio", ratios);
        report.table("lambda_sweep.csv", table);
    }

    report.detail(
        "summary",
        json!({
            "n": c.n,
            "symmetric": c.symmetric,
            "sign_rule": c.sign_rule,
            "measured_norm": rep.measured_norm,
            "lhs_norm": rep.lhs_norm,
            "bound": rep.bound_value,
            "ratio": ratio,
            "kernel_vs_diff_error": rep.kernel_vs_diff_error,
            "seam_fraction": rep.seam_fraction,
            "terms": term_json,
        }),
    );
    Ok(())
}

// ---------------------------------------------------------------- fredholm

const FREDHOLM_KEYS: &[&str] = &[
    "comparability_factor",
    "decay_fraction",
    "tail_max",
    "cluster_radius",
    "cluster_min_fraction",
    "identity_tail_min",
];

fn fredholm_thresholds(cfg: &Config) -> FredholmThresholds {
    let d = FredholmThresholds::default();
    FredholmThresholds {
        comparability_factor: cfg.threshold("comparability_factor", d.comparability_factor),
        decay_fraction: cfg.threshold("decay_fraction", d.decay_fraction),
        profile_len: PROFILE_LEN,
        tail_index: TAIL_INDEX,
        tail_max: cfg.threshold("tail_max", d.tail_max),
        cluster_radius: cfg.threshold("cluster_radius", d.cluster_radius),
        cluster_min_fraction: cfg.threshold("cluster_min_fraction", d.cluster_min_fraction),
    }
}

fn fredholm_check(cfg: &Config, report: &mut Report) -> Out<()> {
    cfg.check_threshold_keys(FREDHOLM_KEYS)?;
    let th = fredholm_thresholds(cfg);
    let [phi1, phi2, ..] = cfg.windows()?;
    let a = cfg.symbol_a()?;
    let w = &cfg.weights;
    let fc = &cfg.fredholm;
    let r = fredholm::fredholm_check(&a, &w.m, &w.v, &w.w, &w.mu, &phi1, &phi2, fc.side, &th)?;
    report.detail("side", fc.side);
    report.metric(Metric::report("residual norm", r.residual_norm));
    for ch in &r.checks {
        report.metric(check_metric(ch));
    }
    let h = &r.hypotheses;
    report.metric(Metric::report("hypothesis: sup |a| m", h.class.sup_ratio));
    report.metric(Metric::report("hypothesis: inf |a| m", h.class.inf_ratio));
    report.metric(Metric::report("hypothesis: comparability", h.comparability));
    report.metric(Metric::report("hypothesis: tail of d_x a m", h.derivative_tail[0]));
    report.metric(Metric::report("hypothesis: tail of d_omega a m", h.derivative_tail[1]));
    report.metric(Metric::report("hypothesis: window norm phi1", h.window_norms[0]));
    report.metric(Metric::report("hypothesis: window norm phi2", h.window_norms[1]));
    report.metric(Metric::report("hypothesis: |<phi1, phi2>|", h.pair_inner));
    report.warnings.extend(h.warnings.iter().cloned());
    report.series("sigma_profile", r.profile.clone());

    let mut eig = Table::new(&["re", "im", "distance_to_one"]);
    for e in &r.eigenvalues {
        eig.push(vec![num(e.re), num(e.im), num((e - Complex64::new(1.0, 0.0)).norm())]);
    }
    report.table("eigenvalues.csv", eig);

    let mut columns: Vec<(&str, Vec<f64>)> = vec![("sigma", r.profile.clone())];
    if fc.identity_control {
        let n = r.residual.entries.ncols();
        let geo = r.residual.source_norm.clone();
        let id = OperatorMatrix::new(r.residual.grid, CMatrix::identity(n, n), geo.clone(), geo);
        let prof = locop::compactness_profile(&id, PROFILE_LEN.min(n))?;
        let t = locop::tail_ratio(&prof, TAIL_INDEX.min(prof.len()));
        report.metric(identity_control(t, cfg.threshold("identity_tail_min", 0.9)));
        report.series("sigma_profile_identity", prof.clone());
        columns.push(("sigma_identity", prof));
    }
    let cols: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    report.table("profile.csv", profile_table(&cols));

    let mut summary = json!({
        "side": fc.side,
        "residual_norm": r.residual_norm,
        "tail": r.tail,
        "cluster_fraction": r.cluster_fraction,
        "profile_len": r.profile.len(),
    });

    if !fc.sweep.is_empty() {
        let pts = fredholm::sweep_polynomial(&fc.sweep, &phi1, &phi2, &th)?;
        let mut t = Table::new(&["s", "tail", "residual_norm"]);
        for p in &pts {
            t.push(vec![num(p.s), num(p.tail), num(p.residual_norm)]);
        }
        report.table("sweep.csv", t);
        let mono = fredholm::weakly_monotone(&pts);
        report.metric(Metric::report("sweep: tail weakly decreasing as s decreases", if mono { 1.0 } else { 0.0 }));
        summary["sweep"] = json!(pts.iter().map(|p| json!({ "s": p.s, "tail": p.tail })).collect::<Vec<_>>());
    }

    if let Some(split) = &fc.split {
        let psi = split.psi.build(cfg.grid()?, &cfg.base_dir)?;
        let s = fredholm::cutoff_split_check(&a, &psi, split.k_radius, &phi1, &phi2, &th)?;
        for ch in &s.checks {
            report.metric(check_metric(ch));
        }
        report.table("split_profiles.csv", profile_table(&[("sigma_first", &s.profiles[0]), ("sigma_second", &s.profiles[1])]));
        summary["split"] = json!({ "identity_error": s.identity_error, "tails": s.tails });
    }

    if let Some(solve) = &fc.solve {
        let g = solve.data.build(cfg.grid()?, &cfg.base_dir)?;
        let s = fredholm::preconditioned_solve(&a, &phi1, &phi2, &g, solve.tol)?;
        let plain = s.unpreconditioned.iterations;
        report.metric(Metric::below("preconditioned iterations", s.iterations as f64, plain as f64));
        report.metric(Metric::report("unpreconditioned iterations", plain as f64));
        report.metric(Metric::at_most("preconditioned final residual", s.residual, solve.tol));
        report.metric(Metric::report("unpreconditioned converged", if s.unpreconditioned.converged { 1.0 } else { 0.0 }));
        report.series("residuals_preconditioned", s.residuals.clone());
        report.series("residuals_unpreconditioned", s.unpreconditioned.residuals.clone());
        summary["solve"] = json!({ "preconditioned": s.iterations, "unpreconditioned": plain });
    }
    report.detail("summary", summary);
    Ok(())
}

// ---------------------------------------------------------------- weights

const WEIGHTS_KEYS: &[&str] = &["submultiplicative_slack", "integral_slack", "grs_deviation_max"];

fn weights_audit(cfg: &Config, report: &mut Report) -> Out<()> {
    cfg.check_threshold_keys(WEIGHTS_KEYS)?;
    let au = &cfg.audit;
    let pairs = weights::lattice_pairs(au.lattice, au.radius);
    let points = weights::square_lattice(au.lattice, au.radius);
    let sub_slack = cfg.threshold("submultiplicative_slack", 1e-9);
    let int_slack = cfg.threshold("integral_slack", 1e-9);
    let grs_max = cfg.threshold("grs_deviation_max", 0.05);
    let mut scans = Table::new(&["family", "check", "value", "tolerance", "passed"]);
    let mut grs = Table::new(&["family", "k", "value"]);
    let mut push = |report: &mut Report, fam: &str, m: Metric| {
        scans.push(vec![
            fam.to_string(),
            m.name.clone(),
            num(m.value),
            m.tolerance.map(num).unwrap_or_default(),
            m.passed.to_string(),
        ]);
        report.metric(Metric { name: format!("{fam}: {}", m.name), ..m });
    };
    for v in &au.families {
        v.validate()?;
        let fam = label(v);
        let sub = weights::check_submultiplicative(v, &pairs)?;
        push(report, &fam, Metric::at_most("submultiplicative max ratio", sub.max_ratio, 1.0 + sub_slack));
        if let WeightSpec::Polynomial { s } = v {
            // Peetre: <z1 + z2>^s <= 2^{|s|/2} <z1>^{|s|} <z2>^s
            let peetre = 2f64.powf(s.abs() / 2.0);
            push(report, &fam, Metric::report("submultiplicative max ratio / 2^{|s|/2}", sub.max_ratio / peetre));
        }
        let mut worst: f64 = 0.0;
        for &z in &points {
            worst = worst.max(weights::check_integral_property(v, z, au.quad_points)?);
        }
        push(report, &fam, Metric::at_most("integral property max ratio", worst, 1.0 + int_slack));
        let seq = weights::grs_sequence(v, PhasePoint::new(1.0, 0.0), au.grs_k);
        for (k, val) in seq.iter().enumerate() {
            grs.push(vec![fam.clone(), (k + 1).to_string(), num(*val)]);
        }
        let dev = (seq.last().copied().unwrap_or(1.0) - 1.0).abs();
        let name = format!("GRS deviation at k = {}", au.grs_k);
        if v.satisfies_grs() {
            push(report, &fam, Metric::at_most(name, dev, grs_max));
        } else {
            push(report, &fam, Metric::report(name, dev));
        }
    }
    for pair in &au.moderate {
        let c = weights::check_moderate(&pair.m, &pair.v, &pairs)?;
        let fam = format!("{} / {}", label(&pair.m), label(&pair.v));
        push(report, &fam, Metric::report("moderateness constant", c));
    }
    if let Some(r) = au.classify_radius {
        let a = cfg.symbol_a()?.values(cfg.grid()?)?;
        let cl = weights::classify_symbol(&a, &cfg.weights.m, r)?;
        report.metric(Metric::report("symbol class: sup |a| m", cl.sup_ratio));
        report.metric(Metric::report("symbol class: inf |a| m", cl.inf_ratio));
        report.metric(Metric::report("symbol class: tail sup", cl.tail_sup));
    }
    report.table("scans.csv", scans);
    report.table("grs.csv", grs);
    Ok(())
}

fn identity_control(tail: f64, min: f64) -> Metric {
    Metric::at_least(format!("identity control sigma_{TAIL_INDEX}/sigma_1"), tail, min)
}
