//! Experiment configuration in TOML.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tfloc::calculus::SignRule;
use tfloc::fredholm::Side;
use tfloc::locop::Direction;
use tfloc::signal::{gaussian_window, tf_shift, SampledSignal};
use tfloc::symbol::{SymbolExpr, SymbolSpec};
use tfloc::{Grid, PhasePlane, PhasePoint, Signal, WeightSpec};

/// Problems with the configuration itself; these map to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl From<tfloc::Error> for UsageError {
    fn from(e: tfloc::Error) -> Self {
        UsageError(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    StftIdentities,
    LocopBounds,
    CalculusExpand,
    FredholmCheck,
    WeightsAudit,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::StftIdentities,
        Experiment::LocopBounds,
        Experiment::CalculusExpand,
        Experiment::FredholmCheck,
        Experiment::WeightsAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::StftIdentities => "stft-identities",
            Experiment::LocopBounds => "locop-bounds",
            Experiment::CalculusExpand => "calculus-expand",
            Experiment::FredholmCheck => "fredholm-check",
            Experiment::WeightsAudit => "weights-audit",
        }
    }

    pub fn parse(s: &str) -> Result<Self, UsageError> {
        Self::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|e| e.name()).collect();
            UsageError(format!("unknown experiment `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub windows: WindowsConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub symbol: SymbolsConfig,
    #[serde(default)]
    pub stft: StftConfig,
    #[serde(default)]
    pub locop: LocopConfig,
    #[serde(default)]
    pub calculus: CalculusConfig,
    #[serde(default)]
    pub fredholm: FredholmConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    /// Overrides of the experiment's named thresholds.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
    /// Directory that relative paths resolve against; set by the loader.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub width: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Gaussian,
    Hermite,
    Csv,
}

/// A window: `kind` picks the family, `shift = [x, ω]` applies `π(x, ω)`
/// after normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub kind: WindowKind,
    /// Hermite index.
    #[serde(default)]
    pub order: usize,
    /// Gaussian `e^{-π t²/λ²}`.
    #[serde(default = "one")]
    pub dilation: f64,
    /// CSV file with columns `t, re, im`.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "yes")]
    pub normalize: bool,
    #[serde(default)]
    pub shift: [f64; 2],
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl WindowConfig {
    pub fn gaussian() -> Self {
        Self { kind: WindowKind::Gaussian, order: 0, dilation: 1.0, path: None, normalize: true, shift: [0.0, 0.0] }
    }

    pub fn hermite(order: usize) -> Self {
        Self { kind: WindowKind::Hermite, order, ..Self::gaussian() }
    }

    pub fn shifted(mut self, x: f64, omega: f64) -> Self {
        self.shift = [x, omega];
        self
    }

    pub fn build(&self, grid: Grid, base: &Path) -> Result<Signal, UsageError> {
        let raw = match self.kind {
            WindowKind::Gaussian => {
                if !(self.dilation > 0.0) {
                    return Err(UsageError(format!("window dilation must be positive, got {}", self.dilation)));
                }
                if self.dilation == 1.0 {
                    gaussian_window(grid)
                } else {
                    let l = self.dilation;
                    SampledSignal::from_real_fn(grid, |t| (-std::f64::consts::PI * t * t / (l * l)).exp())
                }
            }
            WindowKind::Hermite => tfloc::windows::hermite(self.order, grid),
            WindowKind::Csv => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| UsageError("csv window needs `path`".into()))?;
                let path = base.join(path);
                let file = fs::File::open(&path)
                    .map_err(|e| UsageError(format!("cannot open window file {}: {e}", path.display())))?;
                SampledSignal::read_csv(grid, file)?
            }
        };
        let w = if self.normalize { raw.normalized()? } else { raw };
        if self.shift == [0.0, 0.0] {
            Ok(w)
        } else {
            Ok(tf_shift(PhasePoint::new(self.shift[0], self.shift[1]), &w)?)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowsConfig {
    #[serde(default = "WindowConfig::gaussian")]
    pub phi1: WindowConfig,
    /// Defaults to `phi1`.
    pub phi2: Option<WindowConfig>,
    pub phi3: Option<WindowConfig>,
    pub phi4: Option<WindowConfig>,
}

impl Default for WindowsConfig {
    fn default() -> Self {
        Self { phi1: WindowConfig::gaussian(), phi2: None, phi3: None, phi4: None }
    }
}

impl WindowsConfig {
    /// `[φ₁, φ₂, φ₃, φ₄]`, missing entries copied from `φ₁`.
    pub fn build(&self, grid: Grid, base: &Path) -> Result<[Signal; 4], UsageError> {
        let phi1 = self.phi1.build(grid, base)?;
        let or_first = |w: &Option<WindowConfig>| -> Result<Signal, UsageError> {
            match w {
                Some(w) => w.build(grid, base),
                None => Ok(phi1.clone()),
            }
        };
        let phi2 = or_first(&self.phi2)?;
        let phi3 = or_first(&self.phi3)?;
        let phi4 = or_first(&self.phi4)?;
        Ok([phi1, phi2, phi3, phi4])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    #[serde(default = "constant_one")]
    pub m: WeightSpec,
    #[serde(default = "constant_one")]
    pub v: WeightSpec,
    #[serde(default = "constant_one")]
    pub w: WeightSpec,
    #[serde(default = "constant_one")]
    pub mu: WeightSpec,
}

fn constant_one() -> WeightSpec {
    WeightSpec::ConstantOne
}

impl Default for WeightsConfig {
    fn default() -> Self {
        Self { m: constant_one(), v: constant_one(), w: constant_one(), mu: constant_one() }
    }
}

impl WeightsConfig {
    pub fn validate(&self) -> Result<(), UsageError> {
        for (name, w) in [("m", &self.m), ("v", &self.v), ("w", &self.w), ("mu", &self.mu)] {
            w.validate().map_err(|e| UsageError(format!("weights.{name}: {e}")))?;
        }
        Ok(())
    }
}

/// A closed-form symbol, or `{ csv = "file.csv" }` with columns `x, omega, re, im`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolSlot {
    Csv { csv: PathBuf },
    Expr(SymbolExpr),
}

impl SymbolSlot {
    pub fn build(&self, grid: Grid, base: &Path) -> Result<SymbolSpec, UsageError> {
        match self {
            SymbolSlot::Expr(e) => Ok(SymbolSpec::ClosedForm(e.clone())),
            SymbolSlot::Csv { csv } => {
                let path = base.join(csv);
                let file = fs::File::open(&path)
                    .map_err(|e| UsageError(format!("cannot open symbol file {}: {e}", path.display())))?;
                Ok(SymbolSpec::Sampled(PhasePlane::read_csv(grid, file)?))
            }
        }
    }

    pub fn expr(&self) -> Option<&SymbolExpr> {
        match self {
            SymbolSlot::Expr(e) => Some(e),
            SymbolSlot::Csv { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolsConfig {
    #[serde(default = "unit_symbol")]
    pub a: SymbolSlot,
    #[serde(default = "unit_symbol")]
    pub b: SymbolSlot,
}

fn unit_symbol() -> SymbolSlot {
    SymbolSlot::Expr(SymbolExpr::constant(1.0))
}

impl Default for SymbolsConfig {
    fn default() -> Self {
        Self { a: unit_symbol(), b: unit_symbol() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftConfig {
    /// Test signal for the covariance and inversion checks.
    #[serde(default = "default_stft_signal")]
    pub signal: WindowConfig,
    #[serde(default = "default_shifts")]
    pub shifts: usize,
    /// Synthesis/analysis pairs `[γ, g]` for the inversion check.
    #[serde(default = "default_pairs")]
    pub inversion_pairs: Vec<[WindowConfig; 2]>,
}

fn default_stft_signal() -> WindowConfig {
    WindowConfig::hermite(1).shifted(0.75, -0.5)
}

fn default_shifts() -> usize {
    20
}

fn default_pairs() -> Vec<[WindowConfig; 2]> {
    vec![
        [WindowConfig::gaussian(), WindowConfig::gaussian()],
        [WindowConfig::hermite(1), WindowConfig::hermite(1)],
        [WindowConfig::gaussian(), WindowConfig { dilation: 1.5, ..WindowConfig::gaussian() }],
    ]
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { signal: default_stft_signal(), shifts: default_shifts(), inversion_pairs: default_pairs() }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormPair {
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocopConfig {
    #[serde(default = "default_direction")]
    pub direction: Direction,
    /// Mixed-norm exponents; anything but `p = q = 2` switches to probe lower bounds.
    #[serde(default)]
    pub norms: Option<NormPair>,
    #[serde(default = "default_probes")]
    pub probes: usize,
    /// Size of the random band-limited calibration family (0 disables it).
    #[serde(default = "default_family")]
    pub random_symbols: usize,
    /// Largest phase-plane frequency in the random family.
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    /// Also measure the operator with the window roles swapped.
    #[serde(default)]
    pub asymmetry: bool,
    /// Also measure the plain `A₁^{φ,φ} = I` control.
    #[serde(default = "yes")]
    pub identity_control: bool,
}

fn default_direction() -> Direction {
    Direction::I
}

fn default_probes() -> usize {
    16
}

fn default_family() -> usize {
    10
}

fn default_bandwidth() -> f64 {
    0.5
}

impl Default for LocopConfig {
    fn default() -> Self {
        Self {
            direction: default_direction(),
            norms: None,
            probes: default_probes(),
            random_symbols: default_family(),
            bandwidth: default_bandwidth(),
            asymmetry: false,
            identity_control: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalculusConfig {
    #[serde(default = "default_order")]
    pub n: usize,
    #[serde(default)]
    pub symmetric: bool,
    #[serde(default = "yes")]
    pub kernel: bool,
    #[serde(default)]
    pub sign_rule: SignRule,
    /// Write `lhs.csv`, `remainder_diff.csv`, `remainder_kernel.csv`.
    #[serde(default)]
    pub matrices: bool,
    /// Frozen constant for `‖E_N‖ ≤ C·bound`; without it the ratio is only reported.
    #[serde(default)]
    pub bound_constant: Option<f64>,
    /// Dilations `b(λz)` (or `a(λz)` when symmetric) for the scaling sweep.
    #[serde(default)]
    pub lambda_sweep: Vec<f64>,
    #[serde(default = "default_samples")]
    pub integral_form_samples: usize,
}

fn default_order() -> usize {
    1
}

fn default_samples() -> usize {
    64
}

impl Default for CalculusConfig {
    fn default() -> Self {
        Self {
            n: 1,
            symmetric: false,
            kernel: true,
            sign_rule: SignRule::default(),
            matrices: false,
            bound_constant: None,
            lambda_sweep: Vec::new(),
            integral_form_samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub psi: SymbolSlot,
    /// Radius of the set `K` where `ψ` must equal 1.
    #[serde(default)]
    pub k_radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default = "default_solve_data")]
    pub data: WindowConfig,
    #[serde(default = "default_solve_tol")]
    pub tol: f64,
}

fn default_solve_data() -> WindowConfig {
    WindowConfig::gaussian().shifted(1.5, -1.0)
}

fn default_solve_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FredholmConfig {
    #[serde(default = "default_side")]
    pub side: Side,
    /// Exponents `s` for the `a = ⟨z⟩^s` sweep.
    #[serde(default)]
    pub sweep: Vec<f64>,
    #[serde(default)]
    pub split: Option<SplitConfig>,
    #[serde(default)]
    pub solve: Option<SolveConfig>,
    #[serde(default = "yes")]
    pub identity_control: bool,
}

fn default_side() -> Side {
    Side::Left
}

impl Default for FredholmConfig {
    fn default() -> Self {
        Self { side: Side::Left, sweep: Vec::new(), split: None, solve: None, identity_control: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeratePair {
    pub m: WeightSpec,
    pub v: WeightSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default = "default_families")]
    pub families: Vec<WeightSpec>,
    #[serde(default)]
    pub moderate: Vec<ModeratePair>,
    /// Points per axis of the scan lattice.
    #[serde(default = "default_lattice")]
    pub lattice: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_quad")]
    pub quad_points: usize,
    #[serde(default = "default_grs_k")]
    pub grs_k: u32,
    /// Symbol classified against `weights.m` with this tail radius.
    #[serde(default)]
    pub classify_radius: Option<f64>,
}

fn default_families() -> Vec<WeightSpec> {
    vec![WeightSpec::polynomial(2.0), WeightSpec::subexponential(1.0, 0.5)]
}

fn default_lattice() -> usize {
    17
}

fn default_radius() -> f64 {
    5.0
}

fn default_quad() -> usize {
    257
}

fn default_grs_k() -> u32 {
    12
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            families: default_families(),
            moderate: Vec::new(),
            lattice: default_lattice(),
            radius: default_radius(),
            quad_points: default_quad(),
            grs_k: default_grs_k(),
            classify_radius: None,
        }
    }
}

impl Config {
    /// Minimal configuration on the given grid with every section defaulted.
    pub fn with_grid(width: f64, points: usize) -> Self {
        Self {
            experiment: None,
            seed: 0,
            grid: GridConfig { width, points },
            windows: WindowsConfig::default(),
            weights: WeightsConfig::default(),
            symbol: SymbolsConfig::default(),
            stft: StftConfig::default(),
            locop: LocopConfig::default(),
            calculus: CalculusConfig::default(),
            fredholm: FredholmConfig::default(),
            audit: AuditConfig::default(),
            thresholds: BTreeMap::new(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, UsageError> {
        let cfg: Config = toml::from_str(text).map_err(|e| UsageError(diagnose(text, origin, &e)))?;
        cfg.weights.validate()?;
        cfg.grid()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Grid, UsageError> {
        Grid::new(self.grid.width, self.grid.points).map_err(|e| UsageError(format!("grid: {e}")))
    }

    pub fn windows(&self) -> Result<[Signal; 4], UsageError> {
        self.windows.build(self.grid()?, &self.base_dir)
    }

    pub fn symbol_a(&self) -> Result<SymbolSpec, UsageError> {
        self.symbol.a.build(self.grid()?, &self.base_dir)
    }

    pub fn symbol_b(&self) -> Result<SymbolSpec, UsageError> {
        self.symbol.b.build(self.grid()?, &self.base_dir)
    }

    /// Threshold `key`, overridden from `[thresholds]` when present.
    pub fn threshold(&self, key: &str, default: f64) -> f64 {
        self.thresholds.get(key).copied().unwrap_or(default)
    }

    /// Rejects `[thresholds]` keys the experiment does not read.
    pub fn check_threshold_keys(&self, known: &[&str]) -> Result<(), UsageError> {
        for key in self.thresholds.keys() {
            if !known.contains(&key.as_str()) {
                return Err(UsageError(format!(
                    "unknown threshold `{key}` for this experiment (known: {})",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }
}

/// `origin:line:column: message` followed by the offending line.
fn diagnose(text: &str, origin: &str, err: &toml::de::Error) -> String {
    let msg = err.message().trim();
    match err.span() {
        Some(span) => {
            let start = span.start.min(text.len());
            let line = text[..start].matches('\n').count() + 1;
            let line_start = text[..start].rfind('\n').map(|i| i + 1).unwrap_or(0);
            let col = text[line_start..start].chars().count() + 1;
            let src = text[line_start..].lines().next().unwrap_or("");
            format!("{origin}:{line}:{col}: {msg}\n  | {src}")
        }
        None => format!("{origin}: {msg}"),
    }
}

/// Parses a symbol given on the command line: `constant:C`, `japanese:S`,
/// `csv:PATH`, or an inline TOML table such as
/// `{ kind = "gaussian", width = 2.0 }`.
pub fn parse_symbol_flag(s: &str) -> Result<SymbolSlot, UsageError> {
    let s = s.trim();
    let num = |v: &str| -> Result<f64, UsageError> {
        v.trim().parse::<f64>().map_err(|_| UsageError(format!("bad number `{v}` in symbol `{s}`")))
    };
    if let Some(v) = s.strip_prefix("constant:") {
        return Ok(SymbolSlot::Expr(SymbolExpr::constant(num(v)?)));
    }
    if let Some(v) = s.strip_prefix("japanese:") {
        return Ok(SymbolSlot::Expr(SymbolExpr::japanese(num(v)?)));
    }
    if let Some(v) = s.strip_prefix("csv:") {
        return Ok(SymbolSlot::Csv { csv: PathBuf::from(v) });
    }
    #[derive(Deserialize)]
    struct Wrap {
        symbol: SymbolSlot,
    }
    let text = format!("symbol = {s}");
    toml::from_str::<Wrap>(&text)
        .map(|w| w.symbol)
        .map_err(|e| UsageError(format!("cannot parse symbol `{s}`: {}", e.message().trim())))
}

/// Comma-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, UsageError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| UsageError(format!("bad number `{t}` in list `{s}`"))))
        .collect()
}

/// Constant complex helper for experiments.
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "experiment = \"calculus-expand\"\n[grid]\nwidth = 8.0\npoints = 32\n";

    #[test]
    fn minimal_config_defaults() {
        let cfg = Config::parse(MINIMAL, "t.toml").unwrap();
        assert_eq!(cfg.experiment, Some(Experiment::CalculusExpand));
        assert_eq!(cfg.calculus.n, 1);
        assert!(matches!(cfg.symbol.a, SymbolSlot::Expr(SymbolExpr::Constant { .. })));
        let w = cfg.windows().unwrap();
        assert!((w[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = format!("{MINIMAL}[calculus]\nn = \"two\"\n");
        let err = Config::parse(&text, "bad.toml").unwrap_err().0;
        assert!(err.starts_with("bad.toml:6:"), "{err}");
        let text = format!("{MINIMAL}[weights]\nm = {{ family = \"polynomail\", s = 1.0 }}\n");
        let err = Config::parse(&text, "bad.toml").unwrap_err().0;
        assert!(err.starts_with("bad.toml:6:"), "{err}");
        let err = Config::parse("[grid]\nwidth = 8.0\npoints = 30\n", "g.toml").unwrap_err().0;
        assert!(err.contains("grid"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = format!("{MINIMAL}[fredholm]\nsides = \"left\"\n");
        assert!(Config::parse(&text, "x").is_err());
    }

    #[test]
    fn symbol_slots() {
        let text = format!(
            "{MINIMAL}[symbol]\na = {{ kind = \"weight\", weight = {{ family = \"polynomial\", s = 1.0 }} }}\nb = {{ csv = \"b.csv\" }}\n"
        );
        let cfg = Config::parse(&text, "x").unwrap();
        assert_eq!(cfg.symbol.a.expr(), Some(&SymbolExpr::japanese(1.0)));
        assert!(matches!(cfg.symbol.b, SymbolSlot::Csv { .. }));
    }

    #[test]
    fn symbol_flags() {
        assert_eq!(parse_symbol_flag("japanese:1").unwrap().expr(), Some(&SymbolExpr::japanese(1.0)));
        assert_eq!(parse_symbol_flag("constant:2.5").unwrap().expr(), Some(&SymbolExpr::constant(2.5)));
        assert_eq!(
            parse_symbol_flag("{ kind = \"gaussian\", width = 2.0 }").unwrap().expr(),
            Some(&SymbolExpr::gaussian(2.0))
        );
        assert!(parse_symbol_flag("japanese:x").is_err());
        assert_eq!(parse_list("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
    }

    #[test]
    fn threshold_keys_checked() {
        let text = format!("{MINIMAL}[thresholds]\nfoo = 1.0\n");
        let cfg = Config::parse(&text, "x").unwrap();
        assert!(cfg.check_threshold_keys(&["bar"]).is_err());
        assert!(cfg.check_threshold_keys(&["foo"]).is_ok());
        assert_eq!(cfg.threshold("foo", 3.0), 1.0);
        assert_eq!(cfg.threshold("bar", 3.0), 3.0);
    }
}
