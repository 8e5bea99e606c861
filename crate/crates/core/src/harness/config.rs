use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Counterexample,
    Quadratic,
    Logistic,
    Mlp,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Counterexample => "counterexample",
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Logistic => "logistic",
            ProblemKind::Mlp => "mlp",
        }
    }

    pub fn is_data(self) -> bool {
        matches!(self, ProblemKind::Logistic | ProblemKind::Mlp)
    }
}

impl FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "counterexample" => Ok(ProblemKind::Counterexample),
            "quadratic" => Ok(ProblemKind::Quadratic),
            "logistic" => Ok(ProblemKind::Logistic),
            "mlp" => Ok(ProblemKind::Mlp),
            _ => Err("expected counterexample, quadratic, logistic or mlp".into()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    GenericAdam,
    WeightedAdaema,
    Amsgrad,
}

impl OptimizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::GenericAdam => "generic_adam",
            OptimizerKind::WeightedAdaema => "weighted_adaema",
            OptimizerKind::Amsgrad => "amsgrad",
        }
    }
}

impl FromStr for OptimizerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "generic_adam" => Ok(OptimizerKind::GenericAdam),
            "weighted_adaema" => Ok(OptimizerKind::WeightedAdaema),
            "amsgrad" => Ok(OptimizerKind::Amsgrad),
            _ => Err("expected generic_adam, weighted_adaema or amsgrad".into()),
        }
    }
}

/// Every recognised key with a one-line description. The CLI exposes each as
/// `--<key>`.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("problem", "counterexample | quadratic | logistic | mlp"),
    ("optimizer", "generic_adam | weighted_adaema | amsgrad"),
    (
        "schedule",
        "family | table | weights | bias-corrected | a preset (adaema, adamnc, rmsprop, adam, nosadam-hh, weighted-poly, beta-one)",
    ),
    ("eta", "base-rate scale, alpha_t = eta / t^s"),
    ("s", "base-rate exponent in [0, 1)"),
    ("r", "theta exponent, theta_t = 1 - theta_num / t^r"),
    ("theta_num", "theta numerator (default r*theta_bar + 1 - theta_bar)"),
    ("theta_bar", "limit theta of the interpolated family"),
    ("theta", "constant theta for the adam and bias-corrected schedules"),
    ("cutoff", "theta cutoff K (default: smallest admissible)"),
    ("beta", "momentum beta"),
    ("beta_decay", "beta_t = beta * beta_decay^t (1 = constant)"),
    ("weight_exp", "weights w_t = t^weight_exp for schedule = weights"),
    ("schedule_table", "CSV with columns alpha,beta,theta for schedule = table"),
    ("steps", "number of optimizer steps T"),
    ("epochs", "data problems: steps = epochs * ceil(n / minibatch) (0 = use steps)"),
    ("seed", "RNG seed"),
    ("record_stride", "steps between recorded rows"),
    ("invariant_checks", "assert the lemma margin at every step (true/false)"),
    ("output", "trajectory CSV path (relative paths go under $GADAM_OUTPUT_DIR)"),
    ("eps", "initial second moment v_0"),
    ("x1", "initial iterate: one value (broadcast) or a comma-separated list"),
    ("data", "blobs or a CSV path (label in the last column)"),
    ("minibatch", "minibatch size for data problems"),
    ("hidden", "hidden units of the MLP"),
    ("init_scale", "MLP initialization scale"),
    ("dim", "dimension of the quadratic problem"),
    ("noise", "uniform gradient-noise half-width of the quadratic problem"),
    ("theta_prime", "theta' used by the lemma margin (default from the schedule)"),
    ("rare_slope", "counterexample slope drawn with probability rare_prob"),
    ("common_slope", "counterexample slope drawn otherwise"),
    ("rare_prob", "probability of the rare counterexample slope"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub optimizer: OptimizerKind,
    pub schedule: String,
    pub eta: f64,
    pub s: f64,
    pub r: f64,
    pub theta_num: Option<f64>,
    pub theta_bar: f64,
    pub theta: f64,
    pub cutoff: Option<u64>,
    pub beta: f64,
    pub beta_decay: f64,
    pub weight_exp: f64,
    pub schedule_table: Option<PathBuf>,
    pub steps: u64,
    pub epochs: u64,
    pub seed: u64,
    pub record_stride: u64,
    pub invariant_checks: bool,
    pub output: Option<PathBuf>,
    pub eps: f64,
    pub x1: Option<Vec<f64>>,
    pub data: String,
    pub minibatch: usize,
    pub hidden: usize,
    pub init_scale: f64,
    pub dim: usize,
    pub noise: f64,
    pub theta_prime: Option<f64>,
    pub rare_slope: f64,
    pub common_slope: f64,
    pub rare_prob: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: ProblemKind::Counterexample,
            optimizer: OptimizerKind::GenericAdam,
            schedule: "family".into(),
            eta: 0.5,
            s: 0.5,
            r: 1.0,
            theta_num: None,
            theta_bar: 0.99,
            theta: 0.999,
            cutoff: None,
            beta: 0.9,
            beta_decay: 1.0,
            weight_exp: 0.0,
            schedule_table: None,
            steps: 1_000_000,
            epochs: 0,
            seed: 7,
            record_stride: 1000,
            invariant_checks: true,
            output: None,
            eps: 1e-8,
            x1: None,
            data: "blobs".into(),
            minibatch: 32,
            hidden: 8,
            init_scale: 1.0,
            dim: 2,
            noise: 0.1,
            theta_prime: None,
            rare_slope: 1010.0,
            common_slope: 10.0,
            rare_prob: 0.01,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| HarnessError::InvalidValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, HarnessError>
where
    T::Err: fmt::Display,
{
    if value.is_empty() || value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, HarnessError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(HarnessError::InvalidValue {
            key: key.into(),
            value: value.into(),
            reason: "expected true or false".into(),
        }),
    }
}

fn join_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn opt_string<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

/// Drops a trailing `# comment`; a `#` only starts a comment at the line start
/// or after whitespace.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

impl ExperimentConfig {
    /// Parses a `key = value` document on top of the defaults.
    pub fn parse_str(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(HarnessError::ConfigSyntax {
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(HarnessError::DuplicateKey {
                    key: key.into(),
                    line: i + 1,
                });
            }
            cfg.set(key, value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        Self::parse_str(&text)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let value = value.trim();
        match key {
            "problem" => {
                self.problem = value.parse().map_err(|reason| HarnessError::InvalidValue {
                    key: key.into(),
                    value: value.into(),
                    reason,
                })?
            }
            "optimizer" => {
                self.optimizer = value.parse().map_err(|reason| HarnessError::InvalidValue {
                    key: key.into(),
                    value: value.into(),
                    reason,
                })?
            }
            "schedule" => self.schedule = value.to_string(),
            "eta" => self.eta = parse(key, value)?,
            "s" => self.s = parse(key, value)?,
            "r" => self.r = parse(key, value)?,
            "theta_num" => self.theta_num = parse_optional(key, value)?,
            "theta_bar" => self.theta_bar = parse(key, value)?,
            "theta" => self.theta = parse(key, value)?,
            "cutoff" => self.cutoff = parse_optional(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "beta_decay" => self.beta_decay = parse(key, value)?,
            "weight_exp" => self.weight_exp = parse(key, value)?,
            "schedule_table" => {
                self.schedule_table = (!value.is_empty()).then(|| PathBuf::from(value))
            }
            "steps" => self.steps = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "record_stride" => self.record_stride = parse(key, value)?,
            "invariant_checks" => self.invariant_checks = parse_bool(key, value)?,
            "output" => self.output = (!value.is_empty()).then(|| PathBuf::from(value)),
            "eps" => self.eps = parse(key, value)?,
            "x1" => {
                self.x1 = if value.is_empty() || value == "auto" {
                    None
                } else {
                    Some(
                        value
                            .split(',')
                            .map(|v| parse::<f64>(key, v.trim()))
                            .collect::<Result<_, _>>()?,
                    )
                }
            }
            "data" => self.data = value.to_string(),
            "minibatch" => self.minibatch = parse(key, value)?,
            "hidden" => self.hidden = parse(key, value)?,
            "init_scale" => self.init_scale = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "noise" => self.noise = parse(key, value)?,
            "theta_prime" => self.theta_prime = parse_optional(key, value)?,
            "rare_slope" => self.rare_slope = parse(key, value)?,
            "common_slope" => self.common_slope = parse(key, value)?,
            "rare_prob" => self.rare_prob = parse(key, value)?,
            _ => return Err(HarnessError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Applies CLI overrides in order.
    pub fn apply_overrides<'a>(
        &mut self,
        overrides: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<(), HarnessError> {
        for (k, v) in overrides {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Canonical `(key, value)` pairs in [`CONFIG_KEYS`] order; parsing them
    /// back gives the same config.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        CONFIG_KEYS
            .iter()
            .map(|(key, _)| {
                let value = match *key {
                    "problem" => self.problem.as_str().to_string(),
                    "optimizer" => self.optimizer.as_str().to_string(),
                    "schedule" => self.schedule.clone(),
                    "eta" => self.eta.to_string(),
                    "s" => self.s.to_string(),
                    "r" => self.r.to_string(),
                    "theta_num" => opt_string(&self.theta_num),
                    "theta_bar" => self.theta_bar.to_string(),
                    "theta" => self.theta.to_string(),
                    "cutoff" => opt_string(&self.cutoff),
                    "beta" => self.beta.to_string(),
                    "beta_decay" => self.beta_decay.to_string(),
                    "weight_exp" => self.weight_exp.to_string(),
                    "schedule_table" => self
                        .schedule_table
                        .as_ref()
                        .map(|p| p.display().to_string())
                        .unwrap_or_default(),
                    "steps" => self.steps.to_string(),
                    "epochs" => self.epochs.to_string(),
                    "seed" => self.seed.to_string(),
                    "record_stride" => self.record_stride.to_string(),
                    "invariant_checks" => self.invariant_checks.to_string(),
                    "output" => self
                        .output
                        .as_ref()
                        .map(|p| p.display().to_string())
                        .unwrap_or_default(),
                    "eps" => self.eps.to_string(),
                    "x1" => self.x1.as_deref().map(join_list).unwrap_or_default(),
                    "data" => self.data.clone(),
                    "minibatch" => self.minibatch.to_string(),
                    "hidden" => self.hidden.to_string(),
                    "init_scale" => self.init_scale.to_string(),
                    "dim" => self.dim.to_string(),
                    "noise" => self.noise.to_string(),
                    "theta_prime" => opt_string(&self.theta_prime),
                    "rare_slope" => self.rare_slope.to_string(),
                    "common_slope" => self.common_slope.to_string(),
                    "rare_prob" => self.rare_prob.to_string(),
                    other => unreachable!("key {other} missing from to_pairs"),
                };
                (key.to_string(), value)
            })
            .collect()
    }

    /// The theta numerator of the power-law family.
    pub fn numerator(&self) -> f64 {
        self.theta_num
            .unwrap_or(self.r * self.theta_bar + 1.0 - self.theta_bar)
    }

    /// Checks ranges that do not need the schedule or the data.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |key: &str, value: String, reason: &str| HarnessError::InvalidValue {
            key: key.into(),
            value,
            reason: reason.into(),
        };
        if self.record_stride == 0 {
            return Err(bad("record_stride", "0".into(), "must be >= 1"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(bad("eps", self.eps.to_string(), "must be positive"));
        }
        if self.minibatch == 0 {
            return Err(bad("minibatch", "0".into(), "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.rare_prob) {
            return Err(bad(
                "rare_prob",
                self.rare_prob.to_string(),
                "must lie in [0, 1]",
            ));
        }
        if !(self.rare_slope.is_finite() && self.common_slope.is_finite()) {
            return Err(bad(
                "rare_slope",
                self.rare_slope.to_string(),
                "slopes must be finite",
            ));
        }
        if self.problem == ProblemKind::Quadratic && self.dim == 0 {
            return Err(bad("dim", "0".into(), "must be >= 1"));
        }
        Ok(())
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.to_pairs() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_values() {
        let cfg = ExperimentConfig::parse_str(
            "# counterexample run\n\
             problem = counterexample\n\
             r = 0.75   # trailing comment\n\
             steps=1000\n\
             \n\
             x1 = 0.5, -0.5\n\
             invariant_checks = off\n\
             output = runs/a#1.csv\n",
        )
        .unwrap();
        assert_eq!(cfg.r, 0.75);
        assert_eq!(cfg.steps, 1000);
        assert_eq!(cfg.x1, Some(vec![0.5, -0.5]));
        assert!(!cfg.invariant_checks);
        assert_eq!(cfg.output, Some(PathBuf::from("runs/a#1.csv")));
        assert!((cfg.numerator() - (0.01 + 0.99 * 0.75)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(
            ExperimentConfig::parse_str("nonsense"),
            Err(HarnessError::ConfigSyntax { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("colour = red"),
            Err(HarnessError::UnknownKey(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("r = 1\nr = 2"),
            Err(HarnessError::DuplicateKey { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("steps = -3"),
            Err(HarnessError::InvalidValue { .. })
        ));
        assert!(ExperimentConfig::parse_str("optimizer = sgd").is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = ExperimentConfig::parse_str("r = 1\nseed = 3").unwrap();
        cfg.apply_overrides([("r", "0.25"), ("theta_num", "0.01")])
            .unwrap();
        assert_eq!(cfg.r, 0.25);
        assert_eq!(cfg.numerator(), 0.01);
        assert_eq!(cfg.seed, 3);
    }

    #[test]
    fn pairs_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_overrides([("x1", "1,2"), ("cutoff", "4"), ("problem", "mlp")])
            .unwrap();
        let text = cfg.to_string();
        assert_eq!(ExperimentConfig::parse_str(&text).unwrap(), cfg);
        assert_eq!(cfg.to_pairs().len(), CONFIG_KEYS.len());
    }
}
