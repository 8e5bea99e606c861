//! Named schedules from the Adam-variant literature.

use super::{
    power_law_schedule, theta_from_weights, BaseRate, BetaRule, ParameterSchedule, PowerLawFamily,
    ScheduleError, Triple, WeightSequence,
};

/// AdaGrad with EMA momentum: `theta_t = 1 - 1/t`, `alpha_t = eta/sqrt(t)`.
///
/// `theta_1 = 0` is not admissible, so the cutoff is `K = 2`, which holds
/// `theta_1 = theta_2 = 1/2`.
pub fn ada_ema(eta: f64, beta: f64) -> Result<ParameterSchedule, ScheduleError> {
    let fam = PowerLawFamily::new(eta, 0.5, 1.0, 1.0, 2, beta)?;
    Ok(power_law_schedule(fam)?.with_label(format!("adaema(eta={eta}, beta={beta})")))
}

/// AdamNC: the AdaEMA schedule with `beta_t = beta * decay^t`.
pub fn adam_nc(eta: f64, beta: f64, decay: f64) -> Result<ParameterSchedule, ScheduleError> {
    if !(0.0..=1.0).contains(&decay) {
        return Err(ScheduleError::BetaRange { beta: decay });
    }
    Ok(ada_ema(eta, beta)?
        .with_beta(BetaRule::Geometric { beta, decay })
        .with_label(format!("adamnc(eta={eta}, beta={beta}, decay={decay})")))
}

/// RMSProp in the Mukkamala-Hein setting: `beta_t = 0`, `theta_t = 1 - a/t`.
pub fn rmsprop(eta: f64, numerator: f64) -> Result<ParameterSchedule, ScheduleError> {
    let fam = PowerLawFamily::with_min_cutoff(eta, 0.5, numerator, 1.0, 0.0)?;
    Ok(power_law_schedule(fam)?.with_label(format!("rmsprop(eta={eta}, a={numerator})")))
}

/// Original Adam without bias correction: constant `theta`, `alpha_t = eta/t^s`.
pub fn constant_theta_adam(
    eta: f64,
    s: f64,
    theta: f64,
    beta: f64,
) -> Result<ParameterSchedule, ScheduleError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(ScheduleError::ThetaRange { theta });
    }
    let fam = PowerLawFamily::new(eta, s, 1.0 - theta, 0.0, 1, beta)?;
    Ok(power_law_schedule(fam)?.with_label(format!(
        "adam(eta={eta}, s={s}, theta={theta}, beta={beta})"
    )))
}

/// The interpolating family `theta_t = 1 - (r*theta_bar + 1 - theta_bar)/t^r`
/// that moves from constant-theta Adam (`r = 0`) to AdaEMA (`r = 1`).
pub fn interpolated_family(
    eta: f64,
    s: f64,
    r: f64,
    theta_bar: f64,
    beta: f64,
) -> Result<ParameterSchedule, ScheduleError> {
    let numerator = r * theta_bar + (1.0 - theta_bar);
    let fam = PowerLawFamily::with_min_cutoff(eta, s, numerator, r, beta)?;
    Ok(power_law_schedule(fam)?.with_label(format!(
        "interpolated(eta={eta}, s={s}, r={r}, theta_bar={theta_bar}, beta={beta})"
    )))
}

/// Weighted AdaEMA with polynomial weights `w_t = t^exponent` and
/// `alpha_t = eta/sqrt(t)`, tabulated over `horizon` steps. Negative
/// exponents give NosAdam-HH.
pub fn polynomial_weights(
    eta: f64,
    exponent: f64,
    beta: f64,
    horizon: u64,
) -> Result<ParameterSchedule, ScheduleError> {
    let w: Vec<f64> = (1..=horizon).map(|t| (t as f64).powf(exponent)).collect();
    let weights = WeightSequence::from_weights(&w)?;
    Ok(theta_from_weights(
        &weights,
        BaseRate::PowerDecay { eta, s: 0.5 },
        BetaRule::Constant(beta),
    )?
    .with_label(format!("weights(t^{exponent}, eta={eta}, beta={beta})")))
}

/// NosAdam-HH viewed as Weighted AdaEMA: `w_t = t^{-r}`.
pub fn nosadam_hh(
    eta: f64,
    r: f64,
    beta: f64,
    horizon: u64,
) -> Result<ParameterSchedule, ScheduleError> {
    Ok(polynomial_weights(eta, -r, beta, horizon)?
        .with_label(format!("nosadam_hh(eta={eta}, r={r}, beta={beta})")))
}

/// A deliberately broken schedule with `beta_t = 1`, AdaEMA otherwise.
pub fn beta_one(eta: f64) -> ParameterSchedule {
    ParameterSchedule::custom(1.0, move |t| {
        let tf = t.max(2) as f64;
        Triple {
            alpha: eta / (t as f64).sqrt(),
            beta: 1.0,
            theta: 1.0 - 1.0 / tf,
        }
    })
    .with_label("beta_one")
}

/// Names accepted by [`by_name`].
pub const PRESET_NAMES: &[&str] = &[
    "adaema",
    "adamnc",
    "rmsprop",
    "adam",
    "nosadam-hh",
    "weighted-poly",
    "beta-one",
];

/// Preset lookup with default constants, for the CLI and FFI.
pub fn by_name(name: &str, horizon: u64) -> Result<Option<ParameterSchedule>, ScheduleError> {
    let sched = match name {
        "adaema" => ada_ema(0.5, 0.9)?,
        "adamnc" => adam_nc(0.5, 0.9, 0.99)?,
        "rmsprop" => rmsprop(0.5, 1.0)?,
        "adam" => constant_theta_adam(0.001, 0.5, 0.999, 0.9)?,
        "nosadam-hh" => nosadam_hh(0.5, 0.5, 0.9, horizon)?,
        "weighted-poly" => polynomial_weights(0.5, 1.0, 0.9, horizon)?,
        "beta-one" => beta_one(0.5),
        _ => return Ok(None),
    };
    Ok(Some(sched.with_horizon_hint(horizon)))
}
