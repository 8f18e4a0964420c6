//! The five subcommands. Every command validates its inputs before any
//! computation and assembles the whole output in memory, so a failing run
//! never emits a partial table.
//!
//! CSV conventions: one header row, `.` decimal separator, scientific
//! notation with 9 significant digits, fixed column order. Output is
//! byte-deterministic for fixed inputs and seed.

use ionrep::link;
use ionrep::montecarlo::{self, SimOptions};
use ionrep::multiplex;
use ionrep::photonic::{self, Port};
use ionrep::repeater;
use ionrep::Error;

use crate::config::Scenario;

#[derive(Debug)]
pub enum CommandError {
    /// Bad scenario or arguments; exit code 1.
    Validation(String),
    /// A numeric consistency check failed; exit code 2.
    NumericCheck(String),
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        match e {
            Error::Unnormalized { .. } | Error::NormDrift { .. } => {
                CommandError::NumericCheck(e.to_string())
            }
            _ => CommandError::Validation(e.to_string()),
        }
    }
}

/// Finished command output.
pub struct Report {
    pub text: String,
    /// Set when a verification command ran to completion but a check failed
    /// (maps to exit code 2).
    pub numeric_failure: bool,
}

impl Report {
    fn ok(text: String) -> Self {
        Report {
            text,
            numeric_failure: false,
        }
    }
}

/// 9 significant digits, scientific notation; -0.0 prints as 0.0.
fn sci(x: f64) -> String {
    format!("{:.8e}", x + 0.0)
}

/// Default distance grid: geometric (preferred-number steps) from 100 to
/// 2000 km, hitting the 500 and 1000 km reference points exactly.
fn default_distances() -> Vec<f64> {
    vec![
        100.0, 125.0, 160.0, 200.0, 250.0, 320.0, 400.0, 500.0, 640.0, 800.0, 1000.0, 1250.0,
        1600.0, 2000.0,
    ]
}

fn t_total_cell(config: &repeater::RepeaterConfig) -> Result<String, CommandError> {
    match repeater::t_total(config) {
        Ok(t) => Ok(sci(t)),
        Err(Error::InfeasibleLink) => Ok("inf".to_string()),
        Err(e) => Err(e.into()),
    }
}

pub fn rate_table(
    scenario: &Scenario,
    distances: Option<Vec<f64>>,
) -> Result<Report, CommandError> {
    let distances = distances.unwrap_or_else(default_distances);
    if distances.is_empty() {
        return Err(CommandError::Validation(
            "distances: list is empty".to_string(),
        ));
    }
    for pair in distances.windows(2) {
        if pair[1] <= pair[0] {
            return Err(CommandError::Validation(
                "distances: values must be strictly increasing".to_string(),
            ));
        }
    }
    if distances[0] <= 0.0 || distances.iter().any(|d| !d.is_finite()) {
        return Err(CommandError::Validation(
            "distances: values must be positive and finite".to_string(),
        ));
    }

    let mut rows = Vec::with_capacity(distances.len() * 3);
    for &distance in &distances {
        rows.push(format!(
            "{},direct,{}",
            sci(distance),
            sci(repeater::t_direct(distance, &scenario.direct))
        ));
        for (links, nesting) in [(8u32, 3u32), (16, 4)] {
            let config = scenario.repeater_config_for(distance, nesting);
            config.validate()?;
            rows.push(format!(
                "{},repeater_{links}_links,{}",
                sci(distance),
                t_total_cell(&config)?
            ));
        }
    }

    let mut text = String::from("distance_km,model,time_s\n");
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    Ok(Report::ok(text))
}

pub fn sensitivity(
    scenario: &Scenario,
    p_values: Option<Vec<f64>>,
) -> Result<Report, CommandError> {
    let p_values = p_values.unwrap_or_else(|| (1..=10).map(|i| f64::from(i) / 10.0).collect());
    if p_values.is_empty() {
        return Err(CommandError::Validation(
            "p-values: list is empty".to_string(),
        ));
    }
    for &p in &p_values {
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            return Err(CommandError::Validation(format!(
                "p-values: `{p}` is outside [0, 1]"
            )));
        }
    }

    let mut rows = Vec::with_capacity(p_values.len());
    for &p in &p_values {
        let mut config = scenario.repeater_config();
        config.link.source_efficiency = p;
        config.validate()?;
        rows.push(format!("{},{}", sci(p), t_total_cell(&config)?));
    }

    let mut text = String::from("p,time_s\n");
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    Ok(Report::ok(text))
}

pub fn bell_check(scenario: &Scenario) -> Result<Report, CommandError> {
    const TOL: f64 = 1e-12;
    let mut text = String::new();
    let mut all_ok = true;

    let mut check = |text: &mut String, label: &str, actual: f64, expected: f64| {
        let ok = (actual - expected).abs() <= TOL;
        all_ok &= ok;
        text.push_str(&format!(
            "{label}: {} (expected {}) {}\n",
            sci(actual),
            sci(expected),
            if ok { "ok" } else { "DEVIATES" }
        ));
    };

    // Ideal case: every coincidence pattern at 1/8, total 1/2, fidelity 1.
    let ideal = photonic::simulate_heralding(1.0, 1.0, 1.0, 1.0)?;
    let mut total = 0.0;
    for port_pair in [
        (Port::DPlus, Port::DTildePlus),
        (Port::DPlus, Port::DTildeMinus),
        (Port::DMinus, Port::DTildePlus),
        (Port::DMinus, Port::DTildeMinus),
    ] {
        let outcome = ideal
            .iter()
            .find(|o| {
                o.pattern.is_coincidence()
                    && o.pattern.count(port_pair.0) == 1
                    && o.pattern.count(port_pair.1) == 1
            })
            .expect("ideal case has all four coincidences");
        total += outcome.probability;
        check(
            &mut text,
            &format!("ideal coincidence {} {}", port_pair.0, port_pair.1),
            outcome.probability,
            0.125,
        );
        let corrected = outcome
            .correction
            .unwrap()
            .apply(&outcome.ion_state.unwrap());
        check(
            &mut text,
            &format!("ideal fidelity {} {}", port_pair.0, port_pair.1),
            photonic::psi_plus_fidelity(&corrected),
            1.0,
        );
    }
    check(&mut text, "ideal total herald probability", total, 0.5);

    // Scenario parameters: simulation against the closed form.
    let p = scenario.link.source_efficiency;
    let eta_t = link::fiber_transmission(&scenario.link);
    let eta_d = scenario.link.detector_efficiency;
    let outcomes = photonic::simulate_heralding(p, p, eta_t, eta_d)?;
    let simulated: f64 = outcomes
        .iter()
        .filter(|o| o.pattern.is_coincidence())
        .map(|o| o.probability)
        .sum();
    let formula = photonic::herald_probability(p, p, eta_t, eta_d)?;
    check(&mut text, "scenario herald probability", simulated, formula);
    for outcome in outcomes.iter().filter(|o| o.pattern.is_coincidence()) {
        let corrected = outcome
            .correction
            .unwrap()
            .apply(&outcome.ion_state.unwrap());
        check(
            &mut text,
            &format!("scenario fidelity {}", outcome.pattern),
            photonic::psi_plus_fidelity(&corrected),
            1.0,
        );
    }

    text.push_str(if all_ok { "PASS\n" } else { "FAIL\n" });
    Ok(Report {
        text,
        numeric_failure: !all_ok,
    })
}

pub fn simulate(
    scenario: &Scenario,
    trials: Option<u64>,
    seed: Option<u64>,
) -> Result<Report, CommandError> {
    let mut options = SimOptions::new(
        scenario.repeater_config(),
        trials.unwrap_or(scenario.trials),
        seed.unwrap_or(scenario.seed),
    );
    options.include_swap_overhead = scenario.include_swap_overhead;
    options.include_higher_level_comms = scenario.include_higher_level_comms;
    options.validate()?;

    let result = montecarlo::simulate_nested(&options)?;
    let analytic = repeater::t_total_with_overheads(
        &options.config,
        options.include_swap_overhead,
        options.include_higher_level_comms,
    )?;
    let distribution = &result.distribution;

    let mut text = String::from("record,level,value\n");
    for sample in &distribution.samples {
        text.push_str(&format!("sample,,{}\n", sci(*sample)));
    }
    text.push_str(&format!("mean,,{}\n", sci(distribution.mean)));
    text.push_str(&format!("stderr,,{}\n", sci(distribution.std_error)));
    for (percent, value) in &distribution.percentiles {
        text.push_str(&format!("p{percent},,{}\n", sci(*value)));
    }
    for (i, factor) in result.level_factors.per_level_factor.iter().enumerate() {
        text.push_str(&format!("level_factor,{},{}\n", i + 1, sci(*factor)));
    }
    text.push_str(&format!("analytic_mean,,{}\n", sci(analytic)));
    text.push_str(&format!(
        "relative_deviation,,{}\n",
        sci((distribution.mean - analytic) / analytic)
    ));
    Ok(Report::ok(text))
}

pub fn multiplex(scenario: &Scenario) -> Result<Report, CommandError> {
    let config = scenario.repeater_config();
    config.validate()?;
    let result = multiplex::multiplexed_t_total(&config, &scenario.timing)?;
    let unmultiplexed = repeater::t_total(&config)?;
    let speedup = result.budget.attempts.max(1);
    let nominal = multiplex::nominal_speedup(scenario.timing.cavity_length_m);

    let mut text = String::from(
        "attempts_per_window,bottleneck,effective_rate_hz,speedup,nominal_speedup,t_total_s,t_total_multiplexed_s\n",
    );
    text.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        result.budget.attempts,
        result.budget.bottleneck,
        sci(result.budget.effective_rate_hz),
        speedup,
        sci(nominal),
        sci(unmultiplexed),
        sci(result.t_total_s),
    ));
    Ok(Report::ok(text))
}
