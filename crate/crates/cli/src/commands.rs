//! The four subcommands: each runs one experiment and writes its outputs.

use std::path::Path;

use serde_json::{json, Map, Value};
use subradiance::units::{ghz_to_rad_per_ns, mhz_to_rad_per_ns, rad_per_ns_to_ghz, rad_per_ns_to_mhz};
use subradiance::{
    dark_state_condition, dressed_single_excitation, j_coupling, phase_calibration, purcell_rate,
    run_detuning_sweep, run_lifetime, run_spectroscopy, transition_matrix_element, DarkState, DriveParams,
    FitResult, LifetimeConfig, SpectroscopyConfig,
};

use crate::config::RunConfig;
use crate::output::{number, Cell, Table, Writer};
use crate::CliError;

fn writer(cfg: &RunConfig) -> Result<Writer, CliError> {
    Ok(Writer::new(Path::new(&cfg.output.directory), &cfg.output.formats)?)
}

fn frequency(omega: f64) -> Value {
    json!({ "rad_per_ns": number(omega), "ghz": number(rad_per_ns_to_ghz(omega)) })
}

/// A coupling or rate, also given as ordinary frequency in MHz (value/2π).
fn small_frequency(omega: f64) -> Value {
    json!({ "rad_per_ns": number(omega), "mhz": number(rad_per_ns_to_mhz(omega)) })
}

fn fit_json(fit: &Result<FitResult, subradiance::Error>) -> Value {
    match fit {
        Ok(f) => {
            let mut obj = Map::new();
            for (k, name) in f.names.iter().enumerate() {
                obj.insert(name.clone(), number(f.parameters[k]));
                obj.insert(format!("{name}_error"), number(f.standard_errors[k]));
            }
            obj.insert("residual_norm".into(), number(f.residual_norm));
            obj.insert("converged".into(), json!(f.converged));
            obj.insert("iterations".into(), json!(f.iterations));
            Value::Object(obj)
        }
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn dressed(cfg: &RunConfig) -> Result<(), CliError> {
    let device = cfg.device_params()?;
    let dressed = dressed_single_excitation(&device)?;
    let delta = device.detuning();
    let j = j_coupling(device.g[0], delta)?;
    let d = &cfg.drive;
    let drive = DriveParams::new(
        mhz_to_rad_per_ns(d.epsilon_mhz),
        d.xi,
        d.phi_rad,
        ghz_to_rad_per_ns(d.omega_d_ghz),
    )?;
    let splitting = dressed.omega_a - dressed.omega_s;
    let purcell_a = purcell_rate(&dressed.psi_a, &dressed.ground, device.kappa)?;
    let purcell_s = purcell_rate(&dressed.psi_s, &dressed.ground, device.kappa)?;
    let purcell_r = purcell_rate(&dressed.psi_r, &dressed.ground, device.kappa)?;
    let element_a = transition_matrix_element(&drive, &dressed.psi_a, &dressed.ground)?;
    let element_s = transition_matrix_element(&drive, &dressed.psi_s, &dressed.ground)?;
    let dark = match dark_state_condition(&drive, &dressed)? {
        Some(DarkState::Antisymmetric) => "psi_a",
        Some(DarkState::Symmetric) => "psi_s",
        None => "none",
    };

    println!("theta_m            {:.6} rad", dressed.theta_m);
    println!("detuning           {:.3} MHz", rad_per_ns_to_mhz(delta));
    println!("omega_a            {:.6} GHz", rad_per_ns_to_ghz(dressed.omega_a));
    println!("omega_s            {:.6} GHz", rad_per_ns_to_ghz(dressed.omega_s));
    println!("omega_r (dressed)  {:.6} GHz", rad_per_ns_to_ghz(dressed.omega_r_dressed));
    println!("splitting (exact)  {:.3} MHz", rad_per_ns_to_mhz(splitting));
    println!("J = g^2/delta      {:.3} MHz", rad_per_ns_to_mhz(j));
    println!("|2J|               {:.3} MHz", rad_per_ns_to_mhz(2.0 * j.abs()));
    println!("purcell psi_a      {:.6e} 1/ns", purcell_a);
    println!("purcell psi_s      {:.6e} 1/ns", purcell_s);
    println!("purcell psi_r      {:.6e} 1/ns", purcell_r);
    println!("drive element a    {:.6e} rad/ns", element_a);
    println!("drive element s    {:.6e} rad/ns", element_s);
    println!("dark state         {dark}");

    let report = json!({
        "theta_m_rad": number(dressed.theta_m),
        "detuning": small_frequency(delta),
        "omega_a": frequency(dressed.omega_a),
        "omega_s": frequency(dressed.omega_s),
        "omega_r_dressed": frequency(dressed.omega_r_dressed),
        "splitting_exact": small_frequency(splitting),
        "j": small_frequency(j),
        "two_j_abs": small_frequency(2.0 * j.abs()),
        "purcell_rate_per_ns": {
            "psi_a": number(purcell_a),
            "psi_s": number(purcell_s),
            "psi_r": number(purcell_r),
        },
        "drive_matrix_element": {
            "psi_a": small_frequency(element_a),
            "psi_s": small_frequency(element_s),
        },
        "dark_state": dark,
    });
    let w = writer(cfg)?;
    w.write_json("dressed.json", &report)?;
    w.write_meta("dressed", cfg, None, Map::new())?;
    Ok(())
}

pub fn spectroscopy(cfg: &RunConfig) -> Result<(), CliError> {
    let e = &cfg.experiment;
    let sc = SpectroscopyConfig {
        device: cfg.device_params()?,
        epsilon: mhz_to_rad_per_ns(cfg.drive.epsilon_mhz),
        xi: cfg.drive.xi,
        phi_grid: e.phi_grid.values(),
        omega_d_grid: e.omega_d_grid_ghz.values().into_iter().map(ghz_to_rad_per_ns).collect(),
        phase_offset: e.phase_offset_rad,
    };
    let records = run_spectroscopy(&sc, e.mode.into())?;
    let mut table = Table::new(&["phi_rad", "omega_d_ghz", "population"]);
    for r in &records {
        table.push(vec![
            Cell::Num(r.coordinate("phi_rad").expect("phi coordinate")),
            Cell::Num(r.coordinate("omega_d_ghz").expect("frequency coordinate")),
            Cell::Num(r.value),
        ]);
    }
    let calibration = match phase_calibration(&records, &sc) {
        Ok(c) => json!({
            "phi_zero_a_rad": number(c.phi_zero_a),
            "phi_zero_s_rad": number(c.phi_zero_s),
            "difference_rad": number(c.difference),
            "xi_fit_a": number(c.xi_fit_a),
            "xi_fit_s": number(c.xi_fit_s),
            "fit_a": fit_json(&Ok(c.fit_a)),
            "fit_s": fit_json(&Ok(c.fit_s)),
        }),
        Err(err) => json!({ "error": err.to_string() }),
    };
    if let Some(d) = calibration.get("difference_rad") {
        println!("phase calibration: zero difference {d} rad");
    }
    let mut extra = Map::new();
    extra.insert("phase_calibration".into(), calibration);
    let step = records.first().and_then(|r| r.meta.integrator_step);
    let w = writer(cfg)?;
    w.write_table("spectroscopy", &table)?;
    w.write_meta("spectroscopy", cfg, step, extra)?;
    println!("{} points written to {}", records.len(), cfg.output.directory);
    Ok(())
}

pub fn lifetime(cfg: &RunConfig) -> Result<(), CliError> {
    let e = &cfg.experiment;
    let target = cfg.target();
    let lc = LifetimeConfig {
        device: cfg.device_params()?,
        target,
        delta: mhz_to_rad_per_ns(e.delta_mhz),
        delay_grid: e.delay_grid_ns.values(),
    };
    let result = run_lifetime(&lc)?;
    let mut table = Table::new(&["delay_ns", "population"]);
    for r in &result.records {
        table.push(vec![Cell::Num(r.coordinate("delay_ns").expect("delay coordinate")), Cell::Num(r.value)]);
    }
    let mut extra = Map::new();
    extra.insert("target".into(), json!(target.label()));
    extra.insert("fit".into(), fit_json(&result.fit));
    let w = writer(cfg)?;
    w.write_table("lifetime", &table)?;
    w.write_meta("lifetime", cfg, Some(result.integrator_step), extra)?;
    match result.fit {
        Ok(_) => {
            println!("T1({}) = {} ns", target.label(), result.t1());
            Ok(())
        }
        Err(err) => Err(err.into()),
    }
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let e = &cfg.experiment;
    let deltas: Vec<f64> = e.delta_grid_mhz.values().into_iter().map(mhz_to_rad_per_ns).collect();
    let rows = run_detuning_sweep(&cfg.device_params()?, &e.delay_grid_ns.values(), &deltas)?;
    let mut table = Table::new(&["delta_mhz", "target", "t1_ns", "t1_error_ns", "converged", "integrator_step_ns"]);
    for r in &rows {
        table.push(vec![
            Cell::Num(rad_per_ns_to_mhz(r.delta)),
            Cell::Text(r.target.label().into()),
            Cell::Num(r.t1),
            Cell::Num(r.t1_error),
            Cell::Bool(r.converged),
            Cell::Num(r.integrator_step),
        ]);
        println!("delta {:>9.3} MHz  {:<6} T1 = {} ns", rad_per_ns_to_mhz(r.delta), r.target.label(), r.t1);
    }
    let largest_step = rows.iter().map(|r| r.integrator_step).fold(0.0, f64::max);
    let w = writer(cfg)?;
    w.write_table("sweep", &table)?;
    w.write_meta("sweep", cfg, Some(largest_step), Map::new())?;
    Ok(())
}
