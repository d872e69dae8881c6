//! Scenario configuration: every physical and optimization parameter, the
//! flat key-value config format, user placement, and the seeded RNG stream
//! discipline that makes whole runs reproducible.

use crate::geom::{norm3, sub3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    Syntax(usize),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}`: bad value `{1}`")]
    BadValue(String, String),
    #[error("invariant violated on `{field}`: {reason}")]
    Invariant { field: &'static str, reason: String },
}

/// All scenario parameters. Distances in meters, powers in watts, times in
/// seconds, rates in nats per channel use.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub num_antennas: usize,
    pub corridor_width_m: f64,
    pub user_height_range_m: [f64; 2],
    pub r_a_m: Vec3,
    pub r_b_m: Vec3,
    pub time_step_s: f64,
    pub horizon_slots: usize,
    pub v_max_mps: f64,
    pub u_max_mps: f64,
    pub a_max_mps2: f64,
    pub altitude_range_m: [f64; 2],
    pub x_range_m: [f64; 2],
    pub y_range_m: [f64; 2],
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub ref_gain_b0: f64,
    pub pathloss_exp: f64,
    pub rician_k_db: f64,
    pub blocklength: usize,
    pub error_prob: f64,
    pub p_com_max_w: f64,
    pub p_max_w: f64,
    pub amp_efficiency: f64,
    pub uav_weight_n: f64,
    pub air_density_kgm3: f64,
    pub rotor_area_m2: f64,
    pub drag_coeff: f64,
    pub weight_rate: f64,
    pub weight_goal: f64,
    pub weight_prop: f64,
    pub ao_max_iters: usize,
    pub arrival_tol_m: f64,
    pub disturbance_m: f64,
    pub d_min_m: f64,
    pub d_max_m: f64,
    pub mission_cap_slots: usize,
    pub r_min_npcu: f64,
    pub rng_seed: u64,
    pub solver_tol: f64,
    pub solver_max_iters: usize,
    /// Stop the AO loop when the true objective decreases beyond the slack
    /// (on by default; the plain loop runs to the iteration cap).
    pub objective_guard: bool,
}

impl ScenarioConfig {
    /// Noise power sigma^2 in watts from the PSD and bandwidth.
    pub fn noise_power_w(&self) -> f64 {
        10f64.powf((self.noise_psd_dbm_hz + 10.0 * self.bandwidth_hz.log10() - 30.0) / 10.0)
    }

    /// Rician K factor converted from dB to linear.
    pub fn rician_k_linear(&self) -> f64 {
        10f64.powf(self.rician_k_db / 10.0)
    }

    pub fn propulsion(&self) -> crate::propulsion::PropulsionParams {
        crate::propulsion::PropulsionParams::new(
            self.uav_weight_n,
            self.air_density_kgm3,
            self.rotor_area_m2,
            self.drag_coeff,
        )
        .expect("validated config has positive propulsion parameters")
    }

    pub fn fbl(&self) -> crate::fbl::FblParams {
        crate::fbl::FblParams::new(self.blocklength, self.error_prob)
            .expect("validated config has a proper error probability")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |field: &'static str, ok: bool, reason: String| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Invariant { field, reason })
            }
        };
        inv("num_users", self.num_users >= 1, format!("N = {} < 1", self.num_users))?;
        inv("num_antennas", self.num_antennas >= 1, format!("M = {} < 1", self.num_antennas))?;
        inv(
            "error_prob",
            self.error_prob > 0.0 && self.error_prob < 0.5,
            format!("eps = {} outside (0, 0.5)", self.error_prob),
        )?;
        inv("blocklength", self.blocklength >= 1, format!("L = {}", self.blocklength))?;
        inv("d_min_m", self.d_min_m > 0.0, format!("d_min = {}", self.d_min_m))?;
        inv(
            "d_max_m",
            self.d_max_m > self.d_min_m,
            format!("d_max = {} <= d_min = {}", self.d_max_m, self.d_min_m),
        )?;
        inv(
            "altitude_range_m",
            self.altitude_range_m[0] < self.altitude_range_m[1],
            format!("Z range {:?}", self.altitude_range_m),
        )?;
        inv(
            "user_height_range_m",
            self.user_height_range_m[0] <= self.user_height_range_m[1],
            format!("height range {:?}", self.user_height_range_m),
        )?;
        for (f, v) in [
            ("time_step_s", self.time_step_s),
            ("v_max_mps", self.v_max_mps),
            ("u_max_mps", self.u_max_mps),
            ("a_max_mps2", self.a_max_mps2),
            ("bandwidth_hz", self.bandwidth_hz),
            ("ref_gain_b0", self.ref_gain_b0),
            ("p_com_max_w", self.p_com_max_w),
            ("p_max_w", self.p_max_w),
            ("uav_weight_n", self.uav_weight_n),
            ("air_density_kgm3", self.air_density_kgm3),
            ("rotor_area_m2", self.rotor_area_m2),
            ("corridor_width_m", self.corridor_width_m),
            ("solver_tol", self.solver_tol),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::Invariant {
                    field: f,
                    reason: format!("{v} must be strictly positive"),
                });
            }
        }
        inv(
            "amp_efficiency",
            self.amp_efficiency > 0.0 && self.amp_efficiency <= 1.0,
            format!("eta = {}", self.amp_efficiency),
        )?;
        inv(
            "weight_rate",
            self.weight_rate >= 0.0 && self.weight_goal >= 0.0 && self.weight_prop >= 0.0,
            format!("weights ({}, {}, {})", self.weight_rate, self.weight_goal, self.weight_prop),
        )?;
        inv("disturbance_m", self.disturbance_m >= 0.0, format!("{}", self.disturbance_m))?;
        inv("arrival_tol_m", self.arrival_tol_m > 0.0, format!("{}", self.arrival_tol_m))?;
        inv("mission_cap_slots", self.mission_cap_slots >= 1, format!("{}", self.mission_cap_slots))?;
        Ok(())
    }
}

/// The baseline scenario. Values that the model does not pin down are
/// documented defaults: the reference gain, the objective weights (scaled so
/// each term starts at order one), the AO iteration cap, the arrival
/// tolerance, the step cap, and the rate floor.
pub fn default_scenario() -> ScenarioConfig {
    let r_a = [750.0, 50.0, 500.0];
    let r_b = [1000.0, 200.0, 300.0];
    let goal_dist_sq = {
        let d = sub3(r_a, r_b);
        d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
    };
    let hover =
        crate::propulsion::PropulsionParams::new(39.2, 1.225, 0.503, 0.08).unwrap().hover_power();
    ScenarioConfig {
        num_users: 3,
        num_antennas: 4,
        corridor_width_m: 200.0,
        user_height_range_m: [0.5, 3.0],
        r_a_m: r_a,
        r_b_m: r_b,
        time_step_s: 1.0,
        horizon_slots: 5,
        v_max_mps: 15.0,
        u_max_mps: 10.0,
        a_max_mps2: 4.0,
        altitude_range_m: [100.0, 900.0],
        x_range_m: [-1500.0, 1500.0],
        y_range_m: [-1500.0, 1500.0],
        bandwidth_hz: 5e6,
        noise_psd_dbm_hz: -174.0,
        ref_gain_b0: 1e-3,
        pathloss_exp: 2.3,
        rician_k_db: 6.0,
        blocklength: 1000,
        error_prob: 1e-5,
        p_com_max_w: 1.0,
        p_max_w: 230.0,
        amp_efficiency: 0.5,
        uav_weight_n: 39.2,
        air_density_kgm3: 1.225,
        rotor_area_m2: 0.503,
        drag_coeff: 0.08,
        weight_rate: 1.0,
        weight_goal: 1.0 / goal_dist_sq,
        weight_prop: 1.0 / hover,
        ao_max_iters: 10,
        arrival_tol_m: 5.0,
        disturbance_m: 0.0,
        d_min_m: 1.0,
        d_max_m: 2000.0,
        mission_cap_slots: 30,
        r_min_npcu: 0.1,
        rng_seed: 1,
        solver_tol: 1e-8,
        solver_max_iters: 200,
        objective_guard: true,
    }
}

macro_rules! config_keys {
    ($($key:literal => $setter:expr, $getter:expr;)*) => {
        const KEYS: &[&str] = &[$($key),*];
        fn apply_key(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<bool, ConfigError> {
            match key {
                $($key => { $setter(cfg, value)?; Ok(true) })*
                _ => Ok(false),
            }
        }
        fn emit_key(cfg: &ScenarioConfig, key: &str) -> String {
            match key {
                $($key => $getter(cfg),)*
                _ => unreachable!(),
            }
        }
    };
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse().map_err(|_| ConfigError::BadValue(key.into(), v.into()))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse().map_err(|_| ConfigError::BadValue(key.into(), v.into()))
}

fn parse_u64(key: &str, v: &str) -> Result<u64, ConfigError> {
    v.parse().map_err(|_| ConfigError::BadValue(key.into(), v.into()))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "on" => Ok(true),
        "false" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::BadValue(key.into(), v.into())),
    }
}

fn parse_vec3(key: &str, v: &str) -> Result<Vec3, ConfigError> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(ConfigError::BadValue(key.into(), v.into()));
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = parse_f64(key, p)?;
    }
    Ok(out)
}

fn parse_pair(key: &str, v: &str) -> Result<[f64; 2], ConfigError> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(ConfigError::BadValue(key.into(), v.into()));
    }
    Ok([parse_f64(key, parts[0])?, parse_f64(key, parts[1])?])
}

config_keys! {
    "num_users" => |c: &mut ScenarioConfig, v| { c.num_users = parse_usize("num_users", v)?; Ok::<(), ConfigError>(()) }, |c: &ScenarioConfig| c.num_users.to_string();
    "num_antennas" => |c: &mut ScenarioConfig, v| { c.num_antennas = parse_usize("num_antennas", v)?; Ok(()) }, |c: &ScenarioConfig| c.num_antennas.to_string();
    "corridor_width_m" => |c: &mut ScenarioConfig, v| { c.corridor_width_m = parse_f64("corridor_width_m", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.corridor_width_m);
    "user_height_range_m" => |c: &mut ScenarioConfig, v| { c.user_height_range_m = parse_pair("user_height_range_m", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{} {}", c.user_height_range_m[0], c.user_height_range_m[1]);
    "r_a_m" => |c: &mut ScenarioConfig, v| { c.r_a_m = parse_vec3("r_a_m", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{} {} {}", c.r_a_m[0], c.r_a_m[1], c.r_a_m[2]);
    "r_b_m" => |c: &mut ScenarioConfig, v| { c.r_b_m = parse_vec3("r_b_m", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{} {} {}", c.r_b_m[0], c.r_b_m[1], c.r_b_m[2]);
    "time_step_s" => |c: &mut ScenarioConfig, v| { c.time_step_s = parse_f64("time_step_s", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.time_step_s);
    "horizon_slots" => |c: &mut ScenarioConfig, v| { c.horizon_slots = parse_usize("horizon_slots", v)?; Ok(()) }, |c: &ScenarioConfig| c.horizon_slots.to_string();
    "v_max_mps" => |c: &mut ScenarioConfig, v| { c.v_max_mps = parse_f64("v_max_mps", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.v_max_mps);
    "u_max_mps" => |c: &mut ScenarioConfig, v| { c.u_max_mps = parse_f64("u_max_mps", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.u_max_mps);
    "a_max_mps2" => |c: &mut ScenarioConfig, v| { c.a_max_mps2 = parse_f64("a_max_mps2", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.a_max_mps2);
    "altitude_range_m" => |c: &mut ScenarioConfig, v| { c.altitude_range_m = parse_pair("altitude_range_m", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{} {}", c.altitude_range_m[0], c.altitude_range_m[1]);
    "x_range_m" => |c: &mut ScenarioConfig, v| { c.x_range_m = parse_pair("x_range_m", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{} {}", c.x_range_m[0], c.x_range_m[1]);
    "y_range_m" => |c: &mut ScenarioConfig, v| { c.y_range_m = parse_pair("y_range_m", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{} {}", c.y_range_m[0], c.y_range_m[1]);
    "bandwidth_hz" => |c: &mut ScenarioConfig, v| { c.bandwidth_hz = parse_f64("bandwidth_hz", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.bandwidth_hz);
    "noise_psd_dbm_hz" => |c: &mut ScenarioConfig, v| { c.noise_psd_dbm_hz = parse_f64("noise_psd_dbm_hz", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.noise_psd_dbm_hz);
    "ref_gain_b0" => |c: &mut ScenarioConfig, v| { c.ref_gain_b0 = parse_f64("ref_gain_b0", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.ref_gain_b0);
    "pathloss_exp" => |c: &mut ScenarioConfig, v| { c.pathloss_exp = parse_f64("pathloss_exp", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.pathloss_exp);
    "rician_k_db" => |c: &mut ScenarioConfig, v| { c.rician_k_db = parse_f64("rician_k_db", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.rician_k_db);
    "blocklength" => |c: &mut ScenarioConfig, v| { c.blocklength = parse_usize("blocklength", v)?; Ok(()) }, |c: &ScenarioConfig| c.blocklength.to_string();
    "error_prob" => |c: &mut ScenarioConfig, v| { c.error_prob = parse_f64("error_prob", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.error_prob);
    "p_com_max_w" => |c: &mut ScenarioConfig, v| { c.p_com_max_w = parse_f64("p_com_max_w", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.p_com_max_w);
    "p_max_w" => |c: &mut ScenarioConfig, v| { c.p_max_w = parse_f64("p_max_w", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.p_max_w);
    "amp_efficiency" => |c: &mut ScenarioConfig, v| { c.amp_efficiency = parse_f64("amp_efficiency", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.amp_efficiency);
    "uav_weight_n" => |c: &mut ScenarioConfig, v| { c.uav_weight_n = parse_f64("uav_weight_n", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.uav_weight_n);
    "air_density_kgm3" => |c: &mut ScenarioConfig, v| { c.air_density_kgm3 = parse_f64("air_density_kgm3", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.air_density_kgm3);
    "rotor_area_m2" => |c: &mut ScenarioConfig, v| { c.rotor_area_m2 = parse_f64("rotor_area_m2", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.rotor_area_m2);
    "drag_coeff" => |c: &mut ScenarioConfig, v| { c.drag_coeff = parse_f64("drag_coeff", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.drag_coeff);
    "weight_rate" => |c: &mut ScenarioConfig, v| { c.weight_rate = parse_f64("weight_rate", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.weight_rate);
    "weight_goal" => |c: &mut ScenarioConfig, v| { c.weight_goal = parse_f64("weight_goal", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.weight_goal);
    "weight_prop" => |c: &mut ScenarioConfig, v| { c.weight_prop = parse_f64("weight_prop", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.weight_prop);
    "ao_max_iters" => |c: &mut ScenarioConfig, v| { c.ao_max_iters = parse_usize("ao_max_iters", v)?; Ok(()) }, |c: &ScenarioConfig| c.ao_max_iters.to_string();
    "arrival_tol_m" => |c: &mut ScenarioConfig, v| { c.arrival_tol_m = parse_f64("arrival_tol_m", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.arrival_tol_m);
    "disturbance_m" => |c: &mut ScenarioConfig, v| { c.disturbance_m = parse_f64("disturbance_m", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.disturbance_m);
    "d_min_m" => |c: &mut ScenarioConfig, v| { c.d_min_m = parse_f64("d_min_m", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.d_min_m);
    "d_max_m" => |c: &mut ScenarioConfig, v| { c.d_max_m = parse_f64("d_max_m", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.d_max_m);
    "mission_cap_slots" => |c: &mut ScenarioConfig, v| { c.mission_cap_slots = parse_usize("mission_cap_slots", v)?; Ok(()) }, |c: &ScenarioConfig| c.mission_cap_slots.to_string();
    "r_min_npcu" => |c: &mut ScenarioConfig, v| { c.r_min_npcu = parse_f64("r_min_npcu", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.r_min_npcu);
    "rng_seed" => |c: &mut ScenarioConfig, v| { c.rng_seed = parse_u64("rng_seed", v)?; Ok(()) }, |c: &ScenarioConfig| c.rng_seed.to_string();
    "solver_tol" => |c: &mut ScenarioConfig, v| { c.solver_tol = parse_f64("solver_tol", v)?; Ok(()) }, |c: &ScenarioConfig| format!("{}", c.solver_tol);
    "solver_max_iters" => |c: &mut ScenarioConfig, v| { c.solver_max_iters = parse_usize("solver_max_iters", v)?; Ok(()) }, |c: &ScenarioConfig| c.solver_max_iters.to_string();
    "objective_guard" => |c: &mut ScenarioConfig, v| { c.objective_guard = parse_bool("objective_guard", v)?; Ok(()) }, |c: &ScenarioConfig| c.objective_guard.to_string();
}

/// Parse a flat `key = value` document on top of the defaults. Unknown keys
/// are errors; every invariant is re-checked after the last assignment.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = default_scenario();
    let mut seen = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax(lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        if !apply_key(&mut cfg, key, value)? {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        seen.insert(key.to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Render a config as the flat key-value document accepted by
/// [`load_scenario`].
pub fn save_scenario(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    for key in KEYS {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&emit_key(cfg, key));
        out.push('\n');
    }
    out
}

/// Ground user positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserSet {
    pub positions: Vec<Vec3>,
}

/// Named, order-independent RNG streams derived from the scenario seed, so
/// that e.g. the disturbance draws never depend on how many channel draws
/// happened before them.
#[derive(Debug, Clone, Copy)]
pub enum StreamKind {
    UserPlacement,
    /// NLoS fading draw for (user, absolute step).
    Nlos { user: usize, step: usize },
    Disturbance,
    /// Generic audit / experiment stream.
    Audit { tag: u64 },
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, kind: StreamKind) -> ChaCha12Rng {
    let (tag, a, b) = match kind {
        StreamKind::UserPlacement => (1, 0, 0),
        StreamKind::Nlos { user, step } => (2, user as u64, step as u64),
        StreamKind::Disturbance => (3, 0, 0),
        StreamKind::Audit { tag } => (4, tag, 0),
    };
    let mut key = [0u8; 32];
    let words = [
        splitmix(seed),
        splitmix(seed ^ (tag << 32)),
        splitmix(a.wrapping_mul(0x9e3779b97f4a7c15) ^ tag),
        splitmix(b ^ (tag.rotate_left(17))),
    ];
    for (i, w) in words.iter().enumerate() {
        key[i * 8..(i + 1) * 8].copy_from_slice(&w.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Place users uniformly in the corridor around the mission segment with
/// heights uniform in the configured range.
pub fn place_users(cfg: &ScenarioConfig, rng: &mut ChaCha12Rng) -> UserSet {
    let a = cfg.r_a_m;
    let b = cfg.r_b_m;
    let axis = [b[0] - a[0], b[1] - a[1]];
    let axis_len = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
    let unit = if axis_len > 0.0 { [axis[0] / axis_len, axis[1] / axis_len] } else { [1.0, 0.0] };
    let normal = [-unit[1], unit[0]];
    let mut positions = Vec::with_capacity(cfg.num_users);
    for _ in 0..cfg.num_users {
        let along: f64 = rng.random::<f64>() * axis_len;
        let across: f64 = (rng.random::<f64>() - 0.5) * cfg.corridor_width_m;
        let h = cfg.user_height_range_m[0]
            + rng.random::<f64>() * (cfg.user_height_range_m[1] - cfg.user_height_range_m[0]);
        positions.push([
            a[0] + unit[0] * along + normal[0] * across,
            a[1] + unit[1] * along + normal[1] * across,
            h,
        ]);
    }
    UserSet { positions }
}

/// Perpendicular distance of a point from the mission axis (used by tests).
pub fn corridor_offset(cfg: &ScenarioConfig, p: Vec3) -> f64 {
    let a = cfg.r_a_m;
    let b = cfg.r_b_m;
    let axis = [b[0] - a[0], b[1] - a[1]];
    let axis_len = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
    if axis_len == 0.0 {
        let d = [p[0] - a[0], p[1] - a[1]];
        return (d[0] * d[0] + d[1] * d[1]).sqrt();
    }
    let unit = [axis[0] / axis_len, axis[1] / axis_len];
    let rel = [p[0] - a[0], p[1] - a[1]];
    (rel[0] * -unit[1] + rel[1] * unit[0]).abs()
}

/// Distance between the mission endpoints.
pub fn mission_length(cfg: &ScenarioConfig) -> f64 {
    norm3(sub3(cfg.r_b_m, cfg.r_a_m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_values() {
        let c = default_scenario();
        assert_eq!(c.num_users, 3);
        assert_eq!(c.num_antennas, 4);
        assert_eq!(c.horizon_slots, 5);
        assert_eq!(c.v_max_mps, 15.0);
        assert_eq!(c.blocklength, 1000);
        assert_eq!(c.error_prob, 1e-5);
        assert_eq!(c.p_max_w, 230.0);
        assert_eq!(c.uav_weight_n, 39.2);
        assert_eq!(c.rotor_area_m2, 0.503);
        assert_eq!(c.drag_coeff, 0.08);
        assert_eq!(c.r_a_m, [750.0, 50.0, 500.0]);
        assert_eq!(c.r_b_m, [1000.0, 200.0, 300.0]);
        c.validate().unwrap();
    }

    #[test]
    fn noise_power_from_psd_and_bandwidth() {
        let c = default_scenario();
        let sigma2 = c.noise_power_w();
        // -174 dBm/Hz over 5 MHz: 10^((-174 + 10 log10(5e6) - 30)/10)
        assert!(
            (sigma2 - 1.9905e-14).abs() / 1.9905e-14 < 1e-3,
            "sigma^2 = {sigma2}"
        );
    }

    #[test]
    fn config_roundtrip_is_identity() {
        let c = default_scenario();
        let text = save_scenario(&c);
        let c2 = load_scenario(&text).unwrap();
        assert_eq!(format!("{c:?}"), format!("{c2:?}"));
    }

    #[test]
    fn bad_error_prob_names_the_field() {
        let err = load_scenario("error_prob = 0.7").unwrap_err();
        match err {
            ConfigError::Invariant { field, .. } => assert_eq!(field, "error_prob"),
            e => panic!("expected invariant error, got {e}"),
        }
    }

    #[test]
    fn zero_d_min_names_the_field() {
        let err = load_scenario("d_min_m = 0").unwrap_err();
        match err {
            ConfigError::Invariant { field, .. } => assert_eq!(field, "d_min_m"),
            e => panic!("expected invariant error, got {e}"),
        }
    }

    #[test]
    fn unknown_keys_fail_fast() {
        let err = load_scenario("not_a_key = 3").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey(k) if k == "not_a_key"));
    }

    #[test]
    fn placement_is_deterministic_under_seed() {
        let c = default_scenario();
        let u1 = place_users(&c, &mut stream(42, StreamKind::UserPlacement));
        let u2 = place_users(&c, &mut stream(42, StreamKind::UserPlacement));
        assert_eq!(u1, u2);
        let u3 = place_users(&c, &mut stream(43, StreamKind::UserPlacement));
        assert_ne!(u1, u3);
    }

    #[test]
    fn users_stay_in_corridor_and_height_band() {
        let c = default_scenario();
        let mut worst = 0.0f64;
        for seed in 0..2500u64 {
            let users = place_users(&c, &mut stream(seed, StreamKind::UserPlacement));
            for p in &users.positions {
                assert!(p[2] >= 0.5 && p[2] <= 3.0, "height {}", p[2]);
                worst = worst.max(corridor_offset(&c, *p));
            }
        }
        assert!(
            worst <= c.corridor_width_m / 2.0 + 1e-9,
            "max perpendicular offset {worst}"
        );
    }

    #[test]
    fn streams_are_independent_of_each_other() {
        use rand::Rng;
        let mut a = stream(7, StreamKind::Disturbance);
        let mut b = stream(7, StreamKind::Nlos { user: 0, step: 0 });
        let xa: f64 = a.random();
        let xb: f64 = b.random();
        assert_ne!(xa, xb);
    }
}
