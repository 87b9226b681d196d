//! JSON run-configuration schema.
//!
//! Parsing is strict: unknown keys, wrong types, and out-of-range values are
//! all config errors (exit code 1), reported with the offending path. The
//! schema itself is documented with examples in `configs/README.md`.

use serde_json::{Map, Value};

#[derive(Debug)]
pub struct RunConfig {
    pub command: CommandConfig,
    pub output: String,
    pub tolerance: Option<f64>,
    pub cutoff_budget: usize,
}

#[derive(Debug)]
pub enum CommandConfig {
    Validate {
        kernel: KernelSpec,
    },
    Prob {
        kernel: KernelSpec,
        state: StateSpec,
        interval: Vec<(f64, f64)>,
    },
    Density {
        kernel: KernelSpec,
        state: StateSpec,
        grid: usize,
    },
    Moments {
        kernel: KernelSpec,
        orders: Vec<usize>,
    },
    Factorize {
        kernel: KernelSpec,
    },
    ClassicalLimit {
        first: ModeKernelSpec,
        second: SecondSpec,
        z1_modulus: f64,
        z1_phase: f64,
        arg_z2: f64,
        amplitudes: Vec<f64>,
        alpha: f64,
        cells: usize,
    },
    DiracLimit {
        first: ModeKernelSpec,
        second: ModeKernelSpec,
        arg_z1: f64,
        arg_z2: f64,
        amplitudes: Vec<f64>,
        alpha: f64,
        alpha_prime: f64,
        window: f64,
    },
    Ban {
        s_max: usize,
        interval: Vec<(f64, f64)>,
        beta: f64,
        margin: usize,
    },
    Spectrum {
        s_max: usize,
    },
    BarnettPegg {
        first: FockSpec,
        second: FockSpec,
        interval: Vec<(f64, f64)>,
    },
    Covariance {
        kernel: KernelSpec,
        alpha: f64,
        beta: f64,
        interval: Vec<(f64, f64)>,
    },
}

#[derive(Debug)]
pub enum KernelSpec {
    Canonical { s_max: usize },
    Example2 { s_max: usize, thetas: [f64; 4] },
    Product { s_max: usize, first: ModeKernelSpec, second: ModeKernelSpec },
}

impl KernelSpec {
    pub fn s_max(&self) -> usize {
        match self {
            KernelSpec::Canonical { s_max }
            | KernelSpec::Example2 { s_max, .. }
            | KernelSpec::Product { s_max, .. } => *s_max,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum ModeKernelSpec {
    Canonical,
    CoherentVacuum,
}

#[derive(Debug)]
pub enum SecondSpec {
    Mode(ModeKernelSpec),
    Fixed { alpha: f64 },
}

#[derive(Debug)]
pub enum StateSpec {
    Basis { n: usize, k: usize },
    Product { first: FockSpec, second: FockSpec },
}

#[derive(Debug)]
pub enum FockSpec {
    Number { n: usize, n_max: usize },
    Coherent { modulus: f64, phase: f64, n_max: usize },
    Coeffs { re: Vec<f64>, im: Vec<f64> },
}

impl RunConfig {
    /// Parses and validates a configuration document; `tol_flag` is the
    /// `--tol` override, which wins over the in-file `tolerance` field.
    pub fn parse(text: &str, tol_flag: Option<f64>) -> Result<Self, String> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| format!("config is not valid JSON: {e}"))?;
        let top = as_obj(&value, "config")?;
        let command = get_str(top, "command", "config")?;

        let base_keys = ["command", "output", "tolerance", "cutoff_budget"];
        let payload_keys: &[&str] = match command {
            "validate" | "factorize" => &["kernel"],
            "prob" => &["kernel", "state", "interval"],
            "density" => &["kernel", "state", "grid"],
            "moments" => &["kernel", "orders"],
            "classical-limit" => &[
                "first", "second", "z1_modulus", "z1_phase", "arg_z2", "amplitudes", "alpha",
                "cells",
            ],
            "dirac-limit" => &[
                "first", "second", "arg_z1", "arg_z2", "amplitudes", "alpha", "alpha_prime",
                "window",
            ],
            "ban" => &["S", "interval", "beta", "margin"],
            "spectrum" => &["S"],
            "barnett-pegg" => &["first", "second", "interval"],
            "covariance" => &["kernel", "alpha", "beta", "interval"],
            other => {
                return Err(format!(
                    "config: unknown command \"{other}\" (expected one of validate, prob, \
                     density, moments, factorize, classical-limit, dirac-limit, ban, spectrum, \
                     barnett-pegg, covariance)"
                ))
            }
        };
        let allowed: Vec<&str> = base_keys.iter().chain(payload_keys).copied().collect();
        check_keys(top, &allowed, "config")?;

        let output = get_str(top, "output", "config")?.to_string();
        if output.is_empty() {
            return Err("config: `output` must be a nonempty file name".into());
        }
        let tolerance = match top.get("tolerance") {
            Some(v) => Some(finite_f64(v, "config.tolerance")?),
            None => None,
        };
        let cutoff_budget = match top.get("cutoff_budget") {
            Some(v) => nonneg_int(v, "config.cutoff_budget")?,
            None => phasediff_core::tolerance::CUTOFF_BUDGET,
        };

        let command = match command {
            "validate" => CommandConfig::Validate {
                kernel: kernel_spec(top, "kernel")?,
            },
            "factorize" => CommandConfig::Factorize {
                kernel: kernel_spec(top, "kernel")?,
            },
            "prob" => CommandConfig::Prob {
                kernel: kernel_spec(top, "kernel")?,
                state: state_spec(top, "state")?,
                interval: interval_spec(top, "interval")?,
            },
            "density" => {
                let grid = match top.get("grid") {
                    Some(v) => nonneg_int(v, "config.grid")?,
                    None => 257,
                };
                if grid == 0 {
                    return Err("config: `grid` must be at least 1".into());
                }
                CommandConfig::Density {
                    kernel: kernel_spec(top, "kernel")?,
                    state: state_spec(top, "state")?,
                    grid,
                }
            }
            "moments" => {
                let orders = match top.get("orders") {
                    Some(v) => int_array(v, "config.orders")?,
                    None => vec![1, 2, 3],
                };
                if orders.iter().any(|&r| r == 0) {
                    return Err("config: `orders` entries must be positive".into());
                }
                CommandConfig::Moments {
                    kernel: kernel_spec(top, "kernel")?,
                    orders,
                }
            }
            "classical-limit" => CommandConfig::ClassicalLimit {
                first: mode_kernel(get_req(top, "first", "config")?, "config.first")?,
                second: second_spec(get_req(top, "second", "config")?, "config.second")?,
                z1_modulus: finite_f64(get_req(top, "z1_modulus", "config")?, "config.z1_modulus")?,
                z1_phase: finite_f64(get_req(top, "z1_phase", "config")?, "config.z1_phase")?,
                arg_z2: finite_f64(get_req(top, "arg_z2", "config")?, "config.arg_z2")?,
                amplitudes: f64_array(get_req(top, "amplitudes", "config")?, "config.amplitudes")?,
                alpha: opt_f64(top, "alpha", 0.0)?,
                cells: match top.get("cells") {
                    Some(v) => nonneg_int(v, "config.cells")?,
                    None => 16,
                },
            },
            "dirac-limit" => CommandConfig::DiracLimit {
                first: mode_kernel(get_req(top, "first", "config")?, "config.first")?,
                second: mode_kernel(get_req(top, "second", "config")?, "config.second")?,
                arg_z1: finite_f64(get_req(top, "arg_z1", "config")?, "config.arg_z1")?,
                arg_z2: finite_f64(get_req(top, "arg_z2", "config")?, "config.arg_z2")?,
                amplitudes: f64_array(get_req(top, "amplitudes", "config")?, "config.amplitudes")?,
                alpha: opt_f64(top, "alpha", 0.0)?,
                alpha_prime: opt_f64(top, "alpha_prime", 0.0)?,
                window: opt_f64(top, "window", 0.5)?,
            },
            "ban" => CommandConfig::Ban {
                s_max: nonneg_int(get_req(top, "S", "config")?, "config.S")?,
                interval: interval_spec(top, "interval")?,
                beta: finite_f64(get_req(top, "beta", "config")?, "config.beta")?,
                margin: match top.get("margin") {
                    Some(v) => nonneg_int(v, "config.margin")?,
                    None => 5,
                },
            },
            "spectrum" => CommandConfig::Spectrum {
                s_max: nonneg_int(get_req(top, "S", "config")?, "config.S")?,
            },
            "barnett-pegg" => CommandConfig::BarnettPegg {
                first: fock_spec(get_req(top, "first", "config")?, "config.first")?,
                second: fock_spec(get_req(top, "second", "config")?, "config.second")?,
                interval: interval_spec(top, "interval")?,
            },
            "covariance" => CommandConfig::Covariance {
                kernel: kernel_spec(top, "kernel")?,
                alpha: finite_f64(get_req(top, "alpha", "config")?, "config.alpha")?,
                beta: finite_f64(get_req(top, "beta", "config")?, "config.beta")?,
                interval: interval_spec(top, "interval")?,
            },
            _ => unreachable!("command names matched above"),
        };

        Ok(RunConfig {
            command,
            output,
            tolerance: tol_flag.or(tolerance),
            cutoff_budget,
        })
    }
}

fn kernel_spec(top: &Map<String, Value>, key: &str) -> Result<KernelSpec, String> {
    let v = get_req(top, key, "config")?;
    let path = format!("config.{key}");
    let obj = as_obj(v, &path)?;
    let construct = get_str(obj, "construct", &path)?;
    match construct {
        "canonical" => {
            check_keys(obj, &["construct", "S"], &path)?;
            Ok(KernelSpec::Canonical {
                s_max: nonneg_int(get_req(obj, "S", &path)?, &format!("{path}.S"))?,
            })
        }
        "example2" => {
            check_keys(obj, &["construct", "S", "thetas"], &path)?;
            let thetas = f64_array(get_req(obj, "thetas", &path)?, &format!("{path}.thetas"))?;
            let thetas: [f64; 4] = thetas
                .try_into()
                .map_err(|_| format!("{path}.thetas must have exactly 4 entries"))?;
            Ok(KernelSpec::Example2 {
                s_max: nonneg_int(get_req(obj, "S", &path)?, &format!("{path}.S"))?,
                thetas,
            })
        }
        "product" => {
            check_keys(obj, &["construct", "S", "first", "second"], &path)?;
            Ok(KernelSpec::Product {
                s_max: nonneg_int(get_req(obj, "S", &path)?, &format!("{path}.S"))?,
                first: mode_kernel(get_req(obj, "first", &path)?, &format!("{path}.first"))?,
                second: mode_kernel(get_req(obj, "second", &path)?, &format!("{path}.second"))?,
            })
        }
        other => Err(format!(
            "{path}.construct: unknown construct \"{other}\" (expected canonical, example2, \
             or product)"
        )),
    }
}

fn mode_kernel(v: &Value, path: &str) -> Result<ModeKernelSpec, String> {
    let obj = as_obj(v, path)?;
    check_keys(obj, &["kind"], path)?;
    match get_str(obj, "kind", path)? {
        "canonical" => Ok(ModeKernelSpec::Canonical),
        "coherent_vacuum" => Ok(ModeKernelSpec::CoherentVacuum),
        other => Err(format!(
            "{path}.kind: unknown kernel kind \"{other}\" (expected canonical or \
             coherent_vacuum)"
        )),
    }
}

fn second_spec(v: &Value, path: &str) -> Result<SecondSpec, String> {
    let obj = as_obj(v, path)?;
    match get_str(obj, "kind", path)? {
        "fixed" => {
            check_keys(obj, &["kind", "alpha"], path)?;
            Ok(SecondSpec::Fixed {
                alpha: finite_f64(get_req(obj, "alpha", path)?, &format!("{path}.alpha"))?,
            })
        }
        _ => Ok(SecondSpec::Mode(mode_kernel(v, path)?)),
    }
}

fn state_spec(top: &Map<String, Value>, key: &str) -> Result<StateSpec, String> {
    let v = get_req(top, key, "config")?;
    let path = format!("config.{key}");
    let obj = as_obj(v, &path)?;
    match get_str(obj, "kind", &path)? {
        "basis" => {
            check_keys(obj, &["kind", "n", "k"], &path)?;
            Ok(StateSpec::Basis {
                n: nonneg_int(get_req(obj, "n", &path)?, &format!("{path}.n"))?,
                k: nonneg_int(get_req(obj, "k", &path)?, &format!("{path}.k"))?,
            })
        }
        "product" => {
            check_keys(obj, &["kind", "first", "second"], &path)?;
            Ok(StateSpec::Product {
                first: fock_spec(get_req(obj, "first", &path)?, &format!("{path}.first"))?,
                second: fock_spec(get_req(obj, "second", &path)?, &format!("{path}.second"))?,
            })
        }
        other => Err(format!(
            "{path}.kind: unknown state kind \"{other}\" (expected basis or product)"
        )),
    }
}

fn fock_spec(v: &Value, path: &str) -> Result<FockSpec, String> {
    let obj = as_obj(v, path)?;
    match get_str(obj, "kind", path)? {
        "number" => {
            check_keys(obj, &["kind", "n", "n_max"], path)?;
            let n = nonneg_int(get_req(obj, "n", path)?, &format!("{path}.n"))?;
            let n_max = match obj.get("n_max") {
                Some(v) => nonneg_int(v, &format!("{path}.n_max"))?,
                None => n,
            };
            if n_max < n {
                return Err(format!("{path}: n_max must be at least n"));
            }
            Ok(FockSpec::Number { n, n_max })
        }
        "coherent" => {
            check_keys(obj, &["kind", "modulus", "phase", "n_max"], path)?;
            Ok(FockSpec::Coherent {
                modulus: finite_f64(get_req(obj, "modulus", path)?, &format!("{path}.modulus"))?,
                phase: finite_f64(get_req(obj, "phase", path)?, &format!("{path}.phase"))?,
                n_max: nonneg_int(get_req(obj, "n_max", path)?, &format!("{path}.n_max"))?,
            })
        }
        "coeffs" => {
            check_keys(obj, &["kind", "re", "im"], path)?;
            let re = f64_array(get_req(obj, "re", path)?, &format!("{path}.re"))?;
            let im = match obj.get("im") {
                Some(v) => f64_array(v, &format!("{path}.im"))?,
                None => vec![0.0; re.len()],
            };
            if re.is_empty() {
                return Err(format!("{path}.re must be nonempty"));
            }
            if im.len() != re.len() {
                return Err(format!("{path}: `re` and `im` must have equal length"));
            }
            Ok(FockSpec::Coeffs { re, im })
        }
        other => Err(format!(
            "{path}.kind: unknown mode kind \"{other}\" (expected number, coherent, or coeffs)"
        )),
    }
}

fn interval_spec(top: &Map<String, Value>, key: &str) -> Result<Vec<(f64, f64)>, String> {
    let v = get_req(top, key, "config")?;
    let path = format!("config.{key}");
    let arr = v
        .as_array()
        .ok_or_else(|| format!("{path} must be an array of [lower, upper] pairs"))?;
    if arr.is_empty() {
        return Err(format!("{path} must contain at least one arc"));
    }
    let mut arcs = Vec::with_capacity(arr.len());
    for (i, pair) in arr.iter().enumerate() {
        let p = f64_array(pair, &format!("{path}[{i}]"))?;
        if p.len() != 2 {
            return Err(format!("{path}[{i}] must be a [lower, upper] pair"));
        }
        arcs.push((p[0], p[1]));
    }
    Ok(arcs)
}

fn as_obj<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, String> {
    v.as_object().ok_or_else(|| format!("{path} must be a JSON object"))
}

fn check_keys(m: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), String> {
    for key in m.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(format!(
                "{path}: unknown key \"{key}\" (allowed: {})",
                allowed.join(", ")
            ));
        }
    }
    Ok(())
}

fn get_req<'a>(m: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, String> {
    m.get(key).ok_or_else(|| format!("{path}: missing required key \"{key}\""))
}

fn get_str<'a>(m: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a str, String> {
    get_req(m, key, path)?
        .as_str()
        .ok_or_else(|| format!("{path}.{key} must be a string"))
}

fn finite_f64(v: &Value, path: &str) -> Result<f64, String> {
    let x = v.as_f64().ok_or_else(|| format!("{path} must be a number"))?;
    if !x.is_finite() {
        return Err(format!("{path} must be finite"));
    }
    Ok(x)
}

fn opt_f64(m: &Map<String, Value>, key: &str, default: f64) -> Result<f64, String> {
    match m.get(key) {
        Some(v) => finite_f64(v, &format!("config.{key}")),
        None => Ok(default),
    }
}

fn nonneg_int(v: &Value, path: &str) -> Result<usize, String> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| format!("{path} must be a nonnegative integer"))
}

fn f64_array(v: &Value, path: &str) -> Result<Vec<f64>, String> {
    let arr = v
        .as_array()
        .ok_or_else(|| format!("{path} must be an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| finite_f64(x, &format!("{path}[{i}]")))
        .collect()
}

fn int_array(v: &Value, path: &str) -> Result<Vec<usize>, String> {
    let arr = v
        .as_array()
        .ok_or_else(|| format!("{path} must be an array of integers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| nonneg_int(x, &format!("{path}[{i}]")))
        .collect()
}
