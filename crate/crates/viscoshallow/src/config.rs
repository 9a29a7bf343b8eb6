use crate::constitutive::{PhysicalParams, RegVariant, RegularizationConfig};
use crate::error::{Result, SolverError};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

/// The three built-in benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BenchmarkKind {
    ConstantFreeSurface,
    ParallelFreeSurface,
    DamBreak,
}

impl BenchmarkKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "constant-free-surface" => Ok(Self::ConstantFreeSurface),
            "parallel-free-surface" => Ok(Self::ParallelFreeSurface),
            "dam-break" => Ok(Self::DamBreak),
            other => Err(SolverError::InvalidArgument(format!(
                "unknown benchmark '{other}' (expected constant-free-surface, \
                 parallel-free-surface, or dam-break)"
            ))),
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::ConstantFreeSurface => "constant-free-surface",
            Self::ParallelFreeSurface => "parallel-free-surface",
            Self::DamBreak => "dam-break",
        };
        write!(f, "{s}")
    }
}

/// Full description of one benchmark run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BenchmarkSpec {
    pub name: BenchmarkKind,
    pub n_el: usize,
    /// Polynomial orders (m0 bottom, m1 height, m2 velocity, m3 strain rate).
    pub orders: [usize; 4],
    pub dt: f64,
    pub t_final: f64,
    pub params: PhysicalParams,
    pub reg: RegularizationConfig,
    /// Snapshot stride in steps; None disables intermediate snapshots.
    pub snapshot_every: Option<usize>,
}

impl BenchmarkSpec {
    /// Paper defaults for each benchmark.
    pub fn defaults(name: BenchmarkKind) -> Self {
        match name {
            BenchmarkKind::ConstantFreeSurface => Self {
                name,
                n_el: 100,
                orders: [1, 1, 1, 1],
                dt: 1e-2,
                t_final: 1.0,
                params: PhysicalParams::new(1.0, 9.81, PI / 18.0, 1.0, 1.0).unwrap(),
                reg: RegularizationConfig::new(RegVariant::Reg1, 1e3, 1e3).unwrap(),
                snapshot_every: None,
            },
            BenchmarkKind::ParallelFreeSurface => Self {
                name,
                n_el: 100,
                orders: [1, 1, 1, 1],
                dt: 1e-6,
                t_final: 1.0,
                params: PhysicalParams::new(1.0, 9.81, PI / 18.0, 1.0, 9.035).unwrap(),
                reg: RegularizationConfig::new(RegVariant::Reg1, 1e4, 1e4).unwrap(),
                snapshot_every: None,
            },
            BenchmarkKind::DamBreak => Self {
                name,
                n_el: 100,
                orders: [1, 1, 1, 0],
                dt: 1e-6,
                t_final: 0.15,
                params: PhysicalParams::new(1.0, 9.81, 0.0, 0.02, 0.2).unwrap(),
                reg: RegularizationConfig::new(RegVariant::Reg1, 1e2, 1e2).unwrap(),
                snapshot_every: None,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_el == 0 {
            return Err(SolverError::InvalidArgument("nel must be positive".into()));
        }
        if !(self.dt > 0.0) {
            return Err(SolverError::InvalidArgument("dt must be positive".into()));
        }
        if !(self.t_final >= 0.0) {
            return Err(SolverError::InvalidArgument(
                "tfinal must be non-negative".into(),
            ));
        }
        PhysicalParams::new(
            self.params.rho,
            self.params.g,
            self.params.alpha,
            self.params.eta,
            self.params.sigma0,
        )?;
        let reg = RegularizationConfig::new(self.reg.variant, self.reg.gamma, self.reg.beta)?;
        if let Some(c) = self.reg.continuation {
            reg.with_continuation(c.gamma0, c.n_gamma)?;
        }
        Ok(())
    }
}

/// Key = value configuration with `[section]` headers. Section names mirror
/// the spec fields: `[benchmark]`, `[params]`, `[regularization]`. Keys are
/// flattened to `section.key` internally.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| {
                SolverError::InvalidArgument(format!(
                    "line {}: malformed section header '{raw}'",
                    lineno + 1
                ))
            })?;
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(SolverError::InvalidArgument(format!(
                "line {}: expected key = value, got '{raw}'",
                lineno + 1
            )));
        };
        let full_key = if section.is_empty() {
            key.trim().to_string()
        } else {
            format!("{section}.{}", key.trim())
        };
        out.insert(full_key, value.trim().to_string());
    }
    Ok(out)
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse().map_err(|_| {
        SolverError::InvalidArgument(format!("{key}: cannot parse '{value}' as a number"))
    })
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| {
        SolverError::InvalidArgument(format!("{key}: cannot parse '{value}' as a count"))
    })
}

pub fn parse_orders(value: &str) -> Result<[usize; 4]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(SolverError::InvalidArgument(format!(
            "orders: expected m0,m1,m2,m3, got '{value}'"
        )));
    }
    let mut orders = [0usize; 4];
    for (slot, part) in orders.iter_mut().zip(&parts) {
        *slot = parse_usize("orders", part)?;
    }
    Ok(orders)
}

pub fn parse_continuation(value: &str) -> Result<(f64, usize)> {
    let Some((g0, ng)) = value.split_once(',') else {
        return Err(SolverError::InvalidArgument(format!(
            "continuation: expected gamma0,n_gamma, got '{value}'"
        )));
    };
    Ok((
        parse_f64("continuation.gamma0", g0.trim())?,
        parse_usize("continuation.n_gamma", ng.trim())?,
    ))
}

pub fn parse_variant(value: &str) -> Result<RegVariant> {
    match value {
        "1" => Ok(RegVariant::Reg1),
        "2" => Ok(RegVariant::Reg2),
        "3" => Ok(RegVariant::Reg3),
        other => Err(SolverError::InvalidArgument(format!(
            "reg: expected 1, 2, or 3, got '{other}'"
        ))),
    }
}

/// Applies `section.key` entries from a parsed config file onto a spec.
pub fn apply_config(spec: &mut BenchmarkSpec, entries: &BTreeMap<String, String>) -> Result<()> {
    for (key, value) in entries {
        match key.as_str() {
            "benchmark.name" => spec.name = BenchmarkKind::parse(value)?,
            "benchmark.nel" => spec.n_el = parse_usize(key, value)?,
            "benchmark.orders" => spec.orders = parse_orders(value)?,
            "benchmark.dt" => spec.dt = parse_f64(key, value)?,
            "benchmark.tfinal" | "benchmark.t_final" => spec.t_final = parse_f64(key, value)?,
            "benchmark.snapshot_every" => {
                spec.snapshot_every = Some(parse_usize(key, value)?);
            }
            "params.rho" => spec.params.rho = parse_f64(key, value)?,
            "params.g" => spec.params.g = parse_f64(key, value)?,
            "params.alpha" => spec.params.alpha = parse_f64(key, value)?,
            "params.eta" => spec.params.eta = parse_f64(key, value)?,
            "params.sigma0" => spec.params.sigma0 = parse_f64(key, value)?,
            "regularization.variant" | "regularization.reg" => {
                spec.reg.variant = parse_variant(value)?;
            }
            "regularization.gamma" => spec.reg.gamma = parse_f64(key, value)?,
            "regularization.beta" => spec.reg.beta = parse_f64(key, value)?,
            "regularization.continuation" => {
                let (g0, ng) = parse_continuation(value)?;
                spec.reg = spec.reg.with_continuation(g0, ng)?;
            }
            other => {
                return Err(SolverError::InvalidArgument(format!(
                    "unknown config key '{other}'"
                )));
            }
        }
    }
    Ok(())
}
