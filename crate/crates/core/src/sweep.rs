//! Parameter sweeps over a base chain, evaluated in parallel and emitted in
//! a fixed order.

use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{
    coupling_boundary_pairing, coupling_eq12, coupling_longrange, sw_coupling_ksum, CouplingEstimate,
};
use crate::bdg::numeric_coupling;
use crate::chain::{validate, Boundary, ChainConfig};
use crate::scalar::{format_sig, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("unknown method `{0}` (expected numeric|eq12|boundary|longrange|ksum)")]
    UnknownMethod(String),
    #[error("sweep needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("sweep range is empty: from == to == {0}")]
    EmptyRange(f64),
    #[error("no methods requested")]
    NoMethods,
    #[error("`{param}` takes a non-negative integer, got {value}")]
    NotAnInteger { param: String, value: f64 },
    #[error("bad axis `{0}` (expected path:from:to:steps)")]
    BadAxis(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepMethod {
    Numeric,
    Eq12,
    /// Closed form with the `(t1 + Δ1)(t2 + Δ2)` prefactor.
    BoundaryPairing,
    Longrange,
    Ksum,
}

impl SweepMethod {
    pub fn name(self) -> &'static str {
        match self {
            SweepMethod::Numeric => "numeric",
            SweepMethod::Eq12 => "eq12",
            SweepMethod::BoundaryPairing => "boundary",
            SweepMethod::Longrange => "longrange",
            SweepMethod::Ksum => "ksum",
        }
    }
}

impl FromStr for SweepMethod {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "numeric" => SweepMethod::Numeric,
            "eq12" => SweepMethod::Eq12,
            "boundary" => SweepMethod::BoundaryPairing,
            "longrange" => SweepMethod::Longrange,
            "ksum" => SweepMethod::Ksum,
            other => return Err(SweepError::UnknownMethod(other.to_string())),
        })
    }
}

/// Every path accepted by [`set_param`].
pub const PARAMETERS: &[&str] = &[
    "left.mu",
    "left.t",
    "left.delta",
    "left.length",
    "center.mu",
    "center.t",
    "center.delta",
    "center.length",
    "center.n",
    "center.t2",
    "center.delta2",
    "right.mu",
    "right.t",
    "right.delta",
    "right.length",
    "junction.t1",
    "junction.t2",
    "junction.t1p",
    "junction.t2p",
    "junction.delta1",
    "junction.delta2",
];

fn as_count(param: &str, value: f64) -> Result<usize, SweepError> {
    let r = value.round();
    if r < 0.0 || (r - value).abs() > 1e-9 {
        return Err(SweepError::NotAnInteger { param: param.to_string(), value });
    }
    Ok(r as usize)
}

/// Sets one field of `config` by dotted path. `center.n` is the number of
/// central bonds, `center.length - 1`.
pub fn set_param<T: Real>(config: &mut ChainConfig<T>, param: &str, value: f64) -> Result<(), SweepError> {
    let v = T::lit(value);
    let c = config;
    match param {
        "left.mu" => c.left.mu = v,
        "left.t" => c.left.t = v,
        "left.delta" => c.left.delta = v,
        "left.length" => c.left.length = as_count(param, value)?,
        "center.mu" => c.center.mu = v,
        "center.t" => c.center.t = v,
        "center.delta" => c.center.delta = v,
        "center.length" => c.center.length = as_count(param, value)?,
        "center.n" => c.center.length = as_count(param, value)? + 1,
        "center.t2" => c.center.t2 = v,
        "center.delta2" => c.center.delta2 = v,
        "right.mu" => c.right.mu = v,
        "right.t" => c.right.t = v,
        "right.delta" => c.right.delta = v,
        "right.length" => c.right.length = as_count(param, value)?,
        "junction.t1" => c.junction.t1 = v,
        "junction.t2" => c.junction.t2 = v,
        "junction.t1p" => c.junction.t1p = v,
        "junction.t2p" => c.junction.t2p = v,
        "junction.delta1" => c.junction.delta1 = v,
        "junction.delta2" => c.junction.delta2 = v,
        other => return Err(SweepError::UnknownParameter(other.to_string())),
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn new(param: &str, from: f64, to: f64, steps: usize) -> Result<Self, SweepError> {
        if !PARAMETERS.contains(&param) {
            return Err(SweepError::UnknownParameter(param.to_string()));
        }
        if steps < 2 {
            return Err(SweepError::TooFewSteps(steps));
        }
        if from == to {
            return Err(SweepError::EmptyRange(from));
        }
        Ok(Self { param: param.to_string(), from, to, steps })
    }

    /// Linear grid including both ends.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.to } else { self.from + (self.to - self.from) * i as f64 / last })
            .collect()
    }
}

impl FromStr for SweepAxis {
    type Err = SweepError;

    /// `path:from:to:steps`, e.g. `center.mu:2:10:17`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SweepError::BadAxis(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let [param, from, to, steps] = parts.as_slice() else { return Err(bad()) };
        Self::new(
            param,
            from.parse().map_err(|_| bad())?,
            to.parse().map_err(|_| bad())?,
            steps.parse().map_err(|_| bad())?,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub x: SweepAxis,
    /// Second axis for a 2-D grid.
    pub y: Option<SweepAxis>,
    pub methods: Vec<SweepMethod>,
    /// Boundaries evaluated by the numeric method; analytic methods ignore it.
    pub boundaries: Vec<Boundary>,
}

impl SweepSpec {
    pub fn new(x: SweepAxis, methods: Vec<SweepMethod>) -> Result<Self, SweepError> {
        if methods.is_empty() {
            return Err(SweepError::NoMethods);
        }
        Ok(Self { x, y: None, methods, boundaries: vec![Boundary::Open] })
    }

    pub fn with_grid(mut self, y: SweepAxis) -> Self {
        self.y = Some(y);
        self
    }

    pub fn with_boundaries(mut self, boundaries: Vec<Boundary>) -> Self {
        if !boundaries.is_empty() {
            self.boundaries = boundaries;
        }
        self
    }

    fn points(&self) -> Vec<(f64, Option<f64>)> {
        let xs = self.x.values();
        match &self.y {
            None => xs.into_iter().map(|x| (x, None)).collect(),
            Some(y) => {
                let ys = y.values();
                xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, Some(y)))).collect()
            }
        }
    }

    /// `(method, boundary)` pairs per point, in output order.
    fn variants(&self) -> Vec<(SweepMethod, Boundary)> {
        let mut out = Vec::new();
        for &m in &self.methods {
            if m == SweepMethod::Numeric {
                out.extend(self.boundaries.iter().map(|&b| (m, b)));
            } else {
                out.push((m, Boundary::Open));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub x: f64,
    pub y: Option<f64>,
    pub method: SweepMethod,
    pub boundary: Boundary,
    /// `(ε, ξ)` or the error text.
    pub result: Result<(T, Option<T>), String>,
}

impl<T: Real> SweepRow<T> {
    /// Method column: numeric rows carry a `_periodic` suffix on the ring.
    pub fn label(&self) -> String {
        match (self.method, self.boundary) {
            (SweepMethod::Numeric, Boundary::Periodic) => "numeric_periodic".into(),
            (m, _) => m.name().into(),
        }
    }

    pub fn epsilon(&self) -> Option<T> {
        self.result.as_ref().ok().map(|r| r.0)
    }
}

fn evaluate<T: Real>(config: &ChainConfig<T>, method: SweepMethod, boundary: Boundary) -> Result<(T, Option<T>), String> {
    let mut config = *config;
    config.boundary = boundary;
    let v = validate(&config).map_err(|e| e.to_string())?;
    let c = &config.center;
    let n = v.n_center_last();
    let estimate = |r: Result<CouplingEstimate<T>, _>| -> Result<(T, Option<T>), String> {
        r.map(|e| (e.epsilon, e.coherence_length)).map_err(|e: crate::analytic::AnalyticError| e.to_string())
    };
    match method {
        SweepMethod::Numeric => {
            let eps = numeric_coupling(&v).map_err(|e| e.to_string())?;
            let xi = if c.has_long_range() {
                None
            } else {
                crate::analytic::coherence_length(c.mu, c.t, c.delta).ok()
            };
            Ok((eps, xi))
        }
        SweepMethod::Eq12 => estimate(coupling_eq12(config.junction.t1, config.junction.t2, c, n)),
        SweepMethod::BoundaryPairing => estimate(coupling_boundary_pairing(&config.junction, c, n)),
        SweepMethod::Longrange => estimate(coupling_longrange(&config.junction, c, n)),
        SweepMethod::Ksum => estimate(sw_coupling_ksum(&config.junction, c, n)),
    }
}

/// Evaluates every `(point, method, boundary)` of `spec` on top of `base`.
/// Per-point failures become rows with an error; only a malformed spec fails
/// the whole sweep.
pub fn run_sweep<T: Real>(base: &ChainConfig<T>, spec: &SweepSpec) -> Result<Vec<SweepRow<T>>, SweepError> {
    if spec.methods.is_empty() {
        return Err(SweepError::NoMethods);
    }
    let variants = spec.variants();
    let points = spec.points();
    let configs = points
        .iter()
        .map(|&(x, y)| {
            let mut c = *base;
            set_param(&mut c, &spec.x.param, x)?;
            if let (Some(axis), Some(y)) = (&spec.y, y) {
                set_param(&mut c, &axis.param, y)?;
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    let jobs: Vec<(usize, SweepMethod, Boundary)> =
        (0..points.len()).flat_map(|i| variants.iter().map(move |&(m, b)| (i, m, b))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(i, method, boundary)| SweepRow {
            x: points[i].0,
            y: points[i].1,
            method,
            boundary,
            result: evaluate(&configs[i], method, boundary),
        })
        .collect())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `sweep_param,value,method,epsilon,coherence_length,error`, or the
/// `param_x,x,param_y,y,...` form for grids.
pub fn write_sweep_csv<T: Real, W: Write>(spec: &SweepSpec, rows: &[SweepRow<T>], mut out: W) -> io::Result<()> {
    match &spec.y {
        None => writeln!(out, "sweep_param,value,method,epsilon,coherence_length,error")?,
        Some(_) => writeln!(out, "param_x,x,param_y,y,method,epsilon,coherence_length,error")?,
    }
    for row in rows {
        let (eps, xi, err) = match &row.result {
            Ok((e, xi)) => (format_sig(e.as_f64()), xi.map_or("nan".into(), |x| format_sig(x.as_f64())), String::new()),
            Err(msg) => ("nan".into(), "nan".into(), csv_field(msg)),
        };
        match (&spec.y, row.y) {
            (Some(axis), Some(y)) => writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                spec.x.param,
                format_sig(row.x),
                axis.param,
                format_sig(y),
                row.label(),
                eps,
                xi,
                err
            )?,
            _ => writeln!(out, "{},{},{},{},{},{}", spec.x.param, format_sig(row.x), row.label(), eps, xi, err)?,
        }
    }
    Ok(())
}
