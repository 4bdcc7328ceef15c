//! Parameterization of the three-segment Kitaev chain.
//!
//! Sites are labelled the way the physics is usually written: the left
//! segment occupies `-N1..=-1`, the central (trivial) segment `0..=N` and the
//! right segment `N+1..=N2`. Internally every site is addressed through
//! `g(n) = n + N1`, which maps the chain onto `0..total_sites`.
//!
//! All energies are expressed in units of the central nearest-neighbour
//! hopping, times in inverse units of that hopping, and `hbar = 1`. Pairing
//! phases are gauged away, so every amplitude is real.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

pub(crate) fn zero<T: Real>() -> T {
    T::zero()
}

/// One homogeneous Kitaev segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct SegmentParams<T> {
    pub mu: T,
    pub t: T,
    pub delta: T,
    pub length: usize,
}

impl<T: Real> SegmentParams<T> {
    pub fn new(mu: T, t: T, delta: T, length: usize) -> Self {
        Self { mu, t, delta, length }
    }

    /// A segment at `mu = 0, delta = t`, where the end Majoranas sit on single sites.
    pub fn sweet_spot(t: T, length: usize) -> Self {
        Self { mu: T::zero(), t, delta: t, length }
    }

    pub fn is_sweet_spot(&self) -> bool {
        self.mu == T::zero() && self.delta == self.t
    }
}

/// The central segment: nearest-neighbour terms plus optional next-nearest
/// hopping `t2` and pairing `delta2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct CenterParams<T> {
    pub mu: T,
    pub t: T,
    pub delta: T,
    /// Number of central sites, `N + 1`.
    pub length: usize,
    #[serde(default = "zero")]
    pub t2: T,
    #[serde(default = "zero")]
    pub delta2: T,
}

impl<T: Real> CenterParams<T> {
    pub fn nearest(mu: T, t: T, delta: T, length: usize) -> Self {
        Self { mu, t, delta, length, t2: T::zero(), delta2: T::zero() }
    }

    pub fn base(&self) -> SegmentParams<T> {
        SegmentParams::new(self.mu, self.t, self.delta, self.length)
    }

    /// Number of nearest-neighbour bonds, the `N` in `e^{-N/xi}`.
    pub fn bonds(&self) -> usize {
        self.length.saturating_sub(1)
    }

    pub fn has_long_range(&self) -> bool {
        self.t2 != T::zero() || self.delta2 != T::zero()
    }
}

/// Couplings between the central segment and its neighbours.
///
/// `t1`/`t2` couple the Majoranas `gamma_{-1}` and `gamma'_{N+1}` to the
/// central end sites, `t1p`/`t2p` are the longer-range versions reaching sites
/// `1` and `N-1`, and `delta1`/`delta2` add boundary pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct JunctionParams<T> {
    pub t1: T,
    pub t2: T,
    #[serde(default = "zero")]
    pub t1p: T,
    #[serde(default = "zero")]
    pub t2p: T,
    #[serde(default = "zero")]
    pub delta1: T,
    #[serde(default = "zero")]
    pub delta2: T,
}

impl<T: Real> JunctionParams<T> {
    pub fn hopping(t1: T, t2: T) -> Self {
        Self {
            t1,
            t2,
            t1p: T::zero(),
            t2p: T::zero(),
            delta1: T::zero(),
            delta2: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Open => f.write_str("open"),
            Boundary::Periodic => f.write_str("periodic"),
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(format!("unknown boundary `{other}` (expected open|periodic)")),
        }
    }
}

/// The whole inhomogeneous chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct ChainConfig<T> {
    pub left: SegmentParams<T>,
    pub center: CenterParams<T>,
    pub right: SegmentParams<T>,
    pub junction: JunctionParams<T>,
    #[serde(default)]
    pub boundary: Boundary,
}

impl<T: Real> ChainConfig<T> {
    /// Sweet-spot outer segments with hopping `t_outer` around `center`,
    /// joined by plain junction hoppings.
    pub fn symmetric(
        t_outer: T,
        left_len: usize,
        center: CenterParams<T>,
        right_len: usize,
        junction: JunctionParams<T>,
    ) -> Self {
        Self {
            left: SegmentParams::sweet_spot(t_outer, left_len),
            center,
            right: SegmentParams::sweet_spot(t_outer, right_len),
            junction,
            boundary: Boundary::Open,
        }
    }

    pub fn total_sites(&self) -> usize {
        self.left.length + self.center.length + self.right.length
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<ValidatedConfig<T>, ConfigError> {
        validate(self)
    }
}

/// Amplitudes of a periodic drive `mu0 cos(omega t)` on the central sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct DriveParams<T> {
    pub mu0: T,
    pub omega: T,
}

impl<T: Real> DriveParams<T> {
    pub fn new(mu0: T, omega: T) -> Result<Self, ConfigError> {
        if !(omega > T::zero()) {
            return Err(ConfigError::NonPositiveFrequency);
        }
        Ok(Self { mu0, omega })
    }

    /// Drive ratio `mu0 / omega`, the argument of the Bessel renormalization.
    pub fn ratio(&self) -> T {
        self.mu0 / self.omega
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonPositiveLength { segment: &'static str },
    NegativeAmplitude { field: &'static str },
    NonFinite { field: &'static str },
    TooFewSites { total: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NonPositiveLength { segment } => {
                write!(f, "NonPositiveLength: {segment}.length must be >= 1")
            }
            Violation::NegativeAmplitude { field } => {
                write!(f, "NegativeAmplitude: {field} must be >= 0")
            }
            Violation::NonFinite { field } => write!(f, "NonFinite: {field} is not finite"),
            Violation::TooFewSites { total } => {
                write!(f, "TooFewSites: chain has {total} sites, need >= 3")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigWarning {
    OffSweetSpot { segment: &'static str },
}

impl std::fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigWarning::OffSweetSpot { segment } => write!(
                f,
                "{segment} segment is off the sweet spot (mu = 0, delta = t); \
                 zero-mode extraction is not guaranteed"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid chain configuration: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("drive frequency must be positive")]
    NonPositiveFrequency,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// A configuration that passed [`validate`], with the derived site bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig<T> {
    config: ChainConfig<T>,
    warnings: Vec<ConfigWarning>,
}

impl<T: Real> ValidatedConfig<T> {
    /// Accepts signed amplitudes. Used for Bessel-renormalized effective
    /// chains, whose couplings may legitimately change sign.
    pub(crate) fn new_signed(config: ChainConfig<T>) -> Result<Self, ConfigError> {
        let mut violations = Vec::new();
        check_lengths(&config, &mut violations);
        check_finite(&config, &mut violations);
        if !violations.is_empty() {
            return Err(ConfigError::Invalid(violations));
        }
        let warnings = sweet_spot_warnings(&config);
        Ok(Self { config, warnings })
    }

    pub fn config(&self) -> &ChainConfig<T> {
        &self.config
    }

    pub fn into_inner(self) -> ChainConfig<T> {
        self.config
    }

    pub fn warnings(&self) -> &[ConfigWarning] {
        &self.warnings
    }

    /// `N1`, the number of left sites.
    pub fn n_left(&self) -> usize {
        self.config.left.length
    }

    /// `N`, the label of the last central site.
    pub fn n_center_last(&self) -> usize {
        self.config.center.length - 1
    }

    /// `N2`, the label of the last right site.
    pub fn n_right_last(&self) -> usize {
        self.n_center_last() + self.config.right.length
    }

    /// Total number of sites, `N1 + (N + 1) + (N2 - N)`.
    pub fn total_sites(&self) -> usize {
        self.config.total_sites()
    }

    pub fn first_site(&self) -> isize {
        -(self.n_left() as isize)
    }

    pub fn last_site(&self) -> isize {
        self.n_right_last() as isize
    }

    /// All site labels in chain order.
    pub fn sites(&self) -> impl Iterator<Item = isize> {
        self.first_site()..=self.last_site()
    }

    /// `g(n) = n + N1`; `None` outside `-N1..=N2`.
    pub fn index_of(&self, site: isize) -> Option<usize> {
        let idx = site + self.n_left() as isize;
        (site >= self.first_site() && site <= self.last_site()).then_some(idx as usize)
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn site_of(&self, index: usize) -> isize {
        index as isize - self.n_left() as isize
    }

    pub fn is_center(&self, site: isize) -> bool {
        site >= 0 && site <= self.n_center_last() as isize
    }

    pub fn outer_sweet_spot(&self) -> bool {
        self.config.left.is_sweet_spot() && self.config.right.is_sweet_spot()
    }
}

fn check_lengths<T: Real>(c: &ChainConfig<T>, out: &mut Vec<Violation>) {
    for (segment, len) in [
        ("left", c.left.length),
        ("center", c.center.length),
        ("right", c.right.length),
    ] {
        if len == 0 {
            out.push(Violation::NonPositiveLength { segment });
        }
    }
    let total = c.total_sites();
    if out.is_empty() && total < 3 {
        out.push(Violation::TooFewSites { total });
    }
}

fn amplitudes<T: Real>(c: &ChainConfig<T>) -> [(&'static str, T); 15] {
    [
        ("left.t", c.left.t),
        ("left.delta", c.left.delta),
        ("center.t", c.center.t),
        ("center.delta", c.center.delta),
        ("center.t2", c.center.t2),
        ("center.delta2", c.center.delta2),
        ("right.t", c.right.t),
        ("right.delta", c.right.delta),
        ("junction.t1", c.junction.t1),
        ("junction.t2", c.junction.t2),
        ("junction.t1p", c.junction.t1p),
        ("junction.t2p", c.junction.t2p),
        ("junction.delta1", c.junction.delta1),
        ("junction.delta2", c.junction.delta2),
        // Chemical potentials may have either sign; listed for the finiteness check only.
        ("center.mu", c.center.mu),
    ]
}

fn check_finite<T: Real>(c: &ChainConfig<T>, out: &mut Vec<Violation>) {
    let mus = [("left.mu", c.left.mu), ("right.mu", c.right.mu)];
    for (field, v) in amplitudes(c).into_iter().chain(mus) {
        if !v.is_finite() {
            out.push(Violation::NonFinite { field });
        }
    }
}

fn sweet_spot_warnings<T: Real>(c: &ChainConfig<T>) -> Vec<ConfigWarning> {
    let mut w = Vec::new();
    if !c.left.is_sweet_spot() {
        w.push(ConfigWarning::OffSweetSpot { segment: "left" });
    }
    if !c.right.is_sweet_spot() {
        w.push(ConfigWarning::OffSweetSpot { segment: "right" });
    }
    w
}

/// Checks lengths and amplitude signs and derives the site bookkeeping.
///
/// Outer segments off the sweet spot are accepted with a warning.
pub fn validate<T: Real>(config: &ChainConfig<T>) -> Result<ValidatedConfig<T>, ConfigError> {
    let mut violations = Vec::new();
    check_lengths(config, &mut violations);
    check_finite(config, &mut violations);
    for (field, v) in amplitudes(config).into_iter().take(14) {
        if v < T::zero() {
            violations.push(Violation::NegativeAmplitude { field });
        }
    }
    if !violations.is_empty() {
        return Err(ConfigError::Invalid(violations));
    }
    let warnings = sweet_spot_warnings(config);
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ValidatedConfig { config: *config, warnings })
}

/// Parses a JSON configuration, applying defaults for optional fields.
pub fn parse_config<T: Real>(text: &str) -> Result<ChainConfig<T>, ConfigError> {
    serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        if message.contains("missing field") {
            ConfigError::Schema { line: e.line(), message }
        } else {
            ConfigError::Parse { line: e.line(), column: e.column(), message }
        }
    })
}

pub fn load_config<T: Real>(path: impl AsRef<Path>) -> Result<ChainConfig<T>, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn config_to_json<T: Real>(config: &ChainConfig<T>) -> String {
    serde_json::to_string_pretty(config).expect("chain config serializes")
}

pub fn save_config<T: Real>(config: &ChainConfig<T>, path: impl AsRef<Path>) -> std::io::Result<()> {
    fs::write(path, config_to_json(config))
}
