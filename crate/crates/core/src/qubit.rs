//! Gates on the odd-parity Majorana qubit and square-wave voltage protocols.
//!
//! The qubit lives in `{|1₁0₂⟩, |0₁1₂⟩}` with `d₁ = (γ'_{N1} + iγ_{-1})/2` and
//! `d₂ = (γ'_{N+1} + iγ_{N2})/2`. Coupling `γ_{-1}` to `γ'_{N+1}` through the
//! central segment acts as `σ_x`; braiding on the left acts as `σ_z`.
//!
//! A protocol is validated by evolving the lattice piecewise and reading the
//! rotation of the inner Majorana pair. The reported angles `θ` are Rabi
//! phases (`θ = 2φ` for a qubit rotation `e^{-iφσ_x/2}`), so that a full
//! population cycle of the overlap is `θ = 2π`.

use nalgebra::{Complex, DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bdg::{build_bdg, diagonalize, extract_coupling, majorana_wavefunctions, BdgError, BdgMatrix, SpectrumResult};
use crate::chain::{ChainConfig, ConfigError, ValidatedConfig};
use crate::dynamics::RABI_CALIBRATION;
use crate::scalar::Real;

/// Required suppression `ε(μ_high) / ε(μ_low)` of the decoupled stage.
pub const DECOUPLING_RATIO: f64 = 1e-3;
/// Largest population allowed outside the four-mode zero sector.
pub const MAX_LEAKAGE: f64 = 0.05;

/// Rotation per chunk when accumulating angles, well below the `π` ambiguity.
const CHUNK_ANGLE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum QubitError {
    #[error("protocol has no gates")]
    Empty,
    #[error("mu_high does not decouple: eps(high) = {eps_high:e}, eps(low) = {eps_low:e}, need ratio <= {DECOUPLING_RATIO:e}")]
    InsufficientDecoupling { eps_low: f64, eps_high: f64 },
    /// Carries the full report so callers can still inspect the angles.
    #[error("population {leakage:.4} left the zero sector in stage {stage}")]
    ZeroSectorLeakage { stage: usize, leakage: f64, report: Box<ProtocolReport> },
    #[error("outer segments must sit at the sweet spot")]
    NotSweetSpot,
    #[error("negative duration {0}")]
    NegativeDuration(f64),
    #[error(transparent)]
    Bdg(#[from] BdgError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("protocol JSON: {0}")]
    Parse(#[from] serde_json::Error),
}

type C<T> = Complex<T>;

/// 2x2 unitary on the odd-parity qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitGate<T: Real> {
    pub matrix: Matrix2<C<T>>,
}

fn c<T: Real>(re: T, im: T) -> C<T> {
    C::new(re, im)
}

fn cis<T: Real>(a: T) -> C<T> {
    C::new(a.cos(), a.sin())
}

impl<T: Real> QubitGate<T> {
    pub fn identity() -> Self {
        Self { matrix: Matrix2::identity() }
    }

    /// `e^{-iφσ_x/2}`.
    pub fn x_rotation(phi: T) -> Self {
        let h = phi * T::lit(0.5);
        let (co, si) = (c(h.cos(), T::zero()), c(T::zero(), -h.sin()));
        Self { matrix: Matrix2::new(co, si, si, co) }
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint() }
    }

    /// `max |U†U - I|`.
    pub fn unitarity_residual(&self) -> T {
        let d = self.matrix.adjoint() * self.matrix - Matrix2::identity();
        d.iter().fold(T::zero(), |a, z| a.max(z.norm_sqr().sqrt()))
    }

    /// `max |U - V|`.
    pub fn distance(&self, other: &Self) -> T {
        (self.matrix - other.matrix).iter().fold(T::zero(), |a, z| a.max(z.norm_sqr().sqrt()))
    }

    pub fn powi(&self, n: u32) -> Self {
        (0..n).fold(Self::identity(), |acc, _| Self { matrix: self.matrix * acc.matrix })
    }
}

/// `U_{0N}(t) = e^{-iεtσ_x/2}`.
pub fn gate_u0n<T: Real>(epsilon: T, t: T) -> QubitGate<T> {
    QubitGate::x_rotation(epsilon * t)
}

/// The π/4 phase gate `e^{iπσ_z/4}` of a braid.
pub fn gate_braid<T: Real>() -> QubitGate<T> {
    let q = T::frac_pi_4();
    let zero = c(T::zero(), T::zero());
    QubitGate { matrix: Matrix2::new(cis(q), zero, zero, cis(-q)) }
}

/// Product with the first gate applied first.
pub fn compose<T: Real>(gates: &[QubitGate<T>]) -> Result<QubitGate<T>, QubitError> {
    let (first, rest) = gates.split_first().ok_or(QubitError::Empty)?;
    Ok(rest.iter().fold(*first, |acc, g| QubitGate { matrix: g.matrix * acc.matrix }))
}

/// `|tr(U†V)| / 2`.
pub fn fidelity<T: Real>(u: &QubitGate<T>, v: &QubitGate<T>) -> T {
    (u.matrix.adjoint() * v.matrix).trace().norm_sqr().sqrt() * T::lit(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Couple,
    Decouple,
    Braid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct ProtocolStep<T> {
    #[serde(default = "crate::chain::zero")]
    pub duration: T,
    pub stage: StageKind,
    /// Central chemical potential; the schedule's low or high voltage if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_c: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct Protocol<T> {
    pub steps: Vec<ProtocolStep<T>>,
}

impl<T: Real> Protocol<T> {
    pub fn from_json(text: &str) -> Result<Self, QubitError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn couple(mut self, duration: T) -> Self {
        self.steps.push(ProtocolStep { duration, stage: StageKind::Couple, mu_c: None });
        self
    }

    pub fn decouple(mut self, duration: T) -> Self {
        self.steps.push(ProtocolStep { duration, stage: StageKind::Decouple, mu_c: None });
        self
    }

    pub fn braid(mut self) -> Self {
        self.steps.push(ProtocolStep { duration: T::zero(), stage: StageKind::Braid, mu_c: None });
        self
    }
}

/// One piece of a lattice schedule.
#[derive(Debug, Clone)]
pub enum ScheduledStage<T: Real> {
    Lattice {
        kind: StageKind,
        mu_c: T,
        duration: T,
        matrix: BdgMatrix<T>,
        /// `ε_numeric` of this stage.
        epsilon: T,
    },
    /// Ideal braid unitary, not evolved on the lattice.
    Braid,
}

impl<T: Real> ScheduledStage<T> {
    pub fn kind(&self) -> StageKind {
        match self {
            ScheduledStage::Lattice { kind, .. } => *kind,
            ScheduledStage::Braid => StageKind::Braid,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Schedule<T: Real> {
    pub stages: Vec<ScheduledStage<T>>,
    pub base: ValidatedConfig<T>,
    pub mu_low: T,
    pub mu_high: T,
    pub eps_low: T,
    pub eps_high: T,
}

fn with_mu<T: Real>(base: &ChainConfig<T>, mu: T) -> Result<ValidatedConfig<T>, ConfigError> {
    let mut c = *base;
    c.center.mu = mu;
    crate::chain::validate(&c)
}

fn stage_epsilon<T: Real>(v: &ValidatedConfig<T>) -> Result<(BdgMatrix<T>, T), QubitError> {
    let m = build_bdg(v);
    let eps = extract_coupling(&diagonalize(&m)?)?;
    Ok((m, eps))
}

/// Translates a protocol into square-wave lattice stages.
///
/// A zero-length high-voltage stage is inserted after every run of coupling
/// stages that is followed by a braid or by the end of the protocol, so each
/// braid happens on decoupled Majoranas.
pub fn schedule_protocol<T: Real>(
    protocol: &Protocol<T>,
    base: &ChainConfig<T>,
    mu_low: T,
    mu_high: T,
) -> Result<Schedule<T>, QubitError> {
    let base_v = crate::chain::validate(base)?;
    if !base_v.outer_sweet_spot() {
        return Err(QubitError::NotSweetSpot);
    }
    let (low_m, eps_low) = stage_epsilon(&with_mu(base, mu_low)?)?;
    let (high_m, eps_high) = stage_epsilon(&with_mu(base, mu_high)?)?;
    if !(eps_high <= T::lit(DECOUPLING_RATIO) * eps_low) {
        return Err(QubitError::InsufficientDecoupling { eps_low: eps_low.as_f64(), eps_high: eps_high.as_f64() });
    }

    let lattice = |kind, mu: Option<T>, duration: T| -> Result<ScheduledStage<T>, QubitError> {
        if duration < T::zero() {
            return Err(QubitError::NegativeDuration(duration.as_f64()));
        }
        let default_mu = if kind == StageKind::Couple { mu_low } else { mu_high };
        let mu_c = mu.unwrap_or(default_mu);
        let (matrix, epsilon) = if mu_c == mu_low {
            (low_m.clone(), eps_low)
        } else if mu_c == mu_high {
            (high_m.clone(), eps_high)
        } else {
            stage_epsilon(&with_mu(base, mu_c)?)?
        };
        Ok(ScheduledStage::Lattice { kind, mu_c, duration, matrix, epsilon })
    };

    let mut stages = Vec::new();
    let mut coupled = false;
    for step in &protocol.steps {
        match step.stage {
            StageKind::Couple => {
                stages.push(lattice(StageKind::Couple, step.mu_c, step.duration)?);
                coupled = true;
            }
            StageKind::Decouple => {
                stages.push(lattice(StageKind::Decouple, step.mu_c, step.duration)?);
                coupled = false;
            }
            StageKind::Braid => {
                if coupled {
                    stages.push(lattice(StageKind::Decouple, None, T::zero())?);
                    coupled = false;
                }
                stages.push(ScheduledStage::Braid);
            }
        }
    }
    if coupled {
        stages.push(lattice(StageKind::Decouple, None, T::zero())?);
    }
    Ok(Schedule { stages, base: base_v, mu_low, mu_high, eps_low, eps_high })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: StageKind,
    pub mu_c: Option<f64>,
    pub duration: f64,
    pub epsilon: Option<f64>,
    pub theta_pred: f64,
    pub theta_sim: f64,
    /// Largest population outside the zero sector at the stage boundaries.
    pub leakage: f64,
}

/// Predicted against simulated action of a schedule.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolReport {
    pub stages: Vec<StageReport>,
    /// Summed Rabi phase `c ε t` over lattice stages.
    pub theta_pred: f64,
    pub theta_sim: f64,
    /// `|θ_sim - θ_pred| / |θ_pred|`, zero when both vanish.
    pub relative_deviation: f64,
    pub leakage: f64,
    pub fidelity: f64,
    #[serde(serialize_with = "serialize_gate")]
    pub predicted: QubitGate<f64>,
    #[serde(serialize_with = "serialize_gate")]
    pub simulated: QubitGate<f64>,
}

fn serialize_gate<S: serde::Serializer>(g: &QubitGate<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> =
        (0..2).map(|i| (0..2).map(|j| [g.matrix[(i, j)].re, g.matrix[(i, j)].im]).collect()).collect();
    rows.serialize(s)
}

impl ProtocolReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Inner Majorana pair of a stage: the `γ_{-1}`-like BdG vector and `i` times
/// the `γ'_{N+1}`-like one. Signs follow `align` when given, otherwise the
/// pair is oriented so that it rotates forward under ℋ.
fn inner_pair<T: Real>(
    matrix: &BdgMatrix<T>,
    spectrum: &SpectrumResult<T>,
    align: Option<(&DVector<C<T>>, &DVector<C<T>>)>,
) -> Result<(DVector<C<T>>, DVector<C<T>>), QubitError> {
    let modes = majorana_wavefunctions(spectrum)?;
    let mut a = modes[1].vector.map(|x| c(x, T::zero()));
    let mut b = modes[2].vector.map(|x| c(T::zero(), x));
    match align {
        Some((ra, rb)) => {
            if cdot(ra, &a).re < T::zero() {
                a.neg_mut();
            }
            if cdot(rb, &b).re < T::zero() {
                b.neg_mut();
            }
        }
        None => {
            if (modes[2].vector.transpose() * matrix.matrix() * &modes[1].vector)[(0, 0)] < T::zero() {
                b.neg_mut();
            }
        }
    }
    Ok((a, b))
}

fn cdot<T: Real>(a: &DVector<C<T>>, b: &DVector<C<T>>) -> C<T> {
    a.iter().zip(b.iter()).fold(c(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

struct Propagator<T: Real> {
    spectrum: SpectrumResult<T>,
    vectors: DMatrix<C<T>>,
}

impl<T: Real> Propagator<T> {
    fn new(m: &BdgMatrix<T>) -> Result<Self, QubitError> {
        let spectrum = diagonalize(m)?;
        let vectors = spectrum.eigenvectors.map(|x| c(x, T::zero()));
        Ok(Self { spectrum, vectors })
    }

    fn apply(&self, t: T, psi: &DVector<C<T>>) -> DVector<C<T>> {
        let mut coeffs = self.vectors.ad_mul(psi);
        for (k, z) in coeffs.iter_mut().enumerate() {
            *z *= cis(-self.spectrum.eigenvalues[k] * t);
        }
        &self.vectors * coeffs
    }

    /// Population outside the four levels closest to zero.
    fn leakage(&self, psi: &DVector<C<T>>) -> T {
        let n = self.spectrum.sites();
        let inside = (n - 2..n + 2).fold(T::zero(), |acc, k| {
            acc + cdot(&self.vectors.column(k).into_owned(), psi).norm_sqr()
        });
        (cdot(psi, psi).re - inside).max(T::zero())
    }
}

/// Rotation angle of the nearest orthogonal matrix to the projection of the
/// evolved pair onto the reference pair.
fn pair_angle<T: Real>(a0: &DVector<C<T>>, b0: &DVector<C<T>>, a: &DVector<C<T>>, b: &DVector<C<T>>) -> T {
    let r11 = cdot(a0, a).re;
    let r12 = cdot(a0, b).re;
    let r21 = cdot(b0, a).re;
    let r22 = cdot(b0, b).re;
    (r12 - r21).atan2(r11 + r22)
}

fn wrap(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    x - tau * ((x + std::f64::consts::PI) / tau).floor()
}

/// Evolves the lattice through every stage and compares the accumulated
/// rotation of the inner Majorana pair with `c ε t`. Each stage's angle is
/// read in that stage's own inner pair, aligned with the low-voltage pair.
pub fn validate_protocol<T: Real>(schedule: &Schedule<T>) -> Result<ProtocolReport, QubitError> {
    let low = build_bdg(&with_mu(schedule.base.config(), schedule.mu_low)?);
    let (a0, b0) = inner_pair(&low, &diagonalize(&low)?, None)?;
    let (mut a, mut b) = (a0.clone(), b0.clone());

    let mut reports = Vec::with_capacity(schedule.stages.len());
    let mut predicted = Vec::new();
    let mut simulated = Vec::new();
    let mut worst = 0.0f64;
    let mut first_leak = None;
    for (index, stage) in schedule.stages.iter().enumerate() {
        match stage {
            ScheduledStage::Braid => {
                predicted.push(gate_braid::<f64>());
                simulated.push(gate_braid::<f64>());
                reports.push(StageReport {
                    stage: StageKind::Braid,
                    mu_c: None,
                    duration: 0.0,
                    epsilon: None,
                    theta_pred: 0.0,
                    theta_sim: 0.0,
                    leakage: 0.0,
                });
            }
            ScheduledStage::Lattice { kind, mu_c, duration, matrix, epsilon } => {
                let prop = Propagator::new(matrix)?;
                let (sa, sb) = inner_pair(matrix, &prop.spectrum, Some((&a0, &b0)))?;
                let leak_in = prop.leakage(&a).max(prop.leakage(&b)).as_f64();
                let dur = duration.as_f64();
                let eps = epsilon.as_f64();
                let chunks = ((eps * dur / CHUNK_ANGLE).ceil() as usize).max(1);
                let step = *duration / T::from_usize_lossy(chunks);
                let mut phi = 0.0;
                let mut prev = pair_angle(&sa, &sb, &a, &b).as_f64();
                let (start_a, start_b) = (a.clone(), b.clone());
                for k in 1..=chunks {
                    let t = step * T::from_usize_lossy(k);
                    let (na, nb) = (prop.apply(t, &start_a), prop.apply(t, &start_b));
                    let angle = pair_angle(&sa, &sb, &na, &nb).as_f64();
                    phi += wrap(angle - prev);
                    prev = angle;
                    if k == chunks {
                        a = na;
                        b = nb;
                    }
                }
                let leak_out = prop.leakage(&a).max(prop.leakage(&b)).as_f64();
                let leakage = leak_in.max(leak_out);
                if leakage > MAX_LEAKAGE && first_leak.is_none() {
                    first_leak = Some(index);
                }
                worst = worst.max(leakage);
                predicted.push(gate_u0n(eps, dur));
                simulated.push(QubitGate::x_rotation(phi));
                reports.push(StageReport {
                    stage: *kind,
                    mu_c: Some(mu_c.as_f64()),
                    duration: dur,
                    epsilon: Some(eps),
                    theta_pred: RABI_CALIBRATION * eps * dur,
                    theta_sim: 2.0 * phi,
                    leakage,
                });
            }
        }
    }

    let theta_pred = reports.iter().fold(0.0, |a, r| a + r.theta_pred);
    let theta_sim = reports.iter().fold(0.0, |a, r| a + r.theta_sim);
    let relative_deviation = if theta_pred == 0.0 && theta_sim == 0.0 {
        0.0
    } else {
        (theta_sim - theta_pred).abs() / theta_pred.abs()
    };
    let predicted = compose(&predicted).unwrap_or_else(|_| QubitGate::identity());
    let simulated = compose(&simulated).unwrap_or_else(|_| QubitGate::identity());
    let report = ProtocolReport {
        stages: reports,
        theta_pred,
        theta_sim,
        relative_deviation,
        leakage: worst,
        fidelity: fidelity(&predicted, &simulated),
        predicted,
        simulated,
    };
    match first_leak {
        Some(stage) => Err(QubitError::ZeroSectorLeakage { stage, leakage: worst, report: Box::new(report) }),
        None => Ok(report),
    }
}

impl QubitError {
    /// The validation report, if the error still produced one.
    pub fn report(&self) -> Option<&ProtocolReport> {
        match self {
            QubitError::ZeroSectorLeakage { report, .. } => Some(report),
            _ => None,
        }
    }
}

/// Coupling time for a qubit rotation `e^{-iφσ_x/2}` at coupling `epsilon`.
pub fn rotation_time<T: Real>(phi: T, epsilon: T) -> T {
    phi / epsilon
}
