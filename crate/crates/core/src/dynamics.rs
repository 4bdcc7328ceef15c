//! Real-time evolution `i dΨ/dt = ℋ Ψ` of single-particle BdG vectors.
//!
//! Static Hamiltonians are propagated exactly through their eigenbasis.
//! For a drive `μ0 cos(ωt)` on the central sites the integration runs in the
//! frame `Ψ = W(t) Ψ_r`, `W = diag(e^{-iθ s}, e^{iθ s})`, `θ = (μ0/ω) sin ωt`,
//! where the drive term cancels and the junction and central pairing bonds
//! carry the phases `e^{∓iθ}`, `e^{∓2iθ}`. `W` is the identity at whole
//! periods, so one RK4-integrated period propagator is applied repeatedly.

use std::io::{self, Write};

use nalgebra::{Complex, DMatrix, DVector};
use rustfft::FftPlanner;
use thiserror::Error;

use crate::bdg::{build_bdg, diagonalize, BdgError, BdgMatrix, SpectrumResult};
use crate::chain::{DriveParams, ValidatedConfig};
use crate::scalar::{format_sig, Real};

type C<T> = Complex<T>;

/// Norm tolerance of exact (spectral) evolution.
pub const STATIC_NORM_TOL: f64 = 1e-8;
/// Norm tolerance of driven evolution.
pub const DRIVEN_NORM_TOL: f64 = 1e-6;
/// The RK4 step must resolve the drive period with at least this many steps.
pub const MIN_STEPS_PER_PERIOD: usize = 20;
/// `Ω / ε` for a Majorana started on one end of a hybridized pair: the
/// overlap is `cos²(εt)`.
pub const RABI_CALIBRATION: f64 = 2.0;
/// Peak-to-background ratio below which no oscillation is reported.
pub const NO_OSCILLATION_RATIO: f64 = 5.0;
/// Peak-to-background ratio below which the estimate is flagged.
pub const LOW_CONFIDENCE_RATIO: f64 = 20.0;

const ZERO_PAD: usize = 8;
const MIN_PERIODS: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("site {site} outside {first}..={last}")]
    SiteOutOfRange { site: isize, first: isize, last: isize },
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("state has {got} components, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("sample times must start at 0 and ascend")]
    BadTimes,
    #[error("time step {dt} exceeds {max} (a twentieth of the drive period)")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("t_max must be positive")]
    NonPositiveDuration,
    #[error("norm drifted by {drift:e} at t = {time}")]
    NormDrift { drift: f64, time: f64 },
    #[error("no oscillation found (peak/background = {confidence:.3})")]
    NoOscillation { confidence: f64 },
    #[error("weak oscillation: omega = {omega_rabi}, peak/background = {confidence:.3}")]
    LowConfidence { omega_rabi: f64, confidence: f64 },
    #[error("trace needs at least 8 uniformly spaced samples")]
    BadSampling,
    #[error(transparent)]
    Bdg(#[from] BdgError),
}

/// Normalized BdG vector in the `[a, a†]` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    components: DVector<C<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn new(components: DVector<C<T>>) -> Result<Self, DynamicsError> {
        let norm = cnorm(&components).as_f64();
        if (norm - 1.0).abs() > 1e-10 || components.len() % 2 != 0 {
            return Err(DynamicsError::NotNormalized(norm));
        }
        Ok(Self { components })
    }

    pub fn normalized(components: DVector<C<T>>) -> Result<Self, DynamicsError> {
        let norm = cnorm(&components);
        if !(norm > T::zero()) {
            return Err(DynamicsError::NotNormalized(norm.as_f64()));
        }
        Self::new(components.map(|z| z / C::new(norm, T::zero())))
    }

    pub fn components(&self) -> &DVector<C<T>> {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn norm(&self) -> T {
        cnorm(&self.components)
    }
}

fn cnorm<T: Real>(v: &DVector<C<T>>) -> T {
    v.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt()
}

fn cdot<T: Real>(a: &DVector<C<T>>, b: &DVector<C<T>>) -> C<T> {
    a.iter().zip(b.iter()).fold(C::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

/// `γ_site / √2`: weight `1/√2` on both `a_site` and `a†_site`.
pub fn initial_majorana_state<T: Real>(v: &ValidatedConfig<T>, site: isize) -> Result<StateVector<T>, DynamicsError> {
    let idx = v.index_of(site).ok_or(DynamicsError::SiteOutOfRange {
        site,
        first: v.first_site(),
        last: v.last_site(),
    })?;
    let n = v.total_sites();
    let amp = C::new(T::lit(std::f64::consts::FRAC_1_SQRT_2), T::zero());
    let mut c = DVector::from_element(2 * n, C::new(T::zero(), T::zero()));
    c[idx] = amp;
    c[idx + n] = amp;
    StateVector::new(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Observable {
    #[default]
    Overlap,
    /// Also record per-site particle + hole weight.
    Sites,
}

/// Sampled evolution of one initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace<T> {
    pub times: Vec<T>,
    /// `|⟨Ψ(0)|Ψ(t)⟩|²`.
    pub overlap: Vec<T>,
    pub norms: Vec<T>,
    /// One row of per-site populations per sample, if requested.
    pub site_populations: Option<Vec<Vec<T>>>,
}

impl<T: Real> EvolutionTrace<T> {
    fn with_capacity(n: usize, sites: bool) -> Self {
        Self {
            times: Vec::with_capacity(n),
            overlap: Vec::with_capacity(n),
            norms: Vec::with_capacity(n),
            site_populations: sites.then(|| Vec::with_capacity(n)),
        }
    }

    fn record(&mut self, t: T, psi0: &DVector<C<T>>, psi: &DVector<C<T>>) {
        let n = psi.len() / 2;
        self.times.push(t);
        self.overlap.push(cdot(psi0, psi).norm_sqr().min(T::one()));
        self.norms.push(cnorm(psi));
        if let Some(p) = self.site_populations.as_mut() {
            p.push((0..n).map(|i| psi[i].norm_sqr() + psi[i + n].norm_sqr()).collect());
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_norm_drift(&self) -> T {
        self.norms.iter().fold(T::zero(), |a, n| a.max((*n - T::one()).abs()))
    }

    /// Largest total population on sites selected by `keep` over the trace.
    pub fn max_population_where(&self, v: &ValidatedConfig<T>, keep: impl Fn(isize) -> bool) -> Option<T> {
        let rows = self.site_populations.as_ref()?;
        Some(rows.iter().fold(T::zero(), |worst, row| {
            let s = row
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(v.site_of(*i)))
                .fold(T::zero(), |a, (_, p)| a + *p);
            worst.max(s)
        }))
    }

    /// Writes `time,overlap,norm[,site_-N1,..,site_N2]`.
    pub fn write_csv<W: Write>(&self, v: &ValidatedConfig<T>, mut out: W) -> io::Result<()> {
        write!(out, "time,overlap,norm")?;
        if self.site_populations.is_some() {
            for s in v.sites() {
                write!(out, ",site_{s}")?;
            }
        }
        writeln!(out)?;
        for k in 0..self.len() {
            write!(
                out,
                "{},{},{}",
                format_sig(self.times[k]),
                format_sig(self.overlap[k]),
                format_sig(self.norms[k])
            )?;
            if let Some(p) = &self.site_populations {
                for x in &p[k] {
                    write!(out, ",{}", format_sig(*x))?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn check_state<T: Real>(dim: usize, psi0: &StateVector<T>) -> Result<(), DynamicsError> {
    if psi0.dim() != dim {
        return Err(DynamicsError::DimensionMismatch { got: psi0.dim(), expected: dim });
    }
    Ok(())
}

/// Exact evolution through the eigenbasis of `m`.
pub fn evolve_static<T: Real>(
    m: &BdgMatrix<T>,
    psi0: &StateVector<T>,
    times: &[T],
    observable: Observable,
) -> Result<EvolutionTrace<T>, DynamicsError> {
    evolve_spectral(&diagonalize(m)?, psi0, times, observable)
}

/// [`evolve_static`] on an existing decomposition.
pub fn evolve_spectral<T: Real>(
    s: &SpectrumResult<T>,
    psi0: &StateVector<T>,
    times: &[T],
    observable: Observable,
) -> Result<EvolutionTrace<T>, DynamicsError> {
    let dim = s.eigenvalues.len();
    check_state(dim, psi0)?;
    if times.first().is_none_or(|t| *t != T::zero()) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(DynamicsError::BadTimes);
    }
    let psi = psi0.components();
    let vc = s.eigenvectors.map(|x| C::new(x, T::zero()));
    let coeffs = vc.ad_mul(psi);

    let mut trace = EvolutionTrace::with_capacity(times.len(), observable == Observable::Sites);
    let mut rotated = coeffs.clone();
    for &t in times {
        for (k, z) in rotated.iter_mut().enumerate() {
            let phase = -s.eigenvalues[k] * t;
            *z = coeffs[k] * C::new(phase.cos(), phase.sin());
        }
        let state = &vc * &rotated;
        trace.record(t, psi, &state);
        let drift = (cnorm(&state) - T::one()).abs().as_f64();
        if drift > STATIC_NORM_TOL {
            return Err(DynamicsError::NormDrift { drift, time: t.as_f64() });
        }
    }
    Ok(trace)
}

/// Equally spaced sample times `0, dt, .., <= t_max`.
pub fn sample_times<T: Real>(t_max: T, dt: T) -> Vec<T> {
    let n = (t_max / dt + T::lit(1e-9)).floor().as_f64() as usize;
    (0..=n).map(|k| dt * T::from_usize_lossy(k)).collect()
}

/// Sampling and step control for [`evolve_driven`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveOptions<T> {
    pub t_max: T,
    /// Upper bound on the RK4 step; the step actually used divides the drive
    /// period evenly.
    pub dt: T,
    /// Samples inside each recorded period (1 = stroboscopic).
    pub samples_per_period: usize,
    /// Record every this many periods.
    pub period_stride: usize,
    pub observable: Observable,
}

impl<T: Real> DriveOptions<T> {
    pub fn new(t_max: T, dt: T) -> Self {
        Self { t_max, dt, samples_per_period: 1, period_stride: 1, observable: Observable::Overlap }
    }
}

/// Nonzero entries of ℋ with the phase order acquired in the rotating frame.
struct RotatingHamiltonian<T: Real> {
    entries: Vec<(usize, usize, T, i8)>,
}

impl<T: Real> RotatingHamiltonian<T> {
    fn new(m: &BdgMatrix<T>, v: &ValidatedConfig<T>) -> Self {
        let n = m.sites();
        let charge = |k: usize| -> i8 {
            let site = v.site_of(k % n);
            match (v.is_center(site), k < n) {
                (false, _) => 0,
                (true, true) => 1,
                (true, false) => -1,
            }
        };
        let a = m.matrix();
        let mut entries = Vec::new();
        for k in 0..2 * n {
            for l in 0..2 * n {
                let h = a[(k, l)];
                if h != T::zero() {
                    entries.push((k, l, h, charge(k) - charge(l)));
                }
            }
        }
        Self { entries }
    }

    /// `out = -i ℋ'(θ) y` for `cols` row-major column vectors.
    fn apply(&self, theta: T, y: &[C<T>], out: &mut [C<T>], cols: usize) {
        let phase = |q: i8| {
            let a = theta * T::lit(f64::from(q));
            C::new(a.cos(), a.sin())
        };
        let phases = [phase(-2), phase(-1), phase(0), phase(1), phase(2)];
        out.iter_mut().for_each(|z| *z = C::new(T::zero(), T::zero()));
        let minus_i = C::new(T::zero(), -T::one());
        for &(k, l, h, q) in &self.entries {
            let w = minus_i * phases[(q + 2) as usize] * C::new(h, T::zero());
            let (dst, src) = (&mut out[k * cols..(k + 1) * cols], &y[l * cols..(l + 1) * cols]);
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * *s;
            }
        }
    }

    /// One classical RK4 step of `dy/dt = -i ℋ'(t) y`.
    fn rk4_step(&self, theta: impl Fn(T) -> T, t: T, dt: T, y: &mut [C<T>], cols: usize, work: &mut RkWork<T>) {
        let half = T::lit(0.5);
        let c = |x: T| C::new(x, T::zero());
        self.apply(theta(t), y, &mut work.k1, cols);
        for i in 0..y.len() {
            work.tmp[i] = y[i] + work.k1[i] * c(half * dt);
        }
        self.apply(theta(t + half * dt), &work.tmp, &mut work.k2, cols);
        for i in 0..y.len() {
            work.tmp[i] = y[i] + work.k2[i] * c(half * dt);
        }
        self.apply(theta(t + half * dt), &work.tmp, &mut work.k3, cols);
        for i in 0..y.len() {
            work.tmp[i] = y[i] + work.k3[i] * c(dt);
        }
        self.apply(theta(t + dt), &work.tmp, &mut work.k4, cols);
        let sixth = c(dt / T::lit(6.0));
        let two = c(T::lit(2.0));
        for i in 0..y.len() {
            y[i] += (work.k1[i] + two * (work.k2[i] + work.k3[i]) + work.k4[i]) * sixth;
        }
    }
}

struct RkWork<T: Real> {
    k1: Vec<C<T>>,
    k2: Vec<C<T>>,
    k3: Vec<C<T>>,
    k4: Vec<C<T>>,
    tmp: Vec<C<T>>,
}

impl<T: Real> RkWork<T> {
    fn new(len: usize) -> Self {
        let z = vec![C::new(T::zero(), T::zero()); len];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }
}

fn row_major_to_matrix<T: Real>(y: &[C<T>], dim: usize) -> DMatrix<C<T>> {
    DMatrix::from_fn(dim, dim, |i, j| y[i * dim + j])
}

/// Evolution under `ℋ + μ0 cos(ωt) Σ_{center} n_i`.
///
/// The propagator over one drive period is integrated with classical RK4 at
/// a step no larger than `opts.dt`, together with the partial propagators
/// needed for intra-period samples, and then applied period by period.
pub fn evolve_driven<T: Real>(
    v: &ValidatedConfig<T>,
    drive: &DriveParams<T>,
    psi0: &StateVector<T>,
    opts: &DriveOptions<T>,
) -> Result<EvolutionTrace<T>, DynamicsError> {
    let m = build_bdg(v);
    let dim = m.dim();
    check_state(dim, psi0)?;
    if !(opts.t_max > T::zero()) {
        return Err(DynamicsError::NonPositiveDuration);
    }
    let period = T::two_pi() / drive.omega;
    let max_dt = period / T::from_usize_lossy(MIN_STEPS_PER_PERIOD);
    if !(opts.dt > T::zero()) || opts.dt > max_dt * (T::one() + T::lit(1e-12)) {
        return Err(DynamicsError::StepTooLarge { dt: opts.dt.as_f64(), max: max_dt.as_f64() });
    }
    let per = opts.samples_per_period.max(1);
    let stride = opts.period_stride.max(1);
    let raw_steps = (period / opts.dt).ceil().as_f64() as usize;
    let steps = raw_steps.div_ceil(per) * per;
    let h = period / T::from_usize_lossy(steps);
    let ratio = drive.ratio();
    let theta = |t: T| ratio * (drive.omega * t).sin();

    // Propagators U(jT/per), j = 1..=per, from RK4 on the identity.
    let ham = RotatingHamiltonian::new(&m, v);
    let mut y = vec![C::new(T::zero(), T::zero()); dim * dim];
    for i in 0..dim {
        y[i * dim + i] = C::new(T::one(), T::zero());
    }
    let mut work = RkWork::new(dim * dim);
    let mut partial = Vec::with_capacity(per);
    for step in 0..steps {
        let t = h * T::from_usize_lossy(step);
        ham.rk4_step(theta, t, h, &mut y, dim, &mut work);
        if (step + 1) % (steps / per) == 0 {
            partial.push(row_major_to_matrix(&y, dim));
        }
    }
    let u_period = partial.last().cloned().expect("at least one sample per period");

    let n = m.sites();
    let lab = |tau: T, psi_r: &DVector<C<T>>| -> DVector<C<T>> {
        let th = theta(tau);
        let fwd = C::new(th.cos(), -th.sin());
        DVector::from_fn(dim, |k, _| {
            if v.is_center(v.site_of(k % n)) {
                psi_r[k] * if k < n { fwd } else { fwd.conj() }
            } else {
                psi_r[k]
            }
        })
    };

    let psi_init = psi0.components().clone();
    let n_periods = (opts.t_max / period + T::lit(1e-9)).floor().as_f64() as usize;
    let mut trace = EvolutionTrace::with_capacity(n_periods / stride * per + 1, opts.observable == Observable::Sites);
    let mut psi = psi_init.clone();
    let check = |trace: &EvolutionTrace<T>| -> Result<(), DynamicsError> {
        let norm = *trace.norms.last().expect("sample");
        let drift = (norm - T::one()).abs().as_f64();
        if drift > DRIVEN_NORM_TOL {
            return Err(DynamicsError::NormDrift { drift, time: trace.times.last().expect("sample").as_f64() });
        }
        Ok(())
    };
    trace.record(T::zero(), &psi_init, &psi);
    for k in 0..n_periods {
        let t0 = period * T::from_usize_lossy(k);
        if k % stride == 0 && per > 1 {
            for (j, u) in partial[..per - 1].iter().enumerate() {
                let tau = period * T::from_usize_lossy(j + 1) / T::from_usize_lossy(per);
                let state = lab(tau, &(u * &psi));
                trace.record(t0 + tau, &psi_init, &state);
                check(&trace)?;
            }
        }
        psi = &u_period * &psi;
        if (k + 1) % stride == 0 {
            trace.record(t0 + period, &psi_init, &psi);
            check(&trace)?;
        }
    }
    Ok(trace)
}

/// Dominant angular frequency of the overlap oscillation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiEstimate<T> {
    pub omega_rabi: T,
    /// Spectral peak over the median spectral magnitude.
    pub confidence: f64,
}

/// Angular frequency of `overlap(t)` from a Hann-windowed, zero-padded DFT of
/// `overlap - mean`, refined by quadratic interpolation around the peak.
pub fn extract_rabi_frequency<T: Real>(trace: &EvolutionTrace<T>) -> Result<RabiEstimate<T>, DynamicsError> {
    let n = trace.len();
    if n < 8 {
        return Err(DynamicsError::BadSampling);
    }
    let t: Vec<f64> = trace.times.iter().map(|x| x.as_f64()).collect();
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(DynamicsError::BadSampling);
    }
    let y: Vec<f64> = trace.overlap.iter().map(|x| x.as_f64()).collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if var.sqrt() < 1e-12 {
        return Err(DynamicsError::NoOscillation { confidence: 0.0 });
    }

    let len = (ZERO_PAD * n).next_power_of_two();
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = (0..len)
        .map(|k| {
            let value = if k < n {
                let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
                (y[k] - mean) * w
            } else {
                0.0
            };
            rustfft::num_complex::Complex::new(value, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mag: Vec<f64> = buf[..len / 2].iter().map(|z| z.norm()).collect();

    // Skip the window's main lobe around zero frequency.
    let k_min = 2 * len / n + 1;
    if k_min + 2 >= mag.len() {
        return Err(DynamicsError::BadSampling);
    }
    let (k_peak, &peak) = mag[k_min..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, m)| (i + k_min, m))
        .expect("nonempty spectrum");
    let mut sorted = mag[k_min..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let confidence = if median > 0.0 { peak / median } else { f64::INFINITY };

    let delta = if k_peak + 1 < mag.len() {
        let (a, b, c) = (mag[k_peak - 1], mag[k_peak], mag[k_peak + 1]);
        let denom = a - 2.0 * b + c;
        if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 }
    } else {
        0.0
    };
    let freq = (k_peak as f64 + delta) / (len as f64 * dt);
    let omega = 2.0 * std::f64::consts::PI * freq;
    if confidence < NO_OSCILLATION_RATIO {
        return Err(DynamicsError::NoOscillation { confidence });
    }
    let periods = freq * (t[n - 1] - t[0]);
    if confidence < LOW_CONFIDENCE_RATIO || periods < MIN_PERIODS {
        return Err(DynamicsError::LowConfidence { omega_rabi: omega, confidence });
    }
    Ok(RabiEstimate { omega_rabi: T::lit(omega), confidence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdg::extract_coupling;
    use crate::chain::{validate, CenterParams, ChainConfig, JunctionParams};
    use approx::assert_abs_diff_eq;

    fn chain(mu_c: f64, t1: f64) -> ValidatedConfig<f64> {
        validate(&ChainConfig::symmetric(
            5.0,
            5,
            CenterParams::nearest(mu_c, 1.0, 5.0, 11),
            4,
            JunctionParams::hopping(t1, t1),
        ))
        .unwrap()
    }

    fn synthetic(f: impl Fn(f64) -> f64, span: f64, dt: f64) -> EvolutionTrace<f64> {
        let times = sample_times(span, dt);
        EvolutionTrace {
            overlap: times.iter().map(|&t| f(t)).collect(),
            norms: vec![1.0; times.len()],
            times,
            site_populations: None,
        }
    }

    #[test]
    fn initial_state_layout() {
        let v = validate(&ChainConfig::symmetric(
            1.0,
            2,
            CenterParams::nearest(3.0, 1.0, 5.0, 3),
            2,
            JunctionParams::hopping(1.0, 1.0),
        ))
        .unwrap();
        assert_eq!(v.total_sites(), 7);
        let s = initial_majorana_state(&v, -1).unwrap();
        for (k, z) in s.components().iter().enumerate() {
            let expect = if k == 1 || k == 8 { std::f64::consts::FRAC_1_SQRT_2 } else { 0.0 };
            assert_eq!(z.re, expect);
            assert_eq!(z.im, 0.0);
        }
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-15);
        assert!(matches!(initial_majorana_state(&v, -3), Err(DynamicsError::SiteOutOfRange { .. })));
    }

    #[test]
    fn decoupled_zero_mode_is_stationary() {
        let v = chain(3.0, 0.0);
        let psi = initial_majorana_state(&v, -1).unwrap();
        let tr = evolve_static(&build_bdg(&v), &psi, &sample_times(200.0, 0.5), Observable::Overlap).unwrap();
        for o in &tr.overlap {
            assert_abs_diff_eq!(*o, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_site_overlap_is_cos_squared() {
        let m = BdgMatrix::from_raw(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -2.0])), Default::default())
            .unwrap();
        let psi = StateVector::normalized(DVector::from_element(2, C::new(1.0, 0.0))).unwrap();
        let times: Vec<f64> = sample_times(5.0, 0.01);
        let tr = evolve_static(&m, &psi, &times, Observable::Sites).unwrap();
        for (t, o) in times.iter().zip(&tr.overlap) {
            assert_abs_diff_eq!(*o, (2.0 * t).cos().powi(2), epsilon = 1e-12);
        }
        assert!(tr.max_norm_drift() <= 1e-12);
    }

    #[test]
    fn rejects_bad_times_and_states() {
        let v = chain(3.0, 1.0);
        let m = build_bdg(&v);
        let psi = initial_majorana_state(&v, -1).unwrap();
        assert_eq!(evolve_static(&m, &psi, &[0.5, 1.0], Observable::Overlap), Err(DynamicsError::BadTimes));
        assert_eq!(evolve_static(&m, &psi, &[0.0, 1.0, 1.0], Observable::Overlap), Err(DynamicsError::BadTimes));
        let bad = DVector::from_element(m.dim(), C::new(1.0, 0.0));
        assert!(matches!(StateVector::new(bad), Err(DynamicsError::NotNormalized(_))));
    }

    #[test]
    fn rabi_of_synthetic_cos_squared() {
        let tr = synthetic(|t| (0.5 * t).cos().powi(2), 100.0, 0.05);
        let r = extract_rabi_frequency(&tr).unwrap();
        assert_abs_diff_eq!(r.omega_rabi, 1.0, epsilon = 0.01);
        assert!(r.confidence >= LOW_CONFIDENCE_RATIO);
    }

    #[test]
    fn rabi_rejects_flat_and_short_traces() {
        let tr = synthetic(|_| 0.7, 100.0, 0.05);
        assert!(matches!(extract_rabi_frequency(&tr), Err(DynamicsError::NoOscillation { .. })));
        let tr = synthetic(|t| (0.5 * t).cos().powi(2), 8.0, 0.05);
        assert!(matches!(extract_rabi_frequency(&tr), Err(DynamicsError::LowConfidence { .. })));
    }

    #[test]
    fn static_rabi_tracks_coupling() {
        let v = chain(2.0, 1.0);
        let m = build_bdg(&v);
        let s = diagonalize(&m).unwrap();
        let eps = extract_coupling(&s).unwrap();
        let span = 8.0 * std::f64::consts::PI / eps;
        let psi = initial_majorana_state(&v, -1).unwrap();
        let tr = evolve_spectral(&s, &psi, &sample_times(span, span / 4000.0), Observable::Overlap).unwrap();
        let r = extract_rabi_frequency(&tr).unwrap();
        assert_abs_diff_eq!(r.omega_rabi / eps, 2.0, epsilon = 0.02);
    }

    #[test]
    fn driven_step_guard() {
        let v = chain(2.0, 1.0);
        let psi = initial_majorana_state(&v, -1).unwrap();
        let drive = DriveParams::new(1.0, 10.0).unwrap();
        let err = evolve_driven(&v, &drive, &psi, &DriveOptions::new(1.0, 0.05)).unwrap_err();
        assert!(matches!(err, DynamicsError::StepTooLarge { .. }));
        let err = evolve_driven(&v, &drive, &psi, &DriveOptions::new(0.0, 0.01)).unwrap_err();
        assert_eq!(err, DynamicsError::NonPositiveDuration);
    }

    #[test]
    fn undriven_matches_static() {
        let v = chain(2.0, 1.0);
        let psi = initial_majorana_state(&v, -1).unwrap();
        let omega = 2.0 * std::f64::consts::PI;
        let drive = DriveParams::new(0.0, omega).unwrap();
        let mut opts = DriveOptions::new(40.0, 0.002);
        opts.samples_per_period = 4;
        opts.observable = Observable::Sites;
        let driven = evolve_driven(&v, &drive, &psi, &opts).unwrap();
        let exact = evolve_static(&build_bdg(&v), &psi, &driven.times, Observable::Sites).unwrap();
        for (a, b) in driven.overlap.iter().zip(&exact.overlap) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-8);
        }
        let (pa, pb) = (driven.site_populations.unwrap(), exact.site_populations.unwrap());
        for (ra, rb) in pa.iter().zip(&pb) {
            for (a, b) in ra.iter().zip(rb) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn driven_integrator_is_fourth_order() {
        let v = chain(2.0, 1.0);
        let psi = initial_majorana_state(&v, -1).unwrap();
        let drive = DriveParams::new(20.0, 10.0).unwrap();
        let run = |dt: f64| {
            let mut o = DriveOptions::new(20.0, dt);
            o.samples_per_period = 2;
            evolve_driven(&v, &drive, &psi, &o).unwrap()
        };
        let period = 2.0 * std::f64::consts::PI / 10.0;
        let coarse = run(period / 80.0);
        let fine = run(period / 160.0);
        let finest = run(period / 320.0);
        let err = |a: &EvolutionTrace<f64>, b: &EvolutionTrace<f64>| {
            a.overlap.iter().zip(&b.overlap).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        };
        let ratio = err(&coarse, &finest) / err(&fine, &finest);
        // Against the dt/4 reference the nominal ratio for order 4 is 255/15 = 17.
        assert!(ratio >= 12.0, "ratio {ratio}");
        assert!(err(&fine, &finest) <= 1e-6);
        assert!(finest.max_norm_drift() <= DRIVEN_NORM_TOL);
    }

    #[test]
    fn csv_header_lists_sites() {
        let v = chain(3.0, 1.0);
        let psi = initial_majorana_state(&v, -1).unwrap();
        let tr = evolve_static(&build_bdg(&v), &psi, &[0.0, 1.0], Observable::Sites).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&v, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("time,overlap,norm,site_-5,site_-4"));
        assert!(header.ends_with("site_14"));
        assert_eq!(text.lines().count(), 3);
    }
}
