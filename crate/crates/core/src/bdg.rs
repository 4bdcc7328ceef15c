//! Bogoliubov-de Gennes matrix of the full chain, its spectrum and the
//! numerically exact Majorana coupling.
//!
//! The basis is `A = [a_{-N1}, .., a_{N2}, a†_{-N1}, .., a†_{N2}]` with
//! `H = ½ A† ℋ A`. A bond of hopping `t` and pairing `Δ` between sites
//! `i < j` contributes `-(t/2)(a†_i a_j + h.c.) + (Δ/2)(a†_i a†_j + h.c.)`.
//! This pairing sign makes a sweet-spot bond equal to `∝ i γ_i γ'_j` with
//! `γ = a + a†`, `γ' = i(a† - a)`, so a segment leaves `γ'` free on its first
//! site and `γ` free on its last. With real amplitudes ℋ is real symmetric:
//!
//! ```text
//! ℋ = [  h   D ]     h symmetric, D antisymmetric
//!     [ -D  -h ]
//! ```
//!
//! Junction bonds follow the Majorana-projected form
//! `-(t1/2) γ_{-1} (a_0 - a†_0)`, which in fermion language is a bond with
//! hopping `t1` and pairing `t1`; boundary pairing `delta1` adds to the
//! pairing. The same holds on the right and for the long-range junctions.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::chain::{Boundary, ValidatedConfig};
use crate::scalar::{format_sig, Real};

pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BdgError {
    #[error("no zero-energy sector: smallest quasiparticle energy {smallest} exceeds threshold {threshold}")]
    NoZeroSector { smallest: f64, threshold: f64 },
    #[error("eigensolver did not converge")]
    ConvergenceFailure,
    #[error("matrix dimension {0} is not even")]
    OddDimension(usize),
}

/// Single-particle BdG matrix of dimension `2 * sites`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdgMatrix<T: Real> {
    matrix: DMatrix<T>,
    sites: usize,
    boundary: Boundary,
}

impl<T: Real> BdgMatrix<T> {
    /// Wraps an arbitrary `2n x 2n` matrix, e.g. for structural checks.
    pub fn from_raw(matrix: DMatrix<T>, boundary: Boundary) -> Result<Self, BdgError> {
        let dim = matrix.nrows();
        if dim % 2 != 0 || matrix.ncols() != dim {
            return Err(BdgError::OddDimension(dim));
        }
        Ok(Self { matrix, sites: dim / 2, boundary })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        2 * self.sites
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Onsite term `mu a†_i a_i`.
    fn onsite(&mut self, i: usize, mu: T) {
        let n = self.sites;
        self.matrix[(i, i)] += mu;
        self.matrix[(i + n, i + n)] -= mu;
    }

    /// Bond `-(t/2)(a†_i a_j + h.c.) + (Δ/2)(a†_i a†_j + h.c.)`.
    fn bond(&mut self, i: usize, j: usize, hop: T, pair: T) {
        let n = self.sites;
        let half = T::lit(0.5);
        let h = -hop * half;
        let d = pair * half;
        let m = &mut self.matrix;
        m[(i, j)] += h;
        m[(j, i)] += h;
        m[(i + n, j + n)] -= h;
        m[(j + n, i + n)] -= h;
        // D_ij = d, D_ji = -d; lower-left block is -D.
        m[(i, j + n)] += d;
        m[(j, i + n)] -= d;
        m[(i + n, j)] -= d;
        m[(j + n, i)] += d;
    }

    /// Largest entry of `|ℋ - ℋ^T|`.
    pub fn hermitian_residual(&self) -> T {
        let m = &self.matrix;
        let mut worst = T::zero();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst
    }
}

/// Largest entry of `|ℋ + τ_x ℋ* τ_x|`; zero for a particle-hole symmetric matrix.
pub fn ph_residual<T: Real>(m: &BdgMatrix<T>) -> T {
    let n = m.sites;
    let a = &m.matrix;
    let swap = |k: usize| if k < n { k + n } else { k - n };
    let mut worst = T::zero();
    for i in 0..2 * n {
        for j in 0..2 * n {
            worst = worst.max((a[(i, j)] + a[(swap(i), swap(j))]).abs());
        }
    }
    worst
}

/// Assembles ℋ for a validated chain.
pub fn build_bdg<T: Real>(v: &ValidatedConfig<T>) -> BdgMatrix<T> {
    let c = v.config();
    let sites = v.total_sites();
    let mut m = BdgMatrix {
        matrix: DMatrix::zeros(2 * sites, 2 * sites),
        sites,
        boundary: c.boundary,
    };
    let g = |s: isize| v.index_of(s).expect("site inside chain");
    let n = v.n_center_last() as isize;
    let n2 = v.last_site();
    let n1 = v.first_site();

    for s in v.sites() {
        let mu = if s < 0 {
            c.left.mu
        } else if s <= n {
            c.center.mu
        } else {
            c.right.mu
        };
        m.onsite(g(s), mu);
    }
    for s in n1..-1 {
        m.bond(g(s), g(s + 1), c.left.t, c.left.delta);
    }
    for s in 0..n {
        m.bond(g(s), g(s + 1), c.center.t, c.center.delta);
    }
    for s in 0..n - 1 {
        m.bond(g(s), g(s + 2), c.center.t2, c.center.delta2);
    }
    for s in n + 1..n2 {
        m.bond(g(s), g(s + 1), c.right.t, c.right.delta);
    }

    let j = &c.junction;
    m.bond(g(-1), g(0), j.t1, j.t1 + j.delta1);
    m.bond(g(n), g(n + 1), j.t2, j.t2 + j.delta2);
    if n >= 1 {
        m.bond(g(-1), g(1), j.t1p, j.t1p);
        m.bond(g(n - 1), g(n + 1), j.t2p, j.t2p);
    }

    if c.boundary == Boundary::Periodic {
        // Oriented N2 -> N1 so the wrap continues the chain direction.
        m.bond(g(n2), g(n1), c.left.t, c.left.delta);
    }
    m
}

/// Eigen-decomposition of a BdG matrix together with the extraction settings.
#[derive(Debug, Clone)]
pub struct SpectrumResult<T: Real> {
    pub eigenvalues: Vec<T>,
    /// Orthonormal eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: DMatrix<T>,
    pub zero_threshold: T,
    sites: usize,
    boundary: Boundary,
}

impl<T: Real> SpectrumResult<T> {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn with_zero_threshold(mut self, threshold: T) -> Self {
        self.zero_threshold = threshold;
        self
    }

    /// Quasiparticle energies: the upper half of the spectrum, ascending.
    ///
    /// Taken by position rather than sign so that exact zero modes, which the
    /// solver returns as `±1e-16`, are counted once each.
    pub fn positive_branch(&self) -> Vec<T> {
        self.eigenvalues[self.sites..].iter().map(|e| e.abs()).collect()
    }

    pub fn eigenvector(&self, k: usize) -> DVector<T> {
        self.eigenvectors.column(k).into_owned()
    }

    /// Largest deviation of the spectrum from `E -> -E` symmetry.
    pub fn symmetry_residual(&self) -> T {
        let n = self.eigenvalues.len();
        (0..n)
            .map(|k| (self.eigenvalues[k] + self.eigenvalues[n - 1 - k]).abs())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,eigenvalue")?;
        for (k, e) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{k},{}", format_sig(*e))?;
        }
        Ok(())
    }
}

fn argmax_abs<T: Real>(v: nalgebra::DVectorView<'_, T>) -> usize {
    let mut best = 0;
    let mut best_val = T::zero();
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_val {
            best_val = x.abs();
            best = i;
        }
    }
    best
}

/// Dense symmetric eigen-decomposition with a deterministic ordering.
///
/// Eigenvalues ascend; within a cluster of values closer than `1e-12` times
/// the spectral scale, vectors are ordered by the index of their
/// largest-magnitude component. Each vector's largest component is positive.
pub fn diagonalize<T: Real>(m: &BdgMatrix<T>) -> Result<SpectrumResult<T>, BdgError> {
    let dim = m.dim();
    let eig = SymmetricEigen::try_new(m.matrix.clone(), T::default_epsilon(), 0)
        .ok_or(BdgError::ConvergenceFailure)?;

    let mut vecs = eig.eigenvectors;
    for k in 0..dim {
        let col = vecs.column(k);
        let p = argmax_abs(col);
        if vecs[(p, k)] < T::zero() {
            vecs.column_mut(k).neg_mut();
        }
    }
    let keys: Vec<(T, usize)> = (0..dim)
        .map(|k| (eig.eigenvalues[k], argmax_abs(vecs.column(k))))
        .collect();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| keys[a].0.partial_cmp(&keys[b].0).unwrap_or(std::cmp::Ordering::Equal));

    let scale = keys.iter().fold(T::one(), |s, k| s.max(k.0.abs()));
    let tie = scale * T::lit(1e-12);
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && keys[order[end]].0 - keys[order[end - 1]].0 <= tie {
            end += 1;
        }
        order[start..end].sort_by_key(|&k| keys[k].1);
        start = end;
    }

    let eigenvalues = order.iter().map(|&k| keys[k].0).collect();
    let eigenvectors = DMatrix::from_fn(dim, dim, |i, j| vecs[(i, order[j])]);
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        zero_threshold: T::lit(DEFAULT_ZERO_THRESHOLD),
        sites: m.sites,
        boundary: m.boundary,
    })
}

/// Numerically exact Majorana coupling `ε`.
///
/// With open boundaries and sweet-spot outer segments the four near-zero
/// levels are `{±0, ±ε}`: the outer pair `γ'_{N1}, γ_{N2}` is exactly at zero
/// and `ε` is the second quasiparticle energy. A periodic wrap bond gaps the
/// outer pair, leaving `ε` as the lowest quasiparticle energy. Values below
/// the zero threshold are reported as `0`.
pub fn extract_coupling<T: Real>(s: &SpectrumResult<T>) -> Result<T, BdgError> {
    let pos = s.positive_branch();
    let thr = s.zero_threshold;
    let eps = match s.boundary {
        Boundary::Open => {
            if pos.len() < 2 {
                return Err(BdgError::NoZeroSector { smallest: f64::NAN, threshold: thr.as_f64() });
            }
            if pos[0] > thr {
                return Err(BdgError::NoZeroSector {
                    smallest: pos[0].as_f64(),
                    threshold: thr.as_f64(),
                });
            }
            pos[1]
        }
        Boundary::Periodic => pos[0],
    };
    Ok(if eps <= thr { T::zero() } else { eps })
}

/// Convenience: build, diagonalize and extract `ε` in one go.
pub fn numeric_coupling<T: Real>(v: &ValidatedConfig<T>) -> Result<T, BdgError> {
    extract_coupling(&diagonalize(&build_bdg(v))?)
}

/// Which end Majorana a numerical mode represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MajoranaLabel {
    /// `γ'_{N1}` at the far left end.
    OuterLeft,
    /// `γ_{-1}` next to the central segment.
    InnerLeft,
    /// `γ'_{N+1}` next to the central segment.
    InnerRight,
    /// `γ_{N2}` at the far right end.
    OuterRight,
}

impl MajoranaLabel {
    pub fn id(self) -> usize {
        match self {
            MajoranaLabel::OuterLeft => 0,
            MajoranaLabel::InnerLeft => 1,
            MajoranaLabel::InnerRight => 2,
            MajoranaLabel::OuterRight => 3,
        }
    }
}

/// A self-conjugate combination of near-zero BdG eigenvectors.
#[derive(Debug, Clone)]
pub struct MajoranaMode<T: Real> {
    pub label: MajoranaLabel,
    /// `|u_i|² + |v_i|²` per site, chain order.
    pub site_weights: Vec<T>,
    /// Hybridization energy of the pair this mode belongs to.
    pub energy: T,
    /// Real BdG vector `(w, ±w)`. For `γ`-type modes (`+`) it is the Majorana
    /// vector itself; for `γ'`-type modes (`-`) the Majorana vector is `i` times it.
    pub vector: DVector<T>,
}

impl<T: Real> MajoranaMode<T> {
    pub fn is_primed(&self) -> bool {
        matches!(self.label, MajoranaLabel::OuterLeft | MajoranaLabel::InnerRight)
    }
}

/// Orthonormalizes `vs` in place (modified Gram-Schmidt) and drops null vectors.
fn orthonormalize<T: Real>(vs: Vec<DVector<T>>) -> Vec<DVector<T>> {
    let mut out: Vec<DVector<T>> = Vec::new();
    for mut v in vs {
        for q in &out {
            let p = q.dot(&v);
            v.axpy(-p, q, T::one());
        }
        let n = v.norm();
        if n > T::lit(1e-6) {
            out.push(v / n);
        }
    }
    out
}

/// Splits a 2-dimensional subspace into its left- and right-localized vectors
/// by diagonalizing the position operator inside it.
fn localize_pair<T: Real>(basis: &[DVector<T>], sites: usize) -> (DVector<T>, DVector<T>) {
    let pos = |v: &DVector<T>, w: &DVector<T>| {
        (0..2 * sites).fold(T::zero(), |acc, k| {
            acc + T::from_usize_lossy(k % sites) * v[k] * w[k]
        })
    };
    let x = nalgebra::Matrix2::new(
        pos(&basis[0], &basis[0]),
        pos(&basis[0], &basis[1]),
        pos(&basis[1], &basis[0]),
        pos(&basis[1], &basis[1]),
    );
    let e = SymmetricEigen::new(x);
    let (lo, hi) = if e.eigenvalues[0] <= e.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let mk = |k: usize| {
        let c = e.eigenvectors.column(k);
        let mut v = &basis[0] * c[0] + &basis[1] * c[1];
        let p = argmax_abs(v.column(0));
        if v[p] < T::zero() {
            v.neg_mut();
        }
        v
    };
    (mk(lo), mk(hi))
}

/// The four end Majoranas as localized, self-conjugate vectors.
///
/// The near-zero sector is split by particle-hole parity into `γ`-type
/// (`u = v`) and `γ'`-type (`u = -v`) halves, each of which is then
/// separated into a left and a right mode by position.
pub fn majorana_wavefunctions<T: Real>(s: &SpectrumResult<T>) -> Result<Vec<MajoranaMode<T>>, BdgError> {
    let eps = if s.boundary == Boundary::Open {
        extract_coupling(s)?
    } else {
        return Err(BdgError::NoZeroSector { smallest: f64::NAN, threshold: s.zero_threshold.as_f64() });
    };
    let n = s.sites;
    if n < 2 {
        return Err(BdgError::NoZeroSector { smallest: f64::NAN, threshold: s.zero_threshold.as_f64() });
    }
    let sector: Vec<DVector<T>> = (n - 2..n + 2).map(|k| s.eigenvector(k)).collect();
    let half = T::lit(0.5);
    let parity = |v: &DVector<T>, sign: T| {
        DVector::from_fn(2 * n, |k, _| {
            let partner = if k < n { k + n } else { k - n };
            half * (v[k] + sign * v[partner])
        })
    };
    let even = orthonormalize(sector.iter().map(|v| parity(v, T::one())).collect());
    let odd = orthonormalize(sector.iter().map(|v| parity(v, -T::one())).collect());
    if even.len() != 2 || odd.len() != 2 {
        return Err(BdgError::NoZeroSector { smallest: f64::NAN, threshold: s.zero_threshold.as_f64() });
    }
    let (a0, a1) = localize_pair(&even, n);
    let (b0, b1) = localize_pair(&odd, n);
    let centroid = |v: &DVector<T>| {
        (0..n).fold(T::zero(), |acc, i| acc + T::from_usize_lossy(i) * (v[i] * v[i] + v[i + n] * v[i + n]))
    };
    let mut ordered = vec![a0, a1, b0, b1];
    ordered.sort_by(|x, y| centroid(x).partial_cmp(&centroid(y)).unwrap_or(std::cmp::Ordering::Equal));
    let [outer_left, inner_left, inner_right, outer_right]: [DVector<T>; 4] =
        ordered.try_into().expect("four modes");

    let weights = |v: &DVector<T>| -> Vec<T> {
        let w: Vec<T> = (0..n).map(|i| v[i] * v[i] + v[i + n] * v[i + n]).collect();
        let total = w.iter().fold(T::zero(), |a, &b| a + b);
        w.into_iter().map(|x| x / total).collect()
    };
    let mk = |label, vector: DVector<T>, energy| MajoranaMode {
        label,
        site_weights: weights(&vector),
        energy,
        vector,
    };
    Ok(vec![
        mk(MajoranaLabel::OuterLeft, outer_left, T::zero()),
        mk(MajoranaLabel::InnerLeft, inner_left, eps),
        mk(MajoranaLabel::InnerRight, inner_right, eps),
        mk(MajoranaLabel::OuterRight, outer_right, T::zero()),
    ])
}

/// Writes `site,weight,mode_id` rows with physical site labels.
pub fn write_modes_csv<T: Real, W: Write>(
    modes: &[MajoranaMode<T>],
    v: &ValidatedConfig<T>,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "site,weight,mode_id")?;
    for m in modes {
        for (i, w) in m.site_weights.iter().enumerate() {
            writeln!(out, "{},{},{}", v.site_of(i), format_sig(*w), m.label.id())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{validate, CenterParams, ChainConfig, JunctionParams, SegmentParams};
    use approx::assert_abs_diff_eq;

    fn chain(mu_c: f64, t1: f64, n_center: usize) -> ValidatedConfig<f64> {
        validate(&ChainConfig::symmetric(
            1.0,
            5,
            CenterParams::nearest(mu_c, 1.0, 5.0, n_center),
            5,
            JunctionParams::hopping(t1, t1),
        ))
        .unwrap()
    }

    #[test]
    fn ring_gaps_outer_pair_and_keeps_eps() {
        let open = chain(5.0, 1.0, 6);
        let ring = validate(&open.config().clone().with_boundary(Boundary::Periodic)).unwrap();
        let s = diagonalize(&build_bdg(&ring)).unwrap();
        let pos = s.positive_branch();
        assert!(pos[1] > 0.5, "outer pair not gapped: {:?}", &pos[..3]);
        let (e_open, e_ring) = (numeric_coupling(&open).unwrap(), extract_coupling(&s).unwrap());
        assert!((e_ring - e_open).abs() <= 1e-6 * e_open, "{e_ring} vs {e_open}");
    }

    #[test]
    fn single_site_onsite_only() {
        let mut m = BdgMatrix { matrix: DMatrix::zeros(2, 2), sites: 1, boundary: Boundary::Open };
        m.onsite(0, 2.0);
        let s = diagonalize(&m).unwrap();
        assert_eq!(s.eigenvalues, vec![-2.0, 2.0]);
    }

    #[test]
    fn two_site_sweet_spot() {
        // iγγ' (t/2) is a fermion at energy t plus two free Majoranas.
        let mut m = BdgMatrix { matrix: DMatrix::zeros(4, 4), sites: 2, boundary: Boundary::Open };
        m.bond(0, 1, 1.0, 1.0);
        let s = diagonalize(&m).unwrap();
        let expect = [-1.0, 0.0, 0.0, 1.0];
        for (e, x) in s.eigenvalues.iter().zip(expect) {
            assert_abs_diff_eq!(*e, x, epsilon = 1e-14);
        }
    }

    #[test]
    fn diag_input_sorted() {
        let m = BdgMatrix::from_raw(DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -3.0])), Boundary::Open)
            .unwrap();
        assert_eq!(diagonalize(&m).unwrap().eigenvalues, vec![-3.0, 3.0]);
    }

    #[test]
    fn built_matrix_is_symmetric_and_ph_symmetric() {
        let v = validate(&ChainConfig {
            left: SegmentParams::new(0.3, 1.0, 0.7, 1),
            center: CenterParams { mu: 2.0, t: 1.0, delta: 3.0, length: 1, t2: 0.0, delta2: 0.0 },
            right: SegmentParams::new(0.1, 0.4, 0.9, 1),
            junction: JunctionParams { t1: 0.5, t2: 0.8, t1p: 0.0, t2p: 0.0, delta1: 0.2, delta2: 0.1 },
            boundary: Boundary::Open,
        })
        .unwrap();
        let m = build_bdg(&v);
        assert_eq!(m.dim(), 6);
        assert!(m.hermitian_residual() <= 1e-12);
        assert!(ph_residual(&m) <= 1e-12);
    }

    #[test]
    fn ph_residual_detects_corruption() {
        let mut m = build_bdg(&chain(3.0, 1.0, 6));
        assert!(ph_residual(&m) <= 1e-12);
        m.matrix[(3, 3)] += 0.1;
        assert!(ph_residual(&m) >= 0.05);
        let zero = BdgMatrix::from_raw(DMatrix::<f64>::zeros(4, 4), Boundary::Open).unwrap();
        assert_eq!(ph_residual(&zero), 0.0);
    }

    #[test]
    fn decoupled_junction_gives_zero() {
        let s = diagonalize(&build_bdg(&chain(3.0, 0.0, 6))).unwrap();
        assert_eq!(extract_coupling(&s).unwrap(), 0.0);
    }

    #[test]
    fn off_sweet_spot_has_no_zero_sector() {
        let mut c = *chain(3.0, 1.0, 6).config();
        // A single detuned segment still leaves an exact pair on the other one.
        c.left.mu = 3.0;
        c.right.mu = 3.0;
        let s = diagonalize(&build_bdg(&validate(&c).unwrap())).unwrap();
        assert!(matches!(extract_coupling(&s), Err(BdgError::NoZeroSector { .. })));
    }

    #[test]
    fn decoupled_modes_sit_on_single_sites() {
        let v = chain(3.0, 0.0, 6);
        let s = diagonalize(&build_bdg(&v)).unwrap();
        let modes = majorana_wavefunctions(&s).unwrap();
        let expect = [
            (MajoranaLabel::OuterLeft, -5),
            (MajoranaLabel::InnerLeft, -1),
            (MajoranaLabel::InnerRight, 6),
            (MajoranaLabel::OuterRight, 10),
        ];
        for (m, (label, site)) in modes.iter().zip(expect) {
            assert_eq!(m.label, label);
            let idx = v.index_of(site).unwrap();
            assert!(m.site_weights[idx] >= 1.0 - 1e-10, "{label:?}: {:?}", m.site_weights);
            let total: f64 = m.site_weights.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn coupled_inner_modes_leak_into_center() {
        let v = chain(3.0, 1.0, 11);
        let s = diagonalize(&build_bdg(&v)).unwrap();
        let modes = majorana_wavefunctions(&s).unwrap();
        let inner = &modes[1];
        assert_eq!(inner.label, MajoranaLabel::InnerLeft);
        let w: Vec<f64> = (0..=10).map(|site| inner.site_weights[v.index_of(site).unwrap()]).collect();
        assert!(w[0] > 1e-4);
        // Weight decays into the trivial segment.
        for k in 1..5 {
            assert!(w[k] < w[k - 1], "{w:?}");
        }
        assert_abs_diff_eq!(inner.site_weights.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn csv_has_one_row_per_level() {
        let s = diagonalize(&build_bdg(&chain(3.0, 1.0, 6))).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 32);
        assert!(text.starts_with("index,eigenvalue\n0,"));
    }
}
