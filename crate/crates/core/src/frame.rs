//! Commuting frames on `I x T^k` that glue up across a mapping torus.
//!
//! A frame here is `k` vector fields
//!
//! ```text
//! X_i(t, theta) = sum_j phi_ij(t) d/dtheta_j + tau_i(t) d/dt
//! ```
//!
//! whose coefficients depend on `t` only. The coordinate fields commute, so
//!
//! ```text
//! [X_i, X_l] = sum_j (tau_i phi'_lj - tau_l phi'_ij) d/dtheta_j
//!            + (tau_i tau'_l - tau_l tau'_i) d/dt.
//! ```
//!
//! For `det A > 0` the frame is `phi(t) = Q^s(t) P^s(t)` with `A = QP` the
//! polar decomposition and `s` a flat smooth step, and `tau = 0`. For
//! `det A < 0` the first field is first swung through `d/dt` to `-X_1`
//! (so that `tau_1 = 1 - rho^2` is nonzero only while the other fields are
//! constant), then the positive-determinant path runs in the basis
//! `{-X_1, X_2, ..., X_k}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmat::IntMatrix;

pub const DEFAULT_STEP_INTERVAL: (f64, f64) = (0.25, 0.75);
pub const DEFAULT_FLIP_INTERVAL: (f64, f64) = (0.125, 0.375);
pub const DEFAULT_GRID: usize = 4096;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Pointwise independence floor for `sqrt(det(M M^T))`, `M = [phi | tau]`.
pub const GRAM_FLOOR: f64 = 1e-6;
/// Step of the one-sided differences used for the flatness check.
pub const FLATNESS_STEP: f64 = 1e-3;
const RECONSTRUCTION_TOL: f64 = 1e-10;

fn flat(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn flat_dot(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp() / (x * x)
    } else {
        0.0
    }
}

/// `C^infinity` step: 0 on `[0, a]`, 1 on `[b, 1]`, monotone in between.
///
/// `sigma(t) = f(t - a) / (f(t - a) + f(b - t))` with `f(x) = exp(-1/x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothStep {
    a: f64,
    b: f64,
}

impl SmoothStep {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0 < a && a < b && b < 1.0) {
            return Err(Error::BadInterval {
                lo: a,
                hi: b,
                min: 0.0,
                max: 1.0,
            });
        }
        Ok(SmoothStep { a, b })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn value(&self, t: f64) -> f64 {
        let u = flat(t - self.a);
        let v = flat(self.b - t);
        if u == 0.0 {
            0.0
        } else if v == 0.0 {
            1.0
        } else {
            u / (u + v)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let u = flat(t - self.a);
        let v = flat(self.b - t);
        if u == 0.0 || v == 0.0 {
            return 0.0;
        }
        let du = flat_dot(t - self.a);
        let dv = -flat_dot(self.b - t);
        (du * v - u * dv) / ((u + v) * (u + v))
    }
}

/// `rho` on `[0, 1/2]`: 1 on `[0, c]`, -1 on `[d, 1/2]`, smooth and flat at both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlipProfile {
    step: SmoothStep,
}

impl FlipProfile {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        if !(0.0 < c && c < d && d < 0.5) {
            return Err(Error::BadInterval {
                lo: c,
                hi: d,
                min: 0.0,
                max: 0.5,
            });
        }
        Ok(FlipProfile {
            step: SmoothStep { a: c, b: d },
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        self.step.interval()
    }

    pub fn value(&self, t: f64) -> f64 {
        1.0 - 2.0 * self.step.value(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        -2.0 * self.step.derivative(t)
    }
}

pub fn to_real(m: &IntMatrix) -> DMatrix<f64> {
    let k = m.dim();
    let rows = m.to_f64_rows();
    DMatrix::from_fn(k, k, |i, j| rows[i][j])
}

/// Path in `GL+(k, R)` from `I` to a target, along `Q^s P^s` for the polar
/// decomposition `target = Q P`.
#[derive(Clone, Debug)]
pub struct GlPlusPath {
    step: SmoothStep,
    target: DMatrix<f64>,
    /// Orthogonal basis putting `Q` into block-rotation form.
    schur_basis: DMatrix<f64>,
    /// Rotation planes `(p, q)` in that basis with their angles.
    planes: Vec<(usize, usize, f64)>,
    log_q: DMatrix<f64>,
    /// Eigenbasis of `P` and its eigenvalues.
    p_basis: DMatrix<f64>,
    p_eigen: Vec<f64>,
    log_p: DMatrix<f64>,
}

impl GlPlusPath {
    pub fn new(target: &DMatrix<f64>, step: SmoothStep) -> Result<Self> {
        let k = target.nrows();
        if k == 0 || target.ncols() != k {
            return Err(Error::InvalidArgument(
                "path target must be a nonempty square matrix".into(),
            ));
        }
        let det = target.determinant();
        if det.is_nan() || det <= 0.0 {
            return Err(Error::NegativeDeterminant { det });
        }

        let svd = target.clone().svd(true, true);
        let u = svd
            .u
            .ok_or_else(|| Error::LogFailure("SVD produced no U".into()))?;
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::LogFailure("SVD produced no V".into()))?;
        let q = &u * &v_t;
        let p_basis = v_t.transpose();
        let p_eigen: Vec<f64> = svd.singular_values.iter().copied().collect();
        let log_p = &p_basis
            * DMatrix::from_diagonal(&DVector::from_iterator(k, p_eigen.iter().map(|s| s.ln())))
            * &v_t;

        let (schur_basis, planes) = rotation_planes(&q)?;
        let mut generator = DMatrix::zeros(k, k);
        for &(p, r, angle) in &planes {
            generator[(p, r)] = -angle;
            generator[(r, p)] = angle;
        }
        let log_q = &schur_basis * generator * schur_basis.transpose();

        let path = GlPlusPath {
            step,
            target: target.clone(),
            schur_basis,
            planes,
            log_q,
            p_basis,
            p_eigen,
            log_p,
        };
        let recon = (path.rotation_power(1.0) - &q).norm();
        if recon > RECONSTRUCTION_TOL {
            return Err(Error::LogFailure(format!(
                "exp(log Q) misses Q by {recon:e}"
            )));
        }
        let end = (path.at_parameter(1.0) - target).norm();
        if end > RECONSTRUCTION_TOL {
            return Err(Error::LogFailure(format!(
                "path endpoint misses target by {end:e}"
            )));
        }
        Ok(path)
    }

    pub fn target(&self) -> &DMatrix<f64> {
        &self.target
    }

    pub fn log_rotation(&self) -> &DMatrix<f64> {
        &self.log_q
    }

    pub fn log_stretch(&self) -> &DMatrix<f64> {
        &self.log_p
    }

    fn rotation_power(&self, s: f64) -> DMatrix<f64> {
        let k = self.target.nrows();
        let mut r = DMatrix::identity(k, k);
        if self.planes.is_empty() {
            return r;
        }
        for &(p, q, angle) in &self.planes {
            let (sin, cos) = (s * angle).sin_cos();
            r[(p, p)] = cos;
            r[(q, q)] = cos;
            r[(p, q)] = -sin;
            r[(q, p)] = sin;
        }
        &self.schur_basis * r * self.schur_basis.transpose()
    }

    fn stretch_power(&self, s: f64) -> DMatrix<f64> {
        let k = self.target.nrows();
        let diag = DVector::from_iterator(k, self.p_eigen.iter().map(|e| e.powf(s)));
        &self.p_basis * DMatrix::from_diagonal(&diag) * self.p_basis.transpose()
    }

    /// `Q^s P^s`.
    pub fn at_parameter(&self, s: f64) -> DMatrix<f64> {
        self.rotation_power(s) * self.stretch_power(s)
    }

    /// `d/ds (Q^s P^s) = log Q Q^s P^s + Q^s log P P^s`.
    pub fn parameter_derivative(&self, s: f64) -> DMatrix<f64> {
        let qs = self.rotation_power(s);
        let ps = self.stretch_power(s);
        &self.log_q * &qs * &ps + qs * &self.log_p * ps
    }

    pub fn value(&self, t: f64) -> DMatrix<f64> {
        self.at_parameter(self.step.value(t))
    }

    pub fn derivative(&self, t: f64) -> DMatrix<f64> {
        let ds = self.step.derivative(t);
        if ds == 0.0 {
            let k = self.target.nrows();
            return DMatrix::zeros(k, k);
        }
        self.parameter_derivative(self.step.value(t)) * ds
    }
}

/// Block-rotation decomposition of a special orthogonal matrix.
///
/// Returns an orthogonal `Z` and planes `(p, q, angle)` with
/// `Q = Z R Z^T`, where `R` rotates each plane by its angle. Pairs of `-1`
/// eigenvalues become angle-`pi` planes, paired in index order with the
/// positive orientation `e_p -> e_q`.
/// Rotation plane `(p, q, angle)` in the Schur basis.
type Plane = (usize, usize, f64);

fn rotation_planes(q: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<Plane>)> {
    let k = q.nrows();
    if k == 1 {
        if q[(0, 0)] < 0.0 {
            return Err(Error::LogFailure("1x1 rotation is -1".into()));
        }
        return Ok((DMatrix::identity(1, 1), Vec::new()));
    }
    let schur = nalgebra::linalg::Schur::try_new(q.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::LogFailure("real Schur form did not converge".into()))?;
    let (z, t) = schur.unpack();

    let mut planes = Vec::new();
    let mut negatives = Vec::new();
    let mut i = 0;
    while i < k {
        if i + 1 < k && t[(i + 1, i)].abs() > 1e-12 {
            let angle = t[(i + 1, i)].atan2(t[(i, i)]);
            planes.push((i, i + 1, angle));
            i += 2;
        } else {
            if t[(i, i)] < 0.0 {
                negatives.push(i);
            }
            i += 1;
        }
    }
    if negatives.len() % 2 == 1 {
        return Err(Error::LogFailure(
            "odd number of -1 eigenvalues; rotation has determinant -1".into(),
        ));
    }
    for pair in negatives.chunks(2) {
        planes.push((pair[0], pair[1], std::f64::consts::PI));
    }
    Ok((z, planes))
}

/// Time-dependent coefficients of a frame on `I x T^k`.
///
/// Evaluation outside `[0, 1]` clamps to the endpoint; all frames here are
/// constant near both ends, so this matches their extension across the seam.
pub trait FrameCoefficients {
    fn dim(&self) -> usize;
    /// Expected value of `phi(1)`.
    fn monodromy(&self) -> DMatrix<f64>;
    fn phi(&self, t: f64) -> DMatrix<f64>;
    fn tau(&self, t: f64) -> DVector<f64>;
    fn phi_dot(&self, t: f64) -> DMatrix<f64>;
    fn tau_dot(&self, t: f64) -> DVector<f64>;

    /// `[phi(t) | tau(t)]`, one row per field, last column along `d/dt`.
    fn field_matrix(&self, t: f64) -> DMatrix<f64> {
        let k = self.dim();
        let phi = self.phi(t);
        let tau = self.tau(t);
        DMatrix::from_fn(k, k + 1, |i, j| if j < k { phi[(i, j)] } else { tau[i] })
    }
}

#[derive(Clone, Debug)]
enum Plan {
    Constant,
    Rotate(GlPlusPath),
    FlipThenRotate {
        flip: FlipProfile,
        /// Path from `I` to `A D`, run on `[1/2, 1]` and composed with `D`.
        path: GlPlusPath,
        d: DMatrix<f64>,
    },
}

/// Intervals used by [`build_frame_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameConfig {
    pub step: (f64, f64),
    pub flip: (f64, f64),
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            step: DEFAULT_STEP_INTERVAL,
            flip: DEFAULT_FLIP_INTERVAL,
        }
    }
}

/// A frame built for a specific monodromy.
#[derive(Clone, Debug)]
pub struct CoefficientFrame {
    monodromy: IntMatrix,
    real: DMatrix<f64>,
    plan: Plan,
}

pub fn build_frame(a: &IntMatrix) -> Result<CoefficientFrame> {
    build_frame_with(a, FrameConfig::default())
}

pub fn build_frame_with(a: &IntMatrix, config: FrameConfig) -> Result<CoefficientFrame> {
    let det = a.det();
    let sign = if det == 1.into() {
        1
    } else if det == (-1).into() {
        -1
    } else {
        return Err(Error::NotUnimodular { det });
    };
    let step = SmoothStep::new(config.step.0, config.step.1)?;
    let flip = FlipProfile::new(config.flip.0, config.flip.1)?;
    let real = to_real(a);
    let k = a.dim();

    let plan = if a.is_identity() {
        Plan::Constant
    } else if sign > 0 {
        Plan::Rotate(GlPlusPath::new(&real, step)?)
    } else {
        let mut d = DMatrix::identity(k, k);
        d[(0, 0)] = -1.0;
        // coordinates of f_* X_i in the basis {-X_1, X_2, ..., X_k}
        let flipped = &real * &d;
        let flipped_det = flipped.determinant();
        if flipped_det.is_nan() || flipped_det <= 0.0 {
            return Err(Error::NegativeDeterminant { det: flipped_det });
        }
        Plan::FlipThenRotate {
            flip,
            path: GlPlusPath::new(&flipped, step)?,
            d,
        }
    };
    Ok(CoefficientFrame {
        monodromy: a.clone(),
        real,
        plan,
    })
}

impl CoefficientFrame {
    pub fn monodromy_matrix(&self) -> &IntMatrix {
        &self.monodromy
    }

    pub fn is_two_phase(&self) -> bool {
        matches!(self.plan, Plan::FlipThenRotate { .. })
    }

    /// Interval on which `tau` may be nonzero, if any.
    pub fn flip_window(&self) -> Option<(f64, f64)> {
        match &self.plan {
            Plan::FlipThenRotate { flip, .. } => Some(flip.interval()),
            _ => None,
        }
    }
}

impl FrameCoefficients for CoefficientFrame {
    fn dim(&self) -> usize {
        self.monodromy.dim()
    }

    fn monodromy(&self) -> DMatrix<f64> {
        self.real.clone()
    }

    fn phi(&self, t: f64) -> DMatrix<f64> {
        let t = t.clamp(0.0, 1.0);
        let k = self.dim();
        match &self.plan {
            Plan::Constant => DMatrix::identity(k, k),
            Plan::Rotate(path) => path.value(t),
            Plan::FlipThenRotate { flip, path, d } => {
                if t <= 0.5 {
                    let mut phi = DMatrix::identity(k, k);
                    phi[(0, 0)] = flip.value(t);
                    phi
                } else {
                    path.value(2.0 * t - 1.0) * d
                }
            }
        }
    }

    fn tau(&self, t: f64) -> DVector<f64> {
        let t = t.clamp(0.0, 1.0);
        let mut tau = DVector::zeros(self.dim());
        if let Plan::FlipThenRotate { flip, .. } = &self.plan {
            if t <= 0.5 {
                let rho = flip.value(t);
                tau[0] = 1.0 - rho * rho;
            }
        }
        tau
    }

    fn phi_dot(&self, t: f64) -> DMatrix<f64> {
        let k = self.dim();
        if !(0.0..=1.0).contains(&t) {
            return DMatrix::zeros(k, k);
        }
        match &self.plan {
            Plan::Constant => DMatrix::zeros(k, k),
            Plan::Rotate(path) => path.derivative(t),
            Plan::FlipThenRotate { flip, path, d } => {
                if t <= 0.5 {
                    let mut dphi = DMatrix::zeros(k, k);
                    dphi[(0, 0)] = flip.derivative(t);
                    dphi
                } else {
                    path.derivative(2.0 * t - 1.0) * d * 2.0
                }
            }
        }
    }

    fn tau_dot(&self, t: f64) -> DVector<f64> {
        let mut dtau = DVector::zeros(self.dim());
        if !(0.0..=1.0).contains(&t) {
            return dtau;
        }
        if let Plan::FlipThenRotate { flip, .. } = &self.plan {
            if t <= 0.5 {
                dtau[0] = -2.0 * flip.value(t) * flip.derivative(t);
            }
        }
        dtau
    }
}

/// How `phi'` and `tau'` are obtained for bracket evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Derivative {
    #[default]
    Analytic,
    Central {
        h: f64,
    },
}

fn derivatives<F: FrameCoefficients + ?Sized>(
    frame: &F,
    t: f64,
    mode: Derivative,
) -> (DMatrix<f64>, DVector<f64>) {
    match mode {
        Derivative::Analytic => (frame.phi_dot(t), frame.tau_dot(t)),
        Derivative::Central { h } => (
            (frame.phi(t + h) - frame.phi(t - h)) / (2.0 * h),
            (frame.tau(t + h) - frame.tau(t - h)) / (2.0 * h),
        ),
    }
}

/// Coefficients of `[X_i, X_l]` at time `t`: `k` components along
/// `d/dtheta_j`, then one along `d/dt`.
pub fn bracket_coefficients<F: FrameCoefficients + ?Sized>(
    frame: &F,
    i: usize,
    l: usize,
    t: f64,
    mode: Derivative,
) -> DVector<f64> {
    let tau = frame.tau(t);
    let (dphi, dtau) = derivatives(frame, t, mode);
    bracket_from_parts(&tau, &dphi, &dtau, i, l)
}

fn bracket_from_parts(
    tau: &DVector<f64>,
    dphi: &DMatrix<f64>,
    dtau: &DVector<f64>,
    i: usize,
    l: usize,
) -> DVector<f64> {
    let k = tau.len();
    let mut out = DVector::zeros(k + 1);
    for j in 0..k {
        out[j] = tau[i] * dphi[(l, j)] - tau[l] * dphi[(i, j)];
    }
    out[k] = tau[i] * dtau[l] - tau[l] * dtau[i];
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeamResiduals {
    /// `|phi(0) - I|_F`
    pub phi_start: f64,
    /// `|phi(1) - A|_F`
    pub phi_end: f64,
    pub tau_start: f64,
    pub tau_end: f64,
}

impl SeamResiduals {
    pub fn max(&self) -> f64 {
        self.phi_start
            .max(self.phi_end)
            .max(self.tau_start)
            .max(self.tau_end)
    }
}

/// Largest one-sided difference quotient of orders 1 to 3 at each end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flatness {
    pub phi_start: f64,
    pub phi_end: f64,
    pub tau_start: f64,
    pub tau_end: f64,
}

impl Flatness {
    pub fn max(&self) -> f64 {
        self.phi_start
            .max(self.phi_end)
            .max(self.tau_start)
            .max(self.tau_end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameChecks {
    pub commuting: bool,
    pub independent: bool,
    pub seam: bool,
    pub flat: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub bracket_max: f64,
    pub gram_min: f64,
    pub seam: SeamResiduals,
    pub flatness: Flatness,
    pub checks: FrameChecks,
    pub pass: bool,
    pub grid_n: usize,
    pub tol: f64,
}

/// Scans `grid_n` equally spaced times in `[0, 1]` for commutation and
/// pointwise independence, then checks the seam and end flatness.
pub fn verify_frame<F: FrameCoefficients + ?Sized>(
    frame: &F,
    grid_n: usize,
    tol: f64,
) -> Result<VerificationReport> {
    verify_frame_with(frame, grid_n, tol, Derivative::Analytic)
}

pub fn verify_frame_with<F: FrameCoefficients + ?Sized>(
    frame: &F,
    grid_n: usize,
    tol: f64,
    mode: Derivative,
) -> Result<VerificationReport> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid_n must be at least 2, got {grid_n}"
        )));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let k = frame.dim();
    let mut bracket_max = 0.0f64;
    let mut gram_min = f64::INFINITY;
    for step in 0..grid_n {
        let t = step as f64 / (grid_n - 1) as f64;
        let tau = frame.tau(t);
        let (dphi, dtau) = derivatives(frame, t, mode);
        for i in 0..k {
            for l in i + 1..k {
                let b = bracket_from_parts(&tau, &dphi, &dtau, i, l).norm();
                bracket_max = bracket_max.max(b);
            }
        }
        let m = frame.field_matrix(t);
        let gram = (&m * m.transpose()).determinant().max(0.0).sqrt();
        gram_min = gram_min.min(gram);
    }

    let seam = SeamResiduals {
        phi_start: (frame.phi(0.0) - DMatrix::<f64>::identity(k, k)).norm(),
        phi_end: (frame.phi(1.0) - frame.monodromy()).norm(),
        tau_start: frame.tau(0.0).norm(),
        tau_end: frame.tau(1.0).norm(),
    };
    let flatness = Flatness {
        phi_start: one_sided_max(|t| frame.phi(t).as_slice().to_vec(), 0.0, FLATNESS_STEP),
        phi_end: one_sided_max(|t| frame.phi(t).as_slice().to_vec(), 1.0, -FLATNESS_STEP),
        tau_start: one_sided_max(|t| frame.tau(t).as_slice().to_vec(), 0.0, FLATNESS_STEP),
        tau_end: one_sided_max(|t| frame.tau(t).as_slice().to_vec(), 1.0, -FLATNESS_STEP),
    };
    let checks = FrameChecks {
        commuting: bracket_max <= tol,
        independent: gram_min > GRAM_FLOOR,
        seam: seam.max() <= tol,
        flat: flatness.max() <= tol,
    };
    Ok(VerificationReport {
        bracket_max,
        gram_min,
        seam,
        flatness,
        pass: checks.commuting && checks.independent && checks.seam && checks.flat,
        checks,
        grid_n,
        tol,
    })
}

/// Max over entries of the order-1, 2, 3 one-sided difference quotients at
/// `t0`, stepping by `h` (negative `h` looks backwards).
fn one_sided_max(f: impl Fn(f64) -> Vec<f64>, t0: f64, h: f64) -> f64 {
    let samples: Vec<Vec<f64>> = (0..4).map(|j| f(t0 + j as f64 * h)).collect();
    let hh = h.abs();
    let mut worst = 0.0f64;
    for e in 0..samples[0].len() {
        // nested differences, exact zero on constant samples
        let mut diffs: Vec<f64> = samples.iter().map(|v| v[e]).collect();
        for order in 1..=3 {
            diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
            worst = worst.max(diffs[0].abs() / hh.powi(order));
        }
    }
    worst
}

/// The frame pushed `laps` times around the circle direction, reparametrized
/// to `[0, 1]`. On lap `p` the coefficients are `phi(.) A^p`; the endpoint
/// is `A^laps`.
pub struct Concatenated<'a, F: FrameCoefficients + ?Sized> {
    inner: &'a F,
    laps: usize,
    powers: Vec<DMatrix<f64>>,
}

impl<'a, F: FrameCoefficients + ?Sized> Concatenated<'a, F> {
    pub fn new(inner: &'a F, laps: usize) -> Result<Self> {
        if laps == 0 {
            return Err(Error::InvalidArgument("need at least one lap".into()));
        }
        let a = inner.monodromy();
        let k = inner.dim();
        let mut powers = vec![DMatrix::identity(k, k)];
        for p in 1..=laps {
            let next = &powers[p - 1] * &a;
            powers.push(next);
        }
        Ok(Concatenated {
            inner,
            laps,
            powers,
        })
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let s = t.clamp(0.0, 1.0) * self.laps as f64;
        let lap = (s.floor() as usize).min(self.laps - 1);
        (lap, s - lap as f64)
    }
}

impl<F: FrameCoefficients + ?Sized> FrameCoefficients for Concatenated<'_, F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn monodromy(&self) -> DMatrix<f64> {
        self.powers[self.laps].clone()
    }

    fn phi(&self, t: f64) -> DMatrix<f64> {
        let (lap, local) = self.locate(t);
        self.inner.phi(local) * &self.powers[lap]
    }

    fn tau(&self, t: f64) -> DVector<f64> {
        let (_, local) = self.locate(t);
        self.inner.tau(local) / self.laps as f64
    }

    fn phi_dot(&self, t: f64) -> DMatrix<f64> {
        let k = self.dim();
        if !(0.0..=1.0).contains(&t) {
            return DMatrix::zeros(k, k);
        }
        let (lap, local) = self.locate(t);
        self.inner.phi_dot(local) * &self.powers[lap] * self.laps as f64
    }

    fn tau_dot(&self, t: f64) -> DVector<f64> {
        if !(0.0..=1.0).contains(&t) {
            return DVector::zeros(self.dim());
        }
        let (_, local) = self.locate(t);
        self.inner.tau_dot(local)
    }
}

/// Negative control: adds `amplitude * beta(t)` to `phi_{2,1}` and to
/// `tau_1`, where `beta` is a flat bump on the flip window. The second field
/// then moves while the first has a `d/dt` component, so the pair no longer
/// commutes.
pub struct PerturbedFrame<'a, F: FrameCoefficients + ?Sized> {
    inner: &'a F,
    amplitude: f64,
    window: (f64, f64),
}

impl<'a, F: FrameCoefficients + ?Sized> PerturbedFrame<'a, F> {
    pub fn new(inner: &'a F, amplitude: f64) -> Result<Self> {
        if inner.dim() < 2 {
            return Err(Error::InvalidArgument(
                "perturbing a frame needs at least two fields".into(),
            ));
        }
        Ok(PerturbedFrame {
            inner,
            amplitude,
            window: DEFAULT_FLIP_INTERVAL,
        })
    }

    /// Peak-normalized `exp(-1/(t-lo)) exp(-1/(hi-t))`.
    fn bump(&self, t: f64) -> (f64, f64) {
        let (lo, hi) = self.window;
        let mid = 0.5 * (lo + hi);
        let peak = flat(mid - lo) * flat(hi - mid);
        let u = flat(t - lo);
        let v = flat(hi - t);
        let value = u * v / peak;
        let du = flat_dot(t - lo);
        let dv = -flat_dot(hi - t);
        (value, (du * v + u * dv) / peak)
    }
}

impl<F: FrameCoefficients + ?Sized> FrameCoefficients for PerturbedFrame<'_, F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn monodromy(&self) -> DMatrix<f64> {
        self.inner.monodromy()
    }

    fn phi(&self, t: f64) -> DMatrix<f64> {
        let mut phi = self.inner.phi(t);
        phi[(1, 0)] += self.amplitude * self.bump(t.clamp(0.0, 1.0)).0;
        phi
    }

    fn tau(&self, t: f64) -> DVector<f64> {
        let mut tau = self.inner.tau(t);
        tau[0] += self.amplitude * self.bump(t.clamp(0.0, 1.0)).0;
        tau
    }

    fn phi_dot(&self, t: f64) -> DMatrix<f64> {
        let mut dphi = self.inner.phi_dot(t);
        if (0.0..=1.0).contains(&t) {
            dphi[(1, 0)] += self.amplitude * self.bump(t).1;
        }
        dphi
    }

    fn tau_dot(&self, t: f64) -> DVector<f64> {
        let mut dtau = self.inner.tau_dot(t);
        if (0.0..=1.0).contains(&t) {
            dtau[0] += self.amplitude * self.bump(t).1;
        }
        dtau
    }
}
