//! Moving-planes machinery: the reflection criterion, the plane supremum
//! lambda_0, symmetry-defect measurement, crest structure checks, and
//! numerical verifiers for the touching and boundary-point lemmas.
//!
//! Strict inequalities are discretized with explicit strictness margins,
//! and reflected values are obtained by trigonometric interpolation (exact
//! lookups when the reflection axis sits on a grid point or midpoint).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{build_kernel, build_kernel_derivative, KernelTable};
use crate::solver::WaveProfile;
use crate::spectral::{PeriodicGrid, SpectralField};

/// Fine quadrature grid used by the lemma verifiers.
const VERIFIER_GRID: usize = 8192;
/// Kernel truncation used by the lemma verifiers.
const VERIFIER_TRUNCATION: u64 = 100_000;

/// Reflection of the grid index j about the half-grid axis index l
/// (lambda = -pi + l h/2): 2 lambda - x_j lands on index l - j.
fn reflect_index(n: usize, l: usize, j: usize) -> usize {
    (l + 2 * n - j) % n
}

/// Scans reflection axes over grid points and midpoints and returns the
/// first lambda with `phi(x) - phi(2 lambda - x) > strictness` for every
/// grid point x strictly inside (lambda, lambda + pi).
pub fn reflection_criterion(p: &WaveProfile, strictness: f64) -> Option<f64> {
    let n = p.phi.grid().len();
    let h = p.phi.grid().spacing();
    let v = p.phi.values();
    for l in 0..2 * n {
        // grid x_i strictly inside (lambda, lambda + pi): l/2 < i < l/2 + n/2
        let lo = l / 2 + 1;
        let hi = (l + n).div_ceil(2); // smallest integer > l/2 + n/2 - 1
        let mut ok = true;
        for i in lo..hi {
            if 2 * i == l || 2 * i == l + n {
                continue; // endpoint when l is even
            }
            let w = v[i % n] - v[reflect_index(n, l, i)];
            if w <= strictness {
                ok = false;
                break;
            }
        }
        if ok {
            return Some(-PI + l as f64 * h / 2.0);
        }
    }
    None
}

/// Does `w_lambda = phi - phi(2 lambda - .) > 0` hold on the open grid
/// interval (lambda, lambda + pi)?  Reflected values by trigonometric
/// interpolation (lambda need not be on the grid).
fn plane_positive(p: &WaveProfile, lambda: f64) -> bool {
    let grid = p.phi.grid();
    let n = grid.len();
    for j in 0..n {
        // candidate x in (lambda, lambda + pi), up to periodic wrap
        let mut x = grid.point(j);
        while x <= lambda {
            x += 2.0 * PI;
        }
        if x >= lambda + PI {
            continue;
        }
        let w = p.phi.eval_at(x) - p.phi.eval_at(2.0 * lambda - x);
        if w <= 0.0 {
            return false;
        }
    }
    true
}

/// Moving-plane supremum `lambda_0 = sup { lambda in [lambda_star, 0] |
/// w_lambda > 0 on (lambda, lambda + pi) }`, bisected to 1e-6.  Expects the
/// global trough translated to x = -pi.
pub fn moving_plane_lambda0(p: &WaveProfile, lambda_star: f64) -> Result<f64> {
    if !plane_positive(p, lambda_star) {
        return Err(Error::Inconsistency(format!(
            "reflection criterion does not hold at lambda* = {lambda_star:.6}"
        )));
    }
    if lambda_star >= 0.0 {
        return Ok(0.0);
    }
    if plane_positive(p, 0.0) {
        return Ok(0.0);
    }
    let mut lo = lambda_star;
    let mut hi = 0.0;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if plane_positive(p, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Asymmetry of the profile about the axis lambda.
fn defect_at(p: &WaveProfile, lambda: f64) -> f64 {
    let grid = p.phi.grid();
    let mut worst = 0.0f64;
    for j in 0..grid.len() {
        let x = grid.point(j);
        let d = (p.phi.values()[j] - p.phi.eval_at(2.0 * lambda - x)).abs();
        worst = worst.max(d);
    }
    worst
}

/// Minimal reflection asymmetry and the axis attaining it.  Candidate axes
/// are the grid points and midpoints plus the phase of the dominant Fourier
/// mode; the best candidate is refined by golden-section search.
pub fn symmetry_defect(p: &WaveProfile) -> (f64, f64) {
    let grid = p.phi.grid();
    let n = grid.len();
    let h = grid.spacing();
    // phase seed: phi ~ 2|c_k| cos(k x + arg c_k) has an axis at -arg(c_k)/k
    let mut seed = None;
    let c1 = p.phi.coeff(1);
    if c1.norm() > 1e-14 {
        seed = Some(-c1.arg());
    } else {
        let mut best = (0i64, 0.0f64);
        for k in 1..=(n / 2) as i64 {
            let a = p.phi.coeff(k).norm();
            if a > best.1 {
                best = (k, a);
            }
        }
        if best.0 > 0 && best.1 > 1e-14 {
            seed = Some(-p.phi.coeff(best.0).arg() / best.0 as f64);
        }
    }
    let mut best_axis = seed.unwrap_or(0.0);
    let mut best = defect_at(p, best_axis);
    // reflection axes repeat with period pi; half-grid candidates cover it
    for l in 0..n {
        let lambda = -PI + l as f64 * h / 2.0;
        let d = defect_at(p, lambda);
        if d < best {
            best = d;
            best_axis = lambda;
        }
    }
    // golden-section refinement around the best candidate
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = best_axis - h;
    let mut b = best_axis + h;
    let mut x1 = b - gr * (b - a);
    let mut x2 = a + gr * (b - a);
    let mut f1 = defect_at(p, x1);
    let mut f2 = defect_at(p, x2);
    for _ in 0..60 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = defect_at(p, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = defect_at(p, x2);
        }
        if b - a < 1e-10 {
            break;
        }
    }
    let axis = 0.5 * (a + b);
    let d = defect_at(p, axis);
    if d < best {
        (d, axis)
    } else {
        (best, best_axis)
    }
}

/// Number of strict local maxima of the cyclic grid sequence; consecutive
/// values within `plateau_tol` are merged into one node first.
pub fn crest_count(p: &WaveProfile, plateau_tol: f64) -> usize {
    let v = p.phi.values();
    let n = v.len();
    // merge cyclic runs of nearly-equal consecutive values
    let mut nodes: Vec<f64> = Vec::new();
    for &x in v {
        match nodes.last() {
            Some(&last) if (x - last).abs() <= plateau_tol => {}
            _ => nodes.push(x),
        }
    }
    // cyclic closure: first and last node may belong to one run
    if nodes.len() > 1 && (nodes[0] - *nodes.last().unwrap()).abs() <= plateau_tol {
        nodes.pop();
    }
    let m = nodes.len();
    if m < 3 {
        return 0;
    }
    let mut count = 0;
    for i in 0..m {
        let prev = nodes[(i + m - 1) % m];
        let next = nodes[(i + 1) % m];
        if nodes[i] > prev && nodes[i] > next {
            count += 1;
        }
    }
    let _ = n;
    count
}

/// Strict positivity of the spectral derivative on the interior of
/// (-pi, 0), with the crest-adjacent cell excluded (the cusp of a
/// near-highest wave makes the spectral derivative unreliable there).
/// Expects the crest translated to x = 0.
pub fn monotone_half_period(p: &WaveProfile) -> bool {
    let n = p.phi.grid().len();
    let d = p.phi.derivative();
    let tol = 1e-10 * d.max_abs();
    // interior grid points of (-pi, 0): indices 1 .. n/2, excluding the
    // crest-adjacent cell n/2 - 1
    (1..n / 2 - 1).all(|j| d.values()[j] > tol)
}

/// Reflection of a profile about lambda: `phi(2 lambda - x)`.
pub fn reflect_profile(p: &WaveProfile, lambda: f64) -> Result<WaveProfile> {
    let grid = *p.phi.grid();
    let vals: Vec<f64> = (0..grid.len())
        .map(|j| p.phi.eval_at(2.0 * lambda - grid.point(j)))
        .collect();
    WaveProfile::from_parts(
        SpectralField::from_values(grid, vals)?,
        p.c,
        p.b,
        p.symbol.clone(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TouchingVerdict {
    /// w vanishes identically (the lemma's first alternative).
    IdenticallyEqual,
    /// Lw(x̄) > 0 and G_p > 0: a touching configuration at x̄ would
    /// contradict w ≢ 0, which is the lemma's mechanism.
    ContradictionConfirmed,
    /// A required positivity failed.
    Violated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TouchingReport {
    pub verdict: TouchingVerdict,
    pub lambda: f64,
    pub xbar: f64,
    pub w_at_xbar: f64,
    /// Whether x̄ is an actual touching point (w(x̄) = 0 within tolerance
    /// or (phi + phibar)(x̄) >= c).
    pub touching_at_xbar: bool,
    /// Lw(x̄) by quadrature against the kernel table.
    pub lw_at_xbar: f64,
    /// min of G_p over the open grid interval (lambda, lambda + pi).
    pub gp_min: f64,
    /// |G_p| at the interval endpoints (should vanish).
    pub gp_boundary: f64,
}

fn snap(fine: &PeriodicGrid, x: f64) -> f64 {
    let (j, _) = fine.nearest_index(x);
    fine.point(j)
}

/// The lemma verifiers snap lambda and x̄ to their internal quadrature
/// grid; reflecting about this aligned axis keeps w exactly odd through
/// that snapping.
pub fn verifier_axis(x: f64) -> f64 {
    snap(&PeriodicGrid::new(VERIFIER_GRID).expect("verifier grid"), x)
}

/// Verifies the touching-lemma mechanism for w = phi - phibar, odd about
/// lambda and nonnegative on [lambda, lambda + pi]: computes Lw(x̄) by
/// singularity-subtracted quadrature and checks G_p positivity.  lambda and
/// x̄ are snapped to the verifier grid so kernel arguments are exact nodes.
pub fn verify_touching(
    phi: &WaveProfile,
    phibar: &WaveProfile,
    lambda: f64,
    xbar: f64,
) -> Result<TouchingReport> {
    let fine = PeriodicGrid::new(VERIFIER_GRID)?;
    let lambda = snap(&fine, lambda);
    let xbar = snap(&fine, xbar);
    let s = &phi.symbol;
    let scale = phi.phi.max_abs().max(phibar.phi.max_abs()).max(1e-30);

    // build w on the fine grid
    let wf = phi.phi.upsample(fine.len())?.sub(&phibar.phi.upsample(fine.len())?);
    let w_scale = wf.max_abs();
    if w_scale <= 1e-13 * scale {
        return Ok(TouchingReport {
            verdict: TouchingVerdict::IdenticallyEqual,
            lambda,
            xbar,
            w_at_xbar: 0.0,
            touching_at_xbar: false,
            lw_at_xbar: 0.0,
            gp_min: 0.0,
            gp_boundary: 0.0,
        });
    }

    // preconditions: oddness about lambda and nonnegativity on the interval
    let mut odd_defect = 0.0f64;
    let mut min_w = f64::INFINITY;
    for j in 0..fine.len() {
        let mut x = fine.point(j);
        let refl = wf.eval_at(2.0 * lambda - x);
        odd_defect = odd_defect.max((wf.values()[j] + refl).abs());
        while x < lambda {
            x += 2.0 * PI;
        }
        if x <= lambda + PI {
            min_w = min_w.min(wf.values()[j]);
        }
    }
    if odd_defect > 1e-8 * w_scale.max(1.0) {
        return Err(Error::Domain(format!(
            "w is not odd about lambda: defect {odd_defect:.3e}"
        )));
    }
    if min_w < -1e-10 * w_scale.max(1.0) {
        return Err(Error::Domain(format!(
            "w dips to {min_w:.3e} on [lambda, lambda+pi]"
        )));
    }

    let kt = build_kernel(s, &fine, VERIFIER_TRUNCATION)?;
    let c_h = if s.is_homogeneous() { 0.0 } else { s.eval(0)? };
    let h = fine.spacing();
    let w_xbar = wf.eval_at(xbar);
    // Lw(x̄) = (1/2pi) ∫ K(x̄ - y) w(y) dy, singular cell handled by
    // subtracting w(x̄) (the kernel integrates to 2 pi c_h)
    let (jx, _) = fine.nearest_index(xbar);
    let mut acc = 0.0;
    for q in 0..fine.len() {
        if q == jx {
            continue;
        }
        let kv = kt.value_at(xbar - fine.point(q));
        acc += kv * (wf.values()[q] - w_xbar);
    }
    let lw = acc * h / (2.0 * PI) + w_xbar * c_h;

    // G_p(y) = K(x̄ - y) - K(x̄ + y - 2 lambda) on (lambda, lambda + pi);
    // it vanishes identically at y = lambda, so only the far endpoint is
    // an informative boundary value
    let mut gp_min = f64::INFINITY;
    let half = fine.len() / 2;
    for t in 1..half {
        let y = lambda + t as f64 * h;
        let g = kt.value_at(xbar - y) - kt.value_at(xbar + y - 2.0 * lambda);
        gp_min = gp_min.min(g);
    }
    let gp_boundary = {
        let y = lambda + PI;
        (kt.value_at(xbar - y) - kt.value_at(xbar + y - 2.0 * lambda)).abs()
    };

    let touching = w_xbar.abs() <= 1e-8 * w_scale.max(1.0)
        || (phi.phi.eval_at(xbar) + phibar.phi.eval_at(xbar)) >= phi.c;
    let verdict = if lw > 0.0 && gp_min > 0.0 {
        TouchingVerdict::ContradictionConfirmed
    } else {
        TouchingVerdict::Violated
    };
    Ok(TouchingReport {
        verdict,
        lambda,
        xbar,
        w_at_xbar: w_xbar,
        touching_at_xbar: touching,
        lw_at_xbar: lw,
        gp_min,
        gp_boundary,
    })
}

/// G_p positivity alone (used by audits and negative controls): min of
/// `K(x̄ - y) - K(x̄ + y - 2 lambda)` over the open grid interval.
pub fn gp_minimum(kt: &KernelTable, lambda: f64, xbar: f64) -> f64 {
    let grid = kt.grid();
    let lambda = snap(grid, lambda);
    let xbar = snap(grid, xbar);
    let h = grid.spacing();
    let mut gp_min = f64::INFINITY;
    for t in 1..grid.len() / 2 {
        let y = lambda + t as f64 * h;
        let g = kt.value_at(xbar - y) - kt.value_at(xbar + y - 2.0 * lambda);
        gp_min = gp_min.min(g);
    }
    gp_min
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryVerdict {
    IdenticallyEqual,
    /// Both quadrature routes positive, 1% agreement, and the eq:bnd sign
    /// logic confirms w'(lambda) > 0.
    Positive,
    Violated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub verdict: BoundaryVerdict,
    pub lambda: f64,
    /// direct quadrature of `∫ K(lambda - y) w'(y) dy`
    pub direct: f64,
    /// integrated-by-parts route `2 ∫ K'(lambda - y) w(y) dy`, epsilon-
    /// excluded and Richardson-extrapolated
    pub by_parts: f64,
    pub agreement_rel: f64,
    pub w_prime_at_lambda: f64,
    /// c - (phi + phibar)(lambda)
    pub coefficient: f64,
}

/// Verifies the boundary-point identity
/// `[c - (phi+phibar)(lambda)] w'(lambda) = K * w'(lambda)` for
/// w = phi - phibar odd about lambda and nonnegative on [lambda,
/// lambda + pi]: evaluates the convolution two independent ways and checks
/// the sign conclusion w'(lambda) > 0.
pub fn verify_boundary_point(
    phi: &WaveProfile,
    phibar: &WaveProfile,
    lambda: f64,
) -> Result<BoundaryReport> {
    let fine = PeriodicGrid::new(VERIFIER_GRID)?;
    let lambda = snap(&fine, lambda);
    let s = &phi.symbol;
    let scale = phi.phi.max_abs().max(phibar.phi.max_abs()).max(1e-30);

    let w_coarse = phi.phi.sub(&phibar.phi);
    let wf = w_coarse.upsample(fine.len())?;
    let w_scale = wf.max_abs();
    if w_scale <= 1e-13 * scale {
        return Ok(BoundaryReport {
            verdict: BoundaryVerdict::IdenticallyEqual,
            lambda,
            direct: 0.0,
            by_parts: 0.0,
            agreement_rel: 0.0,
            w_prime_at_lambda: 0.0,
            coefficient: 0.0,
        });
    }
    // preconditions
    let mut odd_defect = 0.0f64;
    let mut min_w = f64::INFINITY;
    for j in 0..fine.len() {
        let mut x = fine.point(j);
        odd_defect = odd_defect.max((wf.values()[j] + wf.eval_at(2.0 * lambda - x)).abs());
        while x < lambda {
            x += 2.0 * PI;
        }
        if x <= lambda + PI {
            min_w = min_w.min(wf.values()[j]);
        }
    }
    if odd_defect > 1e-8 * w_scale.max(1.0) {
        return Err(Error::Domain(format!(
            "w is not odd about lambda: defect {odd_defect:.3e}"
        )));
    }
    if min_w < -1e-10 * w_scale.max(1.0) {
        return Err(Error::Domain(format!(
            "w dips to {min_w:.3e} on [lambda, lambda+pi]"
        )));
    }

    let kt = build_kernel(s, &fine, VERIFIER_TRUNCATION)?;
    let ktp = build_kernel_derivative(s, &fine, VERIFIER_TRUNCATION)?;
    let c_h = if s.is_homogeneous() { 0.0 } else { s.eval(0)? };
    let h = fine.spacing();
    let n_f = fine.len();
    let wpf = wf.derivative();
    let (jl, _) = fine.nearest_index(lambda);
    let wp_lambda = wpf.values()[jl];

    // route 1: direct, ∫ K(lambda - y) w'(y) dy with w'(lambda) subtracted
    let mut acc = 0.0;
    for q in 0..n_f {
        if q == jl {
            continue;
        }
        let kv = kt.value_at(lambda - fine.point(q));
        acc += kv * (wpf.values()[q] - wp_lambda);
    }
    let direct = acc * h + wp_lambda * 2.0 * PI * c_h;

    // route 2: 2 ∫_{lambda+eps}^{lambda+pi} K'(lambda - y) w(y) dy for
    // eps = 4, 2, 1 cells, completed by Richardson extrapolation with the
    // exponent fitted from the three values.  The cell size here is that
    // of a 1024-point grid (8 cells of the internal quadrature grid): the
    // radii must be small enough that higher-order corrections don't bias
    // the fit, yet leave several quadrature nodes inside each radius so
    // the trapezoid sum resolves the K' blow-up.
    let cell = n_f / 1024;
    let half = n_f / 2;
    let integral_from = |cells: usize| -> f64 {
        let mut acc = 0.0;
        for t in cells..=half {
            let q = (jl + t) % n_f;
            let kp = ktp.value_at(lambda - fine.point(q));
            let weight = if t == cells || t == half { 0.5 } else { 1.0 };
            acc += weight * kp * wf.values()[q];
        }
        2.0 * acc * h
    };
    let i4 = integral_from(4 * cell);
    let i2 = integral_from(2 * cell);
    let i1 = integral_from(cell);
    let d42 = i2 - i4;
    let d21 = i1 - i2;
    let by_parts = if d21.abs() > 1e-300 && d42 / d21 > 1.0 {
        let beta = (d42 / d21).log2();
        i1 + d21 / (2f64.powf(beta) - 1.0)
    } else {
        i1
    };

    let denom = direct.abs().max(by_parts.abs()).max(1e-300);
    let agreement = (direct - by_parts).abs() / denom;
    if agreement > 0.05 {
        return Err(Error::Resolution(format!(
            "convolution routes disagree by {:.1}%; raise n or M",
            100.0 * agreement
        )));
    }
    let coefficient = phi.c - (phi.phi.eval_at(lambda) + phibar.phi.eval_at(lambda));
    let sign_ok = if coefficient > 0.0 {
        wp_lambda > 0.0 && direct > 0.0 && by_parts > 0.0
    } else {
        direct > 0.0 && by_parts > 0.0
    };
    let verdict = if agreement <= 0.01 && sign_ok {
        BoundaryVerdict::Positive
    } else {
        BoundaryVerdict::Violated
    };
    Ok(BoundaryReport {
        verdict,
        lambda,
        direct,
        by_parts,
        agreement_rel: agreement,
        w_prime_at_lambda: wp_lambda,
        coefficient,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub lambda_star: Option<f64>,
    pub lambda0: Option<f64>,
    pub defect: f64,
    pub defect_axis: f64,
    pub crest_count: usize,
    pub monotone_half_period: bool,
    /// Theorem hypotheses hold (converged solution, not past the highest
    /// wave); when false the conclusion checks are informational.
    pub theorem_applicable: bool,
    pub verifier_outcomes: BTreeMap<String, CheckOutcome>,
    pub passed: bool,
}

/// Rotates the profile by an integer number of cells (exact translation).
fn rotate_profile(p: &WaveProfile, cells: usize) -> Result<WaveProfile> {
    let n = p.phi.grid().len();
    let v = p.phi.values();
    let rotated: Vec<f64> = (0..n).map(|j| v[(j + cells) % n]).collect();
    WaveProfile::from_parts(
        SpectralField::from_values(*p.phi.grid(), rotated)?,
        p.c,
        p.b,
        p.symbol.clone(),
    )
}

/// Runs the full structural audit: reflection criterion, moving-plane
/// supremum (trough normalized to -pi), symmetry defect, crest count, and
/// half-period monotonicity (crest normalized to 0).  The theorem's
/// conclusion — symmetric, one crest, monotone — is recorded as a verdict,
/// gated on the profile actually being a converged solution.
pub fn full_symmetry_audit(p: &WaveProfile, solve_tolerance: f64, audit_tol: f64) -> Result<SymmetryReport> {
    let n = p.phi.grid().len();
    let v = p.phi.values();
    let jmax = (0..n).max_by(|&a, &b| v[a].total_cmp(&v[b])).expect("nonempty");
    let jmin = (0..n).min_by(|&a, &b| v[a].total_cmp(&v[b])).expect("nonempty");

    // trough at -pi for the moving-plane normalization
    let trough_norm = rotate_profile(p, jmin)?;
    let lambda_star = reflection_criterion(&trough_norm, 0.0);
    let lambda0 = match lambda_star {
        Some(ls) => Some(moving_plane_lambda0(&trough_norm, ls)?),
        None => None,
    };

    let (defect, defect_axis) = symmetry_defect(p);
    let osc = p.phi.max() - p.phi.min();
    // Features smaller than the unresolved spectral tail (interpolation
    // ripple near a steep crest's trough) are not counted as crests.
    let tail: f64 = (n / 4..=n / 2)
        .map(|k| 2.0 * p.phi.coeff(k as i64).norm())
        .sum();
    let crests = crest_count(p, tail.max(1e-12 * osc).max(1e-300));

    // crest at 0 for the monotonicity statement
    let crest_norm = rotate_profile(p, (jmax + n / 2) % n)?;
    let monotone = monotone_half_period(&crest_norm);

    let theorem_applicable =
        p.residual_norm <= solve_tolerance && p.max_height() <= p.c / 2.0 + 1e-10;

    let mut outcomes = BTreeMap::new();
    outcomes.insert(
        "reflection_criterion".into(),
        CheckOutcome {
            passed: lambda_star.is_some(),
            margin: 0.0,
        },
    );
    outcomes.insert(
        "symmetry_defect".into(),
        CheckOutcome {
            passed: defect <= audit_tol,
            margin: defect,
        },
    );
    outcomes.insert(
        "single_crest".into(),
        CheckOutcome {
            passed: crests == 1,
            margin: crests as f64,
        },
    );
    outcomes.insert(
        "monotone_half_period".into(),
        CheckOutcome {
            passed: monotone,
            margin: 0.0,
        },
    );
    if let Some(l0) = lambda0 {
        outcomes.insert(
            "lambda0_at_origin".into(),
            CheckOutcome {
                passed: l0.abs() <= 1e-5,
                margin: l0.abs(),
            },
        );
    }

    let conclusion = lambda_star.is_some() && defect <= audit_tol && crests == 1 && monotone;
    // the theorem only constrains actual solutions satisfying the criterion
    let passed = !theorem_applicable || lambda_star.is_none() || conclusion;
    Ok(SymmetryReport {
        lambda_star,
        lambda0,
        defect,
        defect_axis,
        crest_count: crests,
        monotone_half_period: monotone,
        theorem_applicable,
        verifier_outcomes: outcomes,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{continue_branch, BranchOptions, BranchTarget};
    use crate::symbols::{oscillatory_control, whitham};
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    fn profile_from(grid: PeriodicGrid, f: impl Fn(f64) -> f64, c: f64) -> WaveProfile {
        WaveProfile::from_parts(SpectralField::from_fn(grid, f), c, 0.0, whitham()).unwrap()
    }

    /// brute-force reflection criterion over a 10x finer lambda grid
    fn criterion_oracle(p: &WaveProfile) -> bool {
        let g = p.phi.grid();
        let n = g.len();
        for l in 0..20 * n {
            let lambda = -PI + l as f64 * g.spacing() / 10.0;
            let mut ok = true;
            for t in 1..10 * n {
                let x = lambda + t as f64 * (PI / (10.0 * n as f64));
                if x >= lambda + PI {
                    break;
                }
                if p.phi.eval_at(x) - p.phi.eval_at(2.0 * lambda - x) <= 0.0 {
                    ok = false;
                    break;
                }
            }
            if ok {
                return true;
            }
        }
        false
    }

    #[test]
    fn reflection_criterion_basic_cases() {
        let g = grid(64);
        let cosine = profile_from(g, |x| x.cos(), 1.0);
        let ls = reflection_criterion(&cosine, 0.0).expect("cosine satisfies the criterion");
        // any witness must lie in (-pi, 0): cos x - cos(2l - x) =
        // -2 sin(l) sin(x - l) is positive on the half period iff sin l < 0
        assert!(ls > -PI && ls < 0.0, "lambda* = {ls}");

        let constant = profile_from(g, |_| 0.7, 1.0);
        assert!(reflection_criterion(&constant, 0.0).is_none());
    }

    #[test]
    fn reflection_criterion_matches_fine_oracle() {
        let g = grid(64);
        let asym = profile_from(
            g,
            |x| x.cos() + 0.3 * (2.0 * x + 0.7).cos() + 0.1 * (3.0 * x).sin(),
            1.0,
        );
        let ours = reflection_criterion(&asym, 0.0).is_some();
        assert_eq!(ours, criterion_oracle(&asym));

        // a profile violating it everywhere: high-frequency ripple
        let ripple = profile_from(g, |x| (5.0 * x).cos(), 1.0);
        assert_eq!(
            reflection_criterion(&ripple, 0.0).is_some(),
            criterion_oracle(&ripple)
        );
    }

    #[test]
    fn moving_plane_cosine_and_computed_wave() {
        let g = grid(128);
        // cos with trough at -pi is cos itself shifted: min of cos(x) is at
        // x = -pi and +pi already
        let cosine = profile_from(g, |x| x.cos(), 1.0);
        let ls = reflection_criterion(&cosine, 0.0).unwrap();
        let l0 = moving_plane_lambda0(&cosine, ls).unwrap();
        assert!(l0.abs() <= 1e-5, "lambda0 = {l0}");

        let s = whitham();
        let br = continue_branch(
            &s,
            &g,
            BranchTarget::HeightFraction(0.4),
            BranchOptions::default(),
        )
        .unwrap();
        let p = br.profiles.last().unwrap();
        // computed wave: crest at 0, trough at -pi (grid index 0)
        let ls = reflection_criterion(p, 0.0).unwrap();
        let l0 = moving_plane_lambda0(p, ls).unwrap();
        assert!(l0.abs() <= 1e-5, "lambda0 = {l0}");

        // asymmetric profile: lambda0 strictly negative
        let asym = profile_from(g, |x| x.cos() + 0.15 * (2.0 * (x + 0.4)).cos(), 1.0);
        let v = asym.phi.values();
        let jmin = (0..128).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        let norm = rotate_profile(&asym, jmin).unwrap();
        if let Some(ls) = reflection_criterion(&norm, 0.0) {
            let l0 = moving_plane_lambda0(&norm, ls).unwrap();
            assert!(l0 < -1e-4, "asymmetric profile should stop short of 0: {l0}");
        }
    }

    #[test]
    fn symmetry_defect_cases() {
        let g = grid(128);
        let shifted = profile_from(g, |x| (x - 0.3).cos(), 1.0);
        let (d, axis) = symmetry_defect(&shifted);
        assert!(d <= 1e-12, "defect {d}");
        // axes repeat mod pi
        let dist = (axis - 0.3).rem_euclid(PI).min((0.3 - axis).rem_euclid(PI));
        assert!(dist <= 1e-6, "axis {axis}");

        let asym = profile_from(g, |x| x.cos() + 0.1 * (2.0 * x).sin(), 1.0);
        let (d, axis) = symmetry_defect(&asym);
        assert!(d > 0.05, "defect {d}");
        // dense sweep oracle
        let mut best = f64::INFINITY;
        let mut best_axis = 0.0;
        for t in 0..20_000 {
            let lambda = -PI / 2.0 + t as f64 * PI / 20_000.0;
            let dd = defect_at(&asym, lambda);
            if dd < best {
                best = dd;
                best_axis = lambda;
            }
        }
        assert_abs_diff_eq!(d, best, epsilon = 1e-6);
        let dist = (axis - best_axis).rem_euclid(PI);
        assert!(dist.min(PI - dist) <= 1e-3, "axis {axis} vs oracle {best_axis}");

        // translation invariance (exact grid translation: the defect is a
        // max over grid samples, so only grid-commensurate shifts preserve
        // it to machine precision)
        let moved = rotate_profile(&asym, 17).unwrap();
        let (d2, _) = symmetry_defect(&moved);
        assert_abs_diff_eq!(d, d2, epsilon = 1e-12);
    }

    #[test]
    fn defect_of_converged_profile_is_tiny() {
        let g = grid(64);
        let s = whitham();
        let br = continue_branch(
            &s,
            &g,
            BranchTarget::HeightFraction(0.3),
            BranchOptions::default(),
        )
        .unwrap();
        for p in &br.profiles {
            let (d, _) = symmetry_defect(p);
            assert!(d <= 1e-10, "defect {d}");
        }
    }

    #[test]
    fn crest_count_cases() {
        let g = grid(128);
        assert_eq!(crest_count(&profile_from(g, |x| x.cos(), 1.0), 1e-12), 1);
        // cos x + 0.6 cos 2x has a secondary maximum at x = pi
        assert_eq!(
            crest_count(
                &profile_from(g, |x| x.cos() + 0.6 * (2.0 * x).cos(), 1.0),
                1e-12
            ),
            2
        );
        assert_eq!(crest_count(&profile_from(g, |_| 1.0, 1.0), 1e-12), 0);
    }

    #[test]
    fn monotone_half_period_cases() {
        let g = grid(128);
        // crest at 0: phi' = -sin > 0 on (-pi, 0)
        assert!(monotone_half_period(&profile_from(g, |x| x.cos(), 1.0)));
        assert!(!monotone_half_period(&profile_from(
            g,
            |x| x.cos() + 0.5 * (3.0 * x).cos(),
            1.0
        )));
    }

    #[test]
    fn touching_lemma_on_cosine_pair() {
        let g = grid(256);
        let c = 0.5;
        let p = profile_from(g, |x| 0.4 * x.cos() + 0.3, c);
        // lambda on the verifier grid so snapping preserves oddness of w
        let lambda = -PI / 8.0;
        let pbar = reflect_profile(&p, lambda).unwrap();
        // interior point near the crest: (phi + phibar)(x̄) > c there
        let xbar = 0.4;
        let rep = verify_touching(&p, &pbar, lambda, xbar).unwrap();
        assert_eq!(rep.verdict, TouchingVerdict::ContradictionConfirmed, "{rep:?}");
        assert!(rep.gp_min > 0.0);
        // single-mode w: Lw(x̄) = m(1) w(x̄-combination); cross-check the
        // multiplier route
        let wf = p.phi.sub(&pbar.phi);
        let m1 = p.symbol.eval(1).unwrap();
        let expect = m1 * wf.eval_at(rep.xbar);
        assert_abs_diff_eq!(rep.lw_at_xbar, expect, epsilon = 1e-6);

        // reflecting an even profile about its crest axis reproduces it
        let even = profile_from(g, |x| 0.4 * x.cos(), c);
        let evenbar = reflect_profile(&even, 0.0).unwrap();
        let rep2 = verify_touching(&even, &evenbar, 0.0, 0.5).unwrap();
        assert_eq!(rep2.verdict, TouchingVerdict::IdenticallyEqual);
    }

    #[test]
    fn gp_positivity_and_negative_control() {
        let fine = PeriodicGrid::new(2048).unwrap();
        let kt = build_kernel(&whitham(), &fine, 100_000).unwrap();
        let mut good = 0;
        for (i, lambda) in [-0.3, -0.9, -1.4].iter().enumerate() {
            let xbar = lambda + 0.5 + 0.4 * i as f64;
            if gp_minimum(&kt, *lambda, xbar) > 0.0 {
                good += 1;
            }
        }
        assert_eq!(good, 3);

        let bad = build_kernel(&oscillatory_control(), &fine, 100_000).unwrap();
        let mut violated = false;
        for (i, lambda) in [-0.3, -0.9, -1.4, -0.1, -2.0].iter().enumerate() {
            let xbar = lambda + 0.4 + 0.3 * i as f64;
            if gp_minimum(&bad, *lambda, xbar) <= 0.0 {
                violated = true;
            }
        }
        assert!(violated, "oscillatory kernel should break G_p positivity");
    }

    #[test]
    fn boundary_point_shifted_pair_and_sine_identity() {
        let g = grid(256);
        let s = whitham();
        let br = continue_branch(
            &s,
            &g,
            BranchTarget::HeightFraction(0.4),
            BranchOptions::default(),
        )
        .unwrap();
        let base = br.profiles.last().unwrap();
        let shift = |delta: f64| {
            WaveProfile::from_parts(base.phi.shift(delta), base.c, base.b, s.clone()).unwrap()
        };
        let p = shift(0.2);
        let pbar = shift(-0.2);
        let rep = verify_boundary_point(&p, &pbar, 0.0).unwrap();
        assert_eq!(rep.verdict, BoundaryVerdict::Positive, "{rep:?}");
        assert!(rep.agreement_rel <= 0.01);
        assert!(rep.w_prime_at_lambda > 0.0);

        // single-mode pair: w = A sin(x - lambda) gives
        // K*w'(lambda) = 2 pi m(1) A
        let lam = 0.0;
        let a = profile_from(g, |x| 0.5 * (x - lam).sin() + 0.3 * (x - lam).cos(), 1.0);
        let b = profile_from(g, |x| -0.5 * (x - lam).sin() + 0.3 * (x - lam).cos(), 1.0);
        let rep = verify_boundary_point(&a, &b, lam).unwrap();
        let expect = 2.0 * PI * whitham().eval(1).unwrap() * 1.0; // A = 1
        assert_abs_diff_eq!(rep.direct, expect, epsilon = 1e-3 * expect);
        assert_abs_diff_eq!(rep.by_parts, expect, epsilon = 1e-2 * expect);

        // identical profiles
        let rep = verify_boundary_point(&a, &a, lam).unwrap();
        assert_eq!(rep.verdict, BoundaryVerdict::IdenticallyEqual);
    }

    #[test]
    fn full_audit_on_branch_profile() {
        let g = grid(64);
        let s = whitham();
        let br = continue_branch(
            &s,
            &g,
            BranchTarget::HeightFraction(0.4),
            BranchOptions::default(),
        )
        .unwrap();
        let p = br.profiles.last().unwrap();
        let rep = full_symmetry_audit(p, 1e-10, 1e-8).unwrap();
        assert!(rep.theorem_applicable);
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.crest_count, 1);
        assert!(rep.monotone_half_period);
        assert!(rep.defect <= 1e-10);

        // synthetic non-solution: audit flags inapplicability rather than
        // failing the theorem
        let junk = profile_from(g, |x| x.cos() + 0.2 * (2.0 * x).cos(), 1.0);
        let rep = full_symmetry_audit(&junk, 1e-10, 1e-8).unwrap();
        assert!(!rep.theorem_applicable);
    }

    #[test]
    fn reflection_criterion_translation_covariance() {
        let g = grid(64);
        let p = profile_from(g, |x| x.cos() + 0.3 * (2.0 * x + 0.7).cos(), 1.0);
        let ls = reflection_criterion(&p, 0.0);
        // translate by grid cells; witness translates with the profile
        let tau_cells = 9usize;
        let moved = rotate_profile(&p, tau_cells).unwrap();
        let ls2 = reflection_criterion(&moved, 0.0);
        assert_eq!(ls.is_some(), ls2.is_some());
    }
}
