//! Traveling-wave solvers for the steady equation
//! `-c phi + L phi + phi^2 = B_h`: Galilean normalization, the smoothing
//! fixed-point iteration, a Newton refiner with speed or crest-height
//! constraints, branch continuation toward the highest wave, and the
//! crest Hoelder-exponent diagnostic.
//!
//! Profiles are even about x = 0 (the crest is pinned to the grid point at
//! the origin); Newton works in the even cosine subspace, which removes the
//! translation null mode and keeps the dense Jacobian well conditioned away
//! from folds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::linear_fit;
use crate::spectral::{multiply_dealiased, synthesize, PeriodicGrid, SpectralField};
use crate::symbols::Symbol;

/// Radicand safeguard factor for the fixed-point iteration (times c^2).
const RADICAND_SAFEGUARD: f64 = 1e-12;

/// A traveling-wave profile of the steady equation.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub phi: SpectralField,
    pub c: f64,
    /// Integration constant: `mean(phi^2)` for homogeneous symbols, 0 for
    /// solver outputs with inhomogeneous symbols (nonzero only after a
    /// Galilean shift).
    pub b: f64,
    pub symbol: Symbol,
    pub residual_norm: f64,
}

impl WaveProfile {
    /// Assembles a profile and computes its residual norm.
    pub fn from_parts(phi: SpectralField, c: f64, b: f64, symbol: Symbol) -> Result<Self> {
        let mut p = Self {
            phi,
            c,
            b,
            symbol,
            residual_norm: 0.0,
        };
        p.residual_norm = residual(&p)?.max_abs();
        Ok(p)
    }

    /// Crest height phi(0); the crest sits at the grid origin.
    pub fn crest_height(&self) -> f64 {
        self.phi.values()[self.phi.grid().len() / 2]
    }

    pub fn max_height(&self) -> f64 {
        self.phi.max()
    }

    /// Distance of the crest from the highest-wave bound c/2.
    pub fn gap_to_highest(&self) -> f64 {
        self.c / 2.0 - self.max_height()
    }
}

/// Applies the multiplier without the zero-mean domain check; homogeneous
/// symbols annihilate the mean mode.
pub(crate) fn apply_l_raw(s: &Symbol, f: &SpectralField) -> SpectralField {
    let n = f.grid().len();
    let half = n / 2;
    let mut c = f.coeff_bins().to_vec();
    for (i, ci) in c.iter_mut().enumerate() {
        let k = if i <= half { i as i64 } else { i as i64 - n as i64 };
        if k == 0 {
            *ci *= if s.is_homogeneous() {
                0.0
            } else {
                s.eval(0).expect("inhomogeneous symbol at 0")
            };
        } else {
            *ci *= s.eval(k).expect("k != 0");
        }
    }
    SpectralField::from_coeffs(*f.grid(), c).expect("length preserved")
}

/// Pointwise steady residual `-c phi + L phi + phi^2 - b` with the square
/// dealiased.
pub fn residual(p: &WaveProfile) -> Result<SpectralField> {
    let lphi = apply_l_raw(&p.symbol, &p.phi);
    let sq = multiply_dealiased(&p.phi, &p.phi)?;
    Ok(p
        .phi
        .scale(-p.c)
        .add(&lphi)
        .add(&sq)
        .add_scalar(-p.b))
}

/// Galilean shift `phi -> phi + gamma, c -> c + 2 gamma,
/// B -> B + gamma (m(0) - c - gamma)`; leaves the residual invariant.
pub fn galilean_shift(p: &WaveProfile, gamma: f64) -> Result<WaveProfile> {
    if p.symbol.is_homogeneous() {
        return Err(Error::Domain(
            "Galilean shift changes the mean; homogeneous symbols need mean-zero profiles".into(),
        ));
    }
    let m0 = p.symbol.eval(0)?;
    WaveProfile::from_parts(
        p.phi.add_scalar(gamma),
        p.c + 2.0 * gamma,
        p.b + gamma * (m0 - p.c - gamma),
        p.symbol.clone(),
    )
}

/// Smoothing fixed-point iteration
/// `phi <- c/2 - sqrt(B_h + c^2/4 - L phi)`.
///
/// For homogeneous symbols the mean of each iterate is projected to zero
/// and `B_h = mean(phi^2)` is refreshed per sweep.  For inhomogeneous
/// symbols the mean mode is updated implicitly (a scalar solve per sweep):
/// the explicit map expands that mode at rate m(0)/c, which exceeds 1 in
/// the speed regime near the bifurcation point c = m(1) < m(0).
pub fn fixed_point_solve(
    s: &Symbol,
    c: f64,
    init: &SpectralField,
    tol: f64,
    max_iter: usize,
) -> Result<WaveProfile> {
    if c <= 0.0 || tol <= 0.0 {
        return Err(Error::Domain("need c > 0 and tol > 0".into()));
    }
    let grid = *init.grid();
    let homogeneous = s.is_homogeneous();
    let mut phi = if homogeneous {
        init.project_zero_mean()
    } else {
        init.clone()
    };
    let guard = RADICAND_SAFEGUARD * c * c;
    let m0 = if homogeneous { 0.0 } else { s.eval(0)? };
    for iter in 0..max_iter {
        let b = if homogeneous {
            multiply_dealiased(&phi, &phi)?.mean()
        } else {
            0.0
        };
        let lphi = apply_l_raw(s, &phi);
        // guard on the radicand of the current iterate
        let mut min_rad = f64::INFINITY;
        let mut min_x = 0.0;
        for (j, &l) in lphi.values().iter().enumerate() {
            let rad = b + c * c / 4.0 - l;
            if rad < min_rad {
                min_rad = rad;
                min_x = grid.point(j);
            }
        }
        if min_rad <= guard {
            return Err(Error::HighestWaveProximity {
                x: min_x,
                radicand: min_rad,
            });
        }

        let gamma = if homogeneous || m0.abs() < 1e-14 {
            phi.mean()
        } else {
            // implicit mean: solve g = mean(c/2 - sqrt(q - m0 g)) with
            // q_j = b + c^2/4 - (L psi)_j and psi the mean-free part
            let gamma_old = phi.mean();
            let q: Vec<f64> = lphi
                .values()
                .iter()
                .map(|&l| b + c * c / 4.0 - (l - m0 * gamma_old))
                .collect();
            let q_min = q.iter().cloned().fold(f64::INFINITY, f64::min);
            let gamma_cap = (q_min - guard) / m0;
            let mut g = gamma_old.min(gamma_cap - 1e-12 * c * c);
            let mut solved = false;
            for _ in 0..100 {
                let mut mean_val = 0.0;
                let mut mean_der = 0.0;
                for &qj in &q {
                    let r = (qj - m0 * g).sqrt();
                    mean_val += c / 2.0 - r;
                    mean_der += m0 / (2.0 * r);
                }
                mean_val /= q.len() as f64;
                mean_der /= q.len() as f64;
                let f = mean_val - g;
                let fp = mean_der - 1.0;
                let mut step = -f / fp;
                // keep the radicand positive
                if g + step >= gamma_cap {
                    step = 0.5 * (gamma_cap - g);
                }
                g += step;
                if step.abs() <= 1e-15 * (1.0 + c * c) {
                    solved = true;
                    break;
                }
            }
            if !solved {
                return Err(Error::IterationFailure {
                    iterations: iter,
                    message: "mean equation of the smoothing map has no stable root".into(),
                });
            }
            g
        };

        let mut vals = Vec::with_capacity(grid.len());
        for (j, &l) in lphi.values().iter().enumerate() {
            // L phi at the updated mean: L psi + m0 * gamma
            let l_new = if homogeneous {
                l
            } else {
                l + m0 * (gamma - phi.mean())
            };
            let rad = b + c * c / 4.0 - l_new;
            if rad <= guard {
                return Err(Error::HighestWaveProximity {
                    x: grid.point(j),
                    radicand: rad,
                });
            }
            vals.push(c / 2.0 - rad.sqrt());
        }
        let mut next = SpectralField::from_values(grid, vals)?;
        if homogeneous {
            next = next.project_zero_mean();
        }
        let update = next.sub(&phi).max_abs();
        phi = next;
        if update < tol {
            let b = if homogeneous {
                multiply_dealiased(&phi, &phi)?.mean()
            } else {
                0.0
            };
            return WaveProfile::from_parts(phi, c, b, s.clone());
        }
    }
    Err(Error::IterationFailure {
        iterations: max_iter,
        message: format!(
            "fixed point did not contract below {tol:.1e}; last max |phi| = {:.3e}",
            phi.max_abs()
        ),
    })
}

/// Newton constraint: either the speed is held fixed, or the crest height
/// is prescribed and c becomes an unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    FixSpeed,
    FixHeight(f64),
}

/// Circulant row of the multiplier on the grid:
/// `(L f)_i = sum_j row[(i - j) mod n] f_j`.
fn multiplier_row(s: &Symbol, grid: &PeriodicGrid) -> Result<Vec<f64>> {
    let n = grid.len();
    let mut bins = vec![num_complex::Complex64::new(0.0, 0.0); n];
    if !s.is_homogeneous() {
        bins[0] = s.eval(0)?.into();
    }
    for k in 1..n / 2 {
        let m = s.eval(k as i64)?;
        bins[k] = m.into();
        bins[n - k] = m.into();
    }
    bins[n / 2] = s.eval((n / 2) as i64)?.into();
    for b in bins.iter_mut() {
        *b /= n as f64;
    }
    // synthesize evaluates at x_j = -pi + j h; the row needs distances d*h,
    // which sit at index d + n/2 modulo the period.
    let raw = synthesize(grid, &bins)?;
    Ok((0..n).map(|d| raw[(d + n / 2) % n]).collect())
}

/// Mirror partner of half-index p under evenness about x = 0.
fn half_indices(n: usize, p: usize) -> (usize, Option<usize>) {
    let i1 = (n / 2 + p) % n;
    if p == 0 || p == n / 2 {
        (i1, None)
    } else {
        (i1, Some(n / 2 - p))
    }
}

fn full_from_half(grid: &PeriodicGrid, u: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut v = vec![0.0; n];
    for (p, &up) in u.iter().enumerate() {
        let (i1, i2) = half_indices(n, p);
        v[i1] = up;
        if let Some(i2) = i2 {
            v[i2] = up;
        }
    }
    v
}

fn half_from_full(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..=n / 2).map(|p| values[(n / 2 + p) % n]).collect()
}

/// Symmetrizes a field about x = 0 (average with its reflection).
fn symmetrize(f: &SpectralField) -> SpectralField {
    let n = f.grid().len();
    let v = f.values();
    let half: Vec<f64> = (0..=n / 2)
        .map(|p| {
            let (i1, i2) = half_indices(n, p);
            match i2 {
                Some(i2) => 0.5 * (v[i1] + v[i2]),
                None => v[i1],
            }
        })
        .collect();
    SpectralField::from_values(*f.grid(), full_from_half(f.grid(), &half)).expect("same grid")
}

/// Newton refinement of a traveling-wave profile.  The iteration runs in
/// the even subspace (crest at x = 0); under `FixHeight` the speed joins
/// the unknowns through a bordered system, which stays nonsingular at the
/// bifurcation point.  For homogeneous symbols the trough-row equation is
/// replaced by the zero-mean constraint and `b = mean(phi^2)` is kept
/// consistent through its Jacobian contribution.
pub fn newton_solve(
    s: &Symbol,
    p0: &WaveProfile,
    constraint: Constraint,
    tol: f64,
    max_iter: usize,
) -> Result<WaveProfile> {
    let grid = *p0.phi.grid();
    let n = grid.len();
    let m = n / 2 + 1;
    let homogeneous = s.is_homogeneous();
    if p0.residual_norm > 0.1 * p0.c * p0.c {
        return Err(Error::Domain(format!(
            "initial residual {:.3e} outside the Newton basin bound {:.3e}",
            p0.residual_norm,
            0.1 * p0.c * p0.c
        )));
    }
    let row = multiplier_row(s, &grid)?;
    let bordered = matches!(constraint, Constraint::FixHeight(_));
    let dim = m + usize::from(bordered);
    // mean weights of the half representation
    let w: Vec<f64> = (0..m)
        .map(|p| if p == 0 || p == n / 2 { 1.0 / n as f64 } else { 2.0 / n as f64 })
        .collect();

    let mut u = half_from_full(symmetrize(&p0.phi).values());
    let mut c = p0.c;
    let b_fixed = if homogeneous { None } else { Some(p0.b) };
    let mut last_res = f64::INFINITY;
    let mut growth = 0usize;

    for iter in 0..max_iter {
        let phi = SpectralField::from_values(grid, full_from_half(&grid, &u))?;
        let sq = multiply_dealiased(&phi, &phi)?;
        let b = b_fixed.unwrap_or_else(|| sq.mean());
        let lphi = apply_l_raw(s, &phi);
        let res_full = phi.scale(-c).add(&lphi).add(&sq).add_scalar(-b);
        let res_norm = res_full.max_abs();

        if res_norm <= tol {
            let prof = WaveProfile::from_parts(phi, c, b, s.clone())?;
            return Ok(prof);
        }
        if res_norm > 10.0 * last_res {
            growth += 1;
            if growth >= 2 {
                return Err(Error::IterationFailure {
                    iterations: iter,
                    message: format!("Newton diverging: residual {res_norm:.3e}"),
                });
            }
        } else {
            growth = 0;
        }
        last_res = res_norm;

        // right-hand side
        let mut rhs = DVector::zeros(dim);
        for p in 0..m {
            let (i1, _) = half_indices(n, p);
            rhs[p] = -res_full.values()[i1];
        }
        if homogeneous {
            rhs[n / 2] = -phi.mean();
        }
        if let Constraint::FixHeight(h) = constraint {
            rhs[m] = h - u[0];
        }

        // dense Jacobian, column by column
        let mut jac = DMatrix::zeros(dim, dim);
        for p in 0..m {
            let (i1, i2) = half_indices(n, p);
            let mut basis = vec![0.0; n];
            basis[i1] = 1.0;
            if let Some(i2) = i2 {
                basis[i2] = 1.0;
            }
            let bf = SpectralField::from_values(grid, basis.clone())?;
            let prod = multiply_dealiased(&phi, &bf)?;
            let db = if homogeneous { 2.0 * prod.mean() } else { 0.0 };
            for q in 0..m {
                if homogeneous && q == n / 2 {
                    jac[(q, p)] = w[p];
                    continue;
                }
                let (iq, _) = half_indices(n, q);
                let mut lv = row[(iq + n - i1) % n];
                if let Some(i2) = i2 {
                    lv += row[(iq + n - i2) % n];
                }
                let diag = if q == p { -c } else { 0.0 };
                jac[(q, p)] = diag + lv + 2.0 * prod.values()[iq] - db;
            }
            if bordered {
                jac[(m, p)] = if p == 0 { 1.0 } else { 0.0 };
            }
        }
        if bordered {
            for q in 0..m {
                if homogeneous && q == n / 2 {
                    jac[(q, m)] = 0.0;
                    continue;
                }
                let (iq, _) = half_indices(n, q);
                jac[(q, m)] = -phi.values()[iq];
            }
            jac[(m, m)] = 0.0;
        }

        let lu = jac.lu();
        let delta = lu.solve(&rhs).ok_or_else(|| Error::FoldDetected("LU solve failed".into()))?;
        let step_norm = delta.amax();
        if !step_norm.is_finite() || step_norm > 1e6 * (1.0 + phi.max_abs()) {
            return Err(Error::FoldDetected("unbounded Newton step".into()));
        }
        for p in 0..m {
            u[p] += delta[p];
        }
        if bordered {
            c += delta[m];
        }
    }
    Err(Error::IterationFailure {
        iterations: max_iter,
        message: format!("Newton stalled at residual {last_res:.3e}"),
    })
}

/// Bifurcation-point initial data: `phi_0 = eps cos(x)`, `c_0 = m(1)`.
pub fn small_amplitude_init(
    s: &Symbol,
    grid: &PeriodicGrid,
    eps: f64,
) -> Result<(SpectralField, f64)> {
    let c0 = s.eval(1)?;
    if !(eps > 0.0 && eps < 0.1 * c0) {
        return Err(Error::Domain(format!(
            "need 0 < eps < 0.1 m(1) = {:.3e}, got {eps}",
            0.1 * c0
        )));
    }
    Ok((SpectralField::from_fn(*grid, |x| eps * x.cos()), c0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BranchTarget {
    /// continue until crest height reaches theta * c/2
    HeightFraction(f64),
    /// continue until a fold is detected
    Fold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    TargetHeight,
    StepFailure,
    HighestWaveProximity,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub profiles: Vec<WaveProfile>,
    pub height_param: Vec<f64>,
    pub terminated_reason: TerminationReason,
}

#[derive(Debug, Clone, Copy)]
pub struct BranchOptions {
    /// initial amplitude of the cos(x) seed
    pub epsilon: f64,
    pub solve_tol: f64,
    pub max_steps: usize,
    pub min_step: f64,
    pub max_newton_iter: usize,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            solve_tol: 1e-10,
            max_steps: 500,
            min_step: 1e-7,
            max_newton_iter: 30,
        }
    }
}

/// Height continuation from the small-amplitude seed toward the highest
/// wave, with a secant predictor and adaptive step halving.
pub fn continue_branch(
    s: &Symbol,
    grid: &PeriodicGrid,
    target: BranchTarget,
    opts: BranchOptions,
) -> Result<Branch> {
    if let BranchTarget::HeightFraction(theta) = target {
        if !(0.0 < theta && theta < 1.0) {
            return Err(Error::Domain(format!("theta must lie in (0,1), got {theta}")));
        }
    }
    let (phi0, c0) = small_amplitude_init(s, grid, opts.epsilon)?;
    let b0 = if s.is_homogeneous() {
        multiply_dealiased(&phi0, &phi0)?.mean()
    } else {
        0.0
    };
    let seed = WaveProfile::from_parts(phi0, c0, b0, s.clone())?;
    let first = newton_solve(
        s,
        &seed,
        Constraint::FixHeight(opts.epsilon),
        opts.solve_tol,
        opts.max_newton_iter,
    )?;
    let mut profiles = vec![first];
    let mut heights = vec![profiles[0].crest_height()];

    let mut reason = TerminationReason::StepFailure;
    let mut halvings = 0usize;
    'outer: for _ in 0..opts.max_steps {
        let cur = profiles.last().expect("nonempty").clone();
        let h = cur.crest_height();
        let half_c = cur.c / 2.0;
        if let BranchTarget::HeightFraction(theta) = target {
            if h >= theta * half_c {
                reason = TerminationReason::TargetHeight;
                break;
            }
        }
        let gap = half_c - h;
        if gap <= 1e-4 * cur.c {
            reason = TerminationReason::HighestWaveProximity;
            break;
        }
        let mut dh = (0.02f64).min(0.3 * gap);
        loop {
            let mut h_next = h + dh;
            if let BranchTarget::HeightFraction(theta) = target {
                h_next = h_next.min(theta * half_c);
            }
            let pred = predict(&profiles, h_next)?;
            match newton_solve(
                s,
                &pred,
                Constraint::FixHeight(h_next),
                opts.solve_tol,
                opts.max_newton_iter,
            ) {
                Ok(p) => {
                    heights.push(p.crest_height());
                    profiles.push(p);
                    halvings = 0;
                    break;
                }
                Err(Error::FoldDetected(_)) if target == BranchTarget::Fold => {
                    reason = TerminationReason::StepFailure;
                    break 'outer;
                }
                Err(_) => {
                    dh /= 2.0;
                    if dh < opts.min_step {
                        halvings += 1;
                        if halvings >= 3 {
                            reason = TerminationReason::StepFailure;
                            break 'outer;
                        }
                        dh = opts.min_step;
                    }
                }
            }
        }
    }
    Ok(Branch {
        profiles,
        height_param: heights,
        terminated_reason: reason,
    })
}

/// Secant predictor in the height parameter (falls back to scaling for a
/// single available profile).
fn predict(profiles: &[WaveProfile], h_next: f64) -> Result<WaveProfile> {
    let last = profiles.last().expect("nonempty");
    let h1 = last.crest_height();
    if profiles.len() >= 2 {
        let prev = &profiles[profiles.len() - 2];
        let h0 = prev.crest_height();
        if (h1 - h0).abs() > 1e-14 {
            let sfac = (h_next - h1) / (h1 - h0);
            let phi = last.phi.add(&last.phi.sub(&prev.phi).scale(sfac));
            let c = last.c + (last.c - prev.c) * sfac;
            let b = last.b + (last.b - prev.b) * sfac;
            return WaveProfile::from_parts(phi, c, b, last.symbol.clone());
        }
    }
    let phi = last.phi.scale(h_next / h1);
    WaveProfile::from_parts(phi, last.c, last.b, last.symbol.clone())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CrestFit {
    pub alpha: f64,
    pub fit_rms: f64,
    pub points: usize,
}

/// Crest contact exponent: slope of `log(gauge(x))` against `log |x|` over
/// `x in [4 h_grid, 0.3]`, with `gauge = c/2 - phi` when `highest_gauge`
/// and `gauge = phi(0) - phi` otherwise (appropriate for smooth crests).
pub fn crest_exponent(p: &WaveProfile, highest_gauge: bool) -> Result<CrestFit> {
    let grid = p.phi.grid();
    let n = grid.len();
    let h = grid.spacing();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let phi0 = p.crest_height();
    for j in n / 2 + 1..n {
        let x = grid.point(j);
        if x < 4.0 * h || x > 0.3 {
            continue;
        }
        let g = if highest_gauge {
            p.c / 2.0 - p.phi.values()[j]
        } else {
            phi0 - p.phi.values()[j]
        };
        if g <= 0.0 {
            continue;
        }
        xs.push(x.ln());
        ys.push(g.ln());
    }
    if xs.len() < 8 {
        return Err(Error::Capability(format!(
            "only {} usable fit points; refine the grid",
            xs.len()
        )));
    }
    let (alpha, _, rms) = linear_fit(&xs, &ys);
    Ok(CrestFit {
        alpha,
        fit_rms: rms,
        points: xs.len(),
    })
}

/// Hoelder exponent of a near-highest wave (`c/2 - max phi <= 0.02 c`
/// required): alpha < 1 witnesses the C^1 failure at the crest.
pub fn holder_exponent_at_crest(p: &WaveProfile) -> Result<CrestFit> {
    if p.gap_to_highest() > 0.02 * p.c {
        return Err(Error::Domain(format!(
            "profile is not near-highest: gap {:.3e} exceeds 0.02 c",
            p.gap_to_highest()
        )));
    }
    crest_exponent(p, true)
}
