//! Pseudospectral time integration of `u_t + (u^2 + L u)_x = 0`.
//!
//! The right-hand side is evaluated in coefficient space as
//! `-ik (widehat{u^2}(k) + m(k) u_hat(k))` with the quadratic term
//! dealiased by the 3/2 rule, and stepped with classical RK4.  Since the
//! symbols of interest have negative order, `m` is bounded and no
//! integrating factor is needed; stability is governed by a CFL proxy on
//! the advective term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::apply_l;
use crate::solver::WaveProfile;
use crate::spectral::{multiply_dealiased, SpectralField};
use crate::symbols::Symbol;

/// `-d/dx (u^2 + L u)`, the conservation-form right-hand side.  The outer
/// derivative annihilates the zero mode, so the mean of the result is
/// identically zero.
pub fn rhs(u: &SpectralField, s: &Symbol) -> Result<SpectralField> {
    let lu = apply_l(s, u)?;
    let flux = multiply_dealiased(u, u)?.add(&lu);
    Ok(flux.derivative().scale(-1.0))
}

fn rhs_linear(u: &SpectralField, s: &Symbol) -> Result<SpectralField> {
    Ok(apply_l(s, u)?.derivative().scale(-1.0))
}

/// Largest stable step for the RK4 imaginary-axis proxy
/// `dt * max_k |k| (|m(k)| + 2 max|u|) <= cfl`.
pub fn stable_dt(u: &SpectralField, s: &Symbol, cfl: f64) -> Result<f64> {
    let n = u.grid().len();
    let amp = 2.0 * u.max_abs();
    let mut worst = 0.0f64;
    for k in 1..=(n / 2) as i64 {
        worst = worst.max(k as f64 * (s.eval(k)?.abs() + amp));
    }
    Ok(cfl / worst.max(1e-300))
}

/// One classical Runge–Kutta step.
pub fn step_rk4(u: &SpectralField, s: &Symbol, dt: f64) -> Result<SpectralField> {
    step(u, s, dt, false)
}

fn step(u: &SpectralField, s: &Symbol, dt: f64, linear: bool) -> Result<SpectralField> {
    let f = |v: &SpectralField| -> Result<SpectralField> {
        if linear {
            rhs_linear(v, s)
        } else {
            rhs(v, s)
        }
    };
    let k1 = f(u)?;
    let k2 = f(&u.add(&k1.scale(dt / 2.0)))?;
    let k3 = f(&u.add(&k2.scale(dt / 2.0)))?;
    let k4 = f(&u.add(&k3.scale(dt)))?;
    Ok(u.add(
        &k1.add(&k2.scale(2.0))
            .add(&k3.scale(2.0))
            .add(&k4)
            .scale(dt / 6.0),
    ))
}

#[derive(Debug, Clone)]
pub struct EvolutionOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record a snapshot every this many steps (the final state is always
    /// recorded).
    pub snapshot_stride: usize,
    /// Drop the quadratic term (exact solution: each mode advects with
    /// phase speed m(k)).
    pub linear_only: bool,
}

impl EvolutionOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            snapshot_stride: usize::MAX,
            linear_only: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservedSample {
    pub t: f64,
    pub mean: f64,
    pub mean_square: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone)]
pub struct EvolutionRun {
    pub symbol: Symbol,
    pub initial: SpectralField,
    pub dt: f64,
    pub t_end: f64,
    pub snapshots: Vec<(f64, SpectralField)>,
    pub conserved: Vec<ConservedSample>,
}

impl EvolutionRun {
    pub fn final_state(&self) -> &SpectralField {
        &self.snapshots.last().expect("at least the final state").1
    }

    /// Largest drift of mean(u) from its initial value over the run.
    pub fn mean_drift(&self) -> f64 {
        let m0 = self.conserved[0].mean;
        self.conserved
            .iter()
            .map(|c| (c.mean - m0).abs())
            .fold(0.0, f64::max)
    }
}

/// Integrates from `u0` to `t_end`, adjusting the final step to land
/// exactly.  Blow-up (max|u| exceeding 1000x its initial value, or any
/// non-finite value) aborts with the time it was detected.
pub fn integrate(u0: &SpectralField, s: &Symbol, opts: &EvolutionOptions) -> Result<EvolutionRun> {
    if !(opts.dt > 0.0) || !(opts.t_end >= 0.0) {
        return Err(Error::Domain("dt and t_end must be positive".into()));
    }
    let cap = stable_dt(u0, s, 1.0)?;
    if opts.dt > cap {
        return Err(Error::Domain(format!(
            "dt = {:.3e} exceeds the stability proxy {:.3e}",
            opts.dt, cap
        )));
    }
    let blow_up = 1e3 * u0.max_abs().max(1e-300);
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut snapshots = vec![(0.0, u.clone())];
    let mut conserved = vec![sample(0.0, &u)];
    let mut step_index = 0usize;
    while t < opts.t_end - 1e-14 * opts.t_end.max(1.0) {
        let dt = opts.dt.min(opts.t_end - t);
        u = step(&u, s, dt, opts.linear_only)?;
        t += dt;
        step_index += 1;
        let m = u.max_abs();
        if !m.is_finite() || m > blow_up {
            return Err(Error::Instability { t });
        }
        let done = t >= opts.t_end - 1e-14 * opts.t_end.max(1.0);
        if step_index % opts.snapshot_stride.max(1) == 0 && opts.snapshot_stride != usize::MAX
            || done
        {
            snapshots.push((t, u.clone()));
            conserved.push(sample(t, &u));
        }
    }
    if snapshots.len() == 1 {
        // t_end == 0: the initial state is also final
        conserved.push(sample(0.0, &u));
        snapshots.push((0.0, u));
    }
    Ok(EvolutionRun {
        symbol: s.clone(),
        initial: u0.clone(),
        dt: opts.dt,
        t_end: opts.t_end,
        snapshots,
        conserved,
    })
}

fn sample(t: f64, u: &SpectralField) -> ConservedSample {
    let vals = u.values();
    let mean_square = vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64;
    ConservedSample {
        t,
        mean: u.mean(),
        mean_square,
        max_abs: u.max_abs(),
    }
}

/// Evolves a steady profile for whole periods and measures how far the
/// result strays from the rigidly translated profile `phi(x - cT)`.
pub fn traveling_check(p: &WaveProfile, periods: u32) -> Result<f64> {
    if p.c.abs() <= 1e-300 {
        return Err(Error::Domain("zero wave speed".into()));
    }
    let t_end = periods as f64 * 2.0 * std::f64::consts::PI / p.c.abs();
    if p.phi.max_abs() == 0.0 {
        return Ok(0.0);
    }
    // CFL proxy with margin; the O(dt^4) global error then sits well below
    // the drift tolerances of interest
    let dt = stable_dt(&p.phi, &p.symbol, 0.2)?;
    let steps = (t_end / dt).ceil().max(1.0);
    let opts = EvolutionOptions::new(t_end / steps, t_end);
    let run = integrate(&p.phi, &p.symbol, &opts)?;
    let target = p.phi.shift(p.c * t_end);
    Ok(run.final_state().sub(&target).max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{continue_branch, BranchOptions, BranchTarget};
    use crate::spectral::PeriodicGrid;
    use crate::symbols::whitham;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn rhs_trivial_cases() {
        let g = grid(64);
        let s = whitham();
        let constant = SpectralField::from_fn(g, |_| 0.7);
        assert!(rhs(&constant, &s).unwrap().max_abs() <= 1e-14);

        // linearized dispersion: -d/dx L (eps cos) = eps m(1) sin
        let eps = 1e-5;
        let u = SpectralField::from_fn(g, |x| eps * x.cos());
        let r = rhs(&u, &s).unwrap();
        let m1 = s.eval(1).unwrap();
        let expect = SpectralField::from_fn(g, |x| eps * m1 * x.sin());
        assert!(r.sub(&expect).max_abs() <= 1e-9);
    }

    #[test]
    fn rhs_of_steady_profile_is_advection() {
        let g = grid(64);
        let s = whitham();
        let br = continue_branch(
            &s,
            &g,
            BranchTarget::HeightFraction(0.3),
            BranchOptions::default(),
        )
        .unwrap();
        let p = br.profiles.last().unwrap();
        let r = rhs(&p.phi, &s).unwrap();
        let adv = p.phi.derivative().scale(-p.c);
        assert!(
            r.sub(&adv).max_abs() <= 1e-9,
            "steady profile should satisfy rhs = -c phi', diff {}",
            r.sub(&adv).max_abs()
        );
    }

    #[test]
    fn zero_stays_zero_and_mean_is_conserved() {
        let g = grid(64);
        let s = whitham();
        let zero = SpectralField::zeros(g);
        let run = integrate(&zero, &s, &EvolutionOptions::new(0.01, 0.5)).unwrap();
        assert!(run.final_state().max_abs() == 0.0);

        let u0 = SpectralField::from_fn(g, |x| 0.3 + 0.2 * x.cos() + 0.05 * (2.0 * x).sin());
        let mut opts = EvolutionOptions::new(0.005, 2.0);
        opts.snapshot_stride = 25;
        let run = integrate(&u0, &s, &opts).unwrap();
        assert!(run.mean_drift() <= 1e-12, "mean drift {}", run.mean_drift());
        assert!(run.snapshots.len() > 5);
    }

    #[test]
    fn fourth_order_self_convergence() {
        let g = grid(64);
        let s = whitham();
        let u0 = SpectralField::from_fn(g, |x| 0.1 * x.cos());
        let t_end = 0.5;
        let reference = integrate(&u0, &s, &EvolutionOptions::new(0.04 / 16.0, t_end)).unwrap();
        let coarse = integrate(&u0, &s, &EvolutionOptions::new(0.04, t_end)).unwrap();
        let fine = integrate(&u0, &s, &EvolutionOptions::new(0.02, t_end)).unwrap();
        let e_coarse = coarse
            .final_state()
            .sub(reference.final_state())
            .max_abs();
        let e_fine = fine.final_state().sub(reference.final_state()).max_abs();
        let order = (e_coarse / e_fine).log2();
        assert!(
            (3.5..=4.6).contains(&order),
            "observed order {order} (errors {e_coarse:.3e}, {e_fine:.3e})"
        );
    }

    #[test]
    fn linear_part_advects_each_mode_exactly() {
        let g = grid(64);
        let s = whitham();
        let u0 = SpectralField::from_fn(g, |x| x.cos());
        let mut opts = EvolutionOptions::new(1e-3, 1.0);
        opts.linear_only = true;
        let run = integrate(&u0, &s, &opts).unwrap();
        let m1 = s.eval(1).unwrap();
        let exact = SpectralField::from_fn(g, |x| (x - m1 * opts.t_end).cos());
        let err = run.final_state().sub(&exact).max_abs();
        assert!(err <= 1e-8, "linear advection error {err}");
    }

    #[test]
    fn excessive_dt_is_rejected() {
        let g = grid(64);
        let s = whitham();
        let u0 = SpectralField::from_fn(g, |x| x.cos());
        let cap = stable_dt(&u0, &s, 1.0).unwrap();
        let err = integrate(&u0, &s, &EvolutionOptions::new(2.0 * cap, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn traveling_wave_travels() {
        let g = grid(64);
        let s = whitham();
        let br = continue_branch(
            &s,
            &g,
            BranchTarget::HeightFraction(0.15),
            BranchOptions::default(),
        )
        .unwrap();
        let p = br.profiles.last().unwrap();
        let drift = traveling_check(p, 1).unwrap();
        assert!(drift <= 1e-6, "drift {drift}");

        // evenness in the moving frame: shift the evolved state back and
        // compare its symmetry defect with the steady one
        let t_end = 2.0 * std::f64::consts::PI / p.c;
        let dt = stable_dt(&p.phi, &p.symbol, 0.2).unwrap();
        let steps = (t_end / dt).ceil();
        let run = integrate(&p.phi, &s, &EvolutionOptions::new(t_end / steps, t_end)).unwrap();
        let back = run.final_state().shift(-p.c * t_end);
        let evolved =
            WaveProfile::from_parts(back, p.c, p.b, s.clone()).unwrap();
        let (d_steady, _) = crate::symmetry::symmetry_defect(p);
        let (d_evolved, _) = crate::symmetry::symmetry_defect(&evolved);
        // the steady defect is machine zero, so the floor for the evolved
        // one is the time-integration error measured by the drift
        assert!(
            d_evolved <= 10.0 * (d_steady + drift),
            "steady defect {d_steady:.3e}, evolved {d_evolved:.3e}, drift {drift:.3e}"
        );
    }
}
