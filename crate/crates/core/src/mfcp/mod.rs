//! Value function `V(t, m)` of the mean field control problem, computed as the
//! least cost among the MFG critical points found from several starts.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::mfg_solver::{
    cost_on_range, instant_solution, solve_mfg, InitialGuess, MfgSolution, PicardOptions,
    SolverError, TimeGrid,
};
use crate::model::ModelSpec;
use crate::rng;
use crate::spectral_measure::{
    dist_dminus2_surrogate, evaluate_density, is_in_O_N, DensityGrid, FourierMeasure, Mode,
    MultiIndexSet, Spectral, SpectralError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValueError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("measure is not certified to lie in O_N (certified minimum {margin:.3e})")]
    NotInside { margin: f64 },
    #[error("every start failed: {0:?}")]
    AllStartsFailed(Vec<String>),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("perturbation along {mode} leaves O_N even at step {h:.3e}")]
    PerturbationExits { mode: Mode, h: f64 },
    #[error("measures are {distance:.3e} apart but values differ by {gap:.3e}")]
    DegenerateRatio { distance: f64, gap: f64 },
}

/// Settings of the value-function solver.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueOptions {
    pub picard: PicardOptions,
    /// Time steps over the full horizon; sub-horizons keep the same step.
    pub time_steps: usize,
    pub n_starts: usize,
    pub seed: u64,
    /// Half-width of the random initial coefficients.
    pub init_amplitude: f64,
    /// Random initial fields live on modes with `|k_i| <= init_max_mode`.
    pub init_max_mode: i32,
    /// Candidates closer than this in space-time L2 are merged.
    pub dedupe_tol: f64,
    /// Costs closer than this are ties, broken by the smaller L2 norm of `u`.
    pub tie_tol: f64,
    /// Step of the time-derivative probe as a fraction of the horizon; `None` skips it.
    pub time_probe: Option<f64>,
}

impl Default for ValueOptions {
    fn default() -> Self {
        Self {
            picard: PicardOptions {
                tol: 1e-10,
                ..PicardOptions::default()
            },
            time_steps: 200,
            n_starts: 8,
            seed: 0,
            init_amplitude: 0.5,
            init_max_mode: 2,
            dedupe_tol: 1e-4,
            tie_tol: 1e-9,
            time_probe: Some(0.01),
        }
    }
}

/// One converged critical point.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub start: usize,
    pub cost: f64,
    pub solution: MfgSolution,
}

/// `V(t, m)` with its coefficient derivatives and a time-derivative estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueProbe {
    pub t: f64,
    pub m: FourierMeasure,
    pub value: f64,
    /// Index into `candidates`.
    pub best: usize,
    pub candidates: Vec<Candidate>,
    /// `d V / d m^k` over `F_N^+`; negative modes are conjugates.
    pub coeff_derivs: Vec<(Mode, Complex64)>,
    pub time_deriv: Option<f64>,
    pub warnings: Vec<String>,
}

impl ValueProbe {
    pub fn minimizer(&self) -> &MfgSolution {
        &self.candidates[self.best].solution
    }

    /// `d V / d m^k` for any `k` in `F_N`.
    pub fn derivative(&self, k: Mode) -> Complex64 {
        if k.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        let (kp, flip) = k.canonical().expect("nonzero");
        self.coeff_derivs
            .iter()
            .find(|p| p.0 == kp)
            .map_or(Complex64::new(0.0, 0.0), |p| {
                if flip {
                    p.1.conj()
                } else {
                    p.1
                }
            })
    }

    /// CSV with the value, derivatives and candidate costs.
    pub fn to_csv(&self) -> String {
        let dim = self.m.dim();
        let mut out = format!("field,k,re,im\nvalue,,{},0\n", self.value);
        if let Some(dt) = self.time_deriv {
            out.push_str(&format!("time_deriv,,{dt},0\n"));
        }
        for (k, c) in &self.coeff_derivs {
            out.push_str(&format!("derivative,{},{},{}\n", k.format(dim), c.re, c.im));
        }
        for c in &self.candidates {
            out.push_str(&format!("candidate,{},{},0\n", c.start, c.cost));
        }
        out
    }
}

/// Least cost among critical points for a density on the solver grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityValue {
    pub value: f64,
    pub best: usize,
    pub candidates: Vec<Candidate>,
    pub warnings: Vec<String>,
}

impl DensityValue {
    pub fn minimizer(&self) -> &MfgSolution {
        &self.candidates[self.best].solution
    }
}

/// `d V / d m^k` estimated by central differences, next to the superjet value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdDerivative {
    pub mode: Mode,
    /// `d V / d Re m^k`.
    pub d_re: f64,
    /// `d V / d Im m^k`.
    pub d_im: f64,
    /// `(d_re - i d_im) / 2`.
    pub complex: Complex64,
    pub superjet: Complex64,
    pub h: f64,
}

impl FdDerivative {
    /// `|fd - superjet| / (|superjet| + 1e-6)`.
    pub fn relative_error(&self) -> f64 {
        (self.complex - self.superjet).norm() / (self.superjet.norm() + 1e-6)
    }
}

/// Value function solver bound to a model.
#[derive(Clone, Debug)]
pub struct ValueSolver {
    model: ModelSpec,
    opts: ValueOptions,
}

impl ValueSolver {
    pub fn new(model: ModelSpec, opts: ValueOptions) -> Result<Self, ValueError> {
        model
            .validate()
            .map_err(|e| ValueError::Invalid(e.to_string()))?;
        if opts.n_starts == 0 || opts.time_steps == 0 {
            return Err(ValueError::Invalid(
                "n_starts and time_steps must be positive".into(),
            ));
        }
        Ok(Self { model, opts })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn options(&self) -> &ValueOptions {
        &self.opts
    }

    /// Nominal time step.
    pub fn dt(&self) -> f64 {
        self.model.horizon / self.opts.time_steps as f64
    }

    /// Grid on `[t, T]`, or `None` at the terminal time.
    pub fn time_grid(&self, t: f64) -> Result<Option<TimeGrid>, ValueError> {
        let horizon = self.model.horizon;
        if !(0.0..=horizon + 1e-12).contains(&t) {
            return Err(ValueError::Invalid(format!(
                "time {t} outside [0, {horizon}]"
            )));
        }
        if horizon - t < 0.5 * self.dt() {
            return Ok(None);
        }
        Ok(Some(TimeGrid::with_step(t, horizon, self.dt())?))
    }

    /// Density of a truncated measure on the solver grid, rejected outside `O_N`.
    pub fn density(&self, m: &FourierMeasure) -> Result<DensityGrid, ValueError> {
        let report = is_in_O_N(m, self.opts.picard.resolution.max(2 * m.order()))?;
        if !report.is_inside() {
            return Err(ValueError::NotInside {
                margin: report.margin,
            });
        }
        Ok(evaluate_density(m, self.opts.picard.resolution)?)
    }

    fn guesses(&self) -> Vec<InitialGuess> {
        (0..self.opts.n_starts)
            .map(|i| {
                if i == 0 {
                    InitialGuess::Zero
                } else {
                    InitialGuess::RandomLowModes {
                        seed: rng::derive(self.opts.seed, 0x5eed),
                        stream: i as u64,
                        amplitude: self.opts.init_amplitude,
                        max_mode: self.opts.init_max_mode,
                    }
                }
            })
            .collect()
    }

    /// Multi-start minimization for a density sampled on the solver grid.
    ///
    /// `extra` guesses are appended after the standard starts.
    pub fn value_density(
        &self,
        t: f64,
        m0: &DensityGrid,
        extra: &[InitialGuess],
    ) -> Result<DensityValue, ValueError> {
        let Some(grid) = self.time_grid(t)? else {
            let sol = instant_solution(m0, &self.model, self.model.horizon)?;
            return Ok(DensityValue {
                value: sol.cost,
                best: 0,
                candidates: vec![Candidate {
                    start: 0,
                    cost: sol.cost,
                    solution: sol,
                }],
                warnings: Vec::new(),
            });
        };
        let mut guesses = self.guesses();
        guesses.extend_from_slice(extra);
        let results: Vec<Result<MfgSolution, SolverError>> = guesses
            .par_iter()
            .map(|g| solve_mfg(m0, &self.model, &grid, g, &self.opts.picard))
            .collect();
        self.reduce(results)
    }

    fn reduce(
        &self,
        results: Vec<Result<MfgSolution, SolverError>>,
    ) -> Result<DensityValue, ValueError> {
        let total = results.len();
        let mut warnings = Vec::new();
        let mut candidates: Vec<Candidate> = Vec::new();
        for (start, r) in results.into_iter().enumerate() {
            match r {
                Ok(solution) => {
                    let dup = candidates
                        .iter()
                        .any(|c| c.solution.l2_distance(&solution) <= self.opts.dedupe_tol);
                    if !dup {
                        candidates.push(Candidate {
                            start,
                            cost: solution.cost,
                            solution,
                        });
                    }
                }
                Err(e) => warnings.push(format!("start {start}: {e}")),
            }
        }
        if candidates.is_empty() {
            return Err(ValueError::AllStartsFailed(warnings));
        }
        if !warnings.is_empty() {
            warnings.push(format!("{} of {total} starts failed", warnings.len()));
        }
        let mut best = 0;
        for (i, c) in candidates.iter().enumerate().skip(1) {
            let b = &candidates[best];
            let better = if (c.cost - b.cost).abs() < self.opts.tie_tol {
                c.solution.l2_norm() < b.solution.l2_norm()
            } else {
                c.cost < b.cost
            };
            if better {
                best = i;
            }
        }
        Ok(DensityValue {
            value: candidates[best].cost,
            best,
            candidates,
            warnings,
        })
    }

    /// Single start from `guess`, following the branch it belongs to.
    pub fn follow(
        &self,
        t: f64,
        m0: &DensityGrid,
        guess: &MfgSolution,
    ) -> Result<MfgSolution, ValueError> {
        match self.time_grid(t)? {
            None => Ok(instant_solution(m0, &self.model, self.model.horizon)?),
            Some(grid) => Ok(solve_mfg(
                m0,
                &self.model,
                &grid,
                &InitialGuess::from_solution(guess),
                &self.opts.picard,
            )?),
        }
    }

    /// Branch-following value at a truncated measure.
    pub fn follow_value(
        &self,
        t: f64,
        m: &FourierMeasure,
        guess: &MfgSolution,
    ) -> Result<f64, ValueError> {
        Ok(self.follow(t, &self.density(m)?, guess)?.cost)
    }

    /// `V(t, m)` with superjet derivatives and, optionally, `d_t V`.
    ///
    /// The time derivative uses second-order central or one-sided differences.
    pub fn value(&self, t: f64, m: &FourierMeasure) -> Result<ValueProbe, ValueError> {
        let m0 = self.density(m)?;
        let dv = self.value_density(t, &m0, &[])?;
        let mut probe = ValueProbe {
            t,
            m: m.clone(),
            value: dv.value,
            best: dv.best,
            candidates: dv.candidates,
            coeff_derivs: Vec::new(),
            time_deriv: None,
            warnings: dv.warnings,
        };
        probe.coeff_derivs = derivative_superjet(&probe);
        if let Some(frac) = self.opts.time_probe {
            probe.time_deriv =
                Some(self.time_derivative(&probe, &m0, frac * self.model.horizon)?);
        }
        Ok(probe)
    }

    fn time_derivative(
        &self,
        probe: &ValueProbe,
        m0: &DensityGrid,
        h: f64,
    ) -> Result<f64, ValueError> {
        let t = probe.t;
        let horizon = self.model.horizon;
        let guess = probe.minimizer();
        let at = |s: f64| -> Result<f64, ValueError> { Ok(self.follow(s, m0, guess)?.cost) };
        if t - h < 0.0 {
            Ok((-3.0 * probe.value + 4.0 * at(t + h)? - at(t + 2.0 * h)?) / (2.0 * h))
        } else if t + h > horizon + 1e-12 {
            Ok((3.0 * probe.value - 4.0 * at(t - h)? + at(t - 2.0 * h)?) / (2.0 * h))
        } else {
            Ok((at(t + h)? - at(t - h)?) / (2.0 * h))
        }
    }

    /// Central differences of `V` along `Re m^k` and `Im m^k`, following the minimizer's branch.
    ///
    /// The step is halved (up to six times) while a perturbed measure leaves `O_N`.
    pub fn finite_difference_derivative(
        &self,
        probe: &ValueProbe,
        k: Mode,
        h: f64,
    ) -> Result<FdDerivative, ValueError> {
        let pos = probe
            .m
            .index()
            .position(k)
            .ok_or(ValueError::Spectral(SpectralError::ModeOutOfRange(k)))?;
        let guess = probe.minimizer();
        let mut step = h;
        for _ in 0..=6 {
            let shifted = |dir: Complex64| {
                let mut m = probe.m.clone();
                m.coeffs_mut()[pos] += dir;
                m
            };
            let dirs = [
                Complex64::new(step, 0.0),
                Complex64::new(-step, 0.0),
                Complex64::new(0.0, step),
                Complex64::new(0.0, -step),
            ];
            let measures: Vec<FourierMeasure> = dirs.iter().map(|&d| shifted(d)).collect();
            if measures.iter().any(|m| self.density(m).is_err()) {
                step *= 0.5;
                continue;
            }
            let values = measures
                .par_iter()
                .map(|m| self.follow_value(probe.t, m, guess))
                .collect::<Result<Vec<_>, _>>()?;
            let d_re = (values[0] - values[1]) / (2.0 * step);
            let d_im = (values[2] - values[3]) / (2.0 * step);
            return Ok(FdDerivative {
                mode: k,
                d_re,
                d_im,
                complex: Complex64::new(0.5 * d_re, -0.5 * d_im),
                superjet: probe.derivative(k),
                h: step,
            });
        }
        Err(ValueError::PerturbationExits { mode: k, h: step })
    }
}

/// Coefficients `u_t^{-k} = int e_{-k} u_t` of the minimizer's value at the probe time, over `F_N^+`.
pub fn derivative_superjet(probe: &ValueProbe) -> Vec<(Mode, Complex64)> {
    superjet_coefficients(probe.minimizer(), probe.m.index())
}

/// Coefficients `int e_{-k} u` of the initial value array of `sol`, for `k` in `F_N^+` of `index`.
pub fn superjet_coefficients(sol: &MfgSolution, index: &MultiIndexSet) -> Vec<(Mode, Complex64)> {
    let spectral = Spectral::new(sol.dim, sol.resolution).expect("valid solution grid");
    let half = sol.resolution as i32 / 2;
    index
        .positive()
        .iter()
        .map(|&k| {
            let c = if k.sup_norm() < half {
                sol.value_modes[0][spectral.flat_index(k)]
            } else {
                Complex64::new(0.0, 0.0)
            };
            (k, c)
        })
        .collect()
}

/// Dynamic programming gap `|V(t,m) - V(tau, m_tau) - int_t^tau running cost|`.
///
/// `m_tau` is the minimizer's flow at the node nearest `tau`; the minimizer's
/// tail is offered as an extra start for `V(tau, m_tau)`.
pub fn dpp_residual(solver: &ValueSolver, probe: &ValueProbe, tau: f64) -> Result<f64, ValueError> {
    if tau < probe.t - 1e-12 || tau > solver.model().horizon + 1e-12 {
        return Err(ValueError::Invalid(format!("tau = {tau} outside [t, T]")));
    }
    let sol = probe.minimizer();
    let n = sol.grid.nearest(tau);
    if n == 0 {
        return Ok(0.0);
    }
    let tau_node = sol.grid.time(n);
    let running = cost_on_range(sol, solver.model(), 0, n);
    let tail = tail_guess(sol, n);
    let later = solver.value_density(tau_node, &sol.flow[n], &[tail])?;
    Ok((probe.value - later.value - running).abs())
}

fn tail_guess(sol: &MfgSolution, n: usize) -> InitialGuess {
    InitialGuess::Field {
        times: sol.grid.times()[n..].to_vec(),
        resolution: sol.resolution,
        modes: sol.value_modes[n..].to_vec(),
    }
}

/// `[V(t, tau_y m) + V(t, tau_{-y} m) - 2 V(t, m)] / |y|^2`, zero for `y = 0`.
pub fn semiconcavity_gap(
    solver: &ValueSolver,
    t: f64,
    m: &FourierMeasure,
    y: [f64; 2],
) -> Result<f64, ValueError> {
    let y2 = y[0] * y[0] + y[1] * y[1];
    if y2 == 0.0 {
        return Ok(0.0);
    }
    let center = solver.value(t, m)?;
    let plus = solver.value(t, &m.translate(y))?;
    let minus = solver.value(t, &m.translate([-y[0], -y[1]]))?;
    Ok((plus.value + minus.value - 2.0 * center.value) / y2)
}

/// `|V(t,m1) - V(t,m2)| / d_{-2}(m1, m2)`.
pub fn dminus2_lipschitz_ratio(
    solver: &ValueSolver,
    t: f64,
    m1: &FourierMeasure,
    m2: &FourierMeasure,
) -> Result<f64, ValueError> {
    let distance = dist_dminus2_surrogate(m1, m2)?;
    let v1 = solver.value(t, m1)?.value;
    let v2 = solver.value(t, m2)?.value;
    let gap = (v1 - v2).abs();
    if distance < 1e-12 {
        return if gap < 1e-9 {
            Ok(0.0)
        } else {
            Err(ValueError::DegenerateRatio { distance, gap })
        };
    }
    Ok(gap / distance)
}
