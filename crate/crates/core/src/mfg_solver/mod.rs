//! Pseudo-spectral solver for the MFG system
//! `d_t m - div(d_p H(x, grad u) m) - 1/2 Lap m = 0`,
//! `d_t u + 1/2 Lap u - H(x, grad u) + f(x, m_t) = 0`, `u_T = g(., m_T)`,
//! with `m_{t0}` given, by damped Picard iteration.

mod schemes;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::model::{ModelSpec, Vec2};
use crate::rng;
use crate::spectral_measure::{DensityGrid, FourierMeasure, Mode, Spectral, SpectralError};

use schemes::{backward_hj, feedback_field, fokker_planck, BackwardData, Modes};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid time grid: {0}")]
    TimeGrid(String),
    #[error("density reached {min_density:.3e} at t = {time}; reduce dt")]
    CflViolation { time: f64, min_density: f64 },
    #[error("value function exceeded the blow-up bound ({bound:.3e}) at t = {time}")]
    BlowUp { time: f64, bound: f64 },
    #[error("Picard iteration stalled after {iterations} iterations with residual {residual:.3e}")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Box<MfgSolution>,
    },
    #[error("invalid input: {0}")]
    Input(String),
}

/// Uniform time grid `t_n = t0 + n dt`, `n = 0..=K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, steps: usize) -> Result<Self, SolverError> {
        if steps == 0 || t_end <= t0 || !t0.is_finite() || !t_end.is_finite() {
            return Err(SolverError::TimeGrid(format!(
                "[{t0}, {t_end}] with {steps} steps"
            )));
        }
        Ok(Self { t0, t_end, steps })
    }

    /// Degenerate grid holding the single node `t`.
    pub fn instant(t: f64) -> Self {
        Self {
            t0: t,
            t_end: t,
            steps: 0,
        }
    }

    /// Grid on `[t0, t_end]` whose step is as close as possible to `dt`.
    pub fn with_step(t0: f64, t_end: f64, dt: f64) -> Result<Self, SolverError> {
        let steps = ((t_end - t0) / dt).round().max(1.0) as usize;
        Self::new(t0, t_end, steps)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            (self.t_end - self.t0) / self.steps as f64
        }
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.t_end
        } else {
            self.t0 + n as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.time(n)).collect()
    }

    /// Index of the node nearest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        if self.steps == 0 {
            return 0;
        }
        (((t - self.t0) / self.dt()).round().max(0.0) as usize).min(self.steps)
    }
}

/// A vector field sampled on the grid, one array per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorGrid {
    pub components: Vec<Vec<f64>>,
}

impl VectorGrid {
    pub fn zeros(dim: usize, len: usize) -> Self {
        Self {
            components: vec![vec![0.0; len]; dim],
        }
    }

    pub fn constant(c: &[f64], len: usize) -> Self {
        Self {
            components: c.iter().map(|&v| vec![v; len]).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        let len = self.components.first().map_or(0, Vec::len);
        (0..len)
            .map(|j| {
                self.components
                    .iter()
                    .map(|c| c[j] * c[j])
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn at(&self, j: usize) -> Vec2 {
        [
            self.components[0][j],
            self.components.get(1).map_or(0.0, |c| c[j]),
        ]
    }
}

/// Numerical settings of the Picard solver.
#[derive(Clone, Debug, PartialEq)]
pub struct PicardOptions {
    /// Grid points per axis (power of two).
    pub resolution: usize,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Bound on the coefficient l1 norm of `u` before declaring blow-up.
    pub blowup_cap: f64,
    /// Tolerated negative density undershoot.
    pub negativity_tol: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            resolution: 64,
            damping: 0.5,
            tol: 1e-8,
            max_iter: 200,
            blowup_cap: 1e6,
            negativity_tol: 1e-6,
        }
    }
}

/// Starting value field for the Picard iteration.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialGuess {
    Zero,
    /// A time-independent random field on modes with `|k_i| <= max_mode`,
    /// coefficients uniform in the square of side `2 amplitude`.
    RandomLowModes {
        seed: u64,
        stream: u64,
        amplitude: f64,
        max_mode: i32,
    },
    /// Value arrays at given times (DFT coefficients at `resolution`); linearly interpolated.
    Field {
        times: Vec<f64>,
        resolution: usize,
        modes: Vec<Vec<Complex64>>,
    },
}

impl InitialGuess {
    /// Warm start from an existing solution.
    pub fn from_solution(sol: &MfgSolution) -> Self {
        InitialGuess::Field {
            times: sol.grid.times(),
            resolution: sol.resolution,
            modes: sol.value_modes.clone(),
        }
    }

    fn materialize(&self, spectral: &Spectral, grid: &TimeGrid) -> Result<Vec<Modes>, SolverError> {
        let len = spectral.len();
        let zero = vec![Complex64::new(0.0, 0.0); len];
        match self {
            InitialGuess::Zero => Ok(vec![zero; grid.steps() + 1]),
            InitialGuess::RandomLowModes {
                seed,
                stream,
                amplitude,
                max_mode,
            } => {
                let mut r = rng::stream(*seed, *stream);
                let mut a = zero;
                let half = spectral.resolution() as i32 / 2;
                for j in 0..len {
                    let k = spectral.mode(j);
                    if !k.is_positive() || k.sup_norm() > *max_mode || k.sup_norm() >= half {
                        continue;
                    }
                    let c = Complex64::new(
                        r.random_range(-*amplitude..=*amplitude),
                        r.random_range(-*amplitude..=*amplitude),
                    );
                    a[j] = c;
                    a[spectral.flat_index(-k)] = c.conj();
                }
                Ok(vec![a; grid.steps() + 1])
            }
            InitialGuess::Field {
                times,
                resolution,
                modes,
            } => {
                if times.len() != modes.len() || times.is_empty() {
                    return Err(SolverError::Input(
                        "initial field times and modes differ in length".into(),
                    ));
                }
                let source = Spectral::new(spectral.dim(), *resolution)?;
                let resampled: Vec<Modes> = modes
                    .iter()
                    .map(|a| resample(a, &source, spectral))
                    .collect();
                Ok(grid
                    .times()
                    .iter()
                    .map(|&t| interpolate(times, &resampled, t))
                    .collect())
            }
        }
    }
}

/// Zero-pads or truncates a DFT array to another resolution.
pub fn resample(a: &[Complex64], from: &Spectral, to: &Spectral) -> Vec<Complex64> {
    if from.resolution() == to.resolution() {
        return a.to_vec();
    }
    let half = from.resolution().min(to.resolution()) as i32 / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); to.len()];
    for (j, &c) in a.iter().enumerate() {
        let k = from.mode(j);
        if k.sup_norm() < half {
            out[to.flat_index(k)] = c;
        }
    }
    out
}

fn interpolate(times: &[f64], fields: &[Modes], t: f64) -> Modes {
    if t <= times[0] {
        return fields[0].clone();
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return fields[last].clone();
    }
    let i = times.partition_point(|&s| s <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    fields[i]
        .iter()
        .zip(&fields[i + 1])
        .map(|(a, b)| a * (1.0 - w) + b * w)
        .collect()
}

/// Consistency diagnostics of a computed solution.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SolveDiagnostics {
    /// `max_n |m_n^0 - 1|`.
    pub mass_error: f64,
    /// `sup_x |u_K - g(., m_K)|`.
    pub terminal_gap: f64,
    pub min_density: f64,
    /// Whether the feedback bound `2M` was active.
    pub clipped: bool,
}

/// A time-indexed pair `(m_t, u_t)` with its feedback and cost.
#[derive(Clone, Debug, PartialEq)]
pub struct MfgSolution {
    pub grid: TimeGrid,
    pub dim: usize,
    pub resolution: usize,
    pub flow: Vec<DensityGrid>,
    /// DFT coefficient arrays of `m_t`.
    pub flow_modes: Vec<Vec<Complex64>>,
    pub value: Vec<Vec<f64>>,
    /// DFT coefficient arrays of `u_t`.
    pub value_modes: Vec<Vec<Complex64>>,
    pub feedback: Vec<VectorGrid>,
    pub cost: f64,
    /// Sup-norm gap of the last Picard update.
    pub residual: f64,
    pub iterations: usize,
    pub diagnostics: SolveDiagnostics,
}

impl MfgSolution {
    /// `int_t^T int |u1 - u2|^2` over space-time, by the grid sums.
    pub fn l2_distance(&self, other: &MfgSolution) -> f64 {
        let pairs = self.value.iter().zip(&other.value);
        let dt = self.grid.dt();
        pairs
            .map(|(a, b)| {
                a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64 * dt
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        let dt = self.grid.dt();
        self.value
            .iter()
            .map(|a| a.iter().map(|x| x * x).sum::<f64>() / a.len() as f64 * dt)
            .sum::<f64>()
            .sqrt()
    }

    /// `m^k` at time node `n` (coefficient convention `int e_k dm`).
    pub fn flow_coeff(&self, n: usize, k: Mode) -> Complex64 {
        let s = Spectral::new(self.dim, self.resolution).expect("valid solution grid");
        self.flow_modes[n][s.flat_index(-k)]
    }

    /// CSV: one density row and one value row per time step, then a summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,t,values...\n");
        for n in 0..=self.grid.steps() {
            let t = self.grid.time(n);
            let join = |v: &[f64]| {
                v.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            out.push_str(&format!("density,{t},{}\n", join(self.flow[n].values())));
            out.push_str(&format!("value,{t},{}\n", join(&self.value[n])));
        }
        out.push_str(&format!(
            "summary,cost={},residual={},iterations={}\n",
            self.cost, self.residual, self.iterations
        ));
        out
    }
}

struct Workspace {
    spectral: Spectral,
    points: Vec<Vec2>,
}

impl Workspace {
    fn new(dim: usize, resolution: usize) -> Result<Self, SolverError> {
        let spectral = Spectral::new(dim, resolution)?;
        let points = spectral.points();
        Ok(Self { spectral, points })
    }
}

fn check_input(
    m0: &DensityGrid,
    model: &ModelSpec,
    opts: &PicardOptions,
) -> Result<(), SolverError> {
    model
        .validate()
        .map_err(|e| SolverError::Input(e.to_string()))?;
    if m0.dim() != model.dim {
        return Err(SolverError::Input(
            "initial density dimension differs from the model".into(),
        ));
    }
    if m0.resolution() != opts.resolution {
        return Err(SolverError::Input(format!(
            "initial density resolution {} differs from solver resolution {}",
            m0.resolution(),
            opts.resolution
        )));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(SolverError::Input(format!(
            "damping must be in (0, 1], got {}",
            opts.damping
        )));
    }
    Ok(())
}

/// Controlled Fokker-Planck flow `d_t m + div(alpha m) - 1/2 Lap m = 0`.
///
/// `feedback[n]` is the field at node `n`; `K + 1` entries are required.
pub fn solve_fokker_planck(
    m0: &DensityGrid,
    feedback: &[VectorGrid],
    grid: &TimeGrid,
    negativity_tol: f64,
) -> Result<Vec<DensityGrid>, SolverError> {
    if feedback.len() != grid.steps() + 1 {
        return Err(SolverError::Input(format!(
            "expected {} feedback fields, got {}",
            grid.steps() + 1,
            feedback.len()
        )));
    }
    let ws = Workspace::new(m0.dim(), m0.resolution())?;
    let a0 = ws.spectral.forward(m0.values());
    let flow = fokker_planck(&ws.spectral, &a0, feedback, grid, negativity_tol)?;
    let mut out = flow
        .iter()
        .map(|a| DensityGrid::new(m0.dim(), m0.resolution(), ws.spectral.inverse(a)))
        .collect::<Result<Vec<_>, _>>()?;
    out[0] = m0.clone();
    Ok(out)
}

/// Fokker-Planck flow of a truncated measure, kept in spectral form.
///
/// Coefficients are never resampled on the grid, so heat decay of every mode
/// is exact up to rounding. The result is truncated to the order of `m0`.
pub fn solve_fokker_planck_fourier(
    m0: &FourierMeasure,
    feedback: &[VectorGrid],
    grid: &TimeGrid,
    resolution: usize,
    negativity_tol: f64,
) -> Result<Vec<FourierMeasure>, SolverError> {
    if feedback.len() != grid.steps() + 1 {
        return Err(SolverError::Input("expected K + 1 feedback fields".into()));
    }
    let ws = Workspace::new(m0.dim(), resolution)?;
    let a0 = m0.to_spectral(&ws.spectral)?;
    let flow = fokker_planck(&ws.spectral, &a0, feedback, grid, negativity_tol)?;
    flow.iter()
        .map(|a| Ok(FourierMeasure::from_spectral(a, &ws.spectral, m0.order())?))
        .collect()
}

/// Backward Hamilton-Jacobi solve along a given flow from terminal values `u_T`.
pub fn solve_backward_hj(
    model: &ModelSpec,
    terminal: &[f64],
    flow: &[DensityGrid],
    grid: &TimeGrid,
    blowup_cap: f64,
) -> Result<Vec<Vec<f64>>, SolverError> {
    let first = flow
        .first()
        .ok_or_else(|| SolverError::Input("empty flow".into()))?;
    if flow.len() != grid.steps() + 1 {
        return Err(SolverError::Input("flow length must be K + 1".into()));
    }
    let ws = Workspace::new(first.dim(), first.resolution())?;
    let modes: Vec<Modes> = flow
        .iter()
        .map(|m| ws.spectral.forward(m.values()))
        .collect();
    let data = BackwardData {
        hamiltonian: &model.hamiltonian,
        coupling: &model.coupling,
        blowup_cap,
    };
    let u = backward_hj(
        &ws.spectral,
        &ws.points,
        &data,
        &modes,
        ws.spectral.forward(terminal),
        grid,
    )?;
    let mut values: Vec<Vec<f64>> = u.iter().map(|b| ws.spectral.inverse(b)).collect();
    values[grid.steps()] = terminal.to_vec();
    Ok(values)
}

/// `g(., m)` on the grid for a density with DFT array `a`.
pub fn terminal_values(model: &ModelSpec, m: &DensityGrid) -> Result<Vec<f64>, SolverError> {
    let s = Spectral::new(m.dim(), m.resolution())?;
    let a = s.forward(m.values());
    Ok(s.inverse(&model.terminal.flat_derivative_spectral(&a, &s)))
}

fn sup_diff(spectral: &Spectral, a: &[Modes], b: &[Modes]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d: Vec<Complex64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            spectral
                .inverse(&d)
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max)
}

/// Damped Picard iteration for the MFG system on `grid`.
///
/// On return `value` is the last backward solve (so `u_K = g(., m_K)` holds
/// exactly for the returned `flow`), `feedback = -d_p H(x, grad u)` pointwise,
/// and `residual` is the sup-norm size of the last update.
pub fn solve_mfg(
    m0: &DensityGrid,
    model: &ModelSpec,
    grid: &TimeGrid,
    u_init: &InitialGuess,
    opts: &PicardOptions,
) -> Result<MfgSolution, SolverError> {
    check_input(m0, model, opts)?;
    let ws = Workspace::new(model.dim, opts.resolution)?;
    let spectral = &ws.spectral;
    let a0 = spectral.forward(m0.values());
    let clip = 2.0 * model.control_bound();
    let data = BackwardData {
        hamiltonian: &model.hamiltonian,
        coupling: &model.coupling,
        blowup_cap: opts.blowup_cap,
    };
    let mut u = u_init.materialize(spectral, grid)?;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut state = None;
    while iterations < opts.max_iter {
        iterations += 1;
        let alpha: Vec<VectorGrid> = u
            .iter()
            .map(|b| feedback_field(spectral, &ws.points, &model.hamiltonian, b, clip).0)
            .collect();
        let flow = fokker_planck(spectral, &a0, &alpha, grid, opts.negativity_tol)?;
        let terminal = model
            .terminal
            .flat_derivative_spectral(&flow[grid.steps()], spectral);
        let fresh = backward_hj(spectral, &ws.points, &data, &flow, terminal, grid)?;
        let theta = opts.damping;
        let next: Vec<Modes> = u
            .iter()
            .zip(&fresh)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x * (1.0 - theta) + y * theta)
                    .collect()
            })
            .collect();
        residual = sup_diff(spectral, &next, &u);
        u = next;
        state = Some((flow, fresh));
        if residual < opts.tol {
            break;
        }
    }
    let (flow, fresh) =
        state.ok_or_else(|| SolverError::Input("max_iter must be positive".into()))?;
    let mut sol = assemble(model, grid, &ws, flow, fresh, clip, residual, iterations)?;
    sol.flow[0] = m0.clone();
    if residual < opts.tol {
        Ok(sol)
    } else {
        Err(SolverError::NotConverged {
            iterations,
            residual,
            last: Box::new(sol),
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    model: &ModelSpec,
    grid: &TimeGrid,
    ws: &Workspace,
    flow_modes: Vec<Modes>,
    value_modes: Vec<Modes>,
    clip: f64,
    residual: f64,
    iterations: usize,
) -> Result<MfgSolution, SolverError> {
    let spectral = &ws.spectral;
    let (dim, res) = (spectral.dim(), spectral.resolution());
    let mut clipped = false;
    let feedback = value_modes
        .iter()
        .map(|b| {
            let (f, c) = feedback_field(spectral, &ws.points, &model.hamiltonian, b, clip);
            clipped |= c;
            f
        })
        .collect();
    let flow = flow_modes
        .iter()
        .map(|a| DensityGrid::new(dim, res, spectral.inverse(a)))
        .collect::<Result<Vec<_>, _>>()?;
    let value: Vec<Vec<f64>> = value_modes.iter().map(|b| spectral.inverse(b)).collect();
    let k = grid.steps();
    let g = spectral.inverse(
        &model
            .terminal
            .flat_derivative_spectral(&flow_modes[k], spectral),
    );
    let diagnostics = SolveDiagnostics {
        mass_error: flow_modes
            .iter()
            .map(|a| (a[0] - 1.0).norm())
            .fold(0.0, f64::max),
        terminal_gap: g
            .iter()
            .zip(&value[k])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        min_density: flow
            .iter()
            .map(DensityGrid::min)
            .fold(f64::INFINITY, f64::min),
        clipped,
    };
    let mut sol = MfgSolution {
        grid: *grid,
        dim,
        resolution: res,
        flow,
        flow_modes,
        value,
        value_modes,
        feedback,
        cost: 0.0,
        residual,
        iterations,
        diagnostics,
    };
    sol.cost = cost_j_det(&sol, model);
    Ok(sol)
}

/// The trivial solution at the terminal time: `m_T = m0`, `u_T = g(., m0)`, cost `G(m0)`.
pub fn instant_solution(
    m0: &DensityGrid,
    model: &ModelSpec,
    t: f64,
) -> Result<MfgSolution, SolverError> {
    let ws = Workspace::new(m0.dim(), m0.resolution())?;
    let a = ws.spectral.forward(m0.values());
    let g = model.terminal.flat_derivative_spectral(&a, &ws.spectral);
    let clip = 2.0 * model.control_bound();
    let mut sol = assemble(
        model,
        &TimeGrid::instant(t),
        &ws,
        vec![a],
        vec![g],
        clip,
        0.0,
        0,
    )?;
    sol.flow[0] = m0.clone();
    Ok(sol)
}

/// Flow and cost of a prescribed feedback (not necessarily optimal).
///
/// `value` holds the backward solve along the resulting flow.
pub fn evaluate_feedback(
    m0: &DensityGrid,
    model: &ModelSpec,
    grid: &TimeGrid,
    feedback: Vec<VectorGrid>,
    opts: &PicardOptions,
) -> Result<MfgSolution, SolverError> {
    check_input(m0, model, opts)?;
    let ws = Workspace::new(model.dim, opts.resolution)?;
    let spectral = &ws.spectral;
    if feedback.len() != grid.steps() + 1 {
        return Err(SolverError::Input("expected K + 1 feedback fields".into()));
    }
    let flow_modes = fokker_planck(
        spectral,
        &spectral.forward(m0.values()),
        &feedback,
        grid,
        opts.negativity_tol,
    )?;
    let data = BackwardData {
        hamiltonian: &model.hamiltonian,
        coupling: &model.coupling,
        blowup_cap: opts.blowup_cap,
    };
    let terminal = model
        .terminal
        .flat_derivative_spectral(&flow_modes[grid.steps()], spectral);
    let value_modes = backward_hj(spectral, &ws.points, &data, &flow_modes, terminal, grid)?;
    let mut sol = assemble(
        model,
        grid,
        &ws,
        flow_modes,
        value_modes,
        f64::INFINITY,
        0.0,
        0,
    )?;
    sol.flow[0] = m0.clone();
    sol.feedback = feedback;
    sol.cost = cost_j_det(&sol, model);
    Ok(sol)
}

/// Running cost `F(m_t) + int L(x, alpha_t) dm_t` at node `n`.
pub fn running_cost(sol: &MfgSolution, model: &ModelSpec, n: usize) -> f64 {
    let spectral = Spectral::new(sol.dim, sol.resolution).expect("valid solution grid");
    let potential = model
        .coupling
        .potential_spectral(&sol.flow_modes[n], &spectral);
    let m = sol.flow[n].values();
    let alpha = &sol.feedback[n];
    let lag = (0..m.len())
        .map(|j| {
            model
                .hamiltonian
                .lagrangian(&spectral.point(j), &alpha.at(j))
                * m[j]
        })
        .sum::<f64>()
        / m.len() as f64;
    potential + lag
}

/// `J = int (F(m_t) + int L dm_t) dt + G(m_T)` with trapezoidal quadrature in time.
pub fn cost_j_det(sol: &MfgSolution, model: &ModelSpec) -> f64 {
    cost_on_range(sol, model, 0, sol.grid.steps()) + terminal_cost(sol, model)
}

/// `G(m_T)` of a solution.
pub fn terminal_cost(sol: &MfgSolution, model: &ModelSpec) -> f64 {
    let spectral = Spectral::new(sol.dim, sol.resolution).expect("valid solution grid");
    model
        .terminal
        .potential_spectral(&sol.flow_modes[sol.grid.steps()], &spectral)
}

/// Trapezoidal running cost between nodes `from` and `to`.
pub fn cost_on_range(sol: &MfgSolution, model: &ModelSpec, from: usize, to: usize) -> f64 {
    let dt = sol.grid.dt();
    (from..to)
        .map(|n| 0.5 * dt * (running_cost(sol, model, n) + running_cost(sol, model, n + 1)))
        .sum()
}
