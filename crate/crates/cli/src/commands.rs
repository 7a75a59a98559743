//! One function per subcommand. Each returns its CSV files and a summary table.

use std::fmt::Write as _;

use toml::{Table, Value};
use torus_mfg::characteristics::{
    build_drift, integrate_flow, truncation_error, CouplingPotential, DriftOptions, Estimator,
    PotentialField, ValuePotential, ZeroPotential,
};
use torus_mfg::hjb_checker::{
    hjb_residual, master_residual, one_sided_lipschitz_test, HjbResidualReport, MasterOptions,
    ValueField,
};
use torus_mfg::mfcp::{ValueOptions, ValueSolver};
use torus_mfg::mfg_solver::{solve_mfg, InitialGuess, PicardOptions, SolverError, TimeGrid};
use torus_mfg::model::ModelSpec;
use torus_mfg::sampler::{
    event_frequencies, mollified_derivative, mollify, sample_gamma_n, FnFunctional, GammaSpec,
    MeasureFunctional, Mollifier,
};
use torus_mfg::spectral_measure::{dist_w1_1d, evaluate_density};
use torus_mfg::{suite, Complex64, FourierMeasure, Mode, MultiIndexSet};

use crate::config::RunConfig;
use crate::error::CliError;

/// Files to write plus a summary; `failure` marks a completed run whose checks failed.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub summary: Table,
    pub failure: Option<String>,
}

impl Artifacts {
    fn file(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content));
    }

    fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

fn model(cfg: &RunConfig) -> Result<ModelSpec, CliError> {
    cfg.model.build().map_err(CliError::config)
}

fn measure(cfg: &RunConfig, order: usize) -> Result<FourierMeasure, CliError> {
    let dim = cfg.model.dim;
    let modes = cfg
        .measure
        .modes
        .iter()
        .map(|e| {
            let mut k = e.k.clone();
            k.resize(dim.max(k.len()), 0);
            let mode = Mode::from_slice(&k)
                .ok_or_else(|| CliError::Config(format!("mode {:?} has too many axes", e.k)))?;
            Ok((mode, Complex64::new(e.re, e.im)))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    FourierMeasure::from_modes(dim, order, &modes).map_err(CliError::config)
}

/// `measure` cut (or zero padded) to `order`.
fn measure_cut(cfg: &RunConfig, order: usize) -> Result<FourierMeasure, CliError> {
    let widest = cfg
        .measure
        .modes
        .iter()
        .flat_map(|e| e.k.iter())
        .map(|k| k.unsigned_abs() as usize + 1)
        .max();
    let full = measure(cfg, widest.unwrap_or(1).max(order))?;
    full.with_order(order).map_err(CliError::config)
}

fn picard(cfg: &RunConfig) -> PicardOptions {
    PicardOptions {
        resolution: cfg.grid.resolution,
        tol: cfg.solver.tol,
        max_iter: cfg.solver.max_iter,
        damping: cfg.solver.damping,
        ..PicardOptions::default()
    }
}

fn value_solver(cfg: &RunConfig) -> Result<ValueSolver, CliError> {
    let opts = ValueOptions {
        picard: picard(cfg),
        time_steps: cfg.grid.steps,
        n_starts: cfg.solver.n_starts,
        seed: cfg.seed,
        time_probe: (cfg.solver.time_probe > 0.0).then_some(cfg.solver.time_probe),
        ..ValueOptions::default()
    };
    ValueSolver::new(model(cfg)?, opts).map_err(CliError::config)
}

fn mollifier(
    dim: usize,
    order: usize,
    eps: f64,
    delta: Option<f64>,
) -> Result<Mollifier, CliError> {
    match delta {
        Some(d) => Mollifier::new(dim, order, eps, d),
        None => Mollifier::at_threshold(dim, order, eps),
    }
    .map_err(CliError::config)
}

fn csv_rows(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn solve_mfg_cmd(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let model = model(cfg)?;
    let m0 = evaluate_density(&measure(cfg, cfg.grid.order)?, cfg.grid.resolution)
        .map_err(CliError::config)?;
    let grid = TimeGrid::new(0.0, model.horizon, cfg.grid.steps).map_err(CliError::config)?;
    let sol = match solve_mfg(&m0, &model, &grid, &InitialGuess::Zero, &picard(cfg)) {
        Err(SolverError::NotConverged {
            iterations,
            residual,
            ..
        }) => {
            return Err(CliError::Numerical(format!(
            "Picard iteration stalled after {iterations} iterations with residual {residual:.3e}"
        )))
        }
        other => other?,
    };
    let mut art = Artifacts::default();
    art.file("solution.csv", sol.to_csv());
    art.put("cost", sol.cost);
    art.put("residual", sol.residual);
    art.put("iterations", sol.iterations as i64);
    art.put("mass_error", sol.diagnostics.mass_error);
    art.put("terminal_gap", sol.diagnostics.terminal_gap);
    art.put("min_density", sol.diagnostics.min_density);
    Ok(art)
}

pub fn value_cmd(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let solver = value_solver(cfg)?;
    let probe = solver.value(cfg.measure.t, &measure(cfg, cfg.grid.order)?)?;
    let mut art = Artifacts::default();
    art.file("value.csv", probe.to_csv());
    art.put("value", probe.value);
    art.put("best_start", probe.best as i64);
    art.put("candidates", probe.candidates.len() as i64);
    art.put("warnings", probe.warnings.clone());
    Ok(art)
}

pub fn hjb_residual_cmd(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let solver = value_solver(cfg)?;
    let mut art = Artifacts::default();
    let mut rows = Vec::new();
    for &order in &cfg.hjb.orders {
        let probe = solver.value(cfg.measure.t, &measure_cut(cfg, order)?)?;
        let report = hjb_residual(&probe, solver.model(), cfg.hjb.ball)?;
        art.put(&format!("residual_n{order}"), report.residual);
        rows.push(report.csv_row());
    }
    art.file(
        "hjb_residual.csv",
        csv_rows(HjbResidualReport::csv_header(), rows),
    );
    Ok(art)
}

pub fn master_residual_cmd(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let solver = value_solver(cfg)?;
    let m = measure(cfg, cfg.grid.order)?;
    let probe = solver.value(cfg.measure.t, &m)?;
    let opts = MasterOptions {
        h: cfg.master.h,
        time_step: cfg.master.time_step,
    };
    let mut rows = Vec::new();
    let (mut worst, mut consistent) = (0.0f64, true);
    for k in 1..=cfg.master.modes {
        let r = master_residual(&solver, &probe, Mode::new1(k), &opts)?;
        worst = worst.max(r.residual.norm());
        consistent &= r.is_consistent(10.0);
        rows.push(format!(
            "{k},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.residual.re,
            r.residual.im,
            r.hjb_gradient.re,
            r.hjb_gradient.im,
            r.consistency_gap,
            r.truncation_error
        ));
    }
    let mut art = Artifacts::default();
    art.file(
        "master_residual.csv",
        csv_rows("k,residual_re,residual_im,hjb_gradient_re,hjb_gradient_im,consistency_gap,truncation_error", rows),
    );
    art.put("max_residual", worst);
    art.put("consistent_within_10x", consistent);
    Ok(art)
}

pub fn sample_cmd(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let spec =
        GammaSpec::new(cfg.model.dim, cfg.grid.order, cfg.sample.p).map_err(CliError::config)?;
    let sample = sample_gamma_n(&spec, cfg.sample.n, cfg.seed)?;
    let rows = cfg
        .sample
        .base_orders
        .iter()
        .map(|&n0| {
            let f = event_frequencies(&sample.measures, n0)?;
            Ok(format!("{n0},{},{},{}", f.freq_a, f.freq_b, f.a0))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut art = Artifacts::default();
    art.file("samples.txt", sample.to_text());
    art.file("frequencies.csv", csv_rows("n0,freq_a,freq_b,a0", rows));
    art.put("accepted", sample.measures.len() as i64);
    art.put("proposals", sample.proposals as i64);
    art.put("acceptance_rate", sample.acceptance_rate);
    Ok(art)
}

pub fn mollify_cmd(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (dim, order) = (cfg.model.dim, cfg.grid.order);
    let m = measure(cfg, order)?;
    let moll = mollifier(dim, order, cfg.mollify.eps, cfg.mollify.delta)?;
    let model = model(cfg)?;
    let phi: Box<dyn MeasureFunctional> = match cfg.mollify.functional.as_str() {
        "w1-uniform" if dim == 1 => Box::new(FnFunctional(|a: &FourierMeasure| {
            let uniform = FourierMeasure::uniform(a.index().clone());
            dist_w1_1d(a, &uniform).expect("one-dimensional measures")
        })),
        "coupling" => Box::new(FnFunctional(move |a: &FourierMeasure| {
            model.coupling.potential(a)
        })),
        other => {
            return Err(CliError::Config(format!(
                "functional {other:?} is not available in d = {dim}"
            )))
        }
    };
    let mc = mollify(phi.as_ref(), &m, &moll, cfg.mollify.pairs, cfg.seed)?;
    let exact = phi.eval(&m)?;
    let grad = mollified_derivative(phi.as_ref(), &m, &moll, cfg.mollify.pairs, cfg.seed)?;
    let rows = grad.modes.iter().enumerate().map(|(p, k)| {
        let (v, e) = (grad.real[p], grad.std_error[p]);
        format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e}",
            k.format(dim),
            v[0],
            v[1],
            e[0],
            e[1]
        )
    });
    let mut art = Artifacts::default();
    art.file(
        "derivative.csv",
        csv_rows("k,d_re,d_im,std_error_re,std_error_im", rows),
    );
    art.put("mean", mc.mean);
    art.put("std_error", mc.std_error);
    art.put("exact", exact);
    art.put("gap", (mc.mean - exact).abs());
    Ok(art)
}

fn estimator(name: &str) -> Result<Estimator, CliError> {
    match name {
        "pathwise" => Ok(Estimator::Pathwise),
        "score" => Ok(Estimator::Score),
        other => Err(CliError::Config(format!("unknown estimator {other:?}"))),
    }
}

fn flow_artifacts(
    cfg: &RunConfig,
    potential: &dyn PotentialField,
    m0: &FourierMeasure,
) -> Result<Artifacts, CliError> {
    let c = &cfg.characteristics;
    let opts = DriftOptions {
        eps: c.eps,
        delta: c.delta,
        pairs: c.pairs,
        seed: cfg.seed,
        estimator: estimator(&c.estimator)?,
        ..DriftOptions::default()
    };
    let model = model(cfg)?;
    let drift = build_drift(
        potential,
        None,
        model.hamiltonian,
        model.dim,
        m0.order(),
        &opts,
    )
    .map_err(CliError::config)?;
    let grid = TimeGrid::new(0.0, c.horizon, c.steps).map_err(CliError::config)?;
    let flow = integrate_flow(m0, &drift, &grid, c.jacobian)?;
    let bounds = flow.bounds()?;
    let mut art = Artifacts::default();
    art.file("flow.csv", flow.to_csv());
    art.put("min_density", bounds.min_density);
    art.put("max_gradient", bounds.max_gradient);
    art.put("constant", bounds.constant());
    if let Some(last) = flow.jacobian_log.as_ref().and_then(|j| j.last()) {
        art.put("log_jacobian", *last);
    }
    Ok(art)
}

pub fn characteristics_cmd(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let m0 = measure(cfg, cfg.grid.order)?;
    match cfg.characteristics.potential.as_str() {
        "zero" => flow_artifacts(cfg, &ZeroPotential, &m0),
        "coupling" => flow_artifacts(cfg, &CouplingPotential(model(cfg)?.coupling), &m0),
        "value" => {
            let solver = value_solver(cfg)?;
            let value = ValuePotential::at(&solver, cfg.measure.t, &m0)?;
            flow_artifacts(cfg, &value, &m0)
        }
        other => Err(CliError::Config(format!("unknown potential {other:?}"))),
    }
}

pub fn truncation_error_cmd(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let model = model(cfg)?;
    let m0 = measure(cfg, cfg.grid.order)?;
    if let Some(&bad) = cfg.truncation.orders.iter().find(|&&n| n < cfg.grid.order) {
        return Err(CliError::Config(format!(
            "truncation order {bad} is below grid.order = {}",
            cfg.grid.order
        )));
    }
    let grid = TimeGrid::new(0.0, model.horizon, cfg.grid.steps).map_err(CliError::config)?;
    let density = evaluate_density(&m0, cfg.grid.resolution).map_err(CliError::config)?;
    let sol = solve_mfg(&density, &model, &grid, &InitialGuess::Zero, &picard(cfg))?;
    let mut art = Artifacts::default();
    let mut csv = String::from("order,t,eta\n");
    for &order in &cfg.truncation.orders {
        let series = truncation_error(&m0, &sol.feedback, order, &grid)?;
        for (t, eta) in series.times.iter().zip(&series.eta) {
            let _ = writeln!(csv, "{order},{t},{eta:.12e}");
        }
        art.put(&format!("sup_n{order}"), series.sup);
        art.put(&format!("limit_n{order}"), series.limit_estimate);
    }
    art.file("truncation.csv", csv);
    Ok(art)
}

pub fn one_sided_lipschitz_cmd(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let l = &cfg.lipschitz;
    let order = cfg.grid.order;
    let m = measure(cfg, order)?;
    let moll = mollifier(cfg.model.dim, order, l.eps, None)?;
    let count = MultiIndexSet::new(cfg.model.dim, order)
        .map_err(CliError::config)?
        .len_positive();
    let z: Vec<Complex64> = if l.directions.is_empty() {
        vec![Complex64::new(1.0, 0.0); count]
    } else if l.directions.len() == count {
        l.directions
            .iter()
            .map(|d| Complex64::new(d[0], d[1]))
            .collect()
    } else {
        return Err(CliError::Config(format!(
            "expected {count} directions, got {}",
            l.directions.len()
        )));
    };
    let solver = value_solver(cfg)?;
    let probe = solver.value(cfg.measure.t, &m)?;
    let field = ValueField::from_probe(&solver, &probe);
    let r = one_sided_lipschitz_test(&field, &m, &z, l.s, &moll, l.constant, l.pairs, cfg.seed)?;
    let status = format!("{:?}", r.status).to_lowercase();
    let mut art = Artifacts::default();
    art.file(
        "lipschitz.csv",
        csv_rows(
            "lhs,std_error,rhs_unit,rhs_bound,status,pairs",
            [format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{status},{}",
                r.lhs, r.std_error, r.rhs_unit, r.rhs_bound, r.pairs
            )],
        ),
    );
    art.put("lhs", r.lhs);
    art.put("rhs_bound", r.rhs_bound);
    art.put("status", status);
    Ok(art)
}

pub fn suite_cmd(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let ids: Vec<u8> = if cfg.suite.criteria.is_empty() {
        suite::CRITERIA.iter().map(|c| c.0).collect()
    } else {
        cfg.suite.criteria.clone()
    };
    if let Some(bad) = ids
        .iter()
        .find(|id| !suite::CRITERIA.iter().any(|c| c.0 == **id))
    {
        return Err(CliError::Config(format!("unknown criterion {bad}")));
    }
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for id in ids {
        let outcome = suite::run(id).map_err(CliError::config)?;
        println!("{outcome}");
        if !outcome.passed {
            failed.push(id.to_string());
        }
        rows.push(format!(
            "{},{},{},\"{}\"",
            outcome.id, outcome.name, outcome.passed, outcome.detail
        ));
    }
    let mut art = Artifacts::default();
    art.put("run", rows.len() as i64);
    art.put("failed", failed.len() as i64);
    art.file("suite.csv", csv_rows("id,name,passed,detail", rows));
    if !failed.is_empty() {
        art.failure = Some(format!("criteria {} failed", failed.join(", ")));
    }
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::resolve;

    #[test]
    fn measures_pad_modes_to_the_model_dimension() {
        let cfg = resolve(
            "[model]\ndim = 2\n[[measure.modes]]\nk = [1]\nre = 0.1\n",
            &[],
        )
        .unwrap();
        let m = measure(&cfg, 2).unwrap();
        assert_eq!(m.coeff(Mode::new2(1, 0)), Complex64::new(0.1, 0.0));
    }

    #[test]
    fn out_of_range_modes_are_config_errors() {
        let cfg = resolve("[[measure.modes]]\nk = [9]\nre = 0.1\n", &[]).unwrap();
        assert!(matches!(measure(&cfg, 4), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_estimators_are_rejected() {
        assert!(estimator("score").is_ok());
        assert!(matches!(estimator("exact"), Err(CliError::Config(_))));
    }
}
