use agnostic_control::performance::{analytic_regret, default_a_grid, RegretMode};
use agnostic_control::simulator::{path_stream, write_trajectory_csv};
use agnostic_control::solvers::{fixed_prior_curve, SETTINGS};
use agnostic_control::{
    gains, monte_carlo_cost, simulate_path, solve_fueltax, solve_sigma_mr, sweep, GaussianPrior,
    ProblemSpec, RegretReport, SimConfig, Strategy, SweepQuantity, SweepTable,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    FiguresArgs, GainsArgs, Mode, RegretArgs, SigmaArg, SimulateArgs, StrategyKind, Which,
};
use crate::error::{CliError, CliResult};
use crate::output::{csv_table, ensure_dir, to_json, write_with_manifest, RunManifest};

#[derive(Serialize)]
struct GainsOut {
    #[serde(rename = "E2")]
    e2: f64,
    #[serde(rename = "E1")]
    e1: f64,
    #[serde(rename = "E0")]
    e0: f64,
    #[serde(rename = "Esharp")]
    e_sharp: f64,
}

pub fn cmd_gains(args: &GainsArgs) -> CliResult<()> {
    let spec = ProblemSpec::new(0.0, args.horizon, args.lambda)?;
    let g = gains(args.t, &spec)?;
    print!(
        "{}",
        to_json(&GainsOut {
            e2: g.e2,
            e1: g.e1,
            e0: g.e0,
            e_sharp: g.e_sharp,
        })
    );
    Ok(())
}

fn warn_failures(figure: &str, table: &SweepTable) {
    for r in table.records.iter().filter(|r| r.value.is_none()) {
        eprintln!(
            "warning: {figure}: T = {}: {}",
            r.horizon,
            r.error.as_deref().unwrap_or("no value")
        );
    }
}

/// σ that is optimal where the optimal worst-case regret peaks.
fn peak_sigma(table: &SweepTable) -> Option<f64> {
    table
        .records
        .iter()
        .filter_map(|r| Some((r.value?, r.sigma?)))
        .fold(None, |best: Option<(f64, f64)>, (v, s)| match best {
            Some((bv, _)) if bv >= v => best,
            _ => Some((v, s)),
        })
        .map(|(_, s)| s)
}

pub fn cmd_figures(args: &FiguresArgs) -> CliResult<()> {
    let grid = &args.grid.0;
    let wants = |w: Which| args.which == w || args.which == Which::All;
    ensure_dir(&args.out)?;
    let params = serde_json::to_value(args).expect("args serialize");
    let mut failed = 0;
    let mut total = 0;

    if wants(Which::One) || wants(Which::Two) {
        let table = sweep(SweepQuantity::MrStar, grid)?;
        warn_failures("sigma*/MR*", &table);
        failed += table.failures();
        total += grid.len();
        if wants(Which::One) {
            let body = csv_table(
                "T,sigma_star",
                table.records.iter().map(|r| [Some(r.horizon), r.sigma]),
            );
            let m = RunManifest::new(
                "figures",
                params.clone(),
                json!({ "figure": 1, "grid": grid, "solver": SETTINGS }),
            );
            write_with_manifest(&args.out, "fig1", &[("fig1.csv".into(), body)], m)?;
        }
        if wants(Which::Two) {
            let fixed_sigma = peak_sigma(&table);
            let fixed: Vec<Option<f64>> = match fixed_sigma {
                Some(s) => fixed_prior_curve(&GaussianPrior::new(s)?, grid)?
                    .into_iter()
                    .zip(grid)
                    .map(|(r, t)| match r {
                        Ok(v) => Some(v),
                        Err(e) => {
                            eprintln!("warning: fixed-sigma MR*: T = {t}: {e}");
                            None
                        }
                    })
                    .collect(),
                None => vec![None; grid.len()],
            };
            let body = csv_table(
                "T,mr_star_optimal,mr_star_fixed_sigma",
                table
                    .records
                    .iter()
                    .zip(&fixed)
                    .map(|(r, f)| [Some(r.horizon), r.value, *f]),
            );
            let m = RunManifest::new(
                "figures",
                params.clone(),
                json!({ "figure": 2, "grid": grid, "fixed_sigma": fixed_sigma, "solver": SETTINGS }),
            );
            write_with_manifest(&args.out, "fig2", &[("fig2.csv".into(), body)], m)?;
        }
    }

    if wants(Which::Three) {
        let table = sweep(SweepQuantity::FuelTax, grid)?;
        warn_failures("lambda*", &table);
        failed += table.failures();
        total += grid.len();
        let body = csv_table(
            "T,sigma_ft,lambda_star",
            table
                .records
                .iter()
                .map(|r| [Some(r.horizon), r.sigma, r.lambda]),
        );
        let m = RunManifest::new(
            "figures",
            params,
            json!({ "figure": 3, "grid": grid, "solver": SETTINGS }),
        );
        write_with_manifest(&args.out, "fig3", &[("fig3.csv".into(), body)], m)?;
    }

    if failed * 10 > total {
        return Err(CliError::TooManyFailures { failed, total });
    }
    Ok(())
}

fn resolve_prior(
    sigma: SigmaArg,
    auto: impl FnOnce() -> CliResult<GaussianPrior>,
) -> CliResult<GaussianPrior> {
    match sigma {
        SigmaArg::Value(s) => Ok(GaussianPrior::new(s)?),
        SigmaArg::Improper => Ok(GaussianPrior::Improper),
        SigmaArg::Auto => auto(),
    }
}

#[derive(Serialize)]
struct SimulateOut {
    mean: f64,
    stderr: f64,
    n_paths: usize,
    analytic_reference: Option<f64>,
    z_score: Option<f64>,
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let spec = ProblemSpec::new(args.t0, args.horizon, 1.0)?;
    let strategy = match (args.strategy, args.sigma) {
        (StrategyKind::Bayes, None) => {
            return Err(CliError::Usage("--strategy bayes needs --sigma".into()))
        }
        (StrategyKind::Bayes, Some(s)) => Strategy::Bayes {
            prior: resolve_prior(s, || Ok(solve_sigma_mr(args.horizon)?.prior()))?,
        },
        (_, Some(_)) => {
            return Err(CliError::Usage(
                "--sigma only applies to --strategy bayes".into(),
            ))
        }
        (StrategyKind::KnownA, None) => Strategy::KnownA { a: args.a },
        (StrategyKind::Zero, None) => Strategy::ZeroControl,
    };
    let config = SimConfig {
        dt: args.dt,
        n_paths: args.paths,
        step_budget: args.budget,
        ..SimConfig::new(spec, args.a, args.seed)
    };
    let est = monte_carlo_cost(&strategy, &config)?;
    let reference = strategy.analytic_cost(args.a, &spec)?;
    let z_score = reference
        .filter(|_| est.stderr > 0.0)
        .map(|r| (est.mean - r) / est.stderr);
    let out = to_json(&SimulateOut {
        mean: est.mean,
        stderr: est.stderr,
        n_paths: est.n_paths,
        analytic_reference: reference,
        z_score,
    });
    print!("{out}");

    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        let mut files = vec![("simulate.json".to_string(), out)];
        for i in 0..args.dump_paths.min(args.paths) {
            let path = simulate_path(
                &strategy,
                &config,
                &mut path_stream(args.seed, i as u64),
                true,
            )?;
            let mut csv = Vec::new();
            write_trajectory_csv(&mut csv, path.trajectory.as_deref().unwrap_or_default())
                .expect("writing to memory");
            files.push((
                format!("path_{i}.csv"),
                String::from_utf8(csv).expect("ascii"),
            ));
        }
        let params = serde_json::to_value(args).expect("args serialize");
        let m = RunManifest::new(
            "simulate",
            params,
            json!({ "strategy": strategy, "steps": config.steps()? }),
        );
        write_with_manifest(dir, "simulate", &files, m)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RegretOut {
    #[serde(flatten)]
    report: RegretReport,
    /// Prior width actually used (`null` for the improper prior).
    sigma: Option<f64>,
    /// Opponent fuel weight (fuel-tax mode).
    lambda: Option<f64>,
}

pub fn cmd_regret(args: &RegretArgs) -> CliResult<()> {
    let spec = ProblemSpec::new(args.t0, args.horizon, 1.0)?;
    let a_grid = args
        .a_grid
        .as_ref()
        .map_or_else(default_a_grid, |g| g.0.clone());
    if a_grid.is_empty() || a_grid.iter().any(|a| !a.is_finite()) {
        return Err(CliError::Usage("--a-grid must hold finite numbers".into()));
    }
    if args.lambda.is_some() && !(args.mode == Mode::Fueltax && args.sigma != SigmaArg::Auto) {
        return Err(CliError::Usage(
            "--lambda is only used by --mode fueltax with an explicit --sigma".into(),
        ));
    }
    let (mode, prior, spec) = match args.mode {
        Mode::Additive => {
            let prior = resolve_prior(args.sigma, || Ok(GaussianPrior::Improper))?;
            (RegretMode::Additive, prior, spec)
        }
        Mode::Multiplicative => {
            let prior = resolve_prior(args.sigma, || Ok(solve_sigma_mr(args.horizon)?.prior()))?;
            (RegretMode::Multiplicative, prior, spec)
        }
        Mode::Fueltax => {
            let (prior, lambda) = if args.sigma == SigmaArg::Auto {
                let sol = solve_fueltax(args.horizon)?;
                (GaussianPrior::new(sol.sigma)?, sol.lambda)
            } else {
                let lambda = args.lambda.ok_or_else(|| {
                    CliError::Usage("--mode fueltax with an explicit --sigma needs --lambda".into())
                })?;
                (resolve_prior(args.sigma, || unreachable!())?, lambda)
            };
            (RegretMode::FuelTax, prior, spec.with_fuel_weight(lambda)?)
        }
    };
    let report = analytic_regret(mode, &prior, &spec, &a_grid)?;
    let lambda = (mode == RegretMode::FuelTax).then(|| spec.fuel_weight());
    let out = RegretOut {
        report,
        sigma: (!prior.is_improper()).then(|| prior.sigma()),
        lambda,
    };
    let json_text = to_json(&out);
    print!("{json_text}");

    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        let params = serde_json::to_value(args).expect("args serialize");
        let resolved =
            json!({ "sigma": out.sigma, "lambda": lambda, "a_grid": a_grid, "solver": SETTINGS });
        let body = csv_table(
            "a,our_cost,opponent_cost,additive,ratio",
            out.report
                .rows
                .iter()
                .map(|r| [r.a, r.our_cost, r.opponent_cost, r.additive, r.ratio].map(Some)),
        );
        let files = [
            ("regret.json".to_string(), json_text),
            ("regret.csv".to_string(), body),
        ];
        write_with_manifest(
            dir,
            "regret",
            &files,
            RunManifest::new("regret", params, resolved),
        )?;
    }
    Ok(())
}
