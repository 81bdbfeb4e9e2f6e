use balanced3body::balance::{euler_points, TraceGrid};
use balanced3body::closed_forms::{
    equilateral_embedding, equilateral_family, isosceles_curve, isosceles_embedding, lagrange_junction, ComplexStructure,
    IsoscelesParams,
};
use balanced3body::dynamics::{
    collision_bound_check, integrate_with, perturb_fixed_momentum, syzygy_monitor, IntegrateOptions, PhaseState,
    TrajectoryReport,
};
use balanced3body::equilibrium::{
    analyze_masses, embed_r4, lift, scaled_energy_momentum, state_energy_momentum, BalancedEquilibrium, StencilConfig,
};
use balanced3body::shape::{MassTriple, Shape};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::table::{Cell, Metadata, Table};
use crate::{parse_triple, CliError, Output, EXIT_ABORT, EXIT_VERIFY};

fn nearest(params: impl Iterator<Item = f64>, t: f64) -> Option<usize> {
    params
        .enumerate()
        .min_by(|(_, a), (_, b)| (a - t).abs().total_cmp(&(b - t).abs()))
        .map(|(i, _)| i)
}

pub fn families(out: &Output, masses: [f64; 3], samples: usize, decades: f64) -> Result<u8, CliError> {
    if !(decades > 0.0 && decades <= 15.0) {
        return Err(CliError::Usage(format!("decades must lie in (0, 15], got {decades}")));
    }
    let m = out.normalize.apply(MassTriple::from_array(masses)?);
    let grid = TraceGrid { samples_per_decade: samples, decades, ..TraceGrid::default() };
    let cfg = StencilConfig::default();
    let analyses = analyze_masses(&m, &grid, &cfg, out.exec())?;

    let mut table = Table::new(vec![
        "family", "analytic", "param", "a", "b", "c", "area2", "inertia", "potential", "theta1", "theta2", "omega1",
        "omega2", "mu1", "mu2", "h", "k", "C", "slope", "cusp", "k_quarter", "euler", "collinear",
    ]);
    let mut special = Vec::new();
    for a in &analyses {
        let fam = &a.family;
        let params = || fam.samples.iter().map(|s| s.param);
        let mark = |ts: Vec<f64>| -> Vec<usize> { ts.into_iter().filter_map(|t| nearest(params(), t)).collect() };
        let cusps = mark(a.cusps.iter().map(|c| c.param).collect());
        let quarters = mark(a.k_quarter.iter().map(|q| q.param).collect());
        let eulers = mark(fam.euler.iter().map(|e| e.param).collect());
        for (i, s) in fam.samples.iter().enumerate() {
            let [sa, sb, sc] = s.shape.sides();
            table.push(vec![
                fam.id.as_str().into(),
                fam.analytic.into(),
                s.param.into(),
                sa.into(),
                sb.into(),
                sc.into(),
                s.area2.into(),
                s.inertia.into(),
                s.potential.into(),
                s.eq.theta1.into(),
                s.eq.theta2.into(),
                s.eq.omega1.into(),
                s.eq.omega2.into(),
                s.eq.mu1.into(),
                s.eq.mu2.into(),
                s.em.h.into(),
                s.em.k.into(),
                s.c().into(),
                s.slope.into(),
                cusps.contains(&i).into(),
                quarters.contains(&i).into(),
                eulers.contains(&i).into(),
                s.collinear.into(),
            ]);
        }
        special.push(json!({
            "family": fam.id.as_str(),
            "analytic": fam.analytic,
            "cusps": a.cusps,
            "k_quarter": a.k_quarter,
            "euler": fam.euler,
            "darboux_max_deviation": a.darboux.max_deviation,
        }));
    }
    let mut meta = Metadata::new("families", out.normalize.as_str())
        .tolerance("fd_step", cfg.step)
        .tolerance("bisect", cfg.bisect_tol)
        .tolerance("max_jump", grid.max_jump);
    meta.masses = Some(m.masses());
    let h_l = equilateral_family(&m).h;
    out.emit(&meta, &table, vec![("h_l", json!(h_l)), ("families", json!(special))])?;
    Ok(0)
}

pub fn isosceles(out: &Output, mu: f64, m: f64, samples: usize) -> Result<u8, CliError> {
    if !(mu > 0.0 && mu.is_finite() && m > 0.0 && m.is_finite()) {
        return Err(CliError::Usage("μ and m must be positive".into()));
    }
    let masses = out.normalize.apply(MassTriple::new(m, m, mu * m)?);
    let m_eff = masses.get(0);
    let curve = isosceles_curve(mu, m_eff, samples)?;
    let mut table = Table::new(vec!["rho", "chi", "h", "k"]);
    for p in &curve {
        table.push(vec![p.rho.into(), p.chi.into(), p.h.into(), p.k.into()]);
    }
    let junction = lagrange_junction(mu, m_eff)?;
    let mut meta = Metadata::new("isosceles", out.normalize.as_str());
    meta.masses = Some(masses.masses());
    out.emit(&meta, &table, vec![("mu", json!(mu)), ("junction", json!({"h": junction.h, "k": junction.k}))])?;
    Ok(0)
}

pub fn equilateral(out: &Output, masses: [f64; 3], samples: usize) -> Result<u8, CliError> {
    let m = out.normalize.apply(MassTriple::from_array(masses)?);
    let fam = equilateral_family(&m);
    let mut table = Table::new(vec!["phi", "u1", "u2", "u3", "h", "k", "h_l", "k_max"]);
    // u = (cos φ, 0, sin φ) for φ ∈ [0, π/2] runs k from 0 to its maximum.
    for i in 0..samples {
        let phi = std::f64::consts::FRAC_PI_2 * i as f64 / (samples - 1) as f64;
        let (s, c) = phi.sin_cos();
        let u = ComplexStructure::from_direction([c, 0.0, s])?;
        let st = equilateral_embedding(&m, 1.0, &u)?;
        let em = state_energy_momentum(&m, &st)?;
        let [u1, u2, u3] = u.u();
        table.push(vec![phi.into(), u1.into(), u2.into(), u3.into(), em.h.into(), em.k.into(), fam.h.into(), fam.k_max.into()]);
    }
    let mut meta = Metadata::new("equilateral", out.normalize.as_str());
    meta.masses = Some(m.masses());
    out.emit(&meta, &table, vec![("h_l", json!(fam.h)), ("k_range", json!([fam.k_min, fam.k_max]))])?;
    Ok(0)
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Masses for --shape and --rank2 seeds.
    #[arg(long, value_parser = parse_triple, conflicts_with_all = ["rho", "mu"])]
    masses: Option<[f64; 3]>,
    /// Seed from a balanced shape given by squared sides a,b,c.
    #[arg(long, value_parser = parse_triple, conflicts_with_all = ["rho", "mu", "rank2"])]
    shape: Option<[f64; 3]>,
    /// Seed from the isosceles family: base over leg.
    #[arg(long, requires = "mu")]
    rho: Option<f64>,
    /// Isosceles apex mass ratio; masses are (1, 1, μ).
    #[arg(long, requires = "rho")]
    mu: Option<f64>,
    /// Seed from the collinear (Euler) equilibrium with body 1 in the middle; planar motion.
    #[arg(long)]
    rank2: bool,
    /// Relative size of a random perturbation at fixed angular momentum.
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    /// Integration length in time units.
    #[arg(long, default_value_t = 20.0)]
    time: f64,
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// Number of output samples.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Largest acceptable relative drift of H and of the angular momentum.
    #[arg(long, default_value_t = 1e-8)]
    budget: f64,
}

fn simulation_seed(out: &Output, args: &SimulateArgs) -> Result<(MassTriple, BalancedEquilibrium, PhaseState), CliError> {
    if let (Some(rho), Some(mu)) = (args.rho, args.mu) {
        let masses = out.normalize.apply(MassTriple::new(1.0, 1.0, mu)?);
        let (eq, st) = isosceles_embedding(&IsoscelesParams::new(rho, mu, masses.get(0), 1.0)?)?;
        return Ok((masses, eq, st));
    }
    let masses = out.normalize.apply(MassTriple::from_array(args.masses.unwrap_or([1.0; 3]))?);
    let shape = if let Some(s) = args.shape {
        Shape::from_sides(s)?
    } else if args.rank2 {
        euler_points(&masses)[0]
    } else {
        return Err(CliError::Usage("simulate needs a seed: --shape, --rho/--mu or --rank2".into()));
    };
    let eq = lift(&masses, &shape, 1.0)?;
    let st = embed_r4(&eq, 0.0, 0.0);
    Ok((masses, eq, st))
}

const POSITION_COLUMNS: [&str; 12] =
    ["q1_1", "q1_2", "q1_3", "q1_4", "q2_1", "q2_2", "q2_3", "q2_4", "q3_1", "q3_2", "q3_3", "q3_4"];

pub fn simulate(out: &Output, args: &SimulateArgs) -> Result<u8, CliError> {
    if !(args.time > 0.0 && args.time.is_finite()) {
        return Err(CliError::Usage(format!("--time must be positive, got {}", args.time)));
    }
    if !(0.0..=1e-2).contains(&args.perturb) {
        return Err(CliError::Usage(format!("--perturb must lie in [0, 1e-2], got {}", args.perturb)));
    }
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let (m, eq, seed_state) = simulation_seed(out, args)?;
    let start = if args.perturb > 0.0 {
        perturb_fixed_momentum(&m, &seed_state, args.perturb, &mut ChaCha8Rng::seed_from_u64(args.seed))?
    } else {
        seed_state
    };
    let opts = IntegrateOptions { tol: args.tol, samples: args.samples, period: Some(eq.period()) };
    let report = integrate_with(&m, &start, args.time, &opts)?;

    let eq_sides = eq.shape.sides();
    let size = eq_sides.iter().copied().fold(0.0, f64::max);
    let mut header = vec!["t"];
    header.extend(POSITION_COLUMNS);
    header.extend(["energy", "d23", "d13", "d12"]);
    let mut table = Table::new(header);
    let mut shape_dev: f64 = 0.0;
    for s in &report.samples {
        let d = s.state.distances();
        for i in 0..3 {
            shape_dev = shape_dev.max((d[i] * d[i] - eq_sides[i]).abs() / size);
        }
        let mut row: Vec<Cell> = vec![s.t.into()];
        row.extend(s.state.q.iter().flatten().map(|&v| Cell::from(v)));
        row.push(balanced3body::dynamics::hamiltonian(&m, &s.state).ok().into());
        row.extend(d.iter().map(|&v| Cell::from(v)));
        table.push(row);
    }
    let syz = syzygy_monitor(&report);
    let bound = collision_bound_check(&report, &report.initial_momentum);
    let em = scaled_energy_momentum(&eq)?;
    let summary = json!({
        "completed": report.completed(),
        "aborted": report.aborted,
        "final_time": report.final_time(),
        "steps": report.steps,
        "rejected": report.rejected,
        "energy_drift": report.energy_drift,
        "momentum_drift": report.max_momentum_drift(),
        "norm_sq_drift": report.norm_sq_drift,
        "pfaffian_drift": report.pfaffian_drift,
        "min_distance": report.min_distance,
        "min_area2": syz.min_area2,
        "min_wedge": syz.min_wedge,
        "d_l": bound.d_l,
        "min_collision_slack": bound.min_slack,
        "collision_bound_vacuous": bound.vacuous,
        "max_shape_deviation": shape_dev,
        "seed": {"h": em.h, "k": em.k, "rank": eq.rank(), "period": eq.period(), "shape": eq.shape.sides()},
    });
    let mut meta = Metadata::new("simulate", out.normalize.as_str())
        .tolerance("integrator", args.tol)
        .tolerance("perturb", args.perturb)
        .tolerance("budget", args.budget);
    meta.masses = Some(m.masses());
    meta.seed = Some(args.seed);
    out.emit(&meta, &table, vec![("report", summary)])?;

    eprintln!(
        "t = {:.6} / {}, H drift {:.3e}, L drift {:.3e}, min A² {:.3e}, shape deviation {:.3e}{}",
        report.final_time(),
        args.time,
        report.energy_drift,
        report.max_momentum_drift(),
        syz.min_area2,
        shape_dev,
        report.aborted.as_deref().map(|r| format!(", aborted: {r}")).unwrap_or_default()
    );
    Ok(run_status(&report, args.budget))
}

/// An aborted run outranks a drift over budget.
fn run_status(report: &TrajectoryReport, budget: f64) -> u8 {
    if !report.completed() {
        EXIT_ABORT
    } else if report.energy_drift > budget || report.max_momentum_drift() > budget {
        EXIT_VERIFY
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use balanced3body::dynamics::integrate;

    #[test]
    fn collision_outranks_drift() {
        let m = MassTriple::equal(1.0).unwrap();
        let fall = PhaseState::new(
            [[-1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 10.0, 0.0, 0.0]],
            [[0.0; 4]; 3],
        )
        .centered(&m);
        let rep = integrate(&m, &fall, 50.0, 1e-10).unwrap();
        assert!(rep.aborted.is_some());
        assert_eq!(run_status(&rep, 1.0), EXIT_ABORT);

        let orbit = integrate(&m, &fall, 0.1, 1e-10).unwrap();
        assert_eq!(run_status(&orbit, 1.0), 0);
        assert_eq!(run_status(&orbit, -1.0), EXIT_VERIFY);
    }
}
