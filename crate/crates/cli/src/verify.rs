//! Invariant groups run by `verify`. Each group reports pass or fail with a
//! short, deterministic detail string.

use balanced3body::balance::{
    balance_determinant, balance_scale, euler_points, special_points, trace_families, FamilyId, TraceGrid,
};
use balanced3body::closed_forms::{equilateral_family, isosceles_hk, lagrange_junction, IsoscelesParams};
use balanced3body::dynamics::{integrate, stability_probe, ProbeConfig};
use balanced3body::equilibrium::{
    analyze_masses, conjecture_counts, embed_r4, lift, lift_families, scaled_energy_momentum, AngularMomentum4,
    StencilConfig, MOMENTUM_ENTRIES,
};
use balanced3body::shape::{moment_of_inertia, planar_coordinates, squared_area, MassTriple, Shape};
use balanced3body::Execution;
use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::table::{Cell, Metadata, Table};
use crate::{CliError, Output, EXIT_VERIFY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

type Group = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_masses(rng: &mut ChaCha8Rng) -> MassTriple {
    MassTriple::new(rng.random_range(0.05..5.0), rng.random_range(0.05..5.0), rng.random_range(0.05..5.0)).unwrap()
}

fn random_triangle(rng: &mut ChaCha8Rng) -> Shape {
    loop {
        let r1: f64 = rng.random_range(0.1..3.0);
        let r2: f64 = rng.random_range(0.1..3.0);
        let ang: f64 = rng.random_range(0.05..3.09);
        let a = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * ang.cos();
        if let Ok(s) = Shape::new(a, r1 * r1, r2 * r2) {
            if squared_area(&s) > 1e-6 {
                return s;
            }
        }
    }
}

fn shape_identities(seed: u64) -> Group {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let m = random_masses(&mut rng);
        let s = random_triangle(&mut rng);
        let p = planar_coordinates(&m, &s).map_err(|e| e.to_string())?;
        let area = squared_area(&s);
        let from_axes = m.total() * p.theta1 * p.theta2 / (4.0 * m.product());
        worst = worst.max((area - from_axes).abs() / area);
        let i = moment_of_inertia(&m, &s);
        worst = worst.max((p.inertia() - i).abs() / i);
    }
    ensure(worst < 1e-9, || format!("inertia/area identities off by {worst:e}"))?;
    Ok(format!("2000 shapes, max rel defect {worst:.1e}"))
}

fn determinant_symmetry(seed: u64) -> Group {
    const PERMS: [([usize; 3], f64); 6] =
        [([0, 1, 2], 1.0), ([1, 2, 0], 1.0), ([2, 0, 1], 1.0), ([0, 2, 1], -1.0), ([2, 1, 0], -1.0), ([1, 0, 2], -1.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let m = random_masses(&mut rng);
        let s = random_triangle(&mut rng);
        let b = balance_determinant(&m, &s);
        let scale = balance_scale(&m, &s);
        for (p, sign) in PERMS {
            let bp = balance_determinant(&m.permuted(p), &s.permuted(p));
            worst = worst.max((bp - sign * b).abs() / scale);
        }
    }
    ensure(worst < 1e-13, || format!("relabelling changes B by {worst:e}"))?;
    // The central configurations are balanced for every mass choice.
    let mut central: f64 = 0.0;
    for _ in 0..200 {
        let m = random_masses(&mut rng);
        let mut shapes = euler_points(&m).to_vec();
        shapes.push(Shape::equilateral(1.0).unwrap());
        for s in shapes {
            central = central.max(balance_determinant(&m, &s).abs() / balance_scale(&m, &s));
        }
    }
    ensure(central < 1e-12, || format!("B at a central configuration is {central:e}"))?;
    Ok(format!("max relabelling defect {worst:.1e}, max |B| at central configurations {central:.1e}"))
}

fn momentum_identities(seed: u64) -> Group {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
    let mut worst: f64 = 0.0;
    for i in 0..2000 {
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let e = if i % 4 == 0 {
            let u: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            MOMENTUM_ENTRIES.map(|(r, c)| scale * (u[r] * v[c] - u[c] * v[r]))
        } else {
            std::array::from_fn(|_| scale * rng.random_range(-1.0..1.0))
        };
        let inv = AngularMomentum4::from_entries(e).invariants();
        let ell2 = inv.norm_sq;
        let pf = inv.pfaffian.abs();
        ensure(ell2 >= 2.0 * pf, || format!("ℓ² < 2|Pf| for {e:?}"))?;
        worst = worst.max((ell2 + 2.0 * pf - (inv.mu1 + inv.mu2).powi(2)).abs() / ell2);
        worst = worst.max((inv.mu1 * inv.mu2 - pf).abs() / ell2);
        worst = worst.max((inv.mu1.powi(2) + inv.mu2.powi(2) - ell2).abs() / ell2);
        if i % 4 == 0 {
            ensure(inv.rank == 2, || format!("simple bivector has rank {}", inv.rank))?;
        }
    }
    ensure(worst < 1e-12, || format!("invariant identities off by {worst:e}"))?;
    Ok(format!("2000 matrices, max rel defect {worst:.1e}"))
}

fn closed_forms() -> Group {
    let mut worst: f64 = 0.0;
    for mu in [0.5, 1.0, 2.0] {
        let m = MassTriple::new(1.0, 1.0, mu).unwrap();
        for i in 0..40 {
            let rho = 0.05 + 1.9 * i as f64 / 39.0;
            let closed = isosceles_hk(&IsoscelesParams::new(rho, mu, 1.0, 1.0).unwrap()).map_err(|e| e.to_string())?;
            let eq = lift(&m, &Shape::new(1.0, 1.0, rho * rho).unwrap(), 1.0).map_err(|e| e.to_string())?;
            let em = scaled_energy_momentum(&eq).map_err(|e| e.to_string())?;
            worst = worst.max((em.h - closed.h).abs() / closed.h.abs()).max((em.k - closed.k).abs() / closed.k);
        }
        let j = lagrange_junction(mu, 1.0).map_err(|e| e.to_string())?;
        let fam = equilateral_family(&m);
        worst = worst.max((j.h - fam.h).abs() / fam.h.abs()).max((j.k - fam.k_max).abs() / fam.k_max);
    }
    ensure(worst < 1e-10, || format!("closed forms disagree with the pipeline by {worst:e}"))?;
    Ok(format!("isosceles and junction, max rel defect {worst:.1e}"))
}

const TRIPLES: [[f64; 3]; 5] = [[3.0, 2.0, 1.0], [5.0, 3.0, 1.0], [1.0, 0.5, 0.1], [4.0, 1.0, 0.9], [2.0, 1.0, 1.0]];

fn family_tracing(exec: Execution) -> Group {
    let mut counts = Vec::new();
    for t in TRIPLES {
        let m = MassTriple::from_array(t).unwrap().normalized();
        let set = trace_families(&m, &TraceGrid::default(), exec).map_err(|e| e.to_string())?;
        ensure(set.families.len() == 3, || format!("{t:?}: {} families", set.families.len()))?;
        // With two equal masses the isosceles line b = c is itself a family.
        for f in set.families.iter().filter(|f| !f.analytic) {
            for w in f.samples.windows(2) {
                ensure(w[1].b > w[0].b && w[1].a > w[0].a, || {
                    format!("{t:?} {}: a(b) not increasing at b = {}", f.id.as_str(), w[0].b)
                })?;
            }
        }
        let h_l = equilateral_family(&m).h;
        let lifted = lift_families(&set, &StencilConfig::default(), exec);
        let mut n = 0;
        for fam in &lifted {
            for s in &fam.samples {
                ensure(s.em.h <= h_l + 1e-12 * h_l.abs(), || format!("{t:?}: h = {} above h_L", s.em.h))?;
                ensure((0.0..=0.25).contains(&s.em.k), || format!("{t:?}: k = {}", s.em.k))?;
                ensure(s.eq.residual < 1e-8, || format!("{t:?}: residual {:e}", s.eq.residual))?;
            }
            n += fam.samples.len();
        }
        counts.push(n.to_string());
    }
    Ok(format!("5 triples, lifted samples {}", counts.join("/")))
}

fn slope_checks(exec: Execution) -> Group {
    let m = MassTriple::new(3.0, 2.0, 1.0).unwrap().normalized();
    let analyses = analyze_masses(&m, &TraceGrid::default(), &StencilConfig::default(), exec).map_err(|e| e.to_string())?;
    let long = analyses.iter().find(|a| a.family.id == FamilyId::Long).ok_or("no long family")?;
    let fam = &long.family;
    let hk = |t: f64| -> Option<(f64, f64)> {
        let em = scaled_energy_momentum(&lift(&m, &fam.curve.shape_at(t)?, 1.0).ok()?).ok()?;
        Some((em.h, em.k))
    };
    let n = fam.samples.len();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for s in fam.samples[n / 10..n - n / 10].iter().step_by((n / 40).max(1)) {
        let Some(slope) = s.slope else { continue };
        let w = s.axes.omega;
        if s.area2 < 1e-3 || (w[0] - w[1]).abs() < 1e-3 * w[0] || long.k_quarter.iter().any(|q| (q.param - s.param).abs() < 0.05) {
            continue;
        }
        let d = 1e-3;
        let (Some(p), Some(q)) = (hk(s.param + d), hk(s.param - d)) else { continue };
        let fd = (p.1 - q.1) / (p.0 - q.0);
        worst = worst.max((fd - slope).abs() / slope.abs());
        checked += 1;
    }
    ensure(checked >= 10, || format!("only {checked} samples checked"))?;
    ensure(worst < 1e-5, || format!("slope formula vs differences {worst:e}"))?;
    let eq = lift(&m, &special_points(&m).round_inertia, 1.0).map_err(|e| e.to_string())?;
    let ratio = (eq.mu2 - eq.mu1) / (eq.omega1 - eq.omega2);
    let theta = 0.5 * (eq.theta1 + eq.theta2);
    ensure((ratio + theta).abs() < 1e-8 * theta, || format!("round-inertia ratio {ratio} vs −Θ {}", -theta))?;
    Ok(format!("{checked} samples, max rel defect {worst:.1e}"))
}

fn dynamics_conservation(exec: Execution, seed: u64) -> Group {
    let m = MassTriple::new(3.0, 2.0, 1.0).unwrap().normalized();
    let set = trace_families(&m, &TraceGrid::default(), exec).map_err(|e| e.to_string())?;
    let s = set
        .get(FamilyId::Long)
        .samples
        .iter()
        .min_by(|x, y| (x.b - 8.0).abs().total_cmp(&(y.b - 8.0).abs()))
        .ok_or("empty long family")?;
    let eq = lift(&m, &s.shape, 1.0).map_err(|e| e.to_string())?;
    let report = integrate(&m, &embed_r4(&eq, 0.0, 0.0), 20.0 * eq.period(), 1e-12).map_err(|e| e.to_string())?;
    ensure(report.completed(), || format!("aborted: {:?}", report.aborted))?;
    ensure(report.energy_drift < 1e-11 && report.max_momentum_drift() < 1e-11, || {
        format!("drift H {:e}, L {:e}", report.energy_drift, report.max_momentum_drift())
    })?;
    let (iso, _) = balanced3body::closed_forms::isosceles_embedding(&IsoscelesParams::new(0.8, 1.0, 1.0, 1.0).unwrap())
        .map_err(|e| e.to_string())?;
    let cfg = ProbeConfig { periods: 20.0, trials: 5, seed, ..ProbeConfig::default() };
    let probe = stability_probe(&iso.masses, &iso, &cfg, exec).map_err(|e| e.to_string())?;
    ensure(probe.bounded, || "isosceles probe left the neighbourhood".into())?;
    Ok(format!(
        "drift H {:.1e}, L {:.1e}; probe deviation {:.1e}",
        report.energy_drift,
        report.max_momentum_drift(),
        probe.max_shape_deviation
    ))
}

pub fn run(out: &Output, level: Level, conjectures: bool, seed: u64) -> Result<u8, CliError> {
    let exec = out.exec();
    let mut groups: Vec<(&str, Box<dyn Fn() -> Group>)> = vec![
        ("shape_identities", Box::new(move || shape_identities(seed))),
        ("determinant_symmetry", Box::new(move || determinant_symmetry(seed))),
        ("momentum_identities", Box::new(move || momentum_identities(seed))),
        ("closed_forms", Box::new(closed_forms)),
    ];
    if level == Level::Full {
        groups.push(("family_tracing", Box::new(move || family_tracing(exec))));
        groups.push(("slope_checks", Box::new(move || slope_checks(exec))));
        groups.push(("dynamics_conservation", Box::new(move || dynamics_conservation(exec, seed))));
    }
    let mut table = Table::new(vec!["group", "status", "detail"]);
    let mut failed = 0;
    for (name, f) in &groups {
        let (status, detail) = match f() {
            Ok(d) => ("pass", d),
            Err(d) => {
                failed += 1;
                ("fail", d)
            }
        };
        eprintln!("{status:4} {name}: {detail}");
        table.push(vec![Cell::from(*name), status.into(), detail.into()]);
    }
    if conjectures {
        for t in TRIPLES {
            let m = MassTriple::from_array(t).unwrap().normalized();
            let analyses = analyze_masses(&m, &TraceGrid::default(), &StencilConfig::default(), exec)?;
            let counts = conjecture_counts(&analyses);
            let label = format!("{},{},{}", t[0], t[1], t[2]);
            table.push(vec![
                "conjecture_k_quarter".into(),
                "info".into(),
                format!("masses {label}: {} configurations with k = 1/4", counts.k_quarter_total).into(),
            ]);
            for (id, h_crit, k_crit, cusps) in counts.per_family {
                table.push(vec![
                    "conjecture_critical_points".into(),
                    "info".into(),
                    format!("masses {label} {}: h′ sign changes {h_crit}, k′ sign changes {k_crit}, cusps {cusps}", id.as_str())
                        .into(),
                ]);
            }
        }
    }
    let mut meta = Metadata::new("verify", out.normalize.as_str());
    meta.seed = Some(seed);
    out.emit(&meta, &table, vec![("failed", serde_json::json!(failed))])?;
    Ok(if failed > 0 { EXIT_VERIFY } else { 0 })
}
