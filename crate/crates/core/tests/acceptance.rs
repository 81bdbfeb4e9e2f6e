//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use balanced3body::balance::{
    balance_determinant, balance_scale, roots_on_a_segment, special_points, trace_families, FamilyId, TraceGrid,
};
use balanced3body::closed_forms::{
    equilateral_embedding, equilateral_family, isosceles_embedding, isosceles_hk, lagrange_junction, ComplexStructure,
    IsoscelesParams,
};
use balanced3body::dynamics::{integrate_with, stability_probe, IntegrateOptions, ProbeConfig};
use balanced3body::equilibrium::{
    analyze_masses, embed_r4, lift, scaled_energy_momentum, slope_dk_dh, state_energy_momentum, AngularMomentum4,
    BalancedEquilibrium, FamilyAnalysis, StencilConfig,
};
use balanced3body::shape::{MassTriple, Shape};
use balanced3body::Execution;
use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn m321() -> MassTriple {
    MassTriple::new(3.0, 2.0, 1.0).unwrap().normalized()
}

fn random_masses(rng: &mut ChaCha8Rng) -> MassTriple {
    MassTriple::new(rng.random_range(0.05..5.0), rng.random_range(0.05..5.0), rng.random_range(0.05..5.0)).unwrap()
}

fn equilateral_constant_energy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let m = random_masses(&mut rng);
        let want = -0.5 * m.pair_sum().powi(3) / m.total();
        check(rel(equilateral_family(&m).h, want) <= 1e-12, || "closed form h_L".into())?;
        // Along the family: every complex structure, any size.
        for _ in 0..25 {
            let u = ComplexStructure::from_direction(std::array::from_fn(|_| rng.random_range(-1.0..1.0))).unwrap();
            let r = rng.random_range(0.2..5.0);
            let st = equilateral_embedding(&m, r, &u).map_err(|e| e.to_string())?;
            let em = state_energy_momentum(&m, &st).map_err(|e| e.to_string())?;
            worst = worst.max(rel(em.h, want));
        }
        let eq = lift(&m, &Shape::equilateral(1.0).unwrap(), 1.0).map_err(|e| e.to_string())?;
        worst = worst.max(rel(scaled_energy_momentum(&eq).unwrap().h, want));
    }
    check(worst <= 1e-12, || format!("h varies along the family, rel {worst:e}"))?;
    let mut worst_equal: f64 = 0.0;
    for m in [0.1, 1.0 / 3.0, 1.0, 2.5] {
        let masses = MassTriple::equal(m).unwrap();
        worst_equal = worst_equal.max(rel(equilateral_family(&masses).h, -4.5 * m.powi(5)));
    }
    check(worst_equal <= 4.0 * f64::EPSILON, || format!("equal-mass h_L off by {worst_equal:e}"))?;
    Ok(format!("max rel deviation {worst:.1e}, equal masses {worst_equal:.1e}"))
}

fn isosceles_matches_pipeline() -> Outcome {
    let mut worst: f64 = 0.0;
    for mu in [0.5, 1.0, 2.0] {
        let m = MassTriple::new(1.0, 1.0, mu).unwrap();
        for i in 0..100 {
            let rho = 0.05 + 1.9 * i as f64 / 99.0;
            let p = IsoscelesParams::new(rho, mu, 1.0, 1.0).unwrap();
            let closed = isosceles_hk(&p).map_err(|e| e.to_string())?;
            let shape = Shape::new(1.0, 1.0, rho * rho).unwrap();
            let b = balance_determinant(&m, &shape) / balance_scale(&m, &shape);
            check(b.abs() < 1e-13, || format!("isosceles shape not balanced at ρ={rho}: {b:e}"))?;
            let eq = lift(&m, &shape, 1.0).map_err(|e| format!("lift at ρ={rho}: {e}"))?;
            let em = scaled_energy_momentum(&eq).map_err(|e| e.to_string())?;
            let d = rel(em.h, closed.h).max(rel(em.k, closed.k));
            check(d <= 1e-10, || format!("μ={mu} ρ={rho}: pipeline ({}, {}) vs closed ({}, {})", em.h, em.k, closed.h, closed.k))?;
            worst = worst.max(d);
        }
    }
    Ok(format!("300 points, max rel deviation {worst:.1e}"))
}

fn lagrange_junction_values() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let mu = 0.02 * 1.13f64.powi(i);
        let m = 0.3 + 0.05 * i as f64;
        let em = isosceles_hk(&IsoscelesParams::new(1.0, mu, m, 1.0).unwrap()).unwrap();
        let want_k = 3.0 * mu * (2.0 + mu) / (4.0 * (1.0 + 2.0 * mu).powi(2));
        let want_h = -m.powi(5) * (1.0 + 2.0 * mu).powi(3) / (2.0 * (2.0 + mu));
        let j = lagrange_junction(mu, m).unwrap();
        for d in [rel(em.k, want_k), rel(em.h, want_h), rel(j.k, want_k), rel(j.h, want_h)] {
            worst = worst.max(d);
        }
    }
    check(worst <= 1e-12, || format!("max rel deviation {worst:e}"))?;
    Ok(format!("50 values of μ, max rel deviation {worst:.1e}"))
}

fn figure_structure(analyses: &[FamilyAnalysis]) -> Outcome {
    let m = m321();
    check(analyses.len() == 3, || format!("{} families", analyses.len()))?;
    let h_l = equilateral_family(&m).h;
    let mut summary = Vec::new();
    for a in analyses {
        let fam = &a.family;
        check(fam.samples.len() > 10, || format!("{} has {} lifted samples", fam.id.as_str(), fam.samples.len()))?;
        match fam.id {
            FamilyId::Long => {
                check(a.cusps.is_empty(), || format!("long family has {} cusps", a.cusps.len()))?;
                check(!a.k_quarter.is_empty(), || "long family never reaches k = 1/4".into())?;
            }
            _ => check(a.cusps.len() == 1, || format!("{} has {} cusps", fam.id.as_str(), a.cusps.len()))?,
        }
        for s in &fam.samples {
            let (h, k) = (s.em.h, s.em.k);
            check(h <= h_l + 1e-12 * h_l.abs(), || format!("{} b={}: h={h} above h_L={h_l}", fam.id.as_str(), s.shape.b()))?;
            check((0.0..=0.25 + 1e-15).contains(&k), || format!("{}: k={k} out of range", fam.id.as_str()))?;
        }
        let (first, last) = (fam.samples.first().unwrap(), fam.samples.last().unwrap());
        check(first.em.k < 0.01 && last.em.k < 0.01, || {
            format!("{} ends at k = {} and {}", fam.id.as_str(), first.em.k, last.em.k)
        })?;
        summary.push(format!("{}: {} cusp(s), {} k=1/4", fam.id.as_str(), a.cusps.len(), a.k_quarter.len()));
    }
    Ok(summary.join("; "))
}

/// `dk/dh` from central differences of independently lifted neighbours,
/// with one Richardson step.
fn fd_slope(fam: &balanced3body::equilibrium::LiftedFamily, t: f64, delta: f64) -> Option<f64> {
    let hk = |t: f64| -> Option<(f64, f64)> {
        let shape = fam.curve.shape_at(t)?;
        let em = scaled_energy_momentum(&lift(&fam.masses, &shape, 1.0).ok()?).ok()?;
        Some((em.h, em.k))
    };
    let central = |d: f64| -> Option<(f64, f64)> {
        let (hp, kp) = hk(t + d)?;
        let (hm, km) = hk(t - d)?;
        Some((hp - hm, kp - km))
    };
    let (dh1, dk1) = central(delta)?;
    let (dh2, dk2) = central(0.5 * delta)?;
    // Richardson on the numerator and denominator derivatives separately.
    let dh = (4.0 * dh2 * 2.0 - dh1) / 3.0;
    let dk = (4.0 * dk2 * 2.0 - dk1) / 3.0;
    Some(dk / dh)
}

fn slope_formula(analyses: &[FamilyAnalysis]) -> Outcome {
    let long = analyses.iter().find(|a| a.family.id == FamilyId::Long).ok_or("no long family")?;
    let fam = &long.family;
    let n = fam.samples.len();
    let avoid: Vec<f64> = long.k_quarter.iter().map(|q| q.param).chain(long.cusps.iter().map(|c| c.param)).collect();
    let eligible: Vec<_> = fam.samples[n / 20..n - n / 20]
        .iter()
        .filter(|s| !s.collinear && s.area2 > 1e-3)
        .filter(|s| avoid.iter().all(|&p| (s.param - p).abs() > 0.05))
        .filter(|s| {
            let w = s.axes.omega;
            (w[0] - w[1]).abs() > 1e-3 * w[0].max(w[1]) && s.slope.is_some_and(|v| v.abs() > 1e-6 && v.abs() < 1e6)
        })
        .collect();
    check(eligible.len() >= 100, || format!("only {} eligible samples", eligible.len()))?;
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let s = eligible[i * (eligible.len() - 1) / 99];
        let formula = s.slope.unwrap();
        let fd = fd_slope(fam, s.param, 1e-3).ok_or("neighbour failed to lift")?;
        let d = rel(formula, fd);
        check(d <= 1e-6, || format!("b={}: formula {formula} vs FD {fd}", s.shape.b()))?;
        worst = worst.max(d);
    }

    let m = m321();
    let eq = lift(&m, &special_points(&m).round_inertia, 1.0).map_err(|e| e.to_string())?;
    let theta = 0.5 * (eq.theta1 + eq.theta2);
    check(rel(eq.theta1, eq.theta2) < 1e-12, || "round-inertia point is not round".into())?;
    let ratio = (eq.mu2 - eq.mu1) / (eq.omega1 - eq.omega2);
    check(rel(ratio, -theta) <= 1e-8, || format!("ratio {ratio} vs −Θ = {}", -theta))?;
    let slope = slope_dk_dh([eq.mu1, eq.mu2], [eq.omega1, eq.omega2]).ok_or("slope undefined at round point")?;
    check(slope < 0.0, || format!("slope {slope} at the round-inertia point"))?;
    Ok(format!("100 samples, max rel deviation {worst:.1e}; round point ratio/(−Θ) − 1 = {:.1e}", ratio / -theta - 1.0))
}

fn root_count() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut histogram = [0usize; 3];
    for _ in 0..10_000 {
        let m = MassTriple::new(
            10f64.powf(rng.random_range(-2.0..1.0)),
            10f64.powf(rng.random_range(-2.0..1.0)),
            10f64.powf(rng.random_range(-2.0..1.0)),
        )
        .unwrap();
        let b = 10f64.powf(rng.random_range(-2.0..2.0));
        let c = 10f64.powf(rng.random_range(-2.0..2.0));
        let seg = roots_on_a_segment(&m, b, c).map_err(|e| e.to_string())?;
        check(seg.roots.len() <= 2, || format!("{} roots for {m:?} b={b} c={c}", seg.roots.len()))?;
        histogram[seg.roots.len()] += 1;
        // Dense sign scan of B over a ∈ [1e-6, 1e6]·(b + c).
        let scale = b + c;
        let eval = |a: f64| balance_determinant(&m, &Shape::new(a, b, c).unwrap());
        let n = 4000;
        let mut prev: Option<(f64, f64)> = None;
        let mut scan = 0;
        for i in 0..=n {
            let a = scale * 10f64.powf(-6.0 + 12.0 * i as f64 / n as f64);
            let v = eval(a);
            if let Some((pa, pv)) = prev {
                if v != 0.0 && pv != 0.0 && (v > 0.0) != (pv > 0.0) {
                    scan += 1;
                    check(seg.roots.iter().any(|&r| r >= pa * (1.0 - 1e-9) && r <= a * (1.0 + 1e-9)), || {
                        format!("scan finds a root in [{pa}, {a}] missed for {m:?} b={b} c={c}: {:?}", seg.roots)
                    })?;
                }
            }
            prev = Some((a, v));
        }
        check(scan <= seg.roots.len(), || format!("scan {scan} > found {}", seg.roots.len()))?;
    }

    let triples = [[3.0, 2.0, 1.0], [5.0, 3.0, 1.0], [1.0, 0.5, 0.1], [4.0, 1.0, 0.9], [1.0, 0.99, 0.2]];
    for t in triples {
        let m = MassTriple::from_array(t).unwrap().normalized();
        let set = trace_families(&m, &TraceGrid::default(), Execution::default()).map_err(|e| e.to_string())?;
        for f in &set.families {
            for w in f.samples.windows(2) {
                let (x, y) = (&w[0], &w[1]);
                check((y.b - x.b) * (y.a - x.a) > 0.0 && y.b > x.b, || {
                    format!("{t:?} {}: a(b) not increasing between b={} and b={}", f.id.as_str(), x.b, y.b)
                })?;
            }
        }
    }
    Ok(format!("10⁴ segments, root counts 0/1/2 = {}/{}/{}; 5 triples monotone", histogram[0], histogram[1], histogram[2]))
}

/// A rank-4 long-family equilibrium past the k = 1/4 tangency.
fn long_family_seed(analyses: &[FamilyAnalysis]) -> Result<BalancedEquilibrium, String> {
    let long = analyses.iter().find(|a| a.family.id == FamilyId::Long).ok_or("no long family")?;
    let tangency = long.k_quarter.first().ok_or("no tangency")?.param;
    let s = long
        .family
        .samples
        .iter()
        .filter(|s| s.param > tangency && !s.collinear)
        .min_by(|x, y| (x.shape.b() / x.shape.c() - 8.0).abs().total_cmp(&(y.shape.b() / y.shape.c() - 8.0).abs()))
        .ok_or("no sample past the tangency")?;
    let eq = lift(&m321(), &s.shape, 1.0).map_err(|e| e.to_string())?;
    check(eq.rank() == 4, || "seed is planar".into())?;
    Ok(eq)
}

fn dynamics_reproduction(analyses: &[FamilyAnalysis]) -> Outcome {
    let eq = long_family_seed(analyses)?;
    let m = eq.masses;
    let start = embed_r4(&eq, 0.0, 0.0);
    let periods = 20.0;
    let opts = IntegrateOptions { tol: 1e-12, samples: 2000, period: Some(eq.period()) };
    let report = integrate_with(&m, &start, periods * eq.period(), &opts).map_err(|e| e.to_string())?;
    check(report.completed(), || format!("aborted: {:?}", report.aborted))?;
    let size = start.q.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst: f64 = 0.0;
    for s in &report.samples {
        let exact = embed_r4(&eq, eq.omega1 * s.t, eq.omega2 * s.t);
        for i in 0..3 {
            for d in 0..4 {
                worst = worst.max((s.state.q[i][d] - exact.q[i][d]).abs() / size);
            }
        }
    }
    check(worst <= 1e-7, || format!("position error {worst:e}"))?;
    check(report.energy_drift < 1e-11, || format!("energy drift {:e}", report.energy_drift))?;
    check(report.max_momentum_drift() < 1e-11, || format!("momentum drift {:e}", report.max_momentum_drift()))?;
    Ok(format!(
        "b/c = {:.3}, k = {:.4}; position error {worst:.1e}, H drift {:.1e}, L drift {:.1e}",
        eq.shape.b() / eq.shape.c(),
        scaled_energy_momentum(&eq).unwrap().k,
        report.energy_drift,
        report.max_momentum_drift()
    ))
}

fn no_syzygy_no_collision(analyses: &[FamilyAnalysis]) -> Outcome {
    let eq = long_family_seed(analyses)?;
    let cfg = ProbeConfig { eps: 1e-4, periods: 50.0, trials: 20, tol: 1e-11, ..ProbeConfig::default() };
    let report = stability_probe(&eq.masses, &eq, &cfg, Execution::default()).map_err(|e| e.to_string())?;
    let l = AngularMomentum4::from_matrix(embed_r4(&eq, 0.0, 0.0).angular_momentum_matrix()).unwrap();
    let ell = l.norm_sq().sqrt();
    let mut min_area: f64 = f64::INFINITY;
    let mut min_slack: f64 = f64::INFINITY;
    for t in &report.trials {
        check(t.failure.is_none(), || format!("trial {}: {:?}", t.index, t.failure))?;
        check(t.min_area2 > 0.0 && t.min_wedge > 0.0, || format!("trial {} reaches a syzygy", t.index))?;
        let budget = 10.0 * (t.momentum_drift + t.momentum_mismatch) * ell + 1e-12 * ell;
        check(t.min_collision_slack >= -budget, || {
            format!("trial {}: |p|·d − d_L = {:e} below budget {budget:e}", t.index, t.min_collision_slack)
        })?;
        min_area = min_area.min(t.min_area2);
        min_slack = min_slack.min(t.min_collision_slack / eq.mu2);
    }
    Ok(format!("20 trials, min A² = {min_area:.3e}, min slack/d_L = {min_slack:.3e}"))
}

fn stability(eps: f64) -> Outcome {
    let p = IsoscelesParams::new(0.8, 1.0, 1.0, 1.0).unwrap();
    let (eq, _) = isosceles_embedding(&p).map_err(|e| e.to_string())?;
    let cfg = ProbeConfig { eps, periods: 50.0, trials: 20, ..ProbeConfig::default() };
    let report = stability_probe(&eq.masses, &eq, &cfg, Execution::default()).map_err(|e| e.to_string())?;
    for t in &report.trials {
        check(t.bounded, || format!("trial {} unbounded ({:?})", t.index, t.failure))?;
        check(t.max_shape_deviation < 1e2 * eps, || format!("trial {} deviation {:e}", t.index, t.max_shape_deviation))?;
    }
    Ok(format!("20 trials bounded, max shape deviation {:.2e} (limit {:.0e})", report.max_shape_deviation, 1e2 * eps))
}

fn momentum_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let mut e: [f64; 6] = std::array::from_fn(|_| scale * rng.random_range(-1.0..1.0));
        if i % 10 == 0 {
            // Rank 2: a simple bivector u ∧ v.
            let u: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            for (k, &(r, c)) in balanced3body::equilibrium::MOMENTUM_ENTRIES.iter().enumerate() {
                e[k] = scale * (u[r] * v[c] - u[c] * v[r]);
            }
        }
        let l = AngularMomentum4::from_entries(e);
        let inv = l.invariants();
        let mat = Matrix4::from_fn(|r, c| l.matrix()[r][c]);
        // Eigenvalues of L are ±iμ1, ±iμ2.
        let mut ev: Vec<f64> = mat.complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
        ev.sort_by(f64::total_cmp);
        let (mu1, mu2) = (0.5 * (ev[2] + ev[3]), 0.5 * (ev[0] + ev[1]));
        let ell2 = inv.norm_sq;
        let pf = inv.pfaffian.abs();
        let unit = ell2.max(f64::MIN_POSITIVE);
        worst = worst.max((ell2 + 2.0 * pf - (mu1 + mu2).powi(2)).abs() / unit);
        worst = worst.max((inv.mu1 - mu1).abs() / unit.sqrt());
        worst = worst.max((inv.mu2 - mu2).abs() / unit.sqrt());
        check(ell2 >= 2.0 * pf, || format!("ℓ² = {ell2} < 2|Pf| = {}", 2.0 * pf))?;
        check(rel(inv.pfaffian * inv.pfaffian, mat.determinant()) <= 1e-10 || mat.determinant().abs() <= 1e-12 * unit * unit, || {
            format!("Pf² = {} vs det = {}", inv.pfaffian.powi(2), mat.determinant())
        })?;
        for lambda in [0.3, 1.0, 2.7].map(|x| x * unit.sqrt()) {
            let char_poly = (Matrix4::identity() * lambda - mat).determinant();
            let closed = lambda.powi(4) + lambda * lambda * ell2 + pf * pf;
            worst = worst.max((char_poly - closed).abs() / closed);
        }
    }
    check(worst <= 1e-10, || format!("max rel deviation {worst:e}"))?;
    Ok(format!("10³ matrices, max rel deviation {worst:.1e}"))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > limit => Err(format!("{msg}; took {elapsed:.1?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {n:>2} {name}: {msg} [{elapsed:.2?}]"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {n:>2} {name}: {msg} [{elapsed:.2?}]");
            }
        }
    };
    let secs = Duration::from_secs;
    report(1, "equilateral energy", secs(1), &mut equilateral_constant_energy);
    report(2, "isosceles closed form", secs(10), &mut isosceles_matches_pipeline);
    report(3, "Lagrange junction", secs(1), &mut lagrange_junction_values);

    let analysis_start = Instant::now();
    let analyses = analyze_masses(&m321(), &TraceGrid::default(), &StencilConfig::default(), Execution::default());
    let analysis_time = analysis_start.elapsed();
    let analyses = analyses.unwrap_or_default();
    report(4, "three-family structure", secs(60), &mut || {
        figure_structure(&analyses).map(|m| format!("{m} (analysis {analysis_time:.1?})")).and_then(|m| {
            if analysis_time > secs(60) {
                Err(format!("{m}; analysis too slow"))
            } else {
                Ok(m)
            }
        })
    });
    report(5, "slope formula", secs(60), &mut || slope_formula(&analyses));
    report(6, "root count and monotonicity", secs(120), &mut root_count);
    report(7, "dynamics reproduction", secs(60), &mut || dynamics_reproduction(&analyses));
    report(8, "no syzygy, no collision", secs(600), &mut || no_syzygy_no_collision(&analyses));
    report(9, "stability probe", secs(600), &mut || stability(1e-4));
    report(10, "momentum invariants", secs(10), &mut momentum_identities);
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
