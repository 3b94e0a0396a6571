//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits nonzero
//! if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use chebball::ccb::{self, SolveStatus};
use chebball::gen::{generate, GenConfig};
use chebball::hardness::check_lemma_cp;
use chebball::lp::{uq_lp, LpStatus};
use chebball::oracle::{meb, oracle_ccb, oracle_uq, sample_boundary, OracleConfig};
use chebball::planar::{arc_decomposition, solve_planar};
use chebball::problem::{feasible, inner_uq, recenter, validate, CcbInstance, UqInstance, FEAS_TOL};
use chebball::uq::{approx_round, sdp_value, solve_exact, trichotomy, Trichotomy, TrichotomyCase};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

struct Outcome {
    failures: Vec<String>,
    checked: usize,
}

impl Outcome {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            checked: 0,
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn random_convex_combination(inst: &CcbInstance, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let w: Vec<f64> = (0..inst.len()).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = w.iter().sum();
    inst.balls()
        .iter()
        .zip(&w)
        .fold(DVector::zeros(inst.dim()), |acc, (b, wi)| acc + &b.center * (wi / total))
}

fn example_31(alpha: f64) -> UqInstance {
    UqInstance::from_parts(&[alpha / 2.0], &[(&[-0.5], -4.0), (&[0.5], 0.0)]).unwrap()
}

fn criterion_1(out: &mut Outcome) {
    for alpha in [-1.0, -0.5, 0.0, 0.5] {
        let uq = example_31(alpha);
        let lp = uq_lp(&uq).unwrap();
        out.check((lp.value - 2.0 * (1.0 - alpha)).abs() <= 1e-7, || {
            format!("alpha {alpha}: v(LP) = {}", lp.value)
        });
        let sdp = sdp_value(&uq).unwrap();
        out.check((sdp - (1.0 - alpha)).abs() <= 1e-6, || format!("alpha {alpha}: v(SDP) = {sdp}"));
    }
    let uq = example_31(1.0);
    let lp = uq_lp(&uq).unwrap().value;
    let sdp = sdp_value(&uq).unwrap();
    out.check(lp.abs() <= 1e-7 && sdp.abs() <= 1e-6, || format!("alpha 1: LP {lp}, SDP {sdp}"));
    for alpha in [-2.0, 2.0] {
        let status = uq_lp(&example_31(alpha)).unwrap().status;
        out.check(status == LpStatus::Unbounded, || format!("alpha {alpha}: status {status:?}"));
    }
}

fn criterion_2(out: &mut Outcome) {
    let inst = CcbInstance::from_pairs(&[(&[-0.5], 4.25f64.sqrt()), (&[0.5], 0.5)]).unwrap();
    let sqp = ccb::solve_sqp(&inst, ccb::SQP_GAP_TOL).unwrap();
    out.check((sqp.z_bar[0] - 0.5).abs() <= 1e-8, || format!("z_bar = {}", sqp.z_bar[0]));
    out.check((sqp.value - 0.25).abs() <= 1e-8, || format!("v(SQP) = {}", sqp.value));
    let ell = ccb::solve_ccb_ellipsoid(&inst, 1e-5, usize::MAX).unwrap();
    out.check((ell.squared_radius - 0.25).abs() <= 1e-5, || {
        format!("ellipsoid value {}", ell.squared_radius)
    });
}

fn criterion_3(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..200u64 {
        let n = 2 + (k % 4) as usize;
        let p = rng.random_range(1..=n);
        let inst = generate(&GenConfig::new(n, p, 3000 + k)).unwrap();
        let a0 = random_convex_combination(&inst, &mut rng);
        let uq = inner_uq(&inst, &a0).unwrap();
        let sdp = sdp_value(&uq).unwrap();
        let exact = solve_exact(&uq).unwrap().value;
        out.check(rel_close(sdp, exact, 1e-6), || {
            format!("instance {k} (n {n}, p {p}): sdp {sdp}, exact {exact}")
        });
    }
}

fn criterion_4(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut collected = 0;
    let mut seed = 4000u64;
    while collected < 200 && seed < 40_000 {
        seed += 1;
        let n = rng.random_range(2..=4);
        let p = rng.random_range(2..=6);
        let inst = generate(&GenConfig::new(n, p, seed)).unwrap();
        let x0 = validate(&inst).unwrap().point;
        let a0 = &x0 + DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let uq = inner_uq(&inst, &a0).unwrap();
        let rc = recenter(&uq, &x0, FEAS_TOL).unwrap().instance;
        match trichotomy(&rc).unwrap() {
            Trichotomy::Finite(t) if t.case == TrichotomyCase::C => {}
            _ => continue,
        }
        collected += 1;
        let lp = uq_lp(&rc).unwrap().value;
        let gamma = rc.to_balls().unwrap().scaled_distance(&DVector::zeros(n));
        let ratio = ((1.0 - gamma) / (2f64.sqrt() + gamma)).powi(2);
        let sol = approx_round(&rc).unwrap();
        out.check(feasible(&rc, &sol.x, FEAS_TOL), || format!("seed {seed}: rounded point infeasible"));
        let f0 = rc.objective(&sol.x);
        out.check(f0 >= ratio * lp - 1e-7, || {
            format!("seed {seed}: f0 {f0} < ratio {ratio} * v(LP) {lp}")
        });
    }
    out.check(collected == 200, || format!("only {collected} case-C instances found"));
}

/// Instances of criteria 5, 9 and 10.
fn sandwich_suite() -> Vec<CcbInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..200u64)
        .map(|k| {
            let n = rng.random_range(2..=3);
            let p = rng.random_range(2..=6);
            generate(&GenConfig::new(n, p, 5000 + k)).unwrap()
        })
        .collect()
}

fn criterion_5(out: &mut Outcome, suite: &[CcbInstance]) {
    for (k, inst) in suite.iter().enumerate() {
        let sqp = ccb::solve_sqp(inst, ccb::SQP_GAP_TOL).unwrap();
        let cert = ccb::sqp_certificate(inst, &sqp).unwrap();
        out.check(cert.gamma_below_one, || format!("instance {k}: gamma {} not below one", cert.gamma));
        let achieved = ccb::evaluate_center(inst, &sqp.z_bar).unwrap();
        let oracle = oracle_ccb(inst, &OracleConfig::default());
        let lower = oracle.squared_radius - oracle.resolution;
        let scale = sqp.value.abs().max(1.0);
        out.check(sqp.value >= achieved - 1e-9 * scale, || {
            format!("instance {k}: v(SQP) {} < f(z_bar) {achieved}", sqp.value)
        });
        out.check(achieved >= lower, || format!("instance {k}: f(z_bar) {achieved} < oracle {lower}"));
        out.check(lower >= cert.ratio * sqp.value - 1e-6, || {
            format!("instance {k}: oracle {lower} < {} * {}", cert.ratio, sqp.value)
        });
    }
}

fn criterion_6(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..100u64 {
        let p = rng.random_range(1..=8);
        let inst = generate(&GenConfig::new(2, p, 6000 + k)).unwrap();
        let planar = solve_planar(&inst).unwrap();
        out.check(planar.status == SolveStatus::Ok, || format!("instance {k}: status {:?}", planar.status));
        let oracle = oracle_ccb(&inst, &OracleConfig::default());
        out.check((planar.squared_radius - oracle.squared_radius).abs() <= 2e-3, || {
            format!("instance {k}: planar {} vs oracle {}", planar.squared_radius, oracle.squared_radius)
        });
        let ell = ccb::solve_ccb_ellipsoid(&inst, 1e-5, usize::MAX).unwrap();
        out.check((planar.squared_radius - ell.squared_radius).abs() <= 2e-5, || {
            format!("instance {k}: planar {} vs ellipsoid {}", planar.squared_radius, ell.squared_radius)
        });
    }
    let lens = CcbInstance::from_pairs(&[(&[0.0, 0.0], 1.0), (&[1.0, 0.0], 1.0)]).unwrap();
    let sol = solve_planar(&lens).unwrap();
    let center_err = (sol.center[0] - 0.5).abs().max(sol.center[1].abs());
    out.check(center_err <= 1e-8 && (sol.squared_radius - 0.75).abs() <= 1e-8, || {
        format!("lens: center {:?}, value {}", sol.center.as_slice(), sol.squared_radius)
    });
}

fn criterion_7(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..100u64 {
        let n = rng.random_range(2..=3);
        let p = rng.random_range(1..=6);
        let inst = generate(&GenConfig::new(n, p, 7000 + k)).unwrap();
        let a0 = DVector::from_fn(n, |_, _| rng.random_range(-1.5..1.5));
        let uq = inner_uq(&inst, &a0).unwrap();
        let exact = solve_exact(&uq).unwrap();
        let Some(oracle) = oracle_uq(&uq, &OracleConfig::default()) else {
            out.check(false, || format!("instance {k}: oracle found no feasible point"));
            continue;
        };
        out.check(exact.value >= oracle.value - 1e-6, || {
            format!("instance {k}: exact {} < oracle {}", exact.value, oracle.value)
        });
        out.check(exact.value <= oracle.value + 5.0 * oracle.resolution, || {
            format!(
                "instance {k}: exact {} > oracle {} + 5 * {}",
                exact.value, oracle.value, oracle.resolution
            )
        });
    }
}

/// Nondecreasing vectors in `{0, …, max}ⁿ`, one representative per class under sign flips
/// and permutations, which preserve both the partition verdict and the optimal value.
fn partition_inputs(n: usize, max: i64) -> Vec<Vec<i64>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for head in partition_inputs(n - 1, max) {
        let lo = head.last().copied().unwrap_or(0);
        for v in lo..=max {
            let mut a = head.clone();
            a.push(v);
            out.push(a);
        }
    }
    out
}

fn criterion_8(out: &mut Outcome) {
    let inputs: Vec<Vec<i64>> = (1..=5).flat_map(|n| partition_inputs(n, 4)).collect();
    out.check(inputs.len() >= 100, || format!("only {} cases", inputs.len()));
    for a in &inputs {
        let report = check_lemma_cp(a, 1e-6).unwrap();
        out.check(report.consistent, || {
            format!("{a:?}: v(P0) {} with partition {:?}", report.v_p0, report.partition)
        });
        out.check(report.center_norm <= 1e-3, || format!("{a:?}: center norm {}", report.center_norm));
    }
}

fn criterion_9(out: &mut Outcome, suite: &[CcbInstance]) {
    for (k, inst) in suite.iter().enumerate() {
        let sqp = ccb::solve_sqp(inst, ccb::SQP_GAP_TOL).unwrap();
        let lp = uq_lp(&inner_uq(inst, &sqp.z_bar).unwrap()).unwrap();
        let rhs = lp.value + sqp.z_bar.norm_squared();
        out.check(rel_close(sqp.value, rhs, 1e-6), || {
            format!("instance {k}: v(SQP) {} vs v(LP) + |z|^2 {rhs}", sqp.value)
        });
    }
}

fn criterion_10(out: &mut Outcome, suite: &[CcbInstance]) {
    let eps = 1e-5;
    for (k, inst) in suite.iter().enumerate() {
        let bound = ccb::ellipsoid_iteration_bound(inst, eps);
        let sol = ccb::solve_ccb_ellipsoid(inst, eps, bound).unwrap();
        out.check(sol.iterations <= bound, || format!("instance {k}: {} > {bound} iterations", sol.iterations));
        // Any finite subset of Ω gives a lower bound on the optimum through its enclosing ball.
        let mut points: Vec<Vec<f64>> = sol.witnesses.iter().map(|w| w.iter().copied().collect()).collect();
        points.extend(
            sample_boundary(inst, &OracleConfig::default())
                .iter()
                .map(|s| s.iter().copied().collect::<Vec<f64>>()),
        );
        let lower = meb(&points).1.max(oracle_ccb(inst, &OracleConfig::default()).squared_radius);
        out.check(sol.squared_radius - lower <= eps, || {
            format!("instance {k}: value {} exceeds lower bound {lower} by more than eps", sol.squared_radius)
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for k in 0..50u64 {
        let p = rng.random_range(1..=8);
        let inst = generate(&GenConfig::new(2, p, 10_000 + k)).unwrap();
        let pairs = arc_decomposition(&inst).unwrap().pairs_examined;
        out.check(pairs == p * (p - 1) / 2, || format!("p {p}: {pairs} pairs examined"));
    }
}

type Criterion<'a> = (&'static str, Duration, Box<dyn Fn(&mut Outcome) + 'a>);

fn main() -> ExitCode {
    let suite = sandwich_suite();
    let criteria: Vec<Criterion> = vec![
        ("relaxation values of the one-dimensional family", Duration::from_secs(1), Box::new(criterion_1)),
        ("two-ball center and value", Duration::from_secs(1), Box::new(criterion_2)),
        ("semidefinite tightness for p <= n", Duration::from_secs(30), Box::new(criterion_3)),
        ("rounding ratio on recentered instances", Duration::from_secs(30), Box::new(criterion_4)),
        ("relaxed center sandwich", Duration::from_secs(120), Box::new(|o| criterion_5(o, &suite))),
        ("planar exactness", Duration::from_secs(60), Box::new(criterion_6)),
        ("enumeration against sampling", Duration::from_secs(60), Box::new(criterion_7)),
        ("partition reduction", Duration::from_secs(300), Box::new(criterion_8)),
        ("relaxed value equals inner bound", Duration::from_secs(60), Box::new(|o| criterion_9(o, &suite))),
        ("iteration bound and pair count", Duration::from_secs(300), Box::new(|o| criterion_10(o, &suite))),
    ];

    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let mut out = Outcome::new();
        let start = Instant::now();
        run(&mut out);
        let elapsed = start.elapsed();
        if elapsed > *limit {
            out.failures.push(format!("took {elapsed:?}, limit {limit:?}"));
        }
        let ok = out.failures.is_empty();
        failed += usize::from(!ok);
        println!(
            "{} criterion {:>2}: {name} ({} checks, {:.2?})",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            out.checked,
            elapsed
        );
        for f in out.failures.iter().take(5) {
            println!("      {f}");
        }
        if out.failures.len() > 5 {
            println!("      ... {} more", out.failures.len() - 5);
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
