//! End-to-end acceptance run. Every criterion is evaluated twice, inside a
//! one-thread and an eight-thread pool; the serialized artifacts of the two
//! runs must be byte-identical. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use orthant::env::trial_seed;
use orthant::lattice::thresholds;
use orthant::reach::{boundary_function, Level};
use orthant::stats::{
    gamma_estimate, greedy_success_rate, passage, passage_chain, shape_sample, GammaConfig, GammaEstimate, Margins, ShapeConfig, Variant,
};
use orthant::verify::{check_cone_tail, coupling_suite, oracle_sweep, theorem_l_suite, ConeTailConfig};
use orthant::{EnvironmentSpec, Model, Point, Prob, Window};

struct Outcome {
    pass: bool,
    detail: String,
    artifact: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn pt(c: &[i64]) -> Point {
    Point::new(c.to_vec()).unwrap()
}

fn prob(s: &str) -> Prob {
    s.parse().unwrap()
}

/// `", first: ..."` for a non-empty failure list.
fn first(bad: &[String]) -> String {
    bad.first().map(|b| format!(", first: {b}")).unwrap_or_default()
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or("none".to_string(), T::to_string)
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap()
}

/// Small deterministic integer stream for drawing test cases.
struct Draw(u64, u64);

impl Draw {
    fn new(seed: u64) -> Self {
        Draw(seed, 0)
    }

    fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.1 += 1;
        lo + (trial_seed(self.0, self.1) % (hi - lo + 1) as u64) as i64
    }
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let r = oracle_sweep(&[-1, -1], &[1, 1]).unwrap();
    let fast = t.elapsed() < Duration::from_secs(60);
    Outcome {
        pass: r.pass && r.cases == 1024 && fast,
        detail: format!("{} environments (512 per model), {} failures, {:.1?}", r.cases, r.failures.len(), t.elapsed()),
        artifact: json(&r),
    }
}

fn theorem_l() -> Outcome {
    let t = Instant::now();
    let seeds: Vec<u64> = (0..20).collect();
    let r = theorem_l_suite(&seeds, prob("0.8"), &Window::cube(2, 40).unwrap(), 15, true).unwrap();
    let fast = t.elapsed() < Duration::from_secs(60);
    let compared = r.metrics["compared"];
    let control = r.metrics["control_mismatches"];
    Outcome {
        pass: r.pass && compared > 0.0 && control > 0.0 && fast,
        detail: format!("{compared} interior base points compared, {} mismatches; decoupled control {control} mismatches; {:.1?}", r.failures.len(), t.elapsed()),
        artifact: json(&r),
    }
}

fn diagonal_shift_identity() -> Outcome {
    let mut draw = Draw::new(3);
    let mut bad = Vec::new();
    let mut cases = Vec::new();
    for case in 0..100 {
        let d = if case % 2 == 0 { 2 } else { 3 };
        let u: Vec<i64> = (0..d).map(|_| draw.int(-3, 3)).collect();
        let r = draw.int(-4, 4);
        let n = draw.int(2, 12) as u64;
        let seed = draw.int(0, 1 << 30) as u64;
        let env = EnvironmentSpec::new(Model::HalfOrthant, prob("0.9"), seed, d).unwrap();
        let u = pt(&u);
        let shifted = u.shift_diag(r).unwrap();
        let a = passage(&env, &u, n, Variant::Beta, &Margins::default()).unwrap();
        let b = passage(&env, &shifted, n, Variant::Beta, &Margins::default()).unwrap();
        let want = match a.value {
            Level::Finite(k) => Level::Finite(k - n as i64 * r),
            other => other,
        };
        if b.value != want || a.censored != b.censored {
            bad.push(format!("u={u} r={r} n={n} seed={seed}: {} vs {}", b.value, want));
        }
        cases.push((a, b));
    }
    Outcome { pass: bad.is_empty(), detail: format!("100 cases, {} mismatches{}", bad.len(), first(&bad)), artifact: json(&cases) }
}

fn all_plus_closed_forms() -> Outcome {
    let grid: [&[i64]; 20] = [
        &[0, 1], &[0, 3], &[1, 0], &[2, -1], &[-1, 2], &[-2, -1], &[3, -3], &[-4, 1], &[0, -2], &[5, 0],
        &[0, 1, 2], &[1, -1, 0], &[-2, 0, 3], &[1, 1, -1], &[0, 0, 1], &[-1, -1, 2], &[3, 0, -2], &[2, -3, 1], &[0, 4, 0], &[-1, 2, -1],
    ];
    let mut bad = Vec::new();
    let mut artifacts = Vec::new();
    for model in [Model::Orthant, Model::HalfOrthant] {
        for c in grid {
            let u = pt(c);
            let d = u.dim();
            let want = u.max_negative_part();
            let cfg = GammaConfig::new(model, Prob::ONE, d);
            let g = gamma_estimate(&cfg, &u).unwrap();
            if g.gamma_ratio != Some(Ratio::from_integer(want as i128)) || g.trials_consumed != 0 {
                bad.push(format!("{model} gamma({u}) = {:?}, want {want}", g.gamma_exact));
            }
            // the closed form against an actual cluster computation
            let env = EnvironmentSpec::new(model, Prob::ONE, 0, d).unwrap();
            let b = passage(&env, &u, 5, Variant::Beta, &Margins::default()).unwrap();
            if b.usable() != Some(5 * want) {
                bad.push(format!("{model} beta_5({u}) = {} censored={}", b.value, b.censored));
            }
            artifacts.push(json(&g));
        }
    }
    for d in [2usize, 3] {
        let s = shape_sample(&ShapeConfig::new(GammaConfig::new(Model::HalfOrthant, Prob::ONE, d))).unwrap();
        let (zero, one) = (Ratio::from_integer(0), Ratio::from_integer(1));
        for i in 0..d {
            let mut e = vec![zero; d];
            e[i] = one;
            if !s.points().any(|p| p.ratios == e) {
                bad.push(format!("d={d}: vertex e{} missing", i + 1));
            }
        }
        if s.points().any(|p| p.ratios.iter().any(|r| *r < zero) || p.ratios.iter().sum::<Ratio<i128>>() != one) {
            bad.push(format!("d={d}: point off the simplex"));
        }
        if d == 2 && s.points().any(|p| !p.ratios.contains(&zero)) {
            bad.push("d=2: shape is not the segment between the vertices".into());
        }
        artifacts.push(json(&s));
    }
    for model in [Model::Orthant, Model::HalfOrthant] {
        let env = EnvironmentSpec::new(model, Prob::ONE, 0, 3).unwrap();
        let l = boundary_function(&env, &Point::origin(3), &Window::cube(3, 6).unwrap()).unwrap();
        for (b, v, _) in l.iter() {
            let want = if b.iter().all(|&c| c >= 0) { Level::Finite(0) } else { Level::PosInf };
            if v != want {
                bad.push(format!("{model} L({b:?}) = {v}, want {want}"));
            }
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("20 directions x 2 models, shapes d=2,3, boundary functions; {} mismatches{}", bad.len(), first(&bad)), artifact: artifacts.join("\n") }
}

fn diagonal_and_origin() -> Outcome {
    let mut bad = Vec::new();
    let mut samples = 0u64;
    let mut worst = i64::MIN;
    let margins = Margins { pad: Some(6), ..Margins::default() };
    for d in [2usize, 3] {
        for p in ["0.9", "0.95"] {
            let cfg = GammaConfig::new(Model::HalfOrthant, prob(p), d);
            for r in -3..=3 {
                let g = gamma_estimate(&cfg, &Point::ones(d).scale(r).unwrap()).unwrap();
                if g.gamma_ratio != Some(Ratio::from_integer(-r as i128)) || g.trials_consumed != 0 {
                    bad.push(format!("d={d} p={p} gamma({r} 1) = {:?}", g.gamma_exact));
                }
            }
            for i in 0..2500u64 {
                let env = cfg.env(i);
                let b = passage(&env, &Point::origin(d), 1, Variant::Beta, &margins).unwrap();
                samples += 1;
                match b.value {
                    Level::Finite(k) if k <= 0 => worst = worst.max(k),
                    other => bad.push(format!("d={d} p={p} trial {i}: beta_1(o) = {other}")),
                }
            }
        }
    }
    Outcome {
        pass: bad.is_empty() && samples == 10_000,
        detail: format!("gamma(r1) = -r for r in -3..=3; beta_1(o) <= 0 on {samples} environments (max {worst}); {} failures", bad.len()),
        artifact: format!("{samples} {worst} {bad:?}"),
    }
}

fn ordering_chain() -> Outcome {
    let mut draw = Draw::new(6);
    let mut bad = Vec::new();
    let mut full = 0;
    let mut chains = Vec::new();
    for _ in 0..100 {
        let u = loop {
            let u = pt(&[draw.int(-3, 3), draw.int(-3, 3)]);
            if !u.is_diagonal() {
                break u;
            }
        };
        let seed = draw.int(0, 1 << 30) as u64;
        let env = EnvironmentSpec::new(Model::HalfOrthant, prob("0.95"), seed, 2).unwrap();
        let c = passage_chain(&env, &u, 50, &Margins::default()).unwrap();
        let usable: Vec<&_> = c.iter().filter(|v| !v.censored).collect();
        full += usize::from(usable.len() == 4);
        for w in usable.windows(2) {
            if w[0].value > w[1].value {
                bad.push(format!("u={u} seed={seed}: {} {} > {} {}", w[0].variant, w[0].value, w[1].variant, w[1].value));
            }
        }
        chains.push(c);
    }
    Outcome {
        pass: bad.is_empty() && full > 50,
        detail: format!("100 cases, {full} fully uncensored, {} order violations{}", bad.len(), first(&bad)),
        artifact: json(&chains),
    }
}

const GRID: [[i64; 2]; 12] = [[1, 0], [0, 1], [1, -1], [-1, 1], [2, -1], [-1, 2], [2, 1], [1, 2], [3, 1], [1, 3], [2, 0], [0, 2]];

fn gamma_properties() -> Outcome {
    let t = Instant::now();
    let cfg = GammaConfig::new(Model::HalfOrthant, prob("0.95"), 2);
    let est: Vec<GammaEstimate> = GRID.iter().map(|u| gamma_estimate(&cfg, &pt(u)).unwrap()).collect();
    let g = |i: usize| est[i].gamma_hat.unwrap();
    let se = |is: &[usize]| is.iter().map(|&i| est[i].se.powi(2)).sum::<f64>().sqrt();
    let find = |u: [i64; 2]| GRID.iter().position(|&w| w == u);
    let mut bad = Vec::new();
    let mut checks = [0usize; 4];
    if let Some(i) = est.iter().position(|e| e.unreliable || e.gamma_hat.is_none()) {
        bad.push(format!("unreliable estimate at {}", est[i].u));
    }
    for i in 0..GRID.len() {
        if let Some(j) = find([GRID[i][1], GRID[i][0]]) {
            checks[0] += 1;
            if (g(i) - g(j)).abs() > 2.0 * se(&[i, j]) {
                bad.push(format!("symmetry {:?} {:?}: {} vs {}", GRID[i], GRID[j], g(i), g(j)));
            }
        }
        for j in 0..GRID.len() {
            let l1 = ((GRID[i][0] - GRID[j][0]).abs() + (GRID[i][1] - GRID[j][1]).abs()) as f64;
            checks[1] += 1;
            if (g(i) - g(j)).abs() > l1 + 2.0 * se(&[i, j]) {
                bad.push(format!("lipschitz {:?} {:?}", GRID[i], GRID[j]));
            }
            if let Some(k) = find([GRID[i][0] + GRID[j][0], GRID[i][1] + GRID[j][1]]) {
                checks[3] += 1;
                if g(k) > g(i) + g(j) + 2.0 * se(&[i, j, k]) {
                    bad.push(format!("subadditivity {:?} + {:?}: {} > {} + {}", GRID[i], GRID[j], g(k), g(i), g(j)));
                }
            }
        }
        checks[2] += 1;
        let floor = -((GRID[i][0] + GRID[i][1]) as f64) / 2.0;
        if g(i) < floor - 2.0 * est[i].se {
            bad.push(format!("lower bound {:?}: {} < {floor}", GRID[i], g(i)));
        }
    }
    let fast = t.elapsed() < Duration::from_secs(600);
    Outcome {
        pass: bad.is_empty() && fast,
        detail: format!(
            "12 directions; symmetry {} / Lipschitz {} / lower bound {} / subadditivity {} checks; {} violations{}; {:.1?}",
            checks[0], checks[1], checks[2], checks[3], bad.len(), first(&bad), t.elapsed()
        ),
        artifact: json(&est),
    }
}

fn e1_negative_and_greedy() -> Outcome {
    let cfg = GammaConfig::new(Model::HalfOrthant, prob("0.95"), 2);
    let g = gamma_estimate(&cfg, &pt(&[1, 0])).unwrap();
    let gamma = g.gamma_hat.unwrap();
    let walk = GammaConfig { trials: 4000, seed_base: 8, ..cfg.clone() };
    let rates: Vec<f64> = [50, 100, 200].iter().map(|&n| greedy_success_rate(&walk, 21, n).unwrap()).collect();
    let increasing = rates.windows(2).all(|w| w[1] > w[0]);
    Outcome {
        pass: gamma < 0.0 && increasing,
        detail: format!("gamma_hat(e1) = {gamma:.4} +- {:.4}; greedy success at k=21, n=50/100/200: {rates:.3?}", g.half_width),
        artifact: format!("{}\n{rates:?}", json(&g)),
    }
}

fn coupling() -> Outcome {
    let seeds: Vec<u64> = (0..10).collect();
    let grid = [prob("0.5"), prob("0.7"), prob("0.9")];
    let r = coupling_suite(&seeds, &grid, &Window::cube(2, 20).unwrap()).unwrap();
    Outcome {
        pass: r.pass,
        detail: format!(
            "{} (seed, p1, p2) pairs, {} half-orthant violations; orthant control: {} violating pairs",
            r.cases,
            r.failures.len(),
            r.metrics["orthant_violating_pairs"]
        ),
        artifact: json(&r),
    }
}

fn cone_tail() -> Outcome {
    let mut slopes = Vec::new();
    let mut pass = true;
    let mut artifacts = Vec::new();
    for model in [Model::HalfOrthant, Model::Orthant] {
        let cfg = ConeTailConfig { seed_base: 10, ..ConeTailConfig::new(model, prob("0.95"), 2) };
        let r = check_cone_tail(&cfg).unwrap();
        let slope = r.metrics.get("slope").copied().unwrap_or(f64::NAN);
        pass &= r.pass && slope < 0.0;
        slopes.push(format!("{model} {slope:.3}"));
        artifacts.push(json(&r));
    }
    Outcome { pass, detail: format!("log-frequency slopes over m = 0..8, 2000 trials: {}", slopes.join(", ")), artifact: artifacts.join("\n") }
}

fn threshold_values() -> Outcome {
    let q = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
    let t2 = thresholds(2, 0, 1).unwrap();
    let t3 = thresholds(3, 0, 1).unwrap();
    let got = (t2.p0.exact.clone(), t2.p1.clone(), t3.theta, t3.p0.exact.clone());
    let pass = got == (Some(q(8, 9)), q(6560, 6561), 5, Some(q(24, 25)));
    Outcome { pass, detail: format!("p0(0,2) = {}, p1(2) = {}, theta(3) = {}, p0(0,3) = {}", opt(&got.0), got.1, got.2, opt(&got.3)), artifact: format!("{got:?}") }
}

fn run_all(criteria: &[Criterion], threads: usize) -> Vec<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| criteria.iter().map(|(_, f)| f()).collect())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("oracle equivalence on the 3x3 box", oracle_equivalence),
        ("left boundaries of coupled orthant/half-orthant clusters", theorem_l),
        ("diagonal shift identity for beta_n", diagonal_shift_identity),
        ("closed forms at p = 1", all_plus_closed_forms),
        ("gamma(r1) = -r and beta_1(o) <= 0", diagonal_and_origin),
        ("ordering beta <= beta1 <= beta0 <= B", ordering_chain),
        ("properties of gamma_hat at p = 0.95", gamma_properties),
        ("gamma_hat(e1) < 0 with greedy witness", e1_negative_and_greedy),
        ("coupling monotonicity of the half-orthant cluster", coupling),
        ("cone-tail log-frequency slope", cone_tail),
        ("threshold calculator", threshold_values),
    ];
    let start = Instant::now();
    let single = run_all(&criteria, 1);
    let multi = run_all(&criteria, 8);
    let mut failed = 0;
    for (i, ((name, _), (a, b))) in criteria.iter().zip(single.iter().zip(&multi)).enumerate() {
        let pass = a.pass && b.pass;
        failed += usize::from(!pass);
        println!("{} criterion {:>2} {name}: {}", if pass { "PASS" } else { "FAIL" }, i + 1, a.detail);
    }
    let differing: Vec<usize> = single.iter().zip(&multi).enumerate().filter(|(_, (a, b))| a.artifact != b.artifact).map(|(i, _)| i + 1).collect();
    let bytes: usize = single.iter().map(|o| o.artifact.len()).sum();
    println!(
        "{} criterion 12 determinism across runs with 1 and 8 threads: {} artifact bytes compared, differing criteria {differing:?}",
        if differing.is_empty() { "PASS" } else { "FAIL" },
        bytes
    );
    failed += usize::from(!differing.is_empty());
    println!("acceptance: {} of 12 criteria passed in {:.1?}", 12 - failed, start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
