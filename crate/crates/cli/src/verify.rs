//! The `verify` subcommand: seeded comparisons against brute force.

use clap::Args;
use orbitprio_core::bench::{
    generate_suite, synthetic_schedule, SYNTHETIC_SLOTS, SYNTHETIC_UNIQUE,
};
use orbitprio_core::codec::{compression_ratio, decode_schedule, encode_schedule};
use orbitprio_core::formula::{confidence, ExecutionState, FilterId};
use orbitprio_core::runtime::Thresholds;
use orbitprio_core::sbfe::exact_expected_cost;
use orbitprio_core::scenario::{build_scenario, ScenarioName};
use orbitprio_core::schedule::Schedule;
use orbitprio_oracles::random;
use orbitprio_oracles::{joint_satisfaction_probability, min_decision_tree_cost};
use rand::Rng;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Multiplies every suite's case count.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

struct Suite {
    name: &'static str,
    cases: usize,
    failure: Option<String>,
}

fn confidence_suite(seed: u64, cases: usize) -> Option<String> {
    for k in 0..cases as u64 {
        let mut r = random::rng(seed ^ (k << 20));
        let n = r.gen_range(1..=12);
        let catalog = random::catalog(&mut r, n);
        let f = random::disjoint_formula(&mut r, n);
        let mut state = ExecutionState::new();
        for i in 0..n as u16 {
            if r.gen_bool(0.3) {
                let recorded = catalog
                    .get(FilterId(i))
                    .and_then(|filter| state.record(filter, r.gen_bool(0.5)));
                if let Err(e) = recorded {
                    return Some(format!("case {k}: {e}"));
                }
            }
        }
        let got = match confidence(&f, &state, &catalog) {
            Ok(c) => c,
            Err(e) => return Some(format!("case {k}: {e}")),
        };
        let want = joint_satisfaction_probability(&f, &state, &catalog);
        if (got - want).abs() > 1e-12 {
            return Some(format!("case {k}: {got} vs {want}"));
        }
    }
    None
}

fn exact_suite(seed: u64, cases: usize) -> Option<String> {
    for k in 0..cases as u64 {
        let mut r = random::rng(seed ^ (k << 24) ^ 0x5eed);
        let n = r.gen_range(1..=6);
        let catalog = random::catalog(&mut r, n);
        let f = random::formula(&mut r, n, 4, false);
        let th = if r.gen_bool(0.5) {
            Thresholds::EXHAUSTIVE
        } else {
            let beta = r.gen_range(0.0..0.3);
            match Thresholds::new(beta, r.gen_range(beta + 0.01..=1.0)) {
                Ok(th) => th,
                Err(e) => return Some(format!("case {k}: {e}")),
            }
        };
        let exact = match exact_expected_cost(&f, &catalog, th) {
            Ok(c) => c,
            Err(e) => return Some(format!("case {k}: {e}")),
        };
        let tree = min_decision_tree_cost(&f, &catalog, th.beta, th.alpha);
        if (exact - tree).abs() > 1e-9 {
            return Some(format!("case {k}: {exact} vs {tree}"));
        }
    }
    None
}

fn random_schedule(r: &mut impl Rng) -> Schedule {
    let n = r.gen_range(2..=12);
    let pool: Vec<_> = (0..r.gen_range(1..=20)).map(|_| random::formula(r, n, 4, false)).collect();
    let slots = r.gen_range(0..400);
    let mut v = Vec::with_capacity(slots);
    while v.len() < slots {
        let f = if r.gen_bool(0.2) { None } else { Some(pool[r.gen_range(0..pool.len())].clone()) };
        let run = r.gen_range(1..=30).min(slots - v.len());
        v.extend(std::iter::repeat(f).take(run));
    }
    Schedule::from_slots(v)
}

fn codec_suite(seed: u64, cases: usize) -> Option<String> {
    for k in 0..cases as u64 {
        let mut r = random::rng(seed ^ (k << 16) ^ 0xc0dec);
        let s = random_schedule(&mut r);
        let back = encode_schedule(&s).and_then(|b| decode_schedule(&b));
        if back.as_ref() != Ok(&s) {
            return Some(format!("case {k}: round trip changed the schedule"));
        }
    }
    let specs: Vec<_> = match ScenarioName::ALL.iter().map(|&n| build_scenario(n, seed)).collect() {
        Ok(s) => s,
        Err(e) => return Some(e.to_string()),
    };
    let pool = match generate_suite(&specs, 15, 2000, seed) {
        Ok(p) => p,
        Err(e) => return Some(e.to_string()),
    };
    let s = synthetic_schedule(&pool, SYNTHETIC_SLOTS, SYNTHETIC_UNIQUE, seed);
    match compression_ratio(&s) {
        Ok(ratio) if ratio >= 20.0 => None,
        Ok(ratio) => Some(format!("synthetic schedule compresses only {ratio:.1}x")),
        Err(e) => Some(e.to_string()),
    }
}

fn percentile_suite(seed: u64, cases: usize) -> Option<String> {
    for k in 0..cases as u64 {
        let mut r = random::rng(seed ^ (k << 12) ^ 0x9e7c);
        let n = r.gen_range(0..60);
        // coarse values so ties are common
        let xs: Vec<f64> = (0..n).map(|_| r.gen_range(0..25) as f64 * 0.5).collect();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        for q in [0.0, 0.1, 0.5, 0.9, 0.95, 1.0, r.gen_range(0.0..=1.0)] {
            let got = orbitprio_sim::metrics::percentile(&sorted, q);
            let want = orbitprio_oracles::percentile(&xs, q);
            if got != want {
                return Some(format!("case {k}, q {q}: {got:?} vs {want:?}"));
            }
        }
    }
    None
}

pub fn execute(args: VerifyArgs) -> Result<(), String> {
    if !(args.scale.is_finite() && args.scale > 0.0) {
        return Err("scale: must be positive".into());
    }
    let n = |base: f64| ((base * args.scale).round() as usize).max(1);
    let plan: [(&'static str, usize, fn(u64, usize) -> Option<String>); 4] = [
        ("confidence vs enumeration", n(1000.0), confidence_suite),
        ("exact vs decision trees", n(200.0), exact_suite),
        ("codec round trip", n(1000.0), codec_suite),
        ("percentile vs reference", n(1000.0), percentile_suite),
    ];
    let suites: Vec<Suite> = plan
        .into_iter()
        .map(|(name, cases, f)| Suite { name, cases, failure: f(args.seed, cases) })
        .collect();
    let mut failed = 0;
    for s in &suites {
        match &s.failure {
            None => println!("PASS {} ({} cases)", s.name, s.cases),
            Some(why) => {
                failed += 1;
                println!("FAIL {} ({} cases): {why}", s.name, s.cases);
            }
        }
    }
    if failed > 0 {
        Err(format!("{failed} of {} suites failed", suites.len()))
    } else {
        Ok(())
    }
}
