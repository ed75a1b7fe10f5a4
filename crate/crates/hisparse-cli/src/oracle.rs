use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hisparse::measure::{gaussian_operator, normalize_columns, MeasurementOperator};
use hisparse::model::{FlatSparsity, SignalVector, SparsityTree, UnstructuredSparsity};
use hisparse::ripcalc::{exhaustive_rip, support_deviation};
use hisparse::solve::{restricted_least_squares, SolverOptions};
use hisparse::threshold::{
    brute_force_flat, brute_force_tree, select_top_k, threshold_flat, threshold_tree,
};

use crate::CliError;

#[derive(Args)]
pub struct OracleArgs {
    /// Randomized cases per suite.
    #[arg(long, default_value_t = 400)]
    pub cases: u64,
    /// Master seed; every case derives its own seed from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Test hook: corrupt one comparison to verify the failure path.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

struct Suite {
    name: &'static str,
    passed: u64,
    total: u64,
    first_failure_seed: Option<u64>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: 0,
            total: 0,
            first_failure_seed: None,
        }
    }

    fn record(&mut self, case_seed: u64, ok: bool) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.first_failure_seed.is_none() {
            self.first_failure_seed = Some(case_seed);
        }
    }

    fn report(&self) -> bool {
        println!("suite {}: {}/{} pass", self.name, self.passed, self.total);
        if let Some(seed) = self.first_failure_seed {
            println!("  first failing case seed: {seed}");
        }
        self.passed == self.total
    }
}

fn restricted_norm_sq(z: &SignalVector<f64>, omega: &[usize]) -> f64 {
    omega.iter().map(|&i| z[i] * z[i]).sum()
}

pub fn run(args: OracleArgs) -> Result<(), CliError> {
    if args.cases == 0 {
        return Err(CliError::invalid("cases: must be at least 1"));
    }
    let mut suites = Vec::new();

    // top-k against a full-sort oracle, with deliberate ties
    let mut topk = Suite::new("top-k vs sort");
    for case in 0..args.cases {
        let case_seed = args.seed.wrapping_add(case);
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let d = rng.gen_range(1..=16usize);
        let k = rng.gen_range(0..=d);
        let z = SignalVector::from(
            (0..d)
                .map(|_| {
                    if rng.gen_bool(0.25) {
                        0.0
                    } else {
                        (rng.gen_range(-4..=4i32)) as f64 / 2.0
                    }
                })
                .collect::<Vec<f64>>(),
        );
        let fast = select_top_k(&z, k).unwrap();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            (z[b] * z[b])
                .total_cmp(&(z[a] * z[a]))
                .then_with(|| a.cmp(&b))
        });
        let mut slow: Vec<usize> = order[..k].to_vec();
        slow.sort_unstable();
        topk.record(case_seed, fast == slow);
    }
    suites.push(topk);

    // two-level thresholding against exhaustive search
    let mut flat = Suite::new("flat threshold vs brute force");
    for case in 0..args.cases {
        let case_seed = args.seed.wrapping_add(1_000_000 + case);
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let blocks = rng.gen_range(1..=5usize);
        let block_size = rng.gen_range(1..=3usize);
        let s = rng.gen_range(1..=blocks);
        let sigma = rng.gen_range(1..=block_size);
        let fp = FlatSparsity::new(blocks, block_size, s, sigma).unwrap();
        let z = SignalVector::from(
            (0..fp.dim())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect::<Vec<f64>>(),
        );
        let fast = fp
            .flatten_support(&threshold_flat(&z, &fp).unwrap())
            .unwrap();
        let slow = fp
            .flatten_support(&brute_force_flat(&z, &fp).unwrap())
            .unwrap();
        let mut nf = restricted_norm_sq(&z, &fast);
        let nb = restricted_norm_sq(&z, &slow);
        if args.inject_fault && case == 0 {
            nf *= 0.9;
        }
        flat.record(case_seed, (nf - nb).abs() <= 1e-12 * nb.max(1e-12));
    }
    suites.push(flat);

    // tree thresholding against exhaustive search
    let mut tree_suite = Suite::new("tree threshold vs brute force");
    let shapes = [
        vec![(2usize, 1usize), (2, 1), (3, 2)],
        vec![(3, 2), (2, 1), (2, 2)],
        vec![(2, 2), (3, 1)],
        vec![(4, 2), (3, 1)],
    ];
    for case in 0..args.cases {
        let case_seed = args.seed.wrapping_add(2_000_000 + case);
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let tree = SparsityTree::from_levels(&shapes[case as usize % shapes.len()]).unwrap();
        let z = SignalVector::from(
            (0..tree.dim())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect::<Vec<f64>>(),
        );
        let fast = tree
            .flatten_support(&threshold_tree(&z, &tree).unwrap())
            .unwrap();
        let slow = tree
            .flatten_support(&brute_force_tree(&z, &tree).unwrap())
            .unwrap();
        let nf = restricted_norm_sq(&z, &fast);
        let nb = restricted_norm_sq(&z, &slow);
        tree_suite.record(case_seed, (nf - nb).abs() <= 1e-12 * nb.max(1e-12));
    }
    suites.push(tree_suite);

    // restricted isometry structure: monotonicity, nesting, union bound
    let rip_cases = (args.cases / 8).max(1);
    let mut rip = Suite::new("restricted isometry structure");
    for case in 0..rip_cases {
        let case_seed = args.seed.wrapping_add(3_000_000 + case);
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let m = rng.gen_range(6..=10usize);
        let raw = gaussian_operator(m, 8, case_seed).unwrap();
        let (op, _) = normalize_columns(&raw).unwrap();
        let base = exhaustive_rip(&op, &FlatSparsity::new(4, 2, 1, 1).unwrap())
            .unwrap()
            .delta_lower;
        let up_s = exhaustive_rip(&op, &FlatSparsity::new(4, 2, 2, 1).unwrap())
            .unwrap()
            .delta_lower;
        let up_sig = exhaustive_rip(&op, &FlatSparsity::new(4, 2, 1, 2).unwrap())
            .unwrap()
            .delta_lower;
        let unstructured = exhaustive_rip(&op, &UnstructuredSparsity::new(8, 1).unwrap())
            .unwrap()
            .delta_lower;
        let mut ok = base <= up_s + 1e-12 && base <= up_sig + 1e-12 && base <= unstructured + 1e-12;
        // union of two admissible supports against the summed budget
        let fp = FlatSparsity::new(4, 2, 1, 1).unwrap();
        let union_delta = exhaustive_rip(&op, &FlatSparsity::new(4, 2, 2, 2).unwrap())
            .unwrap()
            .delta_lower;
        for _ in 0..5 {
            let mut u = fp.sample_support(&mut rng);
            u.extend(fp.sample_support(&mut rng));
            u.sort_unstable();
            u.dedup();
            let dev = support_deviation(&op, &u).unwrap();
            ok &= dev <= union_delta + 1e-12;
        }
        rip.record(case_seed, ok);
    }
    suites.push(rip);

    // restricted least squares: gradient vanishes on the support
    let ls_cases = (args.cases / 4).max(1);
    let mut ls = Suite::new("least-squares minimality");
    for case in 0..ls_cases {
        let case_seed = args.seed.wrapping_add(4_000_000 + case);
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let op = gaussian_operator(12, 20, case_seed).unwrap();
        let y = SignalVector::from(
            (0..12)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect::<Vec<f64>>(),
        );
        let omega: Vec<usize> = rand::seq::index::sample(&mut rng, 20, 5).into_vec();
        let sol = restricted_least_squares(&op, &y, &omega, &SolverOptions::default()).unwrap();
        let grad = op
            .adjoint_apply(&y.sub(&op.apply(&sol.solution).unwrap()))
            .unwrap();
        let restricted = restricted_norm_sq(&grad, &omega).sqrt();
        let scale = op.adjoint_apply(&y).unwrap().norm();
        ls.record(case_seed, restricted <= 1e-10 * scale.max(1e-12));
    }
    suites.push(ls);

    let mut all_ok = true;
    for suite in &suites {
        all_ok &= suite.report();
    }
    if all_ok {
        println!("all suites green");
        Ok(())
    } else {
        Err(CliError {
            code: 1,
            message: "property violation detected".into(),
        })
    }
}
