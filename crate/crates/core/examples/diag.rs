use auclab_core::boost::*;

fn main() {
    for (dim, sep) in [(10usize, 0.6f64), (16, 0.5), (20, 0.45)] {
        println!("== dim {dim} sep {sep}");
        for seed in [42u64, 7, 123] {
            let spec = GaussianSpec { dim, separation: sep, positive_fraction: 0.5 };
            let rep = equivalence_experiment(&spec, &[100, 1000, 10000], 100, 20, seed);
            let gaps: Vec<f64> = rep.summaries.iter().map(|s| s.median_auc_gap).collect();
            let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
            println!(
                "  seed {seed}: gaps {:?} monotone={monotone} final_ok={}",
                gaps.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>(),
                gaps[2] < 0.02
            );
        }
    }
}
