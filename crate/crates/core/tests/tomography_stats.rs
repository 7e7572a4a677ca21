mod common;

use rayon::prelude::*;

use revival::channels::{state_maximal, KappaParam};
use revival::qcore::{fidelity, DensityMatrix4};
use revival::tomography::{linear_reconstruct, mle_reconstruct, project_psd, simulate_counts, CountRecord};

use common::{min_eigenvalue, random_pure, random_state, rng};

fn physical(rho: &DensityMatrix4) -> bool {
    (rho.matrix().trace().re - 1.0).abs() <= 1e-10 && min_eigenvalue(rho) >= -1e-9
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn noiseless_counts_recover_random_states() {
    let mut r = rng(1);
    let states: Vec<DensityMatrix4> = (0..40)
        .map(|i| {
            if i % 4 == 0 {
                random_pure(&mut r)
            } else {
                random_state(&mut r)
            }
        })
        .collect();
    states.par_iter().for_each(|rho| {
        let counts = simulate_counts(rho, 1_000_000, 0, true).unwrap();
        let rec = mle_reconstruct(&counts).unwrap();
        assert!(physical(&rec.state));
        let f = fidelity(rho, &rec.state).unwrap();
        assert!(f >= 0.9999, "fidelity {f}");
    });
}

#[test]
fn fit_never_worsens_the_seed() {
    (0..50u64).into_par_iter().for_each(|seed| {
        let rho = random_state(&mut rng(1000 + seed));
        let counts = simulate_counts(&rho, 1_000, seed, false).unwrap();
        let rec = mle_reconstruct(&counts).unwrap();
        assert!(physical(&rec.state));
        assert!(rec.nll <= rec.initial_nll + 1e-12, "{} > {}", rec.nll, rec.initial_nll);
    });
}

#[test]
fn low_count_pure_state_is_physical() {
    let rho = random_pure(&mut rng(3));
    let counts = simulate_counts(&rho, 10_000, 5, false).unwrap();
    let linear = linear_reconstruct(&counts).unwrap();
    let projected = project_psd(&linear).unwrap();
    assert!(physical(&projected));
    let rec = mle_reconstruct(&counts).unwrap();
    assert!(physical(&rec.state));
    assert!(fidelity(&rho, &rec.state).unwrap() > 0.99);
}

#[test]
fn error_shrinks_with_more_counts() {
    let model = state_maximal(KappaParam::real(0.5).unwrap());
    let errors: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&n| {
            let errs = (0..20u64)
                .into_par_iter()
                .map(|seed| {
                    let counts = simulate_counts(&model, n, seed, false).unwrap();
                    let rec = mle_reconstruct(&counts).unwrap();
                    (2.0 * rec.state.entry(3, 0).norm() - 0.5).abs()
                })
                .collect();
            median(errs)
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn same_seed_same_counts() {
    let rho = random_state(&mut rng(4));
    let a = simulate_counts(&rho, 50_000, 9, false).unwrap();
    let b = simulate_counts(&rho, 50_000, 9, false).unwrap();
    let c = simulate_counts(&rho, 50_000, 10, false).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn all_zero_counts_are_rejected() {
    let counts: Vec<CountRecord> = (0..16).map(|setting_id| CountRecord { setting_id, count: 0 }).collect();
    assert!(mle_reconstruct(&counts).is_err());
    assert!(mle_reconstruct(&counts[..15]).is_err());
}
