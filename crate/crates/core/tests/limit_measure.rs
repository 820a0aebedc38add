use bigjump_core::stats::MeanAcc;
use bigjump_core::{
    limit_f_mc, partial_sum_constant, AnnulusTestFn, LimitOptions, McConfig, MuInterval,
    ProcessSpec, RegVarLaw, Streams, TestFunctional,
};
use proptest::prelude::*;

fn sym(a: f64) -> RegVarLaw {
    RegVarLaw::symmetric(a).unwrap()
}

#[test]
fn spheres_carry_no_limit_mass() {
    let g = AnnulusTestFn::new(1.0, 2.0, 0.0, 1.0, 1.0).unwrap();
    let f = TestFunctional::new(g, AnnulusTestFn::radial(0.5, 4.0).unwrap(), 0.5, 0.5).unwrap();
    for spec in [
        ProcessSpec::iid(sym(1.5)),
        ProcessSpec::moving_average(sym(1.5), 0, vec![1.0, 0.5]).unwrap(),
    ] {
        let lim = limit_f_mc(
            &spec,
            1,
            &f,
            LimitOptions::default(),
            1_000_000,
            &Streams::new(31),
        )
        .unwrap();
        assert_eq!(lim.boundary_hits, 0);
        assert!(!lim.degenerate);
    }
}

#[test]
fn centered_noise_has_mean_zero() {
    let law = RegVarLaw::new(1.5, 0.3, 1.0, true).unwrap();
    let s = Streams::new(32);
    let batches: Vec<MeanAcc> = (0..100)
        .map(|b| {
            let mut acc = MeanAcc::default();
            for z in law.sample(&mut s.stream(b), 100_000) {
                acc.push(z);
            }
            acc
        })
        .collect();
    let bm = bigjump_core::stats::BatchMeans::from_batches(&batches);
    assert_eq!(bm.count(), 10_000_000);
    assert!(
        bm.mean().abs() <= 4.0 * bm.stderr(),
        "mean {} ± {}",
        bm.mean(),
        bm.stderr()
    );
}

proptest! {
    #[test]
    fn mu_is_homogeneous(
        alpha in 0.3f64..2.5,
        w in 0.0f64..=1.0,
        lo in 0.05f64..5.0,
        width in 0.01f64..10.0,
        u in 0.01f64..100.0,
        negative in any::<bool>(),
    ) {
        let law = RegVarLaw::new(alpha, w, 1.0, false).unwrap();
        let (a, b) = if negative { (-lo - width, -lo) } else { (lo, lo + width) };
        let base = law.mu_interval(MuInterval::new(a, b).unwrap());
        let scaled = law.mu_interval(MuInterval::new(u * a, u * b).unwrap());
        let target = u.powf(-alpha) * base;
        prop_assert!((scaled - target).abs() <= 1e-12 * target.abs().max(1e-300));
    }

    #[test]
    fn signed_partial_sum_constant_is_below_absolute(
        alpha in 0.5f64..1.95,
        w in 0.0f64..=1.0,
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..5),
        rho in 0.1f64..5.0,
    ) {
        prop_assume!(coeffs.iter().any(|c| c.abs() > 1e-3));
        let noise = RegVarLaw::new(alpha, w, 1.0, false).unwrap();
        let spec = ProcessSpec::moving_average(noise, 0, coeffs).unwrap();
        let cfg = McConfig::new(0);
        let signed = partial_sum_constant(&spec, rho, false, &cfg).unwrap().value;
        let abs = partial_sum_constant(&spec, rho, true, &cfg).unwrap().value;
        prop_assert!(signed <= abs * (1.0 + 1e-12), "{signed} > {abs}");
    }
}
