mod common;

use common::{catch_oracle, gen_nesting, program, run_off};

#[test]
fn will_be_caught_matches_unwinding() {
    let (agree, caught, first_bad) = catch_oracle(1000);
    assert_eq!(first_bad, None);
    assert_eq!(agree, 1000);
    // both answers must be well represented
    assert!(caught > 200 && caught < 800, "caught {caught} of 1000");
}

#[test]
fn dry_run_point_count_matches_model() {
    for seed in 1..50 {
        let n = gen_nesting(seed);
        let r = run_off(&program(&n.source(-1)), "Main");
        let dots = r.stdout.lines().filter(|l| *l == ".").count() as i64;
        assert_eq!(dots, n.simulate(-1).1, "seed {seed}");
    }
}
