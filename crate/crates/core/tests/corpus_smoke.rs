mod common;

use common::{Gen, Sld};
use mtest_core::lang::{parse_goal, parse_program};
use mtest_core::modes::{analyze, check_determinism};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn generated_programs_analyze() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..50 {
        let g = Gen::new(&mut rng).program();
        let p = parse_program(&g.source).unwrap_or_else(|e| panic!("{}\n{}", e, g.source));
        let t = analyze(&p).unwrap_or_else(|e| panic!("{}\n{}", e, g.source));
        let procs: Vec<_> = t.iter().cloned().collect();
        assert!(
            check_determinism(&procs).is_empty(),
            "{}\n{:?}",
            g.source,
            check_determinism(&procs)
        );
        if i < 2 {
            println!("{}", g.source);
            for q in &g.queries {
                println!("{} -> {:?}", q, Sld::new(&p).answers(&parse_goal(q).unwrap()));
            }
        }
    }
}
