//! Temporary diagnostics — deleted before commit.

use fairsvm::data::{synthesize, SyntheticConfig};
use fairsvm::linear_svm::{train_ssvm, CcpConfig};

#[test]
#[ignore]
fn probe_t18() {
    let config = SyntheticConfig { n: 50, seed: 118, ..SyntheticConfig::default() };
    let ds = synthesize(&config).expect("generator");
    let r = train_ssvm(&ds.x, &ds.y, &ds.z, 0.5, 0.0, &CcpConfig::with_mu(1.0));
    match r {
        Ok(m) => println!("t18: ok, {} iters", m.iterations),
        Err(e) => println!("t18: FAIL {e}"),
    }
}
