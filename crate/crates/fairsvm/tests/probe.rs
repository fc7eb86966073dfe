//! Temporary diagnostics — deleted before commit.

use fairsvm::data::{split, standardize, synthesize, SyntheticConfig};
use fairsvm::kernel_svm::{train_fair_ksvm, Kernel};
use fairsvm::linear_svm::{train_ssvm, CcpConfig};

#[test]
#[ignore]
fn probe_linear_grid() {
    for t in 0..30u64 {
        let config = SyntheticConfig {
            n: 30 + (t as usize % 4) * 10,
            seed: 100 + t,
            ..SyntheticConfig::default()
        };
        let ds = synthesize(&config).expect("generator");
        let d = [0.0, 0.01, 0.05][t as usize % 3];
        let mu = [1.0, 5.0, 20.0][(t as usize / 3) % 3];
        let lambda = [0.5, 1.0, 2.0][t as usize % 3];
        let r = train_ssvm(&ds.x, &ds.y, &ds.z, lambda, d, &CcpConfig::with_mu(mu));
        match r {
            Ok(m) => println!(
                "t={t} n={} d={d} mu={mu} lambda={lambda}: ok, {} iters",
                config.n, m.iterations
            ),
            Err(e) => println!(
                "t={t} n={} d={d} mu={mu} lambda={lambda}: FAIL {e}",
                config.n
            ),
        }
    }
}

#[test]
#[ignore]
fn probe_kernel_grid() {
    let kernels = [
        Kernel::Linear,
        Kernel::Rbf { gamma: 0.5 },
        Kernel::Rbf { gamma: 1.0 },
        Kernel::Poly { degree: 2, offset: 1.0 },
    ];
    for t in 0..25u64 {
        let config = SyntheticConfig {
            n: 24 + (t as usize % 3) * 8,
            seed: 200 + t,
            ..SyntheticConfig::default()
        };
        let ds = synthesize(&config).expect("generator");
        let kernel = &kernels[t as usize % kernels.len()];
        let d = [0.0, 0.02, 0.05][t as usize % 3];
        let mu = [1.0, 5.0, 20.0][(t as usize / 5) % 3];
        let lambda = [0.3, 0.5, 1.0][t as usize % 3];
        let r = train_fair_ksvm(&ds.x, &ds.y, &ds.z, kernel, lambda, d, &CcpConfig::with_mu(mu));
        match r {
            Ok(m) => println!(
                "t={t} n={} k={kernel:?} d={d} mu={mu} lambda={lambda}: ok, {} iters",
                config.n, m.iterations
            ),
            Err(e) => println!(
                "t={t} n={} k={kernel:?} d={d} mu={mu} lambda={lambda}: FAIL {e}",
                config.n
            ),
        }
    }
}

#[test]
#[ignore]
fn probe_poly_case() {
    let config = SyntheticConfig {
        n: 24,
        seed: 203,
        ..SyntheticConfig::default()
    };
    let ds = synthesize(&config).expect("generator");
    let r = train_fair_ksvm(
        &ds.x,
        &ds.y,
        &ds.z,
        &Kernel::Poly { degree: 2, offset: 1.0 },
        0.3,
        0.0,
        &CcpConfig::with_mu(1.0),
    );
    match r {
        Ok(m) => println!("poly case: ok, {} iters", m.iterations),
        Err(e) => println!("poly case: FAIL {e}"),
    }
}

#[test]
#[ignore]
fn probe_kernel_scales() {
    use fairsvm::fairness::{kernel_covariance_gap, GroupIndex};
    use fairsvm::kernel_svm::gram;
    let ds = synthesize(&SyntheticConfig::default()).expect("generator");
    let (train, _) = split(&ds, 0.7, 5).expect("split");
    let train_s = standardize(&train);
    let k = gram(&Kernel::Linear, &train_s.x, &train_s.x).expect("gram");
    let group = GroupIndex::from_z(&train_s.z).expect("group");
    let k_plus = k.select_rows(&group.pos).transpose();
    let k_minus = k.select_rows(&group.neg).transpose();
    let gap = kernel_covariance_gap(&k_plus, &k_minus, &group).expect("gap");
    println!(
        "scales: |K|max={:.3e} |gap|max={:.3e} |U+|max={:.3e} |U-|max={:.3e} n={}",
        k.max_abs(),
        gap.gap.max_abs(),
        gap.split.u_plus.max_abs(),
        gap.split.u_minus.max_abs(),
        train_s.x.rows()
    );
}

#[test]
#[ignore]
fn probe_kernel_case() {
    let ds = synthesize(&SyntheticConfig::default()).expect("generator");
    let (train, _) = split(&ds, 0.7, 5).expect("split");
    let train_s = standardize(&train);
    let r = train_fair_ksvm(
        &train_s.x,
        &train_s.y,
        &train_s.z,
        &Kernel::Linear,
        0.5,
        0.0,
        &CcpConfig::with_mu(20.0),
    );
    match r {
        Ok(m) => println!("kernel case: ok, {} iters", m.iterations),
        Err(e) => println!("kernel case: FAIL {e}"),
    }
}

#[test]
#[ignore]
fn probe_criterion3_detail() {
    use fairsvm::fairness::covariance_gap;
    use fairsvm::linear_svm::{decision_values, train_zsvm};
    use fairsvm::metrics::dp_delta;
    let (lambda, d) = (1.0, 0.075);
    for seed in 0..20u64 {
        let ds = synthesize(&SyntheticConfig { seed, ..SyntheticConfig::default() }).unwrap();
        let gap = covariance_gap(&ds.x, &ds.z).unwrap();
        let zsvm = train_zsvm(&ds.x, &ds.y, &ds.z, lambda, d).unwrap();
        let dp_z = dp_delta(&decision_values(&zsvm, &ds.x).unwrap(), &ds.z).unwrap();
        let gz = gap.gap.quadratic_form(&zsvm.w);
        for mu in [10.0, 100.0] {
            let s = train_ssvm(&ds.x, &ds.y, &ds.z, lambda, d, &CcpConfig::with_mu(mu)).unwrap();
            let dp_s = dp_delta(&decision_values(&s, &ds.x).unwrap(), &ds.z).unwrap();
            let gs = gap.gap.quadratic_form(&s.w);
            println!(
                "seed={seed} mu={mu}: it={} dpz={dp_z:.4} dps={dp_s:.4} gz={gz:+.4e} gs={gs:+.4e} |w|=({:.3},{:.3})",
                s.iterations, zsvm.w.iter().map(|v| v * v).sum::<f64>().sqrt(),
                s.w.iter().map(|v| v * v).sum::<f64>().sqrt()
            );
        }
    }
}

#[test]
#[ignore]
fn probe_criterion3_lambda() {
    use fairsvm::linear_svm::{decision_values, train_lsvm, train_zsvm};
    use fairsvm::metrics::{auc, dp_delta, roc};
    let d = 0.075;
    let mu = 10.0;
    fn median(v: &[f64]) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = s.len() / 2;
        if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) }
    }
    for lambda in [1.0, 0.3, 0.1, 0.03, 0.01] {
        let (mut dl, mut dz, mut ds, mut al, mut as_) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut fails = 0usize;
        for seed in 0..20u64 {
            let data = synthesize(&SyntheticConfig { seed, ..SyntheticConfig::default() }).unwrap();
            let l = train_lsvm(&data.x, &data.y, lambda).unwrap();
            let z = train_zsvm(&data.x, &data.y, &data.z, lambda, d).unwrap();
            let s = match train_ssvm(&data.x, &data.y, &data.z, lambda, d, &CcpConfig::with_mu(mu)) {
                Ok(m) => m,
                Err(_) => {
                    fails += 1;
                    continue;
                }
            };
            let sc_l = decision_values(&l, &data.x).unwrap();
            let sc_z = decision_values(&z, &data.x).unwrap();
            let sc_s = decision_values(&s, &data.x).unwrap();
            dl.push(dp_delta(&sc_l, &data.z).unwrap());
            dz.push(dp_delta(&sc_z, &data.z).unwrap());
            ds.push(dp_delta(&sc_s, &data.z).unwrap());
            al.push(auc(&roc(&sc_l, &data.y).unwrap()));
            as_.push(auc(&roc(&sc_s, &data.y).unwrap()));
        }
        println!(
            "lambda={lambda}: dp l/z/s = {:.4}/{:.4}/{:.4} auc l/s = {:.4}/{:.4} fails={fails}",
            median(&dl), median(&dz), median(&ds), median(&al), median(&as_)
        );
    }
}

#[test]
#[ignore]
fn probe_criterion3_logit_scale() {
    use fairsvm::data::empirical_correlation;
    use fairsvm::linear_svm::{decision_values, train_lsvm, train_zsvm};
    use fairsvm::metrics::{auc, dp_delta, roc};
    let d = 0.075;
    let mu = 10.0;
    let lambda = 1.0;
    fn median(v: &[f64]) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = s.len() / 2;
        if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) }
    }
    for ls in [2.0, 1.5, 1.2, 1.0, 0.8, 0.6] {
        let (mut dl, mut dz, mut ds, mut al, mut as_, mut cyz) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut fails = 0usize;
        for seed in 0..20u64 {
            let cfg = SyntheticConfig { seed, logit_scale: ls, ..SyntheticConfig::default() };
            let data = synthesize(&cfg).unwrap();
            cyz.push(empirical_correlation(&data.y, &data.z));
            let l = train_lsvm(&data.x, &data.y, lambda).unwrap();
            let z = train_zsvm(&data.x, &data.y, &data.z, lambda, d).unwrap();
            let s = match train_ssvm(&data.x, &data.y, &data.z, lambda, d, &CcpConfig::with_mu(mu)) {
                Ok(m) => m,
                Err(_) => {
                    fails += 1;
                    continue;
                }
            };
            let sc_l = decision_values(&l, &data.x).unwrap();
            let sc_z = decision_values(&z, &data.x).unwrap();
            let sc_s = decision_values(&s, &data.x).unwrap();
            dl.push(dp_delta(&sc_l, &data.z).unwrap());
            dz.push(dp_delta(&sc_z, &data.z).unwrap());
            ds.push(dp_delta(&sc_s, &data.z).unwrap());
            al.push(auc(&roc(&sc_l, &data.y).unwrap()));
            as_.push(auc(&roc(&sc_s, &data.y).unwrap()));
        }
        println!(
            "ls={ls}: corr(y,z)={:.3} dp l/z/s = {:.4}/{:.4}/{:.4} auc l/s = {:.4}/{:.4} fails={fails}",
            median(&cyz), median(&dl), median(&dz), median(&ds), median(&al), median(&as_)
        );
    }
}

#[test]
#[ignore]
fn probe_criterion3_frontier() {
    use fairsvm::metrics::{auc, dp_delta, roc};
    fn median(v: &[f64]) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = s.len() / 2;
        if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) }
    }
    let mut best_dp = Vec::new();
    let mut auc_at_best = Vec::new();
    for seed in 0..20u64 {
        let data = synthesize(&SyntheticConfig { seed, ..SyntheticConfig::default() }).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..180 {
            let th = std::f64::consts::PI * (k as f64) / 180.0;
            let w = [th.cos(), th.sin()];
            let scores: Vec<f64> =
                (0..data.x.rows()).map(|i| data.x.get(i, 0) * w[0] + data.x.get(i, 1) * w[1]).collect();
            let dp = dp_delta(&scores, &data.z).unwrap();
            if dp < best.0 {
                let a = auc(&roc(&scores, &data.y).unwrap());
                best = (dp, a.max(1.0 - a));
            }
        }
        println!("seed={seed}: min-DP={:.4} auc-at-min={:.4}", best.0, best.1);
        best_dp.push(best.0);
        auc_at_best.push(best.1);
    }
    println!(
        "frontier: median min-DP={:.4} median auc-at-min={:.4}",
        median(&best_dp), median(&auc_at_best)
    );
}

#[test]
#[ignore]
fn probe_criterion3_calibration() {
    use fairsvm::data::empirical_correlation;
    use fairsvm::linear_svm::train_lsvm;
    use fairsvm::metrics::{auc, dp_delta, roc};
    fn median(v: &[f64]) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = s.len() / 2;
        if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) }
    }
    for skew in [1.5, 2.0, 2.5, 3.0] {
        for ls in [1.5, 2.0, 2.5, 3.0] {
            let (mut corr, mut dpl, mut aucl, mut mindp, mut bestauc) =
                (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for seed in 0..20u64 {
                let cfg = SyntheticConfig { seed, skew, logit_scale: ls, ..SyntheticConfig::default() };
                let data = synthesize(&cfg).unwrap();
                corr.push(empirical_correlation(&data.y, &data.z));
                let l = train_lsvm(&data.x, &data.y, 1.0).unwrap();
                let sc_l: Vec<f64> = (0..data.x.rows())
                    .map(|i| data.x.get(i, 0) * l.w[0] + data.x.get(i, 1) * l.w[1] + l.b)
                    .collect();
                dpl.push(dp_delta(&sc_l, &data.z).unwrap());
                aucl.push(auc(&roc(&sc_l, &data.y).unwrap()));
                let mut mn = f64::INFINITY;
                let mut ba = 0.0f64;
                for k in 0..180 {
                    let th = std::f64::consts::PI * (k as f64) / 180.0;
                    let w = [th.cos(), th.sin()];
                    let scores: Vec<f64> = (0..data.x.rows())
                        .map(|i| data.x.get(i, 0) * w[0] + data.x.get(i, 1) * w[1])
                        .collect();
                    let dp = dp_delta(&scores, &data.z).unwrap();
                    mn = mn.min(dp);
                    if dp <= 0.15 {
                        let a = auc(&roc(&scores, &data.y).unwrap());
                        ba = ba.max(a.max(1.0 - a));
                    }
                }
                mindp.push(mn);
                bestauc.push(ba);
            }
            println!(
                "skew={skew} ls={ls}: corr={:.3} dpl={:.3} aucl={:.3} min-dp={:.3} best-auc@dp<=.15={:.3}",
                median(&corr), median(&dpl), median(&aucl), median(&mindp), median(&bestauc)
            );
        }
    }
}

#[test]
#[ignore]
fn probe_criterion3_p_grid() {
    use fairsvm::data::empirical_correlation;
    use fairsvm::linear_svm::{decision_values, train_lsvm, train_zsvm};
    use fairsvm::metrics::{auc, dp_delta, roc};
    let (lambda, d, mu) = (1.0, 0.075, 10.0);
    fn median(v: &[f64]) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = s.len() / 2;
        if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) }
    }
    for p in [3usize, 4, 5] {
        for skew in [1.5, 2.0, 3.0] {
            for ls in [2.0, 2.5] {
                let (mut corr, mut dl, mut dz, mut ds, mut al, mut as_) =
                    (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
                let mut fails = 0usize;
                let mut iters = Vec::new();
                for seed in 0..20u64 {
                    let cfg = SyntheticConfig { seed, p, skew, logit_scale: ls, ..SyntheticConfig::default() };
                    let data = synthesize(&cfg).unwrap();
                    corr.push(empirical_correlation(&data.y, &data.z));
                    let l = train_lsvm(&data.x, &data.y, lambda).unwrap();
                    let z = train_zsvm(&data.x, &data.y, &data.z, lambda, d).unwrap();
                    let s = match train_ssvm(&data.x, &data.y, &data.z, lambda, d, &CcpConfig::with_mu(mu)) {
                        Ok(m) => m,
                        Err(_) => { fails += 1; continue; }
                    };
                    iters.push(s.iterations as f64);
                    let sc_l = decision_values(&l, &data.x).unwrap();
                    let sc_z = decision_values(&z, &data.x).unwrap();
                    let sc_s = decision_values(&s, &data.x).unwrap();
                    dl.push(dp_delta(&sc_l, &data.z).unwrap());
                    dz.push(dp_delta(&sc_z, &data.z).unwrap());
                    ds.push(dp_delta(&sc_s, &data.z).unwrap());
                    al.push(auc(&roc(&sc_l, &data.y).unwrap()));
                    as_.push(auc(&roc(&sc_s, &data.y).unwrap()));
                }
                let ok = median(&ds) <= median(&dz)
                    && median(&dz) <= median(&dl)
                    && median(&ds) <= 0.15
                    && median(&as_) >= median(&al) - 0.10;
                println!(
                    "p={p} skew={skew} ls={ls}: corr={:.3} dp l/z/s={:.3}/{:.3}/{:.3} auc l/s={:.3}/{:.3} it={:.0} fails={fails} {}",
                    median(&corr), median(&dl), median(&dz), median(&ds),
                    median(&al), median(&as_), median(&iters),
                    if ok { "OK" } else { "--" }
                );
            }
        }
    }
}
