use blockvar::estimate::*;
use blockvar::evaluation::*;
use blockvar::reproduce::*;
use blockvar::rng::derive_seed;
use blockvar::simulate::*;

#[test]
#[ignore]
fn probe_criterion3() {
    let t0 = std::time::Instant::now();
    let out = run_table5_7(Profile::Desk, 424242).unwrap();
    println!("table5-7 in {:?}", t0.elapsed());
    for r in &out.rows {
        println!("  {} {}: {:.4} (ref {:?}, within {:?})", r.setting, r.metric, r.observed_mean, r.reference, r.within);
    }
}

#[test]
#[ignore]
fn probe_regime_change() {
    use blockvar::Mat;
    // planted high-connectivity middle segment
    let p1 = 12usize;
    let seg = 300usize;
    let mut rng = blockvar::rng::rng_from_seed(606060);
    // quiet regime: self-loops only (empty skeleton off the diagonal)
    let a_quiet = Mat::eye(p1) * 0.4;
    // busy regime: four disjoint coefficient triangles plus weak self-loops
    let mut a_busy = Mat::zeros((p1, p1));
    for block in 0..4 {
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    a_busy[[block * 3 + i, block * 3 + j]] = 0.28;
                }
            }
        }
    }
    // simulate the switching system
    use rand_distr::{Distribution, StandardNormal};
    let total = 3 * seg;
    let mut x = Mat::zeros((total, p1));
    let mut state = blockvar::Vec1::zeros(p1);
    for t in 0..total {
        let a = if t >= seg && t < 2 * seg { &a_busy } else { &a_quiet };
        let noise = blockvar::Vec1::from_iter((0..p1).map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v * 0.35
        }));
        state = a.dot(&state) + &noise;
        x.row_mut(t).assign(&state);
    }
    let panel = blockvar::TimeSeriesPanel::new(x, "x");
    let window = 100usize;
    let step = 20usize;
    for la in [0.01f64, 0.02, 0.035, 0.05] {
        let cfg = EstimationConfig { lambda_a: la, rho_u: 0.1, ..Default::default() };
        let fits = rolling_windows(&panel, None, window, step, &cfg).unwrap();
        let mats: Vec<Mat> = fits.iter().map(|f| f.block1.as_ref().unwrap().a.clone()).collect();
        let mut best = (0usize, -1.0f64);
        let mut profile = Vec::new();
        for k in 0..mats.len() {
            let lo = k.saturating_sub(2);
            let hi = (k + 3).min(mats.len());
            let neighborhood: Vec<&Mat> = mats[lo..hi].iter().collect();
            let sel = stability_selection(&neighborhood, 0.6, 1e-6).unwrap();
            let gcc = global_clustering_coefficient(&sel).unwrap();
            let mid = k * step + window / 2;
            profile.push((mid, gcc));
            if gcc > best.1 {
                best = (mid, gcc);
            }
        }
        let inside: Vec<f64> = profile.iter().filter(|(m, _)| *m >= seg && *m < 2*seg).map(|(_, g)| *g).collect();
        let outside: Vec<f64> = profile.iter().filter(|(m, _)| *m < seg || *m >= 2*seg).map(|(_, g)| *g).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!("la {la}: peak mid {} gcc {:.3}; mean inside {:.3} outside {:.3}",
            best.0, best.1, mean(&inside), mean(&outside));
    }
}
