use blockvar::estimate::*;
use blockvar::Mat;
use rand_distr::{Distribution, StandardNormal};

#[test]
#[ignore]
fn probe_single_windows() {
    let p1 = 12usize;
    let mut rng = blockvar::rng::rng_from_seed(606060);
    let a_quiet = Mat::eye(p1) * 0.4;
    let mut a_busy = Mat::zeros((p1, p1));
    for block in 0..4 {
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    a_busy[[block * 3 + i, block * 3 + j]] = 0.4;
                }
            }
        }
    }
    let t_seg = 300usize;
    let mut xq = Mat::zeros((t_seg, p1));
    let mut xb = Mat::zeros((t_seg, p1));
    let mut sq = blockvar::Vec1::zeros(p1);
    let mut sb = blockvar::Vec1::zeros(p1);
    for t in 0..t_seg {
        let nq = blockvar::Vec1::from_iter((0..p1).map(|_| { let v: f64 = StandardNormal.sample(&mut rng); v * 0.35 }));
        let nb = blockvar::Vec1::from_iter((0..p1).map(|_| { let v: f64 = StandardNormal.sample(&mut rng); v * 0.35 }));
        sq = a_quiet.dot(&sq) + &nq;
        sb = a_busy.dot(&sb) + &nb;
        xq.row_mut(t).assign(&sq);
        xb.row_mut(t).assign(&sb);
    }
    let pq = blockvar::TimeSeriesPanel::new(xq, "x");
    let pb = blockvar::TimeSeriesPanel::new(xb, "x");
    for la in [0.02f64, 0.05, 0.1, 0.2, 0.4, 0.8] {
        let cfg = EstimationConfig { lambda_a: la, rho_u: 0.1, ..Default::default() };
        let wq = pq.window(0, 120).unwrap();
        let wb = pb.window(0, 120).unwrap();
        let fq = estimate_block1(&wq, &cfg).unwrap();
        let fb = estimate_block1(&wb, &cfg).unwrap();
        let offdiag = |m: &Mat| m.indexed_iter().filter(|((i, j), v)| i != j && v.abs() > 1e-6).count();
        let true_edges = |m: &Mat| {
            let mut hit = 0;
            for block in 0..4 { for i in 0..3 { for j in 0..3 { if i != j {
                if m[[block*3+i, block*3+j]].abs() > 1e-6 { hit += 1; }
            }}}}
            hit
        };
        println!("la {la}: quiet offdiag {}  busy offdiag {} (true {}/24)  omega_q {:.2}",
            offdiag(&fq.a), offdiag(&fb.a), true_edges(&fb.a), fq.omega_u[[0,0]]);
    }
}
