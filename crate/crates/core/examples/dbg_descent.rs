use pearcey_core::kernels::*;
use pearcey_core::nbrw::quantile_initial;
use pearcey_core::slope::symmetric_two_block;

fn main() {
    let rho = symmetric_two_block();
    let d = quantile_initial(&rho, 120, 80, 80).unwrap();
    let p = SpaceTimePoint::new(120, 60).unwrap();
    let o1 = BernoulliKernelOpts { mode: WIntegralMode::Residues, ..Default::default() };
    match kernel_bernoulli(p, p, &d, 0.5, &o1) {
        Ok(kv) => println!("residues: {} (err {:.2e})", kv.value, kv.abs_error_estimate),
        Err(e) => println!("residues error: {e}"),
    }
    let o2 = BernoulliKernelOpts { mode: WIntegralMode::Descent, ..Default::default() };
    match kernel_bernoulli(p, p, &d, 0.5, &o2) {
        Ok(kv) => println!("descent: {} (err {:.2e})", kv.value, kv.abs_error_estimate),
        Err(e) => println!("descent error: {e}"),
    }
}
