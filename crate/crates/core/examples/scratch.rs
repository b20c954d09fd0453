use peaqc_core::fock::*;
use peaqc_core::linalg::*;
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    let delta = 0.35_f64;
    let lat = LatticeKind::Square;
    let nm = gkp_required_nmax(lat, delta);
    println!("gkp n_max = {nm}");
    let b = TruncatedBasis::new(nm).unwrap();
    let t0 = Instant::now();
    for logical in 0..2usize {
        let ket = make_state(&StateSpec::ApproxGkp { lattice: lat, delta, logical }, b).unwrap();
        let zbar = displacement(C64::new(0.0, PI.sqrt()) / re(2.0_f64.sqrt()), b).unwrap();
        let val = ket.amplitudes().dotc(&(zbar.matrix() * ket.amplitudes()));
        let xbar = displacement(C64::new(PI.sqrt(), 0.0) / re(2.0_f64.sqrt()), b).unwrap();
        let xval = ket.amplitudes().dotc(&(xbar.matrix() * ket.amplitudes()));
        println!("  logical {logical}: leak {:.2e} <Zbar> = {val:.4}, <Xbar> = {xval:.4}", ket.leakage());
    }
    println!("built in {:.2?}", t0.elapsed());
    // time a beam splitter build at this size
    let t0 = Instant::now();
    let u = beam_splitter(0.9, b).unwrap();
    println!("U build at N={} in {:.2?} ({} sectors)", b.dim(), t0.elapsed(), u.num_sectors());
}
