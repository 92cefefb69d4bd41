use semistable::cech::*;
use semistable::models::*;
use semistable::ringlab::TruncRing;

#[test]
fn probe_x1_structure() {
    let ring = TruncRing::new(2, 1, 2).unwrap();
    let m = ModelAtlas::build(&ring, 1).unwrap();
    let sheaf = SheafPresentation::of_bundle("O", trivial_bundle(&m));
    for d in 4..10u32 {
        let rep = cech_cohomology(&m, &sheaf, 2, d).unwrap();
        eprintln!("D={d}: h0={:?} h1={:?} stab={}", rep.h0, rep.h1, rep.stabilized);
    }
}
