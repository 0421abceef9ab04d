//! Classifies points of the switching plane for the normal form and checks the fold types.

use twofold_lab::pws::FoldKind;
use twofold_lab::{NormalFormParams, Side};

fn main() {
    let p = NormalFormParams::new(1.0, 1.0, 4.0, 1.0).expect("valid parameters");
    let sys = p.pws_system();
    println!("{:>6} {:>6}  {:<16} {:>9} {:>9}", "x", "z", "kind", "X+ h", "X- h");
    for (x, z) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (0.0, 0.5), (0.5, 0.0), (0.0, 0.0)] {
        let c = sys.classify_sigma_point(&[x, 0.0, z], 1e-12).expect("point on the plane");
        println!("{x:>6} {z:>6}  {:<16} {:>9.3} {:>9.3}", format!("{:?}", c.kind), c.lie_plus, c.lie_minus);
    }
    let plus = sys.classify_fold(&[0.5, 0.0, 0.0], Side::Plus, 1e-12).unwrap();
    let minus = sys.classify_fold(&[0.0, 0.0, 0.5], Side::Minus, 1e-12).unwrap();
    println!("fold of X+ on z = 0: {plus:?}");
    println!("fold of X- on x = 0: {minus:?}");
    assert_eq!((plus, minus), (FoldKind::Visible, FoldKind::Invisible));

    let q = [-1.0, 0.0, -1.0];
    let slide = sys.filippov_sliding_field(&q, 1e-12).unwrap();
    println!("sliding vector at {q:?}: {slide:?}");
}
