//! Times fiber enumeration with divisors visited in ascending and
//! descending order.
//!
//! `cargo run --release --example divisor_order [max_m]`

use std::time::Instant;

use totient_forest::arith::DivisorOrder;
use totient_forest::fiber::totient_fiber_ordered;

fn time(order: DivisorOrder, max_m: u64) -> (f64, usize) {
    let start = Instant::now();
    let mut members = 0;
    for m in (2..=max_m).step_by(2) {
        members += totient_fiber_ordered(m, order).unwrap().len();
    }
    (start.elapsed().as_secs_f64(), members)
}

fn main() {
    let max_m = std::env::args().nth(1).map_or(200_000, |s| s.parse().expect("max_m"));
    let (asc, a) = time(DivisorOrder::Ascending, max_m);
    let (desc, d) = time(DivisorOrder::Descending, max_m);
    assert_eq!(a, d);
    println!("even m <= {max_m}: {a} preimages");
    println!("ascending  {asc:.3}s");
    println!("descending {desc:.3}s");
    println!("ratio asc/desc {:.2}", asc / desc);
}
