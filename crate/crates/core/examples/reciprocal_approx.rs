//! Error profile of the multiplier-only `1 / (1 - alpha)`.

use gsraster::approx::{recip_one_minus, RecipMode};

fn main() -> anyhow::Result<()> {
    println!("{:>6} {:>12} {:>12} {:>9}", "alpha", "approx", "exact", "rel err");
    for i in 0..=33 {
        let a = (i as f64 * 0.03).min(0.99);
        let r = recip_one_minus(a, RecipMode::Approx)?;
        let e = 1.0 / (1.0 - a);
        println!("{a:>6.2} {r:>12.6} {e:>12.6} {:>8.3}%", 100.0 * (r - e).abs() / e);
    }
    Ok(())
}
