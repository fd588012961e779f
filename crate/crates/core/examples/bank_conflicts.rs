//! Skewed (`(x + y) mod 16`) against plain (`x mod 16`) pixel-buffer banks.

use gsraster::binning::{bin_and_sort, preprocess};
use gsraster::exec::{bank_conflicts, pixel_update_trace, BankModel, LANES};
use gsraster::scenes;

fn main() -> anyhow::Result<()> {
    let column: Vec<(usize, usize)> = (0..16).map(|y| (3, y)).collect();
    let row: Vec<(usize, usize)> = (0..16).map(|x| (x, 3)).collect();
    for (name, g) in [("column", &column), ("row", &row)] {
        println!(
            "{name:>6}: skewed {} unskewed {}",
            BankModel::skewed().conflicts(g),
            BankModel::unskewed().conflicts(g)
        );
    }

    let sc = scenes::random_scene(500, 128, 128, 2);
    let p = preprocess(&sc.gaussians, &sc.camera)?;
    let b = bin_and_sort(&p.splats, (16, 16), (128, 128));
    let (mut s, mut u) = (0, 0);
    let steps = pixel_update_trace(&p.splats, &b, LANES);
    for g in &steps {
        let r = bank_conflicts(g, LANES);
        s += r.skewed;
        u += r.unskewed;
    }
    println!("render trace, {} lane steps: skewed {s} unskewed {u}", steps.len());
    Ok(())
}
