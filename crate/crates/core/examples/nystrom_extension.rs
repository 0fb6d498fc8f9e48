//! Extends graph eigenvectors from the nodes to arbitrary points of the
//! ambient space. At the nodes the extension returns the eigenvectors exactly;
//! away from the cloud the values decay towards zero.
//!
//! cargo run --release --example nystrom_extension

use imgp::experiment::{gen_dumbbell, Dumbbell};
use imgp::graph::{build_graph, EigenConfig, KnnIndex};
use imgp::predict::NystromExtension;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = gen_dumbbell(1556, 0.0, 10, 0)?;
    let index = KnnIndex::new(data.cloud.points().clone(), 10)?;
    let graph = build_graph(&index, 0.06)?;
    let basis = graph.eigenbasis(20, &EigenConfig::default())?;
    let ext = NystromExtension::new(graph, basis.clone())?;

    let mut worst = 0.0f64;
    for i in 0..basis.num_nodes() {
        let f = ext.features(data.cloud.point(i))?;
        for (l, v) in f.iter().enumerate() {
            worst = worst.max((v - basis.value(i, l)).abs());
        }
    }
    println!("largest node discrepancy over {} nodes x {} eigenvectors: {worst:.2e}", basis.num_nodes(), basis.len());

    let curve = Dumbbell::default();
    let anchor = curve.point(0.3 * curve.length());
    println!("\nf_1, f_2 moving off the curve at arclength 0.3 L (point {:.3?}):", anchor);
    for offset in [0.0, 0.02, 0.05, 0.1, 0.2, 0.5] {
        let x = [anchor[0], anchor[1] + offset];
        let f = ext.features(&x)?;
        println!("  offset {offset:>4}: f_1 = {:>9.5}  f_2 = {:>9.5}", f[1], f[2]);
    }
    Ok(())
}
