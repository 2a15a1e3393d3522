//! Weight matrices, spatial lags and Moran's I on a small grid of regions.

use spdea::weights::{contiguity_weights, inverse_distance_weights, knn_weights, morans_i, spatial_lag};

fn main() -> spdea::Result<()> {
    // a 4 x 4 lattice with a smooth east-west gradient plus a bump
    let coords: Vec<[f64; 2]> = (0..16).map(|i| [(i % 4) as f64, (i / 4) as f64]).collect();
    let values: Vec<f64> = coords
        .iter()
        .map(|c| c[0] + 0.3 * ((c[1] * 1.7).sin()))
        .collect();

    let knn = knn_weights(&coords, 4)?;
    println!("knn(4) neighbours of region 5: {:?}", knn.neighbors(5));

    let rook: Vec<(usize, usize)> = (0..16)
        .flat_map(|i| {
            let mut e = Vec::new();
            if i % 4 < 3 {
                e.push((i, i + 1));
            }
            if i < 12 {
                e.push((i, i + 4));
            }
            e
        })
        .collect();
    let contiguity = contiguity_weights(&rook, 16)?;
    let invdist = inverse_distance_weights(&coords, Some(1.5))?;

    println!("lag of region 5 under knn: {:.4}", spatial_lag(&knn, &values)?[5]);
    for (name, w) in [("knn", &knn), ("contiguity", &contiguity), ("invdist", &invdist)] {
        let m = morans_i(w, &values, 999, 7)?;
        println!(
            "{name:<10} I = {:.4} (E = {:.4}), permutation p = {:.3}, normal p = {:.4}",
            m.statistic, m.expected, m.p_value, m.p_normal
        );
    }
    let m = morans_i(&knn, &values, 999, 7)?;
    let labels: Vec<&str> = m.quadrants.iter().map(|q| q.as_str()).collect();
    println!("quadrants: {}", labels.join(" "));
    Ok(())
}
