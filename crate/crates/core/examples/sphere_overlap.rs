//! Overlap measures between two spheres, exact and Monte Carlo.
//!
//! Usage: cargo run --example sphere_overlap -- [xa ya za ra xb yb zb rb]

use sphere_detect::geometry::{
    angle_score, distance_radius_ratio, intersection_volume, mc_intersection_volume,
    overlap_geometry, siou, union_volume, Point3, Sphere,
};

fn main() -> sphere_detect::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let v = if args.len() == 8 {
        args
    } else {
        vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]
    };
    let a = Sphere::new(Point3::new(v[0], v[1], v[2]), v[3])?;
    let b = Sphere::new(Point3::new(v[4], v[5], v[6]), v[7])?;

    let g = overlap_geometry(&a, &b);
    println!("d_ab          {}", g.d_ab);
    println!("regime        {:?}", g.regime);
    println!("intersection  {}", intersection_volume(&a, &b));
    println!(
        "  monte carlo {}",
        mc_intersection_volume(&a, &b, 1_000_000, 7)
    );
    println!("union         {}", union_volume(&a, &b));
    println!("siou          {}", siou(&a, &b));
    println!("R_DR          {}", distance_radius_ratio(&a, &b));
    println!("angle score   {}", angle_score(&a, &b));
    Ok(())
}
