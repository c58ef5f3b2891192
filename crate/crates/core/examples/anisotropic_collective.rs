//! Exact collective dynamics with XY anisotropy: how the best variance scales with S.

use bilayer_squeeze::exact::minimal_variance;

fn main() -> bilayer_squeeze::Result<()> {
    println!("# S r min_variance normalized t_min");
    for r in [1.0, 2.0] {
        let mut points = Vec::new();
        for s in [10.0, 20.0, 40.0, 80.0] {
            let m = minimal_variance(s, r)?;
            println!(
                "{s} {r} {:.6} {:.6} {:.5}",
                m.min_variance,
                m.min_variance / (s / 2.0),
                m.t_min
            );
            points.push(((s as f64).ln(), (m.min_variance / (s / 2.0)).ln()));
        }
        let n = points.len() as f64;
        let (mx, my) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        println!("# r={r}: log-log slope {slope:.3}");
    }
    Ok(())
}
