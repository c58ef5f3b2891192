//! Scaling collapse of synthetic minimal-variance curves with a known size exponent.

use bilayer_squeeze::scaling::{cost, extract_p, report_lines, Axis, Curve, ScalingDataset};

fn main() -> bilayer_squeeze::Result<()> {
    let (p, d_v) = (0.3, -1.2);
    let ratios: Vec<f64> = (0..60).map(|j| 0.005 * 1.07f64.powi(j)).collect();
    let curves: Vec<Curve> = [100.0f64, 200.0, 400.0, 800.0]
        .iter()
        .map(|&n| {
            let y = ratios
                .iter()
                .map(|&r| (0.05 * r.powf(d_v) * n.powf(p)).max(1.0))
                .collect();
            Curve::new(n, 0.0, ratios.clone(), y)
        })
        .collect();

    println!("lambda at the true exponent: {:.3e}", cost(&curves, 0.0, -p)?.lambda);
    println!("lambda without rescaling:    {:.3}", cost(&curves, 0.0, 0.0)?.lambda);

    let ds = ScalingDataset::new("VarMin", 1.5, 1, curves);
    let pe = extract_p(&ds, 6.0, Axis::new("p", -0.5, 1.5))?;
    println!("kept {} curves above 6 x the collective baseline", pe.kept.len());
    print!("{}", report_lines(&[&pe.p]));
    Ok(())
}
