//! Converts colours to DKL space and builds the opponent-colour stimulus, which keeps
//! luminance and flips both chromatic axes.

use distortion_lab::pixel::{opponent_colour, ImageBuffer, MonitorModel};
use distortion_lab::Result;

pub fn run_example() -> Result<()> {
    let monitor = MonitorModel::default();
    for rgb in [[0.5, 0.5, 0.5], [0.8, 0.3, 0.2], [0.2, 0.6, 0.3], [0.3, 0.3, 0.8]] {
        let dkl = monitor.rgb_to_dkl(rgb);
        let flipped = monitor.dkl_to_rgb([dkl[0], -dkl[1], -dkl[2]]);
        let in_gamut = flipped.iter().all(|v| (0.0..=1.0).contains(v));
        let shown = flipped.map(|v| v.clamp(0.0, 1.0));
        println!(
            "rgb {:?} -> dkl [{:+.3}, {:+.3}, {:+.3}] -> opponent rgb [{:.3}, {:.3}, {:.3}]{}",
            rgb,
            dkl[0],
            dkl[1],
            dkl[2],
            shown[0],
            shown[1],
            shown[2],
            if in_gamut { "" } else { " (clipped, out of gamut)" }
        );
    }
    let img = ImageBuffer::from_fn(64, 64, 3, |c, r, col| match c {
        0 => 0.3 + 0.4 * (col as f32 / 63.0),
        1 => 0.3 + 0.4 * (r as f32 / 63.0),
        _ => 0.4,
    })?;
    let (out, clip) = opponent_colour(&img, &monitor)?;
    println!("opponent image: mean {:.4} -> {:.4}, clipped {:.2}%", img.mean(), out.mean(), 100.0 * clip.fraction());
    println!("calibration file format:\n{}", monitor.to_calibration_text().lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}

fn main() {
    run_example().expect("opponent colour example failed");
}
