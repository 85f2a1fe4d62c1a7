//! Synthetic piecewise-constant test images.

use crate::grid::ImageGrid;

/// 32×32 grey-level phantom: background 50, a 10×20 bar at 255, a disk of
/// radius 6 at 150 and a 10×6 block at 200.
pub fn block_phantom() -> ImageGrid {
    ImageGrid::from_fn(32, 32, 1.0, |x, y| {
        let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
        let mut v = 50.0;
        if (4..14).contains(&x) && (6..26).contains(&y) {
            v = 255.0;
        }
        if (xf - 22.0).powi(2) + (yf - 12.0).powi(2) < 36.0 {
            v = 150.0;
        }
        if (18..28).contains(&x) && (21..27).contains(&y) {
            v = 200.0;
        }
        v
    })
}
