use super::MetricError;
use crate::frame::{Frame, CHANNELS};

/// Side of the non-overlapping square SSIM windows.
pub const SSIM_WINDOW: usize = 8;

const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn same_shape(x: &Frame, y: &Frame) -> Result<(), MetricError> {
    if x.dims() != y.dims() {
        return Err(MetricError::ShapeMismatch {
            a: x.dims(),
            b: y.dims(),
        });
    }
    Ok(())
}

/// Mean squared difference over all pixels and channels.
pub fn d_mse(x: &Frame, y: &Frame) -> Result<f64, MetricError> {
    same_shape(x, y)?;
    let n = x.data().len() as f64;
    let sum: f64 = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / n)
}

/// Peak signal-to-noise ratio in dB (peak 1.0). Infinite for identical frames.
pub fn psnr(x: &Frame, y: &Frame) -> Result<f64, MetricError> {
    let mse = d_mse(x, y)?;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    })
}

/// `1 - SSIM`, with SSIM averaged over non-overlapping 8x8 windows in each
/// channel (population statistics, dynamic range 1). Trailing rows/columns
/// that do not fill a window are ignored.
pub fn d_ssim(x: &Frame, y: &Frame) -> Result<f64, MetricError> {
    same_shape(x, y)?;
    let (h, w) = x.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(MetricError::FrameTooSmall {
            height: h,
            width: w,
            min: SSIM_WINDOW,
        });
    }
    if x == y {
        return Ok(0.0);
    }
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let (xd, yd) = (x.data(), y.data());
    let mut total = 0.0;
    let mut count = 0usize;
    for by in 0..h / SSIM_WINDOW {
        for bx in 0..w / SSIM_WINDOW {
            for c in 0..CHANNELS {
                let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for r in by * SSIM_WINDOW..(by + 1) * SSIM_WINDOW {
                    for col in bx * SSIM_WINDOW..(bx + 1) * SSIM_WINDOW {
                        let i = (r * w + col) * CHANNELS + c;
                        let (a, b) = (xd[i], yd[i]);
                        sx += a;
                        sy += b;
                        sxx += a * a;
                        syy += b * b;
                        sxy += a * b;
                    }
                }
                let (mx, my) = (sx / n, sy / n);
                let vx = (sxx / n - mx * mx).max(0.0);
                let vy = (syy / n - my * my).max(0.0);
                let cov = sxy / n - mx * my;
                let s = ((2.0 * mx * my + C1) * (2.0 * cov + C2))
                    / ((mx * mx + my * my + C1) * (vx + vy + C2));
                total += s;
                count += 1;
            }
        }
    }
    Ok((1.0 - total / count as f64).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        let zeros = Frame::new(4, 4);
        let ones = Frame::filled(4, 4, [1.0; 3]);
        assert_eq!(d_mse(&zeros, &zeros).unwrap(), 0.0);
        assert_eq!(d_mse(&zeros, &ones).unwrap(), 1.0);
        let mut half = Frame::new(4, 4);
        for r in 0..2 {
            for c in 0..4 {
                half.set_pixel(r, c, [1.0; 3]);
            }
        }
        assert_eq!(d_mse(&zeros, &half).unwrap(), 0.5);
        assert!(matches!(
            d_mse(&zeros, &Frame::new(4, 5)),
            Err(MetricError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn ssim_constant_windows_closed_form() {
        let x = Frame::filled(16, 16, [0.2; 3]);
        let y = Frame::filled(16, 16, [0.8; 3]);
        // Zero variance: SSIM = (2*mx*my + C1) / (mx^2 + my^2 + C1).
        let expected = 1.0 - (2.0 * 0.16 + C1) * C2 / ((0.04 + 0.64 + C1) * C2);
        let got = d_ssim(&x, &y).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert_eq!(d_ssim(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn ssim_too_small() {
        let x = Frame::new(7, 16);
        assert!(matches!(d_ssim(&x, &x), Err(MetricError::FrameTooSmall { .. })));
    }

    fn frame_strategy() -> impl Strategy<Value = Frame> {
        proptest::collection::vec(0.0f64..=1.0, 16 * 16 * 3)
            .prop_map(|v| Frame::from_data(16, 16, v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn metric_axioms(x in frame_strategy(), y in frame_strategy()) {
            for f in [d_mse, d_ssim] {
                let a = f(&x, &y).unwrap();
                prop_assert_eq!(a, f(&y, &x).unwrap());
                prop_assert!(a >= 0.0);
                prop_assert_eq!(f(&x, &x).unwrap(), 0.0);
            }
        }
    }
}
