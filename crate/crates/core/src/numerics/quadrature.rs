use crate::{Error, Result, TWO_PI};

// 15-point Kronrod abscissae on [0, 1]; odd indices hold the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

fn sample<F: FnMut(f64) -> f64>(f: &mut F, x: f64) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { at: x })
    }
}

/// Kronrod estimate and |Kronrod − Gauss| on one panel.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = sample(f, c)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = sample(f, c - dx)? + sample(f, c + dx)?;
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Ok((kron * h, ((kron - gauss) * h).abs()))
}

fn adapt<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    let (value, err) = gk15(f, a, b)?;
    if err <= tol || depth >= MAX_DEPTH || err <= 1e-15 * value.abs() {
        return Ok(value);
    }
    let m = 0.5 * (a + b);
    Ok(adapt(f, a, m, 0.5 * tol, depth + 1)? + adapt(f, m, b, 0.5 * tol, depth + 1)?)
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]`.
pub fn integrate_interval<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    Ok(sign * adapt(&mut f, lo, hi, tol, 0)?)
}

/// Integral of `f` over one period `[0, 2π)`.
///
/// `breakpoints` lists interior points where `f` may jump; the domain is split
/// there so each panel sees a smooth integrand. Points outside `(0, 2π)` are
/// ignored.
pub fn periodic_quadrature<F: FnMut(f64) -> f64>(mut f: F, tol: f64, breakpoints: &[f64]) -> Result<f64> {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > 0.0 && p < TWO_PI).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(0.0);
    nodes.extend(cuts);
    nodes.push(TWO_PI);
    let mut total = 0.0;
    for w in nodes.windows(2) {
        let share = tol * (w[1] - w[0]) / TWO_PI;
        total += integrate_interval(&mut f, w[0], w[1], share)?;
    }
    Ok(total)
}
