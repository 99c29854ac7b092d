//! Power-law checks on transform-domain magnitudes.
//!
//! Plot data is emitted as CSV with header `rank,magnitude,fitted` (ranks
//! 1-based, `fitted` empty past `top_k`) and as a standalone SVG log-log
//! scatter with the fitted line.

use std::fmt::Write as _;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::transform::haar_analyze;

fn scalar_series(series: &Signal) -> Result<&[f64]> {
    if series.dim() != 1 {
        return Err(Error::shape(1, series.dim()));
    }
    Ok(series.as_flat())
}

fn sort_descending(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Full complex spectrum `sum_t z_t exp(-2 pi i k t / T)`, any length.
pub fn dft(values: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    if !buf.is_empty() {
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    }
    buf
}

/// `O(T^2)` evaluation of the same transform, for cross-checking.
pub fn dft_direct(values: &[f64]) -> Vec<Complex<f64>> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let mut acc = Complex::new(0.0, 0.0);
            for (t, &v) in values.iter().enumerate() {
                // reduce k*t mod n first to keep the angle small
                let phase = -2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
                acc += Complex::from_polar(v, phase);
            }
            acc
        })
        .collect()
}

/// Magnitudes of DFT bins `0..=T/2`, sorted descending.
pub fn dft_magnitudes(series: &Signal) -> Result<Vec<f64>> {
    let z = scalar_series(series)?;
    if z.len() < 2 {
        return Err(Error::invalid("spectrum needs at least two samples"));
    }
    let spectrum = dft(z);
    Ok(sort_descending(
        spectrum[..=z.len() / 2].iter().map(|c| c.norm()).collect(),
    ))
}

/// Absolute orthonormal Haar coefficients, all-one included, sorted
/// descending.
pub fn haar_magnitudes(series: &Signal) -> Result<Vec<f64>> {
    scalar_series(series)?;
    let coeffs = haar_analyze(series)?;
    Ok(sort_descending(coeffs.iter().map(|(_, c)| c[0].abs()).collect()))
}

/// First differences `z_{t+1} - z_t`.
pub fn difference_series(series: &Signal) -> Result<Signal> {
    let z = scalar_series(series)?;
    Ok(Signal::from_scalars(
        z.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Decay exponent, `-slope` of log magnitude against log rank.
    pub alpha: f64,
    pub intercept: f64,
    pub top_k: usize,
    /// Sum of squared log-log residuals.
    pub residual: f64,
}

impl PowerLawFit {
    /// Fitted magnitude at 1-based `rank`.
    pub fn predict(&self, rank: usize) -> f64 {
        (self.intercept - self.alpha * (rank as f64).ln()).exp()
    }
}

/// Least-squares fit of `log m_n = c - alpha log n` over the `top_k` largest
/// magnitudes. Input must already be sorted descending.
pub fn power_law_fit(magnitudes: &[f64], top_k: usize) -> Result<PowerLawFit> {
    if top_k < 2 {
        return Err(Error::invalid("a fit needs at least two points"));
    }
    if magnitudes.len() < top_k {
        return Err(Error::invalid(format!(
            "asked for the top {top_k} of {} magnitudes",
            magnitudes.len()
        )));
    }
    let top = &magnitudes[..top_k];
    if top.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("magnitudes must be sorted descending"));
    }
    if let Some(n) = top.iter().position(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::invalid(format!("magnitude at rank {} is not positive", n + 1)));
    }
    let xs: Vec<f64> = (1..=top_k).map(|n| (n as f64).ln()).collect();
    let ys: Vec<f64> = top.iter().map(|m| m.ln()).collect();
    let k = top_k as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(PowerLawFit {
        alpha: -slope,
        intercept,
        top_k,
        residual,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::shape(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("a slope needs at least two points"));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::invalid("log-log slope needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

pub fn plot_csv(magnitudes: &[f64], fit: &PowerLawFit) -> String {
    let mut out = String::from("rank,magnitude,fitted\n");
    for (i, m) in magnitudes.iter().enumerate() {
        let rank = i + 1;
        if rank <= fit.top_k {
            let _ = writeln!(out, "{rank},{m:?},{:?}", fit.predict(rank));
        } else {
            let _ = writeln!(out, "{rank},{m:?},");
        }
    }
    out
}

/// Log-log scatter of the positive magnitudes with the fitted line over the
/// fitted range.
pub fn plot_svg(magnitudes: &[f64], fit: &PowerLawFit, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const PAD: f64 = 60.0;
    let points: Vec<(f64, f64)> = magnitudes
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(i, m)| (((i + 1) as f64).log10(), m.log10()))
        .collect();
    let x_max = points.iter().map(|p| p.0).fold(1.0_f64, f64::max);
    let (mut y_min, mut y_max) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.1), hi.max(p.1))
    });
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }
    let sx = |x: f64| PAD + x / x_max * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y_min) / (y_max - y_min) * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#,
        H - PAD
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">log10 rank</text>"#,
        W / 2.0,
        H - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 18 {})">log10 magnitude</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (label, x, anchor, y) in [
        ("0".to_string(), sx(0.0), "middle", H - PAD + 16.0),
        (format!("{x_max:.2}"), sx(x_max), "middle", H - PAD + 16.0),
    ] {
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{label}</text>"#
        );
    }
    for y in [y_min, y_max] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="10">{y:.2}</text>"#,
            PAD - 4.0,
            sy(y) + 4.0
        );
    }
    for (x, y) in &points {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="steelblue"/>"#,
            sx(*x),
            sy(*y)
        );
    }
    let x_end = (fit.top_k as f64).log10();
    let line_y = |x: f64| (fit.intercept - fit.alpha * x * std::f64::consts::LN_10) / std::f64::consts::LN_10;
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson" stroke-width="2"/>"#,
        sx(0.0),
        sy(line_y(0.0)),
        sx(x_end),
        sy(line_y(x_end))
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="12" fill="crimson">alpha = {:.4}</text>"#,
        W - PAD,
        PAD,
        fit.alpha
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_spectrum() {
        let z = Signal::from_scalars(vec![2.5; 64]);
        let m = dft_magnitudes(&z).unwrap();
        assert_eq!(m.len(), 33);
        assert!((m[0] - 160.0).abs() < 1e-9);
        assert!(m[1..].iter().all(|v| *v < 1e-9));
    }

    #[test]
    fn bin_aligned_cosine() {
        let t = 128;
        let z: Vec<f64> = (0..t)
            .map(|i| (2.0 * std::f64::consts::PI * 5.0 * i as f64 / t as f64).cos())
            .collect();
        let m = dft_magnitudes(&Signal::from_scalars(z)).unwrap();
        assert!((m[0] - 64.0).abs() < 1e-9);
        assert!(m[1] < 1e-9);
    }

    #[test]
    fn fft_matches_direct_on_odd_length() {
        let z: Vec<f64> = (0..37).map(|i| ((i * 7 % 11) as f64).sin()).collect();
        for (a, b) in dft(&z).iter().zip(dft_direct(&z)) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn exact_power_law() {
        let m: Vec<f64> = (1..=200).map(|n| (n as f64).powf(-0.7)).collect();
        let fit = power_law_fit(&m, 100).unwrap();
        assert!((fit.alpha - 0.7).abs() < 1e-9);
        assert!(fit.intercept.abs() < 1e-9);
        assert!(fit.residual < 1e-18);
        let flat = power_law_fit(&[3.0; 10], 10).unwrap();
        assert!(flat.alpha.abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(power_law_fit(&[1.0], 1).is_err());
        assert!(power_law_fit(&[1.0, 0.5], 3).is_err());
        assert!(power_law_fit(&[1.0, 0.0, 0.0], 3).is_err());
        assert!(power_law_fit(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn haar_magnitudes_constant() {
        let m = haar_magnitudes(&Signal::from_scalars(vec![1.0; 16])).unwrap();
        assert_eq!(m.len(), 16);
        assert!((m[0] - 4.0).abs() < 1e-12);
        assert!(m[1..].iter().all(|v| *v < 1e-12));
        assert!(haar_magnitudes(&Signal::from_scalars(vec![1.0; 12])).is_err());
    }

    #[test]
    fn plot_outputs() {
        let m: Vec<f64> = (1..=20).map(|n| 1.0 / n as f64).collect();
        let fit = power_law_fit(&m, 10).unwrap();
        let csv = plot_csv(&m, &fit);
        assert_eq!(csv.lines().count(), 21);
        assert!(csv.lines().nth(20).unwrap().ends_with(','));
        let svg = plot_svg(&m, &fit, "a < b");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
    }
}
