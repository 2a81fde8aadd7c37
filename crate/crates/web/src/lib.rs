//! Browser demo: three interactive operations over the core estimators.
//!
//! Every operation is a plain function returning a serializable result so it
//! can be tested natively; the `wasm_bindgen` wrappers hand JSON to the page.

use accommodate::coordination::{style_report, Direction, StyleParams};
use accommodate::estimators::{gaussian_mi_bits, mi_ksg, ContinuousPairSample, EstimateWithBand, KsgParams, Units};
use accommodate::permtests::{tlc_test, Decision, LengthTestParams};
use accommodate::replicate::Execution;
use accommodate::synthgen::{generate_with, latent_analytic_info, ExchangeCount, GeneratorConfig, LengthModel, StyleMarker};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 600;

#[derive(Debug, Serialize)]
pub struct KsgDemo {
    pub estimate: f64,
    pub analytic: f64,
    /// At most a few hundred points for the scatter plot.
    pub points: Vec<[f64; 2]>,
}

/// KSG on a bivariate Gaussian sample against `-1/2 log2(1 - rho^2)`.
pub fn ksg_gaussian(n: usize, rho: f64, k: usize, seed: u64) -> Result<KsgDemo, String> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err("rho must lie strictly between -1 and 1".into());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        x.push(a);
        y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
    }
    let step = n.div_ceil(MAX_POINTS).max(1);
    let points = (0..n).step_by(step).map(|i| [x[i], y[i]]).collect();
    let sample = ContinuousPairSample::new(x, y).map_err(|e| e.to_string())?;
    let params = KsgParams { k, seed, execution: Execution::Serial, ..KsgParams::default() };
    let estimate = mi_ksg(&sample, &params).map_err(|e| e.to_string())?;
    Ok(KsgDemo { estimate, analytic: gaussian_mi_bits(rho), points })
}

#[derive(Debug, Serialize)]
pub struct LengthDemo {
    pub analytic_olc: f64,
    pub analytic_tlc: f64,
    pub observed: f64,
    pub null_replicates: Vec<f64>,
    pub null_band: EstimateWithBand,
    pub p_value: f64,
    pub reject: bool,
}

/// The turn-by-turn length test on one synthetic corpus with coupling `beta`.
pub fn length_test(beta: f64, dialogues: usize, exchanges: usize, permutations: usize, seed: u64) -> Result<LengthDemo, String> {
    let cfg = GeneratorConfig {
        dialogues,
        exchanges: ExchangeCount::Fixed(exchanges),
        length: LengthModel { beta, ..LengthModel::default() },
        seed,
        ..GeneratorConfig::default()
    };
    let truth = latent_analytic_info(&cfg).map_err(|e| e.to_string())?;
    let table = generate_with(&cfg, Execution::Serial)
        .and_then(|d| d.to_table())
        .map_err(|e| e.to_string())?;
    let params = LengthTestParams { replicates: permutations, alpha: 0.05, k: 3, seed, execution: Execution::Serial };
    let r = tlc_test(&table, &params).map_err(|e| e.to_string())?;
    Ok(LengthDemo {
        analytic_olc: truth.olc,
        analytic_tlc: truth.tlc,
        observed: r.observed,
        null_band: r.null_band,
        p_value: r.p_value,
        reject: r.decision == Decision::Reject,
        null_replicates: r.null_replicates,
    })
}

#[derive(Debug, Serialize)]
pub struct StyleDemo {
    pub mi_band: EstimateWithBand,
    pub osc: f64,
    pub osc_band: EstimateWithBand,
    pub zero_band: EstimateWithBand,
    pub length_driven: bool,
}

/// MI band, OSC and zero band for one marker driven by length (`w_length`)
/// and by the originator's marker (`gamma`).
pub fn style_bands(w_length: f64, gamma: f64, beta: f64, replicates: usize, seed: u64) -> Result<StyleDemo, String> {
    let cfg = GeneratorConfig {
        dialogues: 30,
        exchanges: ExchangeCount::Fixed(40),
        length: LengthModel { beta, ..LengthModel::default() },
        markers: vec![StyleMarker { w_length, gamma, ..StyleMarker::new("article") }],
        seed,
        ..GeneratorConfig::default()
    };
    let table = generate_with(&cfg, Execution::Serial)
        .and_then(|d| d.to_table())
        .map_err(|e| e.to_string())?;
    let params = StyleParams { replicates, seed, execution: Execution::Serial, ..StyleParams::default() };
    let dir = Direction { originator: cfg.originator_role.clone(), respondent: cfg.respondent_role.clone() };
    let report = style_report(&table, dir, &params, 3, Units::Bits).map_err(|e| e.to_string())?;
    let m = report.markers.into_iter().next().ok_or("no marker in report")?;
    Ok(StyleDemo {
        length_driven: m.mi_above_zero_band && m.osc_within_zero_band,
        mi_band: m.mi_band,
        osc: m.osc,
        osc_band: m.osc_band,
        zero_band: m.zero_band,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = ksgGaussian)]
pub fn ksg_gaussian_js(n: usize, rho: f64, k: usize, seed: u32) -> Result<String, JsValue> {
    to_js(ksg_gaussian(n, rho, k, seed as u64))
}

#[wasm_bindgen(js_name = lengthTest)]
pub fn length_test_js(beta: f64, dialogues: usize, exchanges: usize, permutations: usize, seed: u32) -> Result<String, JsValue> {
    to_js(length_test(beta, dialogues, exchanges, permutations, seed as u64))
}

#[wasm_bindgen(js_name = styleBands)]
pub fn style_bands_js(w_length: f64, gamma: f64, beta: f64, replicates: usize, seed: u32) -> Result<String, JsValue> {
    to_js(style_bands(w_length, gamma, beta, replicates, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ksg_tracks_analytic() {
        let d = ksg_gaussian(4000, 0.8, 3, 1).unwrap();
        assert!((d.estimate - d.analytic).abs() < 0.05, "{d:?}");
        assert!(d.points.len() <= MAX_POINTS);
        assert!(ksg_gaussian(100, 1.0, 3, 1).is_err());
    }

    #[test]
    fn length_test_responds_to_beta() {
        let strong = length_test(0.6, 20, 30, 39, 2).unwrap();
        assert!(strong.reject && strong.analytic_tlc > 0.15);
        let none = length_test(0.0, 20, 30, 39, 2).unwrap();
        assert_eq!(none.analytic_tlc, 0.0);
        assert_eq!(none.null_replicates.len(), 39);
    }

    #[test]
    fn style_confound_shows() {
        let d = style_bands(1.5, 0.0, 0.5, 99, 3).unwrap();
        assert!(d.mi_band.lower > d.zero_band.upper, "{d:?}");
        let direct = style_bands(0.0, 2.0, 0.0, 99, 3).unwrap();
        assert!(direct.osc > direct.zero_band.upper, "{direct:?}");
    }

    #[test]
    fn errors_surface_as_strings() {
        assert!(length_test(0.0, 1, 2, 39, 0).is_err());
        assert!(style_bands(0.0, 0.0, 0.0, 1, 0).is_err());
    }
}
