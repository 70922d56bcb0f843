//! Browser bindings: mesh statistics, the modified kernel profile and a small
//! transmission solve on the coarse ball.

use hodge_couple::bem::PanelQuadrature;
use hodge_couple::coupling::Assembly;
use hodge_couple::kernels::{KernelEval, WaveContext};
use hodge_couple::mesh::{extract_boundary, gen_ball};
use hodge_couple::verify::{manufactured_level, Level, Manufactured};
use wasm_bindgen::prelude::*;

fn js(e: hodge_couple::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// JSON summary of the ball mesh at `level` (0..=2).
#[wasm_bindgen]
pub fn mesh_stats(level: usize) -> Result<String, JsValue> {
    if level > 2 {
        return Err(JsValue::from_str("level must be 0, 1 or 2"));
    }
    let m = gen_ball(level).map_err(js)?;
    let b = extract_boundary(&m).map_err(js)?;
    let g = b.gauss_check();
    Ok(format!(
        r#"{{"level":{level},"vertices":{},"tets":{},"triangles":{},"volume":{:.6},"area":{:.6},"h":{:.4},"gauss":{:.2e}}}"#,
        m.vertices.len(),
        m.tets.len(),
        b.tris.len(),
        m.total_volume(),
        b.total_area(),
        b.h_max(),
        (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt()
    ))
}

/// Samples of G̃(r) on (0, r_max]: flat `[r, re, im, ...]`.
#[wasm_bindgen]
pub fn gtilde_profile(kappa: f64, eta: f64, r_max: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    let ke = KernelEval::new(WaveContext::from_kappa(kappa, eta).map_err(js)?);
    let n = n.clamp(2, 2000);
    let mut out = Vec::with_capacity(3 * n);
    for i in 1..=n {
        let r = r_max * i as f64 / n as f64;
        let g = ke.gtilde_radial(r).0;
        out.extend([r, g.re, g.im]);
    }
    Ok(out)
}

/// `[r_switch, gap]`: the radius where evaluation moves from the series to the
/// closed form, and the relative difference of the two branches there.
#[wasm_bindgen]
pub fn gtilde_branch_gap(kappa: f64, eta: f64) -> Result<Vec<f64>, JsValue> {
    let ke = KernelEval::new(WaveContext::from_kappa(kappa, eta).map_err(js)?);
    let kmax = kappa.max(kappa / eta.sqrt());
    if kmax == 0.0 {
        return Ok(vec![f64::INFINITY, 0.0]);
    }
    let r = ke.series_threshold / kmax;
    let (a, b) = (ke.gtilde_series(r).0, ke.gtilde_closed(r).0);
    Ok(vec![r, (a - b).norm() / a.norm().max(1e-300)])
}

/// Coupled solve with point-source data on the coarse ball; JSON errors.
#[wasm_bindgen]
pub fn transmission(kappa: f64, eta: f64) -> Result<String, JsValue> {
    let ctx = WaveContext::from_kappa(kappa, eta).map_err(js)?;
    let ke = KernelEval::new(ctx);
    let lv = Level::build(gen_ball(0).map_err(js)?, &ke, &PanelQuadrature::default()).map_err(js)?;
    let r = manufactured_level(0, &lv, &Manufactured::standard(ctx), Assembly::default()).map_err(js)?;
    Ok(format!(
        r#"{{"dofs":{},"h":{:.4},"err_L2_U":{:.4e},"err_Hcurl_U":{:.4e},"err_H1_P":{:.4e},"err_traceN":{:.4e},"err_exterior":{:.4e},"residual":{:.2e}}}"#,
        r.dofs, r.h, r.err_l2_u, r.err_hcurl_u, r.err_h1_p, r.err_trace_n, r.err_exterior, r.residual
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_and_profile() {
        let s = mesh_stats(0).unwrap();
        assert!(s.contains("\"level\":0"));
        let p = gtilde_profile(1.0, 2.0, 3.0, 50).unwrap();
        assert_eq!(p.len(), 150);
        assert!(p.chunks(3).all(|c| c[1].is_finite() && c[2].is_finite()));
        assert!(gtilde_branch_gap(1.0, 2.0).unwrap()[1] < 1e-10);
    }

    #[test]
    fn coarse_transmission() {
        let s = transmission(1.0, 2.0).unwrap();
        assert!(s.contains("err_exterior"));
    }
}
