//! Closed-form modulus of the composition of a relaxed reflector with a
//! projection, the Ogura-Yamada bounds, and the quotient/envelope functions
//! used for property testing.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::subspace::{angles, projector, reflector, Subspace};
use crate::tolerance::ToleranceConfig;

/// The composition T = ((1-beta) I + beta R_V) P_U together with the
/// tolerance-derived case flags that drive the closed-form dispatch.
#[derive(Debug, Clone)]
pub struct CompositionSpec {
    pub u: Subspace,
    pub v: Subspace,
    pub beta: f64,
    pub u_is_full: bool,
    pub v_is_full: bool,
    pub u_subset_v: bool,
    /// Friedrichs angle cosine of (U, V).
    pub friedrichs: f64,
}

impl CompositionSpec {
    pub fn new(u: Subspace, v: Subspace, beta: f64, cfg: &ToleranceConfig) -> Result<Self> {
        if u.ambient_dim() != v.ambient_dim() {
            return Err(Error::Dimension(format!(
                "ambient dimensions differ: {} vs {}",
                u.ambient_dim(),
                v.ambient_dim()
            )));
        }
        let rep = angles(&u, &v, cfg)?;
        // U is contained in V exactly when all of its principal directions
        // cluster at angle zero.
        let u_subset_v = u.dim() <= v.dim() && rep.dim_intersection == u.dim();
        Ok(Self {
            u_is_full: u.is_full(),
            v_is_full: v.is_full(),
            u_subset_v,
            friedrichs: rep.friedrichs,
            u,
            v,
            beta,
        })
    }
}

/// Materialize T = ((1-beta) I + beta R_V) P_U as a matrix.
pub fn build_composition(spec: &CompositionSpec) -> Result<DenseMatrix> {
    if !(0.0..=1.0).contains(&spec.beta) {
        return Err(Error::Domain(format!("beta must lie in [0, 1], got {}", spec.beta)));
    }
    let n = spec.u.ambient_dim();
    let relaxed = DenseMatrix::identity(n)
        .scale(1.0 - spec.beta)
        .add(&reflector(&spec.v).scale(spec.beta))?;
    relaxed.matmul(&projector(&spec.u))
}

/// The exact modulus of the composition, dispatched over the special cases
/// (U full and/or U inside V) and the Friedrichs-angle formula otherwise.
pub fn kappa_closed_form(spec: &CompositionSpec, _cfg: &ToleranceConfig) -> Result<f64> {
    let beta = spec.beta;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    if spec.u_is_full && spec.v_is_full {
        return Ok(0.0);
    }
    if spec.u_is_full {
        return Ok(beta);
    }
    if spec.u_subset_v {
        return Ok(0.5);
    }
    Ok(envelope_formula(spec.friedrichs, beta))
}

/// kappa(P_V P_U) = (1 + c_F) / (2 + c_F) for the plain projection
/// composition (the beta = 1/2 specialization).
pub fn kappa_projection_composition(c_f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&c_f) {
        return Err(Error::Domain(format!("c_F must lie in [0, 1], got {c_f}")));
    }
    Ok((1.0 + c_f) / (2.0 + c_f))
}

/// Ogura-Yamada composition bound (k1 + k2 - 2 k1 k2) / (1 - k1 k2);
/// returns 1 at the 0/0 point k1 = k2 = 1 by continuity.
pub fn ogura_yamada_bound(k1: f64, k2: f64) -> Result<f64> {
    for k in [k1, k2] {
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::Domain(format!("moduli must lie in [0, 1], got {k}")));
        }
    }
    let denom = 1.0 - k1 * k2;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((k1 + k2 - 2.0 * k1 * k2) / denom)
}

/// Inputs of the scalar quotient q(t) = (t^2 + 4 b c t + 4 b^2) /
/// (2 t^2 + 4 b c t + 4 b).
#[derive(Debug, Clone, Copy)]
pub struct QEval {
    /// t = ||u_perp|| / ||P_{V_perp} u|| > 0.
    pub t: f64,
    /// Cosine between u_perp and P_{V_perp} u, in [-1, 1].
    pub c: f64,
    pub beta: f64,
}

pub fn q_quotient(e: QEval) -> Result<f64> {
    if !(e.t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {}", e.t)));
    }
    if !(-1.0..=1.0).contains(&e.c) {
        return Err(Error::Domain(format!("c must lie in [-1, 1], got {}", e.c)));
    }
    if !(e.beta > 0.0 && e.beta < 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1), got {}", e.beta)));
    }
    let (t, c, b) = (e.t, e.c, e.beta);
    let denom = 2.0 * t * t + 4.0 * b * c * t + 4.0 * b;
    if denom <= 0.0 {
        return Err(Error::Numeric(format!(
            "quotient denominator is nonpositive ({denom}); invariant violated"
        )));
    }
    Ok((t * t + 4.0 * b * c * t + 4.0 * b * b) / denom)
}

/// The unique positive critical point of q for c > 0 (its global maximizer).
pub fn q_maximizer_t(c: f64, beta: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain(format!("c must lie in (0, 1], got {c}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    let disc = (1.0 - 2.0 * beta).powi(2) + 4.0 * (1.0 - beta) * beta * c * c;
    Ok((1.0 - 2.0 * beta + disc.sqrt()) / c)
}

fn envelope_formula(x: f64, beta: f64) -> f64 {
    let disc = (1.0 - 2.0 * beta).powi(2) + 4.0 * (1.0 - beta) * beta * x * x;
    (1.0 + 2.0 * beta * (1.0 - x * x) + disc.sqrt()) / (2.0 * (2.0 - beta * x * x))
}

/// The envelope Q(x) = sup_t q(t, x): strictly increasing from
/// max{beta, 1/2} at x = 0 to 1/(2 - beta) at x = 1.
pub fn q_envelope(x: f64, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x must lie in [0, 1], got {x}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok(envelope_formula(x, beta))
}

/// Default sweep grid over beta: 0.05, 0.10, ..., 0.95.
pub fn default_beta_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// Default sweep grid over c_F: 0.00, 0.05, ..., 1.00.
pub fn default_cf_grid() -> Vec<f64> {
    (0..=20).map(|i| (i as f64 * 0.05).min(1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn kappa_star() -> f64 {
        (3.0 + 2.0_f64.sqrt()) / 7.0
    }

    fn worked_example_spec(beta: f64) -> CompositionSpec {
        let u = Subspace::span(2, &[vec![1.0, 0.0]], &cfg()).unwrap();
        let v = Subspace::span(2, &[vec![1.0, 1.0]], &cfg()).unwrap();
        CompositionSpec::new(u, v, beta, &cfg()).unwrap()
    }

    #[test]
    fn build_composition_worked_example() {
        let t = build_composition(&worked_example_spec(0.5)).unwrap();
        assert_abs_diff_eq!(t.get(0, 0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.get(1, 0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.get(0, 1), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.get(1, 1), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn build_composition_degenerate_cases() {
        // beta = 0 collapses to the projector onto U.
        let spec = worked_example_spec(0.0);
        let t = build_composition(&spec).unwrap();
        let p = projector(&spec.u);
        assert!(t.sub(&p).unwrap().max_abs() < 1e-12);

        // U = V = full space gives the identity.
        let full = CompositionSpec::new(Subspace::full(3), Subspace::full(3), 0.7, &cfg()).unwrap();
        let t = build_composition(&full).unwrap();
        assert!(t.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn closed_form_worked_example() {
        let k = kappa_closed_form(&worked_example_spec(0.5), &cfg()).unwrap();
        assert_abs_diff_eq!(k, kappa_star(), epsilon = 1e-12);
    }

    #[test]
    fn closed_form_special_cases() {
        // c_F = 0 at beta = 1/2 gives 1/2 (orthogonal lines in R^2).
        let u = Subspace::span(2, &[vec![1.0, 0.0]], &cfg()).unwrap();
        let v = Subspace::span(2, &[vec![0.0, 1.0]], &cfg()).unwrap();
        let spec = CompositionSpec::new(u, v, 0.5, &cfg()).unwrap();
        assert_abs_diff_eq!(kappa_closed_form(&spec, &cfg()).unwrap(), 0.5, epsilon = 1e-12);

        // U full, V proper: kappa = beta.
        let u = Subspace::full(3);
        let v = Subspace::span(3, &[vec![1.0, 0.0, 0.0]], &cfg()).unwrap();
        let spec = CompositionSpec::new(u, v, 0.3, &cfg()).unwrap();
        assert_abs_diff_eq!(kappa_closed_form(&spec, &cfg()).unwrap(), 0.3, epsilon = 1e-12);

        // U = V = full: kappa = 0.
        let spec = CompositionSpec::new(Subspace::full(2), Subspace::full(2), 0.4, &cfg()).unwrap();
        assert_eq!(kappa_closed_form(&spec, &cfg()).unwrap(), 0.0);

        // U proper inside V: kappa = 1/2.
        let u = Subspace::span(3, &[vec![1.0, 0.0, 0.0]], &cfg()).unwrap();
        let v = Subspace::span(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], &cfg()).unwrap();
        let spec = CompositionSpec::new(u, v, 0.8, &cfg()).unwrap();
        assert_eq!(kappa_closed_form(&spec, &cfg()).unwrap(), 0.5);

        // beta out of the open interval is a domain error.
        assert!(kappa_closed_form(&worked_example_spec(1.0), &cfg()).is_err());
    }

    #[test]
    fn projection_composition_values() {
        let r = 1.0 / 2.0_f64.sqrt();
        assert_abs_diff_eq!(kappa_projection_composition(r).unwrap(), kappa_star(), epsilon = 1e-12);
        assert_eq!(kappa_projection_composition(0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(kappa_projection_composition(1.0).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert!(kappa_projection_composition(1.5).is_err());
    }

    #[test]
    fn ogura_yamada_values() {
        assert_abs_diff_eq!(ogura_yamada_bound(0.5, 0.5).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ogura_yamada_bound(0.0, 0.37).unwrap(), 0.37, epsilon = 1e-15);
        assert_abs_diff_eq!(ogura_yamada_bound(0.5, 0.25).unwrap(), 4.0 / 7.0, epsilon = 1e-15);
        assert_eq!(ogura_yamada_bound(1.0, 1.0).unwrap(), 1.0);
        assert!(ogura_yamada_bound(-0.1, 0.5).is_err());
    }

    #[test]
    fn quotient_limits() {
        let beta = 0.37;
        let near_zero = q_quotient(QEval { t: 1e-9, c: 0.4, beta }).unwrap();
        assert!((near_zero - beta).abs() < 1e-6);

        let near_inf = q_quotient(QEval { t: 1e9, c: 0.4, beta }).unwrap();
        assert!((near_inf - 0.5).abs() < 1e-6);

        // beta = 1/2, c = 0: constant 1/2.
        for t in [0.01, 1.0, 37.0] {
            assert_abs_diff_eq!(
                q_quotient(QEval { t, c: 0.0, beta: 0.5 }).unwrap(),
                0.5,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn maximizer_hand_values() {
        // beta = 1/2 collapses the formula to t1 = 1 for every c.
        for c in [0.1, 0.5, 1.0] {
            assert_abs_diff_eq!(q_maximizer_t(c, 0.5).unwrap(), 1.0, epsilon = 1e-12);
        }
        let c = 1.0 / 2.0_f64.sqrt();
        let t1 = q_maximizer_t(c, 0.5).unwrap();
        let q1 = q_quotient(QEval { t: t1, c, beta: 0.5 }).unwrap();
        assert_abs_diff_eq!(q1, kappa_star(), epsilon = 1e-12);
        assert!(q_maximizer_t(0.0, 0.5).is_err());
    }

    #[test]
    fn maximizer_is_local_max() {
        for &(c, beta) in &[(0.3, 0.2), (0.8, 0.7), (0.99, 0.45)] {
            let t1 = q_maximizer_t(c, beta).unwrap();
            let at = q_quotient(QEval { t: t1, c, beta }).unwrap();
            let lo = q_quotient(QEval { t: t1 * (1.0 - 1e-4), c, beta }).unwrap();
            let hi = q_quotient(QEval { t: t1 * (1.0 + 1e-4), c, beta }).unwrap();
            assert!(at >= lo && at >= hi, "t1 not a local max for c={c}, beta={beta}");
        }
    }

    #[test]
    fn maximizer_derivative_sign_flip() {
        // Finite differences: q' positive before t1, negative after.
        let (c, beta) = (0.6, 0.3);
        let t1 = q_maximizer_t(c, beta).unwrap();
        let h = 1e-7;
        let dq = |t: f64| {
            (q_quotient(QEval { t: t + h, c, beta }).unwrap()
                - q_quotient(QEval { t: t - h, c, beta }).unwrap())
                / (2.0 * h)
        };
        assert!(dq(0.5 * t1) > 0.0);
        assert!(dq(2.0 * t1) < 0.0);
    }

    #[test]
    fn envelope_endpoints() {
        assert_abs_diff_eq!(q_envelope(0.0, 0.3).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q_envelope(0.0, 0.8).unwrap(), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(q_envelope(1.0, 0.5).unwrap(), 2.0 / 3.0, epsilon = 1e-14);
        assert!(q_envelope(1.1, 0.5).is_err());
    }

    #[test]
    fn envelope_monotone_on_grid() {
        for b in (1..10).map(|i| i as f64 / 10.0) {
            let q3 = q_envelope(0.3, b).unwrap();
            let q6 = q_envelope(0.6, b).unwrap();
            let q9 = q_envelope(0.9, b).unwrap();
            assert!(q3 < q6 && q6 < q9, "envelope not increasing at beta={b}");
        }
    }

    #[test]
    fn envelope_matches_projection_composition_at_half() {
        for i in 0..=20 {
            let c = i as f64 / 20.0;
            let a = q_envelope(c, 0.5).unwrap();
            let b = kappa_projection_composition(c).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_max_of_q_stays_below_envelope() {
        for &(c, beta) in &[(0.2, 0.3), (0.7, 0.6), (0.95, 0.1)] {
            let env = q_envelope(c, beta).unwrap();
            let mut grid_max = 0.0_f64;
            for i in -300..=300 {
                let t = 10f64.powf(i as f64 / 50.0);
                grid_max = grid_max.max(q_quotient(QEval { t, c, beta }).unwrap());
            }
            assert!(grid_max <= env + 1e-9);
            // With the analytic maximizer added to the grid the max must
            // close the remaining gap.
            let t1 = q_maximizer_t(c, beta).unwrap();
            grid_max = grid_max.max(q_quotient(QEval { t: t1, c, beta }).unwrap());
            assert!(env - grid_max < 1e-6, "grid max {grid_max} far below envelope {env}");
        }
    }
}
