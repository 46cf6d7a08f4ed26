use crate::error::{invalid, Result};
use crate::ot::exact::{w2_exact_capped, TransportPlan, DEFAULT_EXACT_CAP};
use crate::ot::measure::DiscreteMeasure;

/// Plan cells below this mass are dropped from interpolants.
const CELL_FLOOR: f64 = 1e-15;

/// McCann displacement interpolation along an optimal `W2` plan.
///
/// Each plan cell `(x_i, y_j, p_ij)` becomes an atom at `(1-t) x_i + t y_j`
/// carrying mass `p_ij`.
pub fn displacement_interpolate(mu: &DiscreteMeasure, nu: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid(format!("interpolation time {t} outside [0, 1]")));
    }
    let (_, plan) = w2_exact_capped(mu, nu, DEFAULT_EXACT_CAP)?;
    Ok(push_plan(mu, nu, &plan, t))
}

/// Pushes a fixed coupling forward to time `t`.
pub(crate) fn push_plan(mu: &DiscreteMeasure, nu: &DiscreteMeasure, plan: &TransportPlan, t: f64) -> DiscreteMeasure {
    let d = mu.dim();
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for i in 0..mu.len() {
        let x = mu.point(i);
        let row = plan.coupling.row(i);
        for (j, &p) in row.iter().enumerate() {
            if p <= CELL_FLOOR {
                continue;
            }
            let y = nu.point(j);
            coords.extend(x.iter().zip(y).map(|(a, b)| {
                if t == 0.0 {
                    *a
                } else if t == 1.0 {
                    *b
                } else {
                    (1.0 - t) * a + t * b
                }
            }));
            weights.push(p);
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    DiscreteMeasure::from_parts_unchecked(d, coords, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::exact::w2_exact;

    fn line(points: &[f64]) -> DiscreteMeasure {
        let pts: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
        DiscreteMeasure::uniform(&pts).unwrap()
    }

    #[test]
    fn dirac_midpoint() {
        let r = displacement_interpolate(&line(&[0.0]), &line(&[2.0]), 0.5).unwrap();
        assert_eq!(r.coords(), &[1.0]);
        let r = displacement_interpolate(&line(&[0.0]), &line(&[2.0]), 0.25).unwrap();
        assert_eq!(r.coords(), &[0.5]);
    }

    #[test]
    fn endpoints() {
        let mu = line(&[0.0, 1.0]);
        let nu = line(&[2.0, 3.0]);
        let r0 = displacement_interpolate(&mu, &nu, 0.0).unwrap();
        assert!(r0.canonical(1e-12).approx_eq(&mu.canonical(1e-12), 0.0));
        let r1 = displacement_interpolate(&mu, &nu, 1.0).unwrap();
        assert!(r1.canonical(1e-12).approx_eq(&nu.canonical(1e-12), 0.0));
    }

    #[test]
    fn two_point_midpoint_by_hand() {
        // Plan 0->2, 1->3 pushed to t = 1/2 lands on 1 and 2.
        let r = displacement_interpolate(&line(&[0.0, 1.0]), &line(&[2.0, 3.0]), 0.5).unwrap();
        let c = r.canonical(1e-12);
        assert_eq!(c.coords(), &[1.0, 2.0]);
        assert_eq!(c.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn constant_speed_along_geodesic() {
        let mu = DiscreteMeasure::new(&[vec![0.0, 0.0], vec![1.0, 0.5], vec![0.2, 2.0]], vec![0.2, 0.5, 0.3]).unwrap();
        let nu = DiscreteMeasure::new(&[vec![3.0, 1.0], vec![-1.0, 0.0]], vec![0.6, 0.4]).unwrap();
        let total = w2_exact(&mu, &nu).unwrap().0;
        for t in [0.1, 0.35, 0.8] {
            let r = displacement_interpolate(&mu, &nu, t).unwrap();
            let d = w2_exact(&mu, &r).unwrap().0;
            assert!((d - t * total).abs() < 1e-9, "t={t}: {d} vs {}", t * total);
        }
    }

    #[test]
    fn rejects_out_of_range_time() {
        assert!(displacement_interpolate(&line(&[0.0]), &line(&[1.0]), 1.5).is_err());
    }
}
