use crate::error::{Error, Result};
use crate::state::Pose;
use crate::tire::WearPower;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub total: f64,
    pub tracking: f64,
    pub wear: f64,
}

/// `J = (Y - Y_t)^T (I ⊗ Q) (Y - Y_t) + P^T (I ⊗ L) P` over the stacked
/// horizon, evaluated block by block since both weights are block diagonal.
pub fn cost_function(
    predicted: &[Pose],
    wear: &[WearPower],
    reference: &[Pose],
    weights_q: [f64; 3],
    weights_l: [f64; 3],
) -> Result<CostBreakdown> {
    if predicted.len() != reference.len() || wear.len() != reference.len() {
        return Err(Error::input(format!(
            "horizon length mismatch: {} poses, {} wear samples, {} reference poses",
            predicted.len(),
            wear.len(),
            reference.len()
        )));
    }
    Ok(cost_unchecked(predicted, wear, reference, weights_q, weights_l))
}

#[inline]
pub(crate) fn cost_unchecked(
    predicted: &[Pose],
    wear: &[WearPower],
    reference: &[Pose],
    q: [f64; 3],
    l: [f64; 3],
) -> CostBreakdown {
    let mut tracking = 0.0;
    for (p, r) in predicted.iter().zip(reference) {
        let (ex, ey, eh) = (p.x - r.x, p.y - r.y, p.heading - r.heading);
        tracking += q[0] * ex * ex + q[1] * ey * ey + q[2] * eh * eh;
    }
    let mut wear_cost = 0.0;
    if l.iter().any(|v| *v != 0.0) {
        for w in wear {
            wear_cost += l[0] * w.p_slip_ratio * w.p_slip_ratio
                + l[1] * w.p_slip_angle * w.p_slip_angle
                + l[2] * w.p_steer * w.p_steer;
        }
    }
    CostBreakdown {
        total: tracking + wear_cost,
        tracking,
        wear: wear_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(predicted: &[Pose], wear: &[WearPower], reference: &[Pose], q: [f64; 3], l: [f64; 3]) -> f64 {
        let np = predicted.len();
        let eye = DMatrix::<f64>::identity(np, np);
        let wy = eye.kronecker(&DMatrix::from_diagonal(&DVector::from_row_slice(&q)));
        let wp = eye.kronecker(&DMatrix::from_diagonal(&DVector::from_row_slice(&l)));
        let e = DVector::from_iterator(
            3 * np,
            predicted.iter().zip(reference).flat_map(|(p, r)| {
                [p.x - r.x, p.y - r.y, p.heading - r.heading]
            }),
        );
        let pv = DVector::from_iterator(3 * np, wear.iter().flat_map(|w| w.as_array()));
        (e.transpose() * wy * e)[(0, 0)] + (pv.transpose() * wp * pv)[(0, 0)]
    }

    #[test]
    fn zero_when_on_reference() {
        let r = vec![Pose::new(1.0, 2.0, 0.3); 4];
        let c = cost_function(&r, &[WearPower::ZERO; 4], &r, [1.0, 1.0, 10.0], [1.0; 3]).unwrap();
        assert_eq!(c.total, 0.0);
    }

    #[test]
    fn single_step_quadratic() {
        let c = cost_function(
            &[Pose::new(1.0, 0.0, 0.0)],
            &[WearPower::ZERO],
            &[Pose::default()],
            [2.0, 1.0, 1.0],
            [0.0; 3],
        )
        .unwrap();
        assert_eq!(c.total, 2.0);
    }

    #[test]
    fn length_mismatch() {
        let r = vec![Pose::default(); 3];
        assert!(cost_function(&r[..2], &[WearPower::ZERO; 3], &r, [1.0; 3], [0.0; 3]).is_err());
        assert!(cost_function(&r, &[WearPower::ZERO; 2], &r, [1.0; 3], [0.0; 3]).is_err());
    }

    #[test]
    fn matches_dense_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let pose = |rng: &mut ChaCha8Rng| Pose::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-3.0..3.0));
            let p: Vec<Pose> = (0..5).map(|_| pose(&mut rng)).collect();
            let r: Vec<Pose> = (0..5).map(|_| pose(&mut rng)).collect();
            let w: Vec<WearPower> = (0..5)
                .map(|_| WearPower::new(rng.random_range(0.0..5e3), rng.random_range(0.0..5e3), rng.random_range(0.0..5e2)))
                .collect();
            let q = [rng.random_range(0.1..10.0), rng.random_range(0.1..10.0), rng.random_range(0.1..10.0)];
            let l = [rng.random_range(0.0..1e-6), rng.random_range(0.0..1e-6), rng.random_range(0.0..1e-6)];
            let got = cost_function(&p, &w, &r, q, l).unwrap().total;
            let want = dense(&p, &w, &r, q, l);
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn zero_wear_weights_ignore_wear_bitwise() {
        let p = vec![Pose::new(0.1, -0.2, 0.05); 3];
        let r = vec![Pose::default(); 3];
        let a = cost_function(&p, &[WearPower::ZERO; 3], &r, [1.0, 1.0, 10.0], [0.0; 3]).unwrap();
        let huge = [WearPower::new(1e12, f64::INFINITY, 3.0); 3];
        let b = cost_function(&p, &huge, &r, [1.0, 1.0, 10.0], [0.0; 3]).unwrap();
        assert_eq!(a.total.to_bits(), b.total.to_bits());
    }
}
