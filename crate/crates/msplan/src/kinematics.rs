//! Configuration-to-workspace mapping for the collision model.
//!
//! Robot bodies are covered by spheres; planning only ever needs the sphere
//! centers and their Jacobians with respect to the configuration.

use nalgebra::{DMatrix, Vector2};

use crate::error::{Error, Result};

/// A collision sphere attached to a link at an offset along it.
#[derive(Clone, Debug, PartialEq)]
pub struct BodySphere {
    pub link: usize,
    pub offset: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RobotModel {
    /// Translating disk; the configuration is its workspace position.
    Point { base: Vector2<f64>, radius: f64 },
    /// Planar serial chain; the configuration is the joint angle vector.
    /// Spheres are kept sorted by link index then offset.
    PlanarArm {
        base: Vector2<f64>,
        heading: f64,
        link_lengths: Vec<f64>,
        spheres: Vec<BodySphere>,
    },
}

impl RobotModel {
    pub fn point(base: Vector2<f64>, radius: f64) -> Result<Self> {
        let m = RobotModel::Point { base, radius };
        m.validate()?;
        Ok(m)
    }

    pub fn planar_arm(
        base: Vector2<f64>,
        heading: f64,
        link_lengths: Vec<f64>,
        mut spheres: Vec<BodySphere>,
    ) -> Result<Self> {
        // deterministic residual stacking: link index, then offset
        spheres.sort_by(|a, b| a.link.cmp(&b.link).then(a.offset.total_cmp(&b.offset)));
        let m = RobotModel::PlanarArm { base, heading, link_lengths, spheres };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RobotModel::Point { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(Error::invalid("point robot radius must be positive"));
                }
            }
            RobotModel::PlanarArm { link_lengths, spheres, .. } => {
                if link_lengths.is_empty() {
                    return Err(Error::invalid("planar arm needs at least one link"));
                }
                if link_lengths.iter().any(|l| *l <= 0.0) {
                    return Err(Error::invalid("link lengths must be positive"));
                }
                if spheres.is_empty() {
                    return Err(Error::invalid("planar arm needs at least one body sphere"));
                }
                for s in spheres {
                    if s.link >= link_lengths.len() {
                        return Err(Error::invalid(format!(
                            "sphere link index {} out of range ({} links)",
                            s.link,
                            link_lengths.len()
                        )));
                    }
                    if s.radius <= 0.0 {
                        return Err(Error::invalid("sphere radii must be positive"));
                    }
                    if s.offset < 0.0 || s.offset > link_lengths[s.link] {
                        return Err(Error::invalid(format!(
                            "sphere offset {} outside link {} of length {}",
                            s.offset, s.link, link_lengths[s.link]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Configuration-space dimension.
    pub fn dof(&self) -> usize {
        match self {
            RobotModel::Point { .. } => 2,
            RobotModel::PlanarArm { link_lengths, .. } => link_lengths.len(),
        }
    }

    pub fn num_spheres(&self) -> usize {
        match self {
            RobotModel::Point { .. } => 1,
            RobotModel::PlanarArm { spheres, .. } => spheres.len(),
        }
    }
}

/// One collision sphere placed by forward kinematics: its center, the
/// 2 x dof Jacobian of the center, and its radius.
#[derive(Clone, Debug)]
pub struct SpherePlacement {
    pub center: Vector2<f64>,
    pub jacobian: DMatrix<f64>,
    pub radius: f64,
}

/// Places every body sphere for configuration `q`.
///
/// Point robots translate: `center = base + q`, identity Jacobian. For the
/// planar chain, joint `k` turns everything at or beyond link `k`; a
/// sphere's Jacobian column for joint `j <= k` is the perpendicular of the
/// lever arm from joint `j` to the sphere center, and zero for `j > k`.
pub fn forward_kinematics(model: &RobotModel, q: &nalgebra::DVector<f64>) -> Result<Vec<SpherePlacement>> {
    if q.len() != model.dof() {
        return Err(Error::invalid(format!(
            "configuration has {} entries, model expects {}",
            q.len(),
            model.dof()
        )));
    }
    match model {
        RobotModel::Point { base, radius } => Ok(vec![SpherePlacement {
            center: Vector2::new(base.x + q[0], base.y + q[1]),
            jacobian: DMatrix::identity(2, 2),
            radius: *radius,
        }]),
        RobotModel::PlanarArm { base, heading, link_lengths, spheres } => {
            let n = link_lengths.len();
            // joint origins and cumulative angles
            let mut joints = Vec::with_capacity(n);
            let mut angles = Vec::with_capacity(n);
            let mut pos = *base;
            let mut angle = *heading;
            for k in 0..n {
                angle += q[k];
                joints.push(pos);
                angles.push(angle);
                pos += Vector2::new(angle.cos(), angle.sin()) * link_lengths[k];
            }
            let mut out = Vec::with_capacity(spheres.len());
            for s in spheres {
                let dir = Vector2::new(angles[s.link].cos(), angles[s.link].sin());
                let center = joints[s.link] + dir * s.offset;
                let mut jac = DMatrix::zeros(2, n);
                for j in 0..=s.link {
                    let lever = center - joints[j];
                    jac[(0, j)] = -lever.y;
                    jac[(1, j)] = lever.x;
                }
                out.push(SpherePlacement { center, jacobian: jac, radius: s.radius });
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn two_link_end_sphere() -> RobotModel {
        RobotModel::planar_arm(
            Vector2::zeros(),
            0.0,
            vec![1.0, 1.0],
            vec![BodySphere { link: 1, offset: 1.0, radius: 0.05 }],
        )
        .unwrap()
    }

    #[test]
    fn point_robot_translates() {
        let model = RobotModel::point(Vector2::zeros(), 0.05).unwrap();
        let fk = forward_kinematics(&model, &DVector::from_vec(vec![0.3, 0.4])).unwrap();
        assert_eq!(fk.len(), 1);
        assert_relative_eq!(fk[0].center.x, 0.3);
        assert_relative_eq!(fk[0].center.y, 0.4);
        assert_eq!(fk[0].jacobian, DMatrix::identity(2, 2));
    }

    #[test]
    fn extended_two_link_reaches_two_meters() {
        let fk = forward_kinematics(&two_link_end_sphere(), &DVector::zeros(2)).unwrap();
        assert_relative_eq!(fk[0].center.x, 2.0, epsilon = 1e-15);
        assert_relative_eq!(fk[0].center.y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bent_two_link_hand_evaluated() {
        let fk = forward_kinematics(&two_link_end_sphere(), &DVector::from_vec(vec![PI / 2.0, -PI / 2.0]))
            .unwrap();
        assert_relative_eq!(fk[0].center.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fk[0].center.y, 1.0, epsilon = 1e-12);
        // cross-check the jacobian against central differences
        let q = DVector::from_vec(vec![PI / 2.0, -PI / 2.0]);
        let h = 1e-6;
        for j in 0..2 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[j] += h;
            qm[j] -= h;
            let cp = forward_kinematics(&two_link_end_sphere(), &qp).unwrap()[0].center;
            let cm = forward_kinematics(&two_link_end_sphere(), &qm).unwrap()[0].center;
            let fd = (cp - cm) / (2.0 * h);
            assert!((fd.x - fk[0].jacobian[(0, j)]).abs() <= 1e-6);
            assert!((fd.y - fk[0].jacobian[(1, j)]).abs() <= 1e-6);
        }
    }

    #[test]
    fn jacobians_match_finite_differences_on_random_configurations() {
        let models = [
            RobotModel::point(Vector2::new(0.1, -0.2), 0.05).unwrap(),
            RobotModel::planar_arm(
                Vector2::new(0.2, 0.1),
                0.3,
                vec![0.5, 0.4, 0.3],
                vec![
                    BodySphere { link: 0, offset: 0.25, radius: 0.04 },
                    BodySphere { link: 1, offset: 0.4, radius: 0.04 },
                    BodySphere { link: 2, offset: 0.3, radius: 0.04 },
                ],
            )
            .unwrap(),
        ];
        let mut rng = StdRng::seed_from_u64(17);
        for model in &models {
            for _ in 0..100 {
                let q = DVector::from_fn(model.dof(), |_, _| rng.random_range(-PI..PI));
                let fk = forward_kinematics(model, &q).unwrap();
                let h = 1e-6;
                for (s, place) in fk.iter().enumerate() {
                    for j in 0..model.dof() {
                        let mut qp = q.clone();
                        let mut qm = q.clone();
                        qp[j] += h;
                        qm[j] -= h;
                        let cp = forward_kinematics(model, &qp).unwrap()[s].center;
                        let cm = forward_kinematics(model, &qm).unwrap()[s].center;
                        let fd = (cp - cm) / (2.0 * h);
                        let scale = 1.0 + place.jacobian.column(j).amax();
                        assert!((fd.x - place.jacobian[(0, j)]).abs() / scale <= 1e-5);
                        assert!((fd.y - place.jacobian[(1, j)]).abs() / scale <= 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn centers_invariant_under_full_turns() {
        let model = two_link_end_sphere();
        let mut rng = StdRng::seed_from_u64(18);
        for _ in 0..20 {
            let q = DVector::from_fn(2, |_, _| rng.random_range(-PI..PI));
            let mut q_shift = q.clone();
            q_shift[rng.random_range(0..2)] += 2.0 * PI;
            let a = forward_kinematics(&model, &q).unwrap();
            let b = forward_kinematics(&model, &q_shift).unwrap();
            assert!((a[0].center - b[0].center).norm() <= 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let model = RobotModel::point(Vector2::zeros(), 0.05).unwrap();
        assert!(forward_kinematics(&model, &DVector::zeros(3)).is_err());
    }
}
