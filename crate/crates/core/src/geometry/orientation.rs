//! Body orientation from the fitted torso ellipse, and partitioning of the
//! head cloud into body-aligned quadrants.
//!
//! The long axis of the torso ellipse runs shoulder to shoulder, so the
//! facing direction is one of its two normals. Seated people keep their
//! head forward of that axis, so the normal pointing toward the side with
//! the larger mean head-point offset is the front.

use serde::{Deserialize, Serialize};

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::geometry::{fit_ellipse_direct, EllipseFit};
use crate::types::Point3;

/// Tie threshold for the front/back vote, in millimetres of mean offset.
const FRONT_TIE_EPS_MM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyOrientation {
    /// Yaw of the facing direction.
    pub yaw: Angle,
    /// The fitted torso ellipse (XY projection).
    pub ellipse: EllipseFit,
    /// True when the head cloud was symmetric about the shoulder axis and
    /// the +x half-plane tie-break decided the front.
    pub front_tie: bool,
}

impl BodyOrientation {
    pub fn center(&self) -> (f64, f64) {
        (self.ellipse.cx, self.ellipse.cy)
    }
}

/// Unit vectors of the subject frame for a facing yaw: `(forward, left)`.
/// `left` is `forward` rotated +90 degrees (counter-clockwise from above).
pub fn facing_frame(yaw: Angle) -> ((f64, f64), (f64, f64)) {
    let fwd = yaw.direction();
    (fwd, (-fwd.1, fwd.0))
}

/// Estimate body orientation from the projected body cloud, using the head
/// cloud to pick the front side of the shoulder axis.
pub fn body_orientation(body: &[Point3], head: &[Point3]) -> Result<BodyOrientation> {
    if head.is_empty() {
        return Err(Error::EmptySplit("head"));
    }
    let xy: Vec<(f64, f64)> = body.iter().map(|p| p.xy()).collect();
    let ellipse = fit_ellipse_direct(&xy)?;

    let (ux, uy) = ellipse.axis_dir();
    // One of the two normals of the long axis; the sign vote picks which.
    let normal = (-uy, ux);
    let mean_offset = head
        .iter()
        .map(|p| normal.0 * (p.x - ellipse.cx) + normal.1 * (p.y - ellipse.cy))
        .sum::<f64>()
        / head.len() as f64;

    let (facing, front_tie) = if mean_offset.abs() <= FRONT_TIE_EPS_MM {
        // Symmetric head cloud: deterministically prefer the +x half-plane,
        // falling back to +y when the normal is parallel to y.
        let pick_positive = if normal.0 != 0.0 {
            normal.0 > 0.0
        } else {
            normal.1 > 0.0
        };
        (if pick_positive { normal } else { (-normal.0, -normal.1) }, true)
    } else if mean_offset > 0.0 {
        (normal, false)
    } else {
        ((-normal.0, -normal.1), false)
    };

    Ok(BodyOrientation {
        yaw: Angle::from_radians(facing.1.atan2(facing.0)),
        ellipse,
        front_tie,
    })
}

/// Head points split by the two axes through `center`: the shoulder line
/// and the facing line. Quadrant order is front-left, front-right,
/// back-left, back-right; points exactly on an axis go to the
/// lowest-numbered adjacent quadrant.
#[derive(Debug, Clone, Default)]
pub struct QuadrantPartition {
    pub quadrants: [Vec<Point3>; 4],
}

impl QuadrantPartition {
    pub fn total(&self) -> usize {
        self.quadrants.iter().map(Vec::len).sum()
    }
}

pub fn partition_quadrants(
    head: &[Point3],
    center: (f64, f64),
    facing: Angle,
) -> QuadrantPartition {
    let (fwd, left) = facing_frame(facing);
    let mut part = QuadrantPartition::default();
    for &p in head {
        let dx = p.x - center.0;
        let dy = p.y - center.1;
        let f = fwd.0 * dx + fwd.1 * dy;
        let l = left.0 * dx + left.1 * dy;
        // `>= 0` sends axis points to front over back and left over right,
        // which is exactly the lowest-numbered adjacent quadrant.
        let idx = match (f >= 0.0, l >= 0.0) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        part.quadrants[idx].push(p);
    }
    part
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Torso ring plus an offset head blob, all at given yaw.
    fn torso_and_head(yaw_deg: f64, head_forward: f64) -> (Vec<Point3>, Vec<Point3>) {
        let th = yaw_deg.to_radians();
        let (fx, fy) = (th.cos(), th.sin());
        let (lx, ly) = (-fy, fx);
        let mut body = Vec::new();
        for i in 0..120 {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 120.0;
            // Long axis shoulder-to-shoulder (along `left`), short along facing.
            let u = 110.0 * t.cos(); // depth
            let v = 220.0 * t.sin(); // width
            body.push(Point3::new(u * fx + v * lx, u * fy + v * ly, 1000.0));
        }
        let mut head = Vec::new();
        for i in 0..60 {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 60.0;
            let hx = head_forward * fx + 80.0 * t.cos();
            let hy = head_forward * fy + 80.0 * t.sin();
            head.push(Point3::new(hx, hy, 1250.0));
        }
        (body, head)
    }

    #[test]
    fn recovers_yaw_across_the_circle() {
        for yaw in [-170.0, -90.0, -35.0, 0.0, 10.0, 45.0, 90.0, 135.0, 179.0] {
            let (body, head) = torso_and_head(yaw, 70.0);
            let est = body_orientation(&body, &head).unwrap();
            assert!(!est.front_tie);
            assert!(
                est.yaw.abs_diff(Angle::from_degrees(yaw)) < 1e-6,
                "yaw {yaw} -> {}",
                est.yaw
            );
        }
    }

    #[test]
    fn head_behind_flips_the_answer() {
        let (body, head) = torso_and_head(30.0, -70.0);
        let est = body_orientation(&body, &head).unwrap();
        assert!(est.yaw.abs_diff(Angle::from_degrees(-150.0)) < 1e-6);
    }

    #[test]
    fn symmetric_head_ties_to_positive_x() {
        // Facing +-x axis; head ring centered on the shoulder axis.
        let (body, head) = torso_and_head(0.0, 0.0);
        let est = body_orientation(&body, &head).unwrap();
        assert!(est.front_tie);
        assert_relative_eq!(est.yaw.degrees(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn empty_head_is_an_error() {
        let (body, _) = torso_and_head(0.0, 70.0);
        assert!(matches!(
            body_orientation(&body, &[]),
            Err(Error::EmptySplit("head"))
        ));
    }

    #[test]
    fn quadrants_follow_the_subject_frame() {
        // Facing +y: forward = +y, left = -x.
        let facing = Angle::from_degrees(90.0);
        let pts = vec![
            Point3::new(-10.0, 5.0, 0.0),  // front-left
            Point3::new(10.0, 5.0, 0.0),   // front-right
            Point3::new(-10.0, -5.0, 0.0), // back-left
            Point3::new(10.0, -5.0, 0.0),  // back-right
        ];
        let part = partition_quadrants(&pts, (0.0, 0.0), facing);
        for (i, q) in part.quadrants.iter().enumerate() {
            assert_eq!(q.len(), 1, "quadrant {i}");
        }
        assert_eq!(part.quadrants[0][0].x, -10.0);
        assert_eq!(part.quadrants[1][0].x, 10.0);
        assert_eq!(part.quadrants[2][0].x, -10.0);
        assert_eq!(part.quadrants[3][0].x, 10.0);
    }

    #[test]
    fn axis_points_go_to_the_lowest_quadrant() {
        let facing = Angle::from_degrees(0.0);
        let on_facing_line_front = Point3::new(5.0, 0.0, 0.0);
        let on_shoulder_line_left = Point3::new(0.0, 5.0, 0.0);
        let on_facing_line_back = Point3::new(-5.0, 0.0, 0.0);
        let at_center = Point3::new(0.0, 0.0, 0.0);
        let part = partition_quadrants(
            &[
                on_facing_line_front,
                on_shoulder_line_left,
                on_facing_line_back,
                at_center,
            ],
            (0.0, 0.0),
            facing,
        );
        // Front of the shoulder line, lateral 0 -> Q1. On the shoulder line,
        // left -> Q1. Behind, lateral 0 -> Q3 (lowest of the back pair).
        assert_eq!(part.quadrants[0].len(), 3);
        assert_eq!(part.quadrants[2].len(), 1);
        assert_eq!(part.total(), 4);
    }

    #[test]
    fn partition_preserves_every_point() {
        let facing = Angle::from_degrees(-37.0);
        let pts: Vec<Point3> = (0..100)
            .map(|i| {
                let a = i as f64;
                Point3::new((a * 17.0) % 91.0 - 45.0, (a * 29.0) % 83.0 - 41.0, a)
            })
            .collect();
        let part = partition_quadrants(&pts, (3.0, -4.0), facing);
        assert_eq!(part.total(), pts.len());
    }
}
