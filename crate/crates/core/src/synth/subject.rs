//! Single-subject point cloud generation.
//!
//! A seated person is modelled as an elliptic torso shell with a shoulder
//! cap, a spherical head shifted forward of the torso axis, and a nose
//! cone on the head at the head-yaw azimuth. Points are sampled on those
//! surfaces, culled against two ceiling sensors, perturbed with Gaussian
//! noise, and optionally salted with far-off-surface outliers. The
//! generator also fabricates the tracker detection (centroid plus two
//! height estimates) with injectable errors, and reports ground truth for
//! every quantity the pipeline later estimates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::angle::Angle;
use crate::config::SynthConfig;
use crate::error::{Error, Result};
use crate::types::{Point3, PointCloudFrame, SensorExtrinsics, SessionRecording, SubjectDetection};

/// Ceiling sensor positions used for visibility culling (mm, room frame).
pub const SENSOR_POSITIONS: [[f64; 3]; 2] =
    [[-1500.0, -1750.0, 2600.0], [1500.0, 1750.0, 2600.0]];

/// Arm placement; arms either stay out of the measured region or
/// deliberately contaminate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmPose {
    /// Arms hang below the cropped region.
    Down,
    /// Forearms rest on the table, still below the crop height.
    OnTable,
    /// One hand held next to the face, polluting the head cloud.
    HandNearFace,
}

/// Everything that defines one synthetic frame of one person.
#[derive(Debug, Clone)]
pub struct SubjectParams {
    pub subject_id: String,
    /// Torso axis position in the room, mm.
    pub center: (f64, f64),
    /// True crown height, mm.
    pub z_head: f64,
    /// Torso long semi-axis (shoulder line), mm.
    pub shoulder_half_width: f64,
    /// Torso short semi-axis (chest depth), mm.
    pub chest_half_depth: f64,
    pub head_radius: f64,
    /// Head centre offset forward of the torso axis, mm.
    pub head_forward_mm: f64,
    pub nose_length: f64,
    pub body_yaw: Angle,
    /// Absolute head yaw in the room frame.
    pub head_yaw: Angle,
    pub arm_pose: ArmPose,
    pub noise_sigma: f64,
    /// Fraction of clean points to add as far outliers.
    pub outlier_fraction: f64,
    pub visibility_culling: bool,
    /// Scales point counts; 1.0 gives a full-resolution cloud.
    pub density: f64,
    /// Error added to the detection centroid, mm.
    pub builtin_xy_error: (f64, f64),
    /// Errors added to the two built-in height estimates, mm.
    pub builtin_z_error: (f64, f64),
    pub seed: u64,
}

impl SubjectParams {
    /// A seated adult with average proportions at the given position.
    pub fn seated(subject_id: &str, center: (f64, f64), seed: u64) -> Self {
        SubjectParams {
            subject_id: subject_id.to_string(),
            center,
            z_head: 1250.0,
            shoulder_half_width: 220.0,
            chest_half_depth: 110.0,
            head_radius: 95.0,
            head_forward_mm: 70.0,
            nose_length: 40.0,
            body_yaw: Angle::ZERO,
            head_yaw: Angle::ZERO,
            arm_pose: ArmPose::Down,
            noise_sigma: 8.0,
            outlier_fraction: 0.02,
            visibility_culling: true,
            density: 1.0,
            builtin_xy_error: (0.0, 0.0),
            builtin_z_error: (0.0, 0.0),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.chest_half_depth >= self.shoulder_half_width {
            return Err(Error::Config(format!(
                "chest half depth {} must be smaller than shoulder half width {}",
                self.chest_half_depth, self.shoulder_half_width
            )));
        }
        if self.head_radius <= 0.0 || self.density <= 0.0 || self.noise_sigma < 0.0 {
            return Err(Error::Config(
                "head radius and density must be positive, noise non-negative".into(),
            ));
        }
        if 0.4 * self.z_head <= 2.0 * self.head_radius + 30.0 {
            return Err(Error::Config(format!(
                "crown height {} too small for head radius {}",
                self.z_head, self.head_radius
            )));
        }
        Ok(())
    }
}

/// Ground truth for one generated frame.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruth {
    pub body_yaw: Angle,
    pub head_yaw: Angle,
    /// True head sphere centre.
    pub head_center: Point3,
    /// True crown height, mm.
    pub z_head: f64,
    /// Points `[0, n_clean)` lie on a body surface; the rest are outliers.
    pub n_clean: usize,
    pub n_points: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticFrame {
    pub points: Vec<Point3>,
    pub detection: SubjectDetection,
    pub truth: GroundTruth,
}

fn dir(a: Angle) -> (f64, f64) {
    a.direction()
}

/// Ramanujan's perimeter approximation for an ellipse.
fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let h = ((a - b) / (a + b)).powi(2);
    std::f64::consts::PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n == 0.0 {
        v
    } else {
        [v[0] / n, v[1] / n, v[2] / n]
    }
}

fn visible_from_any(pos: Point3, normal: [f64; 3]) -> bool {
    let n = normalize3(normal);
    SENSOR_POSITIONS.iter().any(|s| {
        let to = normalize3([s[0] - pos.x, s[1] - pos.y, s[2] - pos.z]);
        n[0] * to[0] + n[1] * to[1] + n[2] * to[2] >= 0.05
    })
}

pub(crate) use crate::seeding::mix_seed;

/// Generate one frame for one subject.
///
/// Point order is surfaces first, then outliers; `truth.n_clean` marks the
/// boundary. Surface sampling, culling, noise and outlier placement are
/// all driven by `params.seed`, so identical parameters reproduce the
/// frame bit for bit.
pub fn generate_subject_frame(p: &SubjectParams) -> Result<SyntheticFrame> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (nx, ny) = dir(p.body_yaw);
    let (lx, ly) = (-ny, nx);
    let c = p.center;
    let a = p.chest_half_depth;
    let b = p.shoulder_half_width;
    let z_shoulder = p.z_head - 2.0 * p.head_radius - 30.0;
    let z_low = 0.60 * p.z_head;

    // (position, outward surface normal)
    let mut surface: Vec<(Point3, [f64; 3])> = Vec::new();
    let place = |theta: f64, z: f64| -> (Point3, [f64; 3]) {
        let (ct, st) = (theta.cos(), theta.sin());
        let pos = Point3 {
            x: c.0 + a * ct * nx + b * st * lx,
            y: c.1 + a * ct * ny + b * st * ly,
            z,
        };
        let normal = [ct / a * nx + st / b * lx, ct / a * ny + st / b * ly, 0.0];
        (pos, normal)
    };

    // Torso wall.
    let perimeter = ellipse_perimeter(a, b);
    let n_theta = ((perimeter / 9.0 * p.density).round() as usize).max(8);
    let mut z = z_low;
    while z < z_shoulder {
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        for j in 0..n_theta {
            let theta = phase + std::f64::consts::TAU * j as f64 / n_theta as f64;
            surface.push(place(theta, z + rng.random_range(-1.0..1.0)));
        }
        z += 10.0;
    }

    // Shoulder cap: shrinking elliptical rings, slightly domed, facing up.
    for (k, s) in [0.9, 0.75, 0.55, 0.35].into_iter().enumerate() {
        let n_ring = ((s * perimeter / 9.0 * p.density).round() as usize).max(6);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let z = z_shoulder + 2.0 + 2.0 * k as f64;
        for j in 0..n_ring {
            let theta = phase + std::f64::consts::TAU * j as f64 / n_ring as f64;
            let (ct, st) = (theta.cos(), theta.sin());
            let pos = Point3 {
                x: c.0 + s * (a * ct * nx + b * st * lx),
                y: c.1 + s * (a * ct * ny + b * st * ly),
                z,
            };
            surface.push((pos, [0.0, 0.0, 1.0]));
        }
    }

    // Head: sphere shell in latitude bands, pole at the crown. The lowest
    // bands stop short of the neck.
    let hc = Point3 {
        x: c.0 + p.head_forward_mm * nx,
        y: c.1 + p.head_forward_mm * ny,
        z: p.z_head - p.head_radius,
    };
    let r = p.head_radius;
    let mut psi_deg = 5.0;
    while psi_deg <= 140.0 {
        let psi = psi_deg * std::f64::consts::PI / 180.0;
        let ring_r = r * psi.sin();
        let zr = hc.z + r * psi.cos();
        let n_ring = ((std::f64::consts::TAU * ring_r / 14.0 * p.density).round() as usize).max(4);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        for j in 0..n_ring {
            let phi = phase + std::f64::consts::TAU * j as f64 / n_ring as f64;
            let normal = [
                psi.sin() * phi.cos(),
                psi.sin() * phi.sin(),
                psi.cos(),
            ];
            let pos = Point3 {
                x: hc.x + r * normal[0],
                y: hc.y + r * normal[1],
                z: zr,
            };
            surface.push((pos, normal));
        }
        psi_deg += 9.0;
    }

    // Nose: a small cone protruding at the head-yaw azimuth, nose height
    // one radius below the crown.
    let (hx, hy) = dir(p.head_yaw);
    let (ux, uy) = (-hy, hx);
    let base = Point3 {
        x: hc.x + r * hx,
        y: hc.y + r * hy,
        z: hc.z,
    };
    for step in 0..5 {
        let t = step as f64 / 4.0;
        let ring_r = 2.0 + 12.0 * (1.0 - t);
        let n_ring = ((std::f64::consts::TAU * ring_r / 7.0 * p.density).round() as usize).max(3);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        for j in 0..n_ring {
            let phi = phase + std::f64::consts::TAU * j as f64 / n_ring as f64;
            let (radial_x, radial_y, radial_z) = (phi.cos() * ux, phi.cos() * uy, phi.sin());
            let pos = Point3 {
                x: base.x + t * p.nose_length * hx + ring_r * radial_x,
                y: base.y + t * p.nose_length * hy + ring_r * radial_y,
                z: base.z + ring_r * radial_z,
            };
            // Slanted like a cone flank: halfway between forward and radial.
            let normal = [hx + radial_x, hy + radial_y, radial_z];
            surface.push((pos, normal));
        }
    }

    // Arms.
    match p.arm_pose {
        ArmPose::Down => {}
        ArmPose::OnTable => {
            let z_table = 0.66 * p.z_head;
            for row in 0..2 {
                for j in 0..24 {
                    let along = -180.0 + 360.0 * j as f64 / 23.0;
                    let fwd = a + 120.0 + 40.0 * row as f64;
                    let pos = Point3 {
                        x: c.0 + fwd * nx + along * lx,
                        y: c.1 + fwd * ny + along * ly,
                        z: z_table + rng.random_range(-5.0..5.0),
                    };
                    surface.push((pos, [0.0, 0.0, 1.0]));
                }
            }
        }
        ArmPose::HandNearFace => {
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let blob = Point3 {
                x: hc.x + side * (r + 38.0) * lx,
                y: hc.y + side * (r + 38.0) * ly,
                z: p.z_head - 115.0,
            };
            for _ in 0..48 {
                let v = normalize3([
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]);
                let pos = Point3 {
                    x: blob.x + 40.0 * v[0],
                    y: blob.y + 40.0 * v[1],
                    z: blob.z + 40.0 * v[2],
                };
                surface.push((pos, v));
            }
        }
    }

    // Visibility culling against the two ceiling sensors.
    if p.visibility_culling {
        surface.retain(|&(pos, normal)| visible_from_any(pos, normal));
    }

    // Measurement noise.
    let noise = Normal::new(0.0, p.noise_sigma.max(1e-12))
        .map_err(|e| Error::Config(format!("noise sigma: {e}")))?;
    let mut points: Vec<Point3> = surface
        .iter()
        .map(|&(pos, _)| Point3 {
            x: pos.x + noise.sample(&mut rng),
            y: pos.y + noise.sample(&mut rng),
            z: pos.z + noise.sample(&mut rng),
        })
        .collect();
    let n_clean = points.len();

    // Outliers: at least 200 mm from every surface point, inside the
    // cropped region so the denoiser has to handle them.
    let n_outliers = (p.outlier_fraction * n_clean as f64).round() as usize;
    for _ in 0..n_outliers {
        let mut accepted = None;
        for attempt in 0..60 {
            let az: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let cand = if rng.random_bool(0.5) {
                let rad: f64 = rng.random_range(0.0..250.0);
                Point3 {
                    x: c.0 + rad * az.cos(),
                    y: c.1 + rad * az.sin(),
                    z: p.z_head + rng.random_range(220.0..420.0),
                }
            } else {
                let rad: f64 = rng.random_range(425.0..465.0);
                Point3 {
                    x: c.0 + rad * az.cos(),
                    y: c.1 + rad * az.sin(),
                    z: rng.random_range(0.78..0.95) * p.z_head,
                }
            };
            let min_d = points[..n_clean]
                .iter()
                .map(|q| cand.dist(q))
                .fold(f64::INFINITY, f64::min);
            if min_d >= 200.0 {
                accepted = Some(cand);
                break;
            }
            let _ = attempt;
        }
        let outlier = accepted.unwrap_or(Point3 {
            x: c.0 + rng.random_range(-50.0..50.0),
            y: c.1 + rng.random_range(-50.0..50.0),
            z: p.z_head + 450.0,
        });
        points.push(outlier);
    }

    // Tracker detection: cloud centroid plus two height estimates.
    let n = points.len() as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for q in &points {
        cx += q.x;
        cy += q.y;
    }
    let detection = SubjectDetection {
        subject_id: p.subject_id.clone(),
        cx: cx / n + p.builtin_xy_error.0,
        cy: cy / n + p.builtin_xy_error.1,
        z1: p.z_head + p.builtin_z_error.0,
        z2: p.z_head + p.builtin_z_error.1,
    };

    Ok(SyntheticFrame {
        truth: GroundTruth {
            body_yaw: p.body_yaw,
            head_yaw: p.head_yaw,
            head_center: hc,
            z_head: p.z_head,
            n_clean,
            n_points: points.len(),
        },
        points,
        detection,
    })
}

// ── Benchmark generation ───────────────────────────────────────────────

/// Ground-truth label for one benchmark frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabel {
    pub frame: usize,
    pub t: f64,
    pub body_yaw_deg: f64,
    pub head_yaw_deg: f64,
    pub z_head_mm: f64,
    /// Injected fault (height corruption or frame replay); the validator
    /// should reject these frames.
    pub corrupted: bool,
}

/// One benchmark subject: a single-person session plus per-frame labels.
#[derive(Debug, Clone)]
pub struct BenchmarkSubject {
    pub subject_id: String,
    pub session: SessionRecording,
    pub labels: Vec<FrameLabel>,
}

/// Generate the labelled benchmark: `benchmark_subjects` people with
/// individual proportions, `benchmark_frames_per_subject` frames each.
///
/// Head yaw is drawn uniformly over the configured span; body yaw wobbles
/// a few degrees around zero, so the head label stays learnable from
/// body-relative geometry. A small share of frames carries injected
/// faults (corrupted height estimates or exact replays) that the
/// preprocessing validator is expected to reject; those are flagged in
/// the labels.
pub fn generate_benchmark(cfg: &SynthConfig, seed: u64) -> Result<Vec<BenchmarkSubject>> {
    let mut out = Vec::with_capacity(cfg.benchmark_subjects);
    for s in 0..cfg.benchmark_subjects {
        let subject_id = format!("B{:02}", s + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1000 + s as u64));
        let base = SubjectParams {
            z_head: rng.random_range(1150.0..1350.0),
            shoulder_half_width: rng.random_range(195.0..240.0),
            chest_half_depth: rng.random_range(95.0..130.0),
            head_radius: rng.random_range(85.0..108.0),
            head_forward_mm: rng.random_range(55.0..90.0),
            nose_length: rng.random_range(36.0..48.0),
            noise_sigma: cfg.noise_sigma_mm,
            outlier_fraction: cfg.outlier_fraction,
            visibility_culling: cfg.visibility_culling,
            density: cfg.density,
            ..SubjectParams::seated(
                &subject_id,
                (rng.random_range(-900.0..900.0), rng.random_range(-900.0..900.0)),
                0,
            )
        };
        let yaw_jitter: Normal<f64> = Normal::new(0.0, 3.0).expect("fixed sigma");
        let centroid_err: Normal<f64> = Normal::new(0.0, 6.0).expect("fixed sigma");
        let height_err: Normal<f64> = Normal::new(0.0, 5.0).expect("fixed sigma");

        let mut frames = Vec::new();
        let mut labels = Vec::new();
        let mut prev: Option<PointCloudFrame> = None;
        for i in 0..cfg.benchmark_frames_per_subject {
            let t = i as f64 / cfg.fps;
            let fault: f64 = rng.random_range(0.0..1.0);
            if fault < 0.01 {
                if let Some(p) = prev.clone() {
                    // Exact replay of the previous frame: a stuck sensor.
                    let last = labels.last().cloned().expect("replay needs a prior frame");
                    frames.push(PointCloudFrame { t, ..p });
                    labels.push(FrameLabel {
                        frame: i,
                        t,
                        corrupted: true,
                        ..last
                    });
                    continue;
                }
            }
            let body_yaw = yaw_jitter.sample(&mut rng).clamp(-8.0, 8.0);
            let head_yaw = rng.random_range(-cfg.benchmark_yaw_span_deg..cfg.benchmark_yaw_span_deg);
            let arm: f64 = rng.random_range(0.0..1.0);
            let mut z_err = (height_err.sample(&mut rng), height_err.sample(&mut rng));
            let corrupted = fault >= 0.01 && fault < 0.03;
            if corrupted {
                // Push the built-in height estimate past the rejection
                // threshold.
                let shift = rng.random_range(120.0..170.0)
                    * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                z_err = (z_err.0 + shift, z_err.1 + shift);
            }
            let params = SubjectParams {
                body_yaw: Angle::from_degrees(body_yaw),
                head_yaw: Angle::from_degrees(head_yaw),
                arm_pose: if arm < 0.82 {
                    ArmPose::Down
                } else if arm < 0.92 {
                    ArmPose::OnTable
                } else {
                    ArmPose::HandNearFace
                },
                builtin_xy_error: (centroid_err.sample(&mut rng), centroid_err.sample(&mut rng)),
                builtin_z_error: z_err,
                seed: mix_seed(seed, (s as u64) << 32 | i as u64),
                ..base.clone()
            };
            let frame = generate_subject_frame(&params)?;
            frames.push(PointCloudFrame {
                t,
                points: frame.points,
                detections: vec![frame.detection],
            });
            labels.push(FrameLabel {
                frame: i,
                t,
                body_yaw_deg: body_yaw,
                head_yaw_deg: head_yaw,
                z_head_mm: params.z_head,
                corrupted,
            });
            prev = frames.last().cloned();
        }
        out.push(BenchmarkSubject {
            subject_id,
            session: SessionRecording {
                sensors: vec![SensorExtrinsics::identity("room")],
                frames,
            },
            labels,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SynthConfig;

    #[test]
    fn frame_counts_land_in_realistic_bands() {
        let p = SubjectParams::seated("t", (0.0, 0.0), 7);
        let f = generate_subject_frame(&p).unwrap();
        // Whole cloud (torso reaches below the crop) plus outliers.
        assert!(f.truth.n_clean > 2000, "clean = {}", f.truth.n_clean);
        let crop = 0.73 * p.z_head;
        let cropped = f.points[..f.truth.n_clean]
            .iter()
            .filter(|q| q.z >= crop)
            .count();
        assert!(
            (1400..=2300).contains(&cropped),
            "cropped clean points = {cropped}"
        );
        let head_band = f.points[..f.truth.n_clean]
            .iter()
            .filter(|q| q.z >= p.z_head - 180.0)
            .count();
        assert!((180..=450).contains(&head_band), "head points = {head_band}");
    }

    #[test]
    fn outliers_stay_far_from_surface_and_inside_crop() {
        let p = SubjectParams::seated("t", (100.0, -50.0), 11);
        let f = generate_subject_frame(&p).unwrap();
        let n = f.truth.n_clean;
        assert!(f.truth.n_points > n);
        for o in &f.points[n..] {
            let min_d = f.points[..n]
                .iter()
                .map(|q| o.dist(q))
                .fold(f64::INFINITY, f64::min);
            assert!(min_d >= 200.0, "outlier only {min_d:.1} mm from surface");
            assert!(o.z >= 0.73 * p.z_head);
            let d_det = (o.x - f.detection.cx).hypot(o.y - f.detection.cy);
            assert!(d_det <= 500.0, "outlier {d_det:.1} mm from centroid");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let p = SubjectParams::seated("t", (0.0, 0.0), 42);
        let a = generate_subject_frame(&p).unwrap();
        let b = generate_subject_frame(&p).unwrap();
        assert_eq!(a.points.len(), b.points.len());
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.bits(), y.bits());
        }
        let c = generate_subject_frame(&SubjectParams { seed: 43, ..p }).unwrap();
        assert!(a.points.iter().zip(&c.points).any(|(x, y)| x.bits() != y.bits()));
    }

    #[test]
    fn detection_tracks_centroid_and_truth_height() {
        let p = SubjectParams {
            builtin_xy_error: (12.0, -7.0),
            builtin_z_error: (10.0, -4.0),
            ..SubjectParams::seated("t", (300.0, 400.0), 3)
        };
        let f = generate_subject_frame(&p).unwrap();
        assert_eq!(f.detection.z1, p.z_head + 10.0);
        assert_eq!(f.detection.z2, p.z_head - 4.0);
        assert_eq!(f.detection.builtin_z(), p.z_head + 3.0);
        // Centroid is near the torso axis: head offset and culling shift
        // it, but only by a few centimetres.
        assert!((f.detection.cx - 12.0 - 300.0).abs() < 60.0);
        assert!((f.detection.cy + 7.0 - 400.0).abs() < 60.0);
    }

    #[test]
    fn nose_points_follow_head_yaw() {
        for yaw in [-120.0, -45.0, 0.0, 60.0, 150.0] {
            let p = SubjectParams {
                head_yaw: Angle::from_degrees(yaw),
                noise_sigma: 0.0,
                outlier_fraction: 0.0,
                ..SubjectParams::seated("t", (0.0, 0.0), 5)
            };
            let f = generate_subject_frame(&p).unwrap();
            let hc = f.truth.head_center;
            // The farthest point from the head centre in the nose band
            // should sit at the head-yaw azimuth.
            let tip = f
                .points
                .iter()
                .filter(|q| (q.z - hc.z).abs() < 25.0)
                .max_by(|a, b| {
                    a.dist_xy(hc.x, hc.y).total_cmp(&b.dist_xy(hc.x, hc.y))
                })
                .unwrap();
            let az = (tip.y - hc.y).atan2(tip.x - hc.x).to_degrees();
            let err = Angle::from_degrees(az).abs_diff(Angle::from_degrees(yaw));
            assert!(err < 12.0, "yaw {yaw}: nose azimuth off by {err:.1}");
        }
    }

    #[test]
    fn culling_removes_back_facing_nose_for_single_sensor_geometry() {
        // With culling on, a clean frame keeps fewer points than with
        // culling off.
        let on = SubjectParams {
            outlier_fraction: 0.0,
            ..SubjectParams::seated("t", (0.0, 0.0), 9)
        };
        let off = SubjectParams {
            visibility_culling: false,
            ..on.clone()
        };
        let f_on = generate_subject_frame(&on).unwrap();
        let f_off = generate_subject_frame(&off).unwrap();
        assert!(f_on.points.len() < f_off.points.len());
    }

    #[test]
    fn invalid_proportions_are_rejected() {
        let p = SubjectParams {
            chest_half_depth: 300.0,
            ..SubjectParams::seated("t", (0.0, 0.0), 1)
        };
        assert!(generate_subject_frame(&p).is_err());
    }

    #[test]
    fn benchmark_structure_and_flags() {
        let cfg = SynthConfig {
            benchmark_subjects: 2,
            benchmark_frames_per_subject: 40,
            density: 0.5,
            ..SynthConfig::default()
        };
        let subjects = generate_benchmark(&cfg, 99).unwrap();
        assert_eq!(subjects.len(), 2);
        for s in &subjects {
            assert_eq!(s.session.frames.len(), 40);
            assert_eq!(s.labels.len(), 40);
            for (i, f) in s.session.frames.iter().enumerate() {
                assert_eq!(f.detections.len(), 1);
                assert_eq!(f.detections[0].subject_id, s.subject_id);
                assert!((f.t - i as f64 / cfg.fps).abs() < 1e-12);
            }
            for l in &s.labels {
                assert!(l.head_yaw_deg.abs() <= cfg.benchmark_yaw_span_deg);
                assert!(l.body_yaw_deg.abs() <= 8.0);
            }
        }
        // Deterministic regeneration.
        let again = generate_benchmark(&cfg, 99).unwrap();
        assert_eq!(
            subjects[0].session.frames[5].points.len(),
            again[0].session.frames[5].points.len()
        );
        assert!(subjects[0].session.frames[5]
            .same_points(&again[0].session.frames[5]));
    }
}
