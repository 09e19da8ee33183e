//! Seeded synthetic datasets whose ground truth is known by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    BeaconDistanceSample, DataError, Dataset, ImuSample, PerZone, RssiSample, Source, Zone,
    RSSI_OUT_OF_RANGE,
};

/// Planar point in centimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

fn normal(sigma: f64) -> Result<Normal<f64>, DataError> {
    Normal::new(0.0, sigma).map_err(|e| DataError::InvalidParameter(e.to_string()))
}

/// One [`BeaconDistanceSample`] per waypoint.
///
/// Distances are the Euclidean distances converted to meters plus
/// `N(0, noise_sigma)` noise, clamped at 0 so that the record invariant holds.
/// Timestamps are the sample offset at the nominal 20 Hz rate.
pub fn generate_synthetic_walk(
    beacons: [Point; 3],
    waypoints: &[Point],
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset<BeaconDistanceSample>, DataError> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(DataError::InvalidParameter(format!(
            "noise_sigma {noise_sigma} must be finite and >= 0"
        )));
    }
    let [a, b, c] = beacons;
    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let scale = a.distance(&b).max(a.distance(&c)).max(b.distance(&c));
    if cross.abs() <= 1e-9 * scale * scale {
        return Err(DataError::DegenerateGeometry(
            "beacons are collinear".into(),
        ));
    }
    let noise = normal(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = |p: &Point, beacon: &Point| {
        let d = p.distance(beacon) / 100.0;
        if noise_sigma > 0.0 {
            (d + noise.sample(&mut rng)).max(0.0)
        } else {
            d
        }
    };
    let rows = waypoints
        .iter()
        .enumerate()
        .map(|(i, p)| BeaconDistanceSample {
            distance_a: sample(p, &a),
            distance_b: sample(p, &b),
            distance_c: sample(p, &c),
            position_x: p.x,
            position_y: p.y,
            timestamp: format!("t+{:.2}s", i as f64 / super::IMU_SAMPLE_RATE_HZ),
        })
        .collect();
    Ok(Dataset::new(rows, Source::Synthetic))
}

/// Beacon layout of the default synthetic room. Beacon A sits closest to the
/// centroid of the default walk.
pub fn default_walk_beacons() -> [Point; 3] {
    [
        Point::new(0.0, 180.0),
        Point::new(122.0, 420.0),
        Point::new(300.0, -40.0),
    ]
}

/// A serpentine walk over a 3x3 grid of standing spots spaced 43 cm apart in
/// each direction, sampled every `step` cm along the path and repeated
/// `laps` times.
pub fn default_walk_waypoints(laps: usize, step: f64) -> Vec<Point> {
    let xs = [79.0, 122.0, 165.0];
    let ys = [137.0, 180.0, 223.0];
    let mut corners = Vec::new();
    for (row, &y) in ys.iter().enumerate() {
        if row % 2 == 0 {
            corners.extend(xs.iter().map(|&x| Point::new(x, y)));
        } else {
            corners.extend(xs.iter().rev().map(|&x| Point::new(x, y)));
        }
    }
    let mut lap = Vec::new();
    for pair in corners.windows(2) {
        let (p, q) = (pair[0], pair[1]);
        let len = p.distance(&q);
        let steps = (len / step).ceil().max(1.0) as usize;
        for s in 0..steps {
            let t = s as f64 / steps as f64;
            lap.push(Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
        }
    }
    lap.push(*corners.last().unwrap());
    let mut out = Vec::with_capacity(lap.len() * laps);
    for i in 0..laps {
        // Alternate direction so consecutive laps join up.
        if i % 2 == 0 {
            out.extend(lap.iter().copied());
        } else {
            out.extend(lap.iter().rev().copied());
        }
    }
    out
}

/// `rows` samples of the default walk (10 cm steps, as many laps as needed).
pub fn generate_default_walk(
    rows: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset<BeaconDistanceSample>, DataError> {
    let lap = default_walk_waypoints(1, DEFAULT_WALK_STEP).len();
    let mut waypoints = default_walk_waypoints(rows.div_ceil(lap).max(1), DEFAULT_WALK_STEP);
    waypoints.truncate(rows);
    generate_synthetic_walk(default_walk_beacons(), &waypoints, noise_sigma, seed)
}

/// Sampling step of [`generate_default_walk`], in cm.
pub const DEFAULT_WALK_STEP: f64 = 10.0;

/// RSSI rows with a uniformly drawn zone label.
///
/// The scanner of the labeled zone reads uniformly in `[-95, -45]`. Every
/// other scanner reads the out-of-range sentinel, except that with
/// probability `bleed` it picks up a weak reading in `[-115, -90]`.
pub fn generate_synthetic_rssi(
    rows: usize,
    bleed: f64,
    seed: u64,
) -> Result<Dataset<RssiSample>, DataError> {
    if !(0.0..=1.0).contains(&bleed) {
        return Err(DataError::InvalidParameter(format!(
            "bleed probability {bleed} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..rows)
        .map(|_| {
            let label = Zone::ALL[rng.random_range(0..Zone::COUNT)];
            let mut readings = PerZone::splat(RSSI_OUT_OF_RANGE);
            for zone in Zone::ALL {
                if zone == label {
                    readings[zone] = rng.random_range(-95.0..=-45.0_f64).round();
                } else if rng.random_bool(bleed) {
                    readings[zone] = rng.random_range(-115.0..=-90.0_f64).round();
                }
            }
            RssiSample { readings, label }
        })
        .collect();
    Ok(Dataset::new(rows, Source::Synthetic))
}

/// IMU rows in contiguous per-zone sessions, each zone with its own posture
/// (mean acceleration) and motion level (gyro spread).
pub fn generate_synthetic_imu(
    rows: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset<ImuSample>, DataError> {
    const PROFILES: [(Zone, &str, [f64; 3], f64); 4] = [
        (Zone::Bedroom, "sleeping", [0.05, -0.20, 0.95], 0.3),
        (Zone::Kitchen, "cooking", [0.30, -0.90, 0.10], 2.5),
        (Zone::Office, "working", [-0.15, -0.75, 0.45], 1.0),
        (Zone::Toilet, "defecating", [0.45, -0.60, 0.40], 1.6),
    ];
    let noise = normal(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let session = 20;
    let rows = (0..rows)
        .map(|i| {
            let (zone, tag, acc, motion) = PROFILES[(i / session + i / (session * 4)) % 4];
            let gyro = Normal::new(0.0, motion).expect("positive spread");
            ImuSample {
                ax: acc[0] + noise.sample(&mut rng),
                ay: acc[1] + noise.sample(&mut rng),
                az: acc[2] + noise.sample(&mut rng),
                gx: gyro.sample(&mut rng),
                gy: gyro.sample(&mut rng),
                gz: gyro.sample(&mut rng),
                label: zone,
                activity_tag: Some(tag.to_string()),
            }
        })
        .collect();
    Ok(Dataset::new(rows, Source::Synthetic))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> [Point; 3] {
        [
            Point::new(0.0, 0.0),
            Point::new(400.0, 0.0),
            Point::new(0.0, 300.0),
        ]
    }

    #[test]
    fn zero_noise_distances_by_pythagoras() {
        let ds = generate_synthetic_walk(triangle(), &[Point::new(300.0, 400.0)], 0.0, 1).unwrap();
        let r = &ds.rows[0];
        assert!((r.distance_a - 5.0).abs() < 1e-12);
        assert!((r.distance_b - 17f64.sqrt()).abs() < 1e-12);
        assert!((r.distance_b - 4.1231).abs() < 1e-4);
        assert!((r.distance_c - 3.1623).abs() < 1e-4);
    }

    #[test]
    fn waypoint_on_anchor() {
        let ds = generate_synthetic_walk(triangle(), &[Point::new(0.0, 0.0)], 0.0, 1).unwrap();
        let r = &ds.rows[0];
        assert_eq!(r.distance_a, 0.0);
        assert_eq!(r.distance_b, 4.0);
        assert_eq!(r.distance_c, 3.0);
    }

    #[test]
    fn collinear_beacons_rejected() {
        let line = [
            Point::new(0.0, 0.0),
            Point::new(100.0, 100.0),
            Point::new(250.0, 250.0),
        ];
        assert!(matches!(
            generate_synthetic_walk(line, &[Point::new(1.0, 2.0)], 0.0, 0),
            Err(DataError::DegenerateGeometry(_))
        ));
        assert!(generate_synthetic_walk(triangle(), &[], -1.0, 0).is_err());
    }

    #[test]
    fn noisy_walk_is_seeded() {
        let wp = default_walk_waypoints(2, 10.0);
        let a = generate_synthetic_walk(default_walk_beacons(), &wp, 0.05, 5).unwrap();
        let b = generate_synthetic_walk(default_walk_beacons(), &wp, 0.05, 5).unwrap();
        let c = generate_synthetic_walk(default_walk_beacons(), &wp, 0.05, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.rows.iter().all(|r| r.distances().iter().all(|d| *d >= 0.0)));
    }

    #[test]
    fn default_beacon_a_is_nearest_the_walk_centroid() {
        let wp = default_walk_waypoints(1, 5.0);
        let n = wp.len() as f64;
        let centroid = Point::new(
            wp.iter().map(|p| p.x).sum::<f64>() / n,
            wp.iter().map(|p| p.y).sum::<f64>() / n,
        );
        let [a, b, c] = default_walk_beacons();
        assert!(centroid.distance(&a) < centroid.distance(&b));
        assert!(centroid.distance(&a) < centroid.distance(&c));
    }

    #[test]
    fn rssi_without_bleed_has_one_visible_zone() {
        let ds = generate_synthetic_rssi(200, 0.0, 3).unwrap();
        for r in &ds.rows {
            assert!(r.validate().is_ok());
            let visible: Vec<Zone> = r
                .readings
                .iter()
                .filter(|(_, v)| *v > RSSI_OUT_OF_RANGE)
                .map(|(z, _)| z)
                .collect();
            assert_eq!(visible, vec![r.label]);
        }
    }

    #[test]
    fn imu_covers_all_zones() {
        let ds = generate_synthetic_imu(400, 0.1, 3).unwrap();
        for z in Zone::ALL {
            assert!(ds.rows.iter().any(|r| r.label == z));
        }
    }
}
