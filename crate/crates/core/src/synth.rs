//! Synthetic route corpora with a planted zone hierarchy.
//!
//! Each station owns a grid of zones `Γ-x.yΔ`: one top cluster per Γ,
//! super-super clusters per x, super clusters per Δ and zones per y. The
//! station has one master zone order: super-super clusters by x, super
//! clusters by Δ (each in a per-station direction) and zones serpentine in
//! y. A route covers a window of consecutive super-super clusters of its
//! station and drives them in master order, so every route of a station
//! agrees with every other on zone order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Triangular};

use crate::extract::{Hierarchy, Quality, RouteStop, TrainingRoute};
use crate::instance::{Cost, RoutingInstance, Stop, TimeWindow};
use crate::penalty::time_window_lateness;

#[derive(Clone, Debug)]
pub struct WindowConfig {
    /// Share of stops with a window.
    pub fraction: f64,
    /// Window end minus the planted arrival time, in seconds.
    pub slack: Cost,
    /// Window length in seconds.
    pub width: Cost,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            fraction: 0.1,
            slack: 300,
            width: 3600,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub routes: usize,
    pub stations: usize,
    pub seed: u64,
    /// Probability that a zone's last stop is driven after the next zone.
    pub split_rate: f64,
    /// Stops per route (depot included) are drawn from a triangular
    /// distribution on `[min_stops, max_stops]` with this mode.
    pub min_stops: usize,
    pub mode_stops: usize,
    pub max_stops: usize,
    pub windows: Option<WindowConfig>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        // mean (32 + 175 + 237) / 3 = 148
        SynthConfig {
            routes: 20,
            stations: 4,
            seed: 1,
            split_rate: 0.05,
            min_stops: 32,
            mode_stops: 175,
            max_stops: 237,
            windows: None,
        }
    }
}

/// One generated route: the instance to solve and the driven route.
#[derive(Clone, Debug)]
pub struct SynthRoute {
    pub instance: RoutingInstance,
    pub route: TrainingRoute,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub hierarchy: Hierarchy,
    pub routes: Vec<SynthRoute>,
}

/// Seconds per unit of planar distance.
const SPEED: f64 = 90.0;
const ZONE_JITTER: f64 = 0.3;
// zones of a super cluster lie closer together than neighbouring super
// clusters, and super-super clusters do not overlap
const Y_GAP: f64 = 1.0;
const DELTA_GAP: f64 = 3.0;
const X_GAP: f64 = 16.0;
const BAND_GAP: f64 = 40.0;
/// Stations lie well away from their delivery areas.
const DEPOT_DISTANCE: f64 = 70.0;

struct Zone {
    id: String,
    center: (f64, f64),
}

struct Station {
    name: String,
    depot: (f64, f64),
    /// Territories in master order; each is a run of consecutive
    /// super-super clusters, and each of those holds its zones in order.
    territories: Vec<Vec<Vec<Zone>>>,
}

fn letter(i: usize) -> char {
    (b'A' + i as u8) as char
}

/// A station: one or two Γ bands of super-super clusters along x. Each band
/// is swept in one x direction, super clusters (Δ columns) in the same
/// direction and zones serpentine in y, so the master order is a short
/// boustrophedon with no backtracking.
fn station<R: Rng>(k: usize, rng: &mut R) -> Station {
    let gammas = rng.random_range(1..=2);
    let mut territories = Vec::new();
    let mut x_max = 0;
    for g in 0..gammas {
        let xs = rng.random_range(4..=6);
        x_max = x_max.max(xs);
        let mut order: Vec<usize> = (1..=xs).collect();
        let desc = rng.random_bool(0.5);
        if desc {
            order.reverse();
        }
        let mut up = rng.random_bool(0.5);
        let mut blocks = Vec::new();
        for x in order {
            let deltas = rng.random_range(2..=3);
            let ys = rng.random_range(2..=4);
            let mut ds: Vec<usize> = (0..deltas).collect();
            if desc {
                ds.reverse();
            }
            let mut zones = Vec::new();
            for &d in &ds {
                let mut yv: Vec<usize> = (1..=ys).collect();
                if !up {
                    yv.reverse();
                }
                up = !up;
                for y in yv {
                    let cx = x as f64 * X_GAP + d as f64 * DELTA_GAP;
                    let cy = g as f64 * BAND_GAP + y as f64 * Y_GAP;
                    zones.push(Zone {
                        id: format!("{}-{x}.{y}{}", letter(k % 13 * 2 + g), letter(d + 1)),
                        center: (cx, cy),
                    });
                }
            }
            blocks.push(zones);
        }
        // cut the band into territories of two or three blocks
        let mut rest = blocks.into_iter().peekable();
        while rest.peek().is_some() {
            let take = rng.random_range(2..=3);
            territories.push(rest.by_ref().take(take).collect());
        }
    }
    let mid = (x_max as f64 + 1.0) * X_GAP / 2.0;
    Station {
        name: format!("ST{k:02}"),
        depot: (mid + rng.random_range(-10.0..10.0), -DEPOT_DISTANCE),
        territories,
    }
}

fn euclid(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Asymmetric travel times: planar distance × a factor in [1.0, 1.3].
fn travel_matrix<R: Rng>(points: &[(f64, f64)], rng: &mut R) -> Vec<Vec<Cost>> {
    let n = points.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0
                    } else {
                        let f = rng.random_range(1.0..=1.3);
                        ((euclid(points[i], points[j]) * SPEED * f).round() as Cost).max(1)
                    }
                })
                .collect()
        })
        .collect()
}

fn one_route<R: Rng>(name: String, st: &Station, cfg: &SynthConfig, rng: &mut R) -> SynthRoute {
    let tri = Triangular::new(cfg.min_stops as f64, cfg.max_stops as f64, cfg.mode_stops as f64)
        .expect("min ≤ mode ≤ max");
    let n = (tri.sample(rng).round() as usize).clamp(cfg.min_stops, cfg.max_stops).max(2);

    // a territory of the station, cut short if it has more zones than stops
    let territory = &st.territories[rng.random_range(0..st.territories.len())];
    let zones: Vec<&Zone> = territory.iter().flatten().take(n - 1).collect();

    // stops per zone: at least one each, the rest spread at random
    let mut counts = vec![1usize; zones.len()];
    for _ in zones.len()..n - 1 {
        counts[rng.random_range(0..zones.len())] += 1;
    }
    let mut points = vec![st.depot];
    let mut zone_of = vec![None];
    let mut by_zone: Vec<Vec<usize>> = Vec::new();
    for (z, &c) in zones.iter().zip(&counts) {
        let mut ids = Vec::new();
        for _ in 0..c {
            let j = (rng.random_range(-ZONE_JITTER..ZONE_JITTER), rng.random_range(-ZONE_JITTER..ZONE_JITTER));
            ids.push(points.len());
            points.push((z.center.0 + j.0, z.center.1 + j.1));
            zone_of.push(Some(z.id.clone()));
        }
        by_zone.push(ids);
    }
    // shuffle stop indices so that index order says nothing about the route
    let mut perm: Vec<usize> = (1..n).collect();
    perm.shuffle(rng);
    perm.insert(0, 0);
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let points: Vec<(f64, f64)> = perm.iter().map(|&o| points[o]).collect();
    let zone_of: Vec<Option<String>> = perm.iter().map(|&o| zone_of[o].clone()).collect();
    let by_zone: Vec<Vec<usize>> = by_zone.iter().map(|ids| ids.iter().map(|&o| inv[o]).collect()).collect();

    // within a zone, sweep from where the driver is towards the next zone
    let mut visits: Vec<Vec<usize>> = Vec::new();
    let mut here = points[0];
    for (k, ids) in by_zone.iter().enumerate() {
        let to = zones.get(k + 1).map_or(st.depot, |z| z.center);
        let dir = (to.0 - here.0, to.1 - here.1);
        let along = |s: usize| (points[s].0 - here.0) * dir.0 + (points[s].1 - here.1) * dir.1;
        let mut order = ids.clone();
        order.sort_by(|&a, &b| along(a).total_cmp(&along(b)));
        here = points[*order.last().expect("a stop per zone")];
        visits.push(order);
    }
    // occasional splits: a zone's last stop is driven after the next zone
    let mut sequence = vec![0];
    let mut carry: Option<usize> = None;
    for (k, v) in visits.iter().enumerate() {
        let mut v = v.clone();
        let split = k + 1 < visits.len() && v.len() >= 2 && rng.random_bool(cfg.split_rate);
        let moved = if split { v.pop() } else { None };
        sequence.extend(v);
        sequence.extend(carry.take());
        carry = moved;
    }
    sequence.extend(carry);

    let travel = travel_matrix(&points, rng);
    let service: Vec<Cost> = (0..n).map(|i| if i == 0 { 0 } else { rng.random_range(20..=120) }).collect();
    let mut stops: Vec<Stop> = (0..n)
        .map(|i| Stop {
            id: i,
            zone: zone_of[i].clone(),
            lat: Some(points[i].0),
            lon: Some(points[i].1),
            time_window: None,
            service_time: service[i],
            is_depot: i == 0,
        })
        .collect();
    if let Some(w) = &cfg.windows {
        // windows around the planted arrival times
        let mut clock = 0;
        let mut prev = 0;
        for &s in &sequence[1..] {
            clock += service[prev] + travel[prev][s];
            if rng.random_bool(w.fraction) {
                let latest = clock + w.slack;
                stops[s].time_window = Some(TimeWindow {
                    earliest: (latest - w.width).max(0).min(clock),
                    latest,
                });
            }
            prev = s;
        }
    }
    let mut instance = RoutingInstance::new(name.clone(), travel, stops).expect("generated instance is valid");
    instance.station = Some(st.name.clone());
    debug_assert_eq!(time_window_lateness(&instance, &sequence), 0);

    let quality = match rng.random_range(0..20) {
        0..12 => Quality::High,
        12..17 => Quality::Medium,
        _ => Quality::Low,
    };
    let route = TrainingRoute {
        name,
        station: Some(st.name.clone()),
        quality,
        depot: 0,
        stops: instance
            .stops()
            .iter()
            .map(|s| RouteStop {
                zone: s.zone.clone(),
                lat: points[s.id].0,
                lon: points[s.id].1,
                time_window: s.time_window,
                service_time: s.service_time,
            })
            .collect(),
        sequence,
    };
    SynthRoute { instance, route }
}

/// Generates a corpus; the same config always yields the same corpus.
pub fn generate_synthetic(cfg: &SynthConfig) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let stations: Vec<Station> = (0..cfg.stations.max(1)).map(|k| station(k, &mut rng)).collect();
    let routes = (0..cfg.routes)
        .map(|i| {
            let st = &stations[i % stations.len()];
            one_route(format!("syn{:04}", i + 1), st, cfg, &mut rng)
        })
        .collect();
    Corpus {
        hierarchy: Hierarchy::default(),
        routes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::visit_positions;

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig {
            routes: 6,
            ..Default::default()
        };
        let a = generate_synthetic(&cfg);
        let b = generate_synthetic(&cfg);
        for (x, y) in a.routes.iter().zip(&b.routes) {
            assert_eq!(x.route, y.route);
            assert_eq!(x.instance, y.instance);
        }
    }

    #[test]
    fn no_splits_means_clustered_driver_tours() {
        let cfg = SynthConfig {
            routes: 30,
            split_rate: 0.0,
            ..Default::default()
        };
        for r in generate_synthetic(&cfg).routes {
            r.route.validate().unwrap();
            let (_, crossing) = visit_positions(&r.instance, &r.route.sequence).unwrap();
            assert_eq!(crossing, r.instance.zones().len(), "{}", r.route.name);
        }
    }

    #[test]
    fn splits_happen_at_full_rate() {
        let cfg = SynthConfig {
            routes: 10,
            split_rate: 1.0,
            ..Default::default()
        };
        let split = generate_synthetic(&cfg)
            .routes
            .iter()
            .filter(|r| visit_positions(&r.instance, &r.route.sequence).unwrap().1 > r.instance.zones().len())
            .count();
        assert!(split >= 9);
    }

    #[test]
    fn route_sizes_follow_the_reported_range() {
        let cfg = SynthConfig {
            routes: 400,
            ..Default::default()
        };
        let sizes: Vec<usize> = generate_synthetic(&cfg).routes.iter().map(|r| r.instance.n()).collect();
        assert!(sizes.iter().all(|&n| (32..=237).contains(&n)));
        let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
        assert!((mean - 148.0).abs() < 6.0, "mean {mean}");
    }

    #[test]
    fn windows_admit_the_driver_tour() {
        let cfg = SynthConfig {
            routes: 10,
            windows: Some(WindowConfig::default()),
            ..Default::default()
        };
        for r in generate_synthetic(&cfg).routes {
            assert!(r.instance.has_time_windows());
            assert_eq!(time_window_lateness(&r.instance, &r.route.sequence), 0);
        }
    }

    #[test]
    fn planted_tours_satisfy_their_own_model() {
        use crate::extract::{build_model, ExtractConfig, Variant};
        use crate::penalty::PenaltyModel;
        let corpus = generate_synthetic(&SynthConfig {
            routes: 12,
            split_rate: 0.0,
            ..Default::default()
        });
        let training: Vec<TrainingRoute> = corpus.routes.iter().map(|r| r.route.clone()).collect();
        for r in &corpus.routes {
            for variant in [Variant::Full, Variant::Alternate] {
                let cfg = ExtractConfig {
                    variant,
                    ..Default::default()
                };
                let m = build_model(&r.instance, &training, &corpus.hierarchy, &cfg).unwrap();
                let model = PenaltyModel::new(&r.instance, &m.constraints).unwrap();
                let pen = model.evaluate_stops(&r.route.sequence, &mut model.scratch());
                assert_eq!(pen.total(), 0, "{} {variant:?} {pen:?}", r.route.name);
            }
        }
    }
}
