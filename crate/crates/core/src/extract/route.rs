//! Historical routes used for training.
//!
//! Text form, one document per file (`#` starts a comment, indices 1-based):
//!
//! ```text
//! ROUTE sample
//! STATION DLA7
//! QUALITY High
//! DEPOT 1
//! STOPS 3
//! 1 - 34.05 -118.25 - - 0
//! 2 A-2.2E 34.06 -118.24 0 3600 30
//! 3 A-2.1E 34.07 -118.24 - - 45
//! SEQUENCE
//! 1 3 2
//! END
//! ```
//!
//! Stop records are `index zone lat lon earliest latest service`; `-` marks
//! a missing zone or window. The JSON form holds the same fields (see
//! [`RouteDoc`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Cost, TimeWindow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quality {
    High,
    Medium,
    Low,
}

impl Quality {
    /// Reference-selection weight, doubled so that it stays integral
    /// (2, 1.5, 1 become 4, 3, 2).
    pub fn weight(self) -> u64 {
        match self {
            Quality::High => 4,
            Quality::Medium => 3,
            Quality::Low => 2,
        }
    }

    pub fn parse(s: &str) -> Option<Quality> {
        match s {
            "High" => Some(Quality::High),
            "Medium" => Some(Quality::Medium),
            "Low" => Some(Quality::Low),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quality::High => "High",
            Quality::Medium => "Medium",
            Quality::Low => "Low",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteStop {
    pub zone: Option<String>,
    pub lat: f64,
    pub lon: f64,
    pub time_window: Option<TimeWindow>,
    pub service_time: Cost,
}

impl RouteStop {
    pub fn at(lat: f64, lon: f64, zone: Option<&str>) -> RouteStop {
        RouteStop {
            zone: zone.map(str::to_string),
            lat,
            lon,
            time_window: None,
            service_time: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingRoute {
    pub name: String,
    pub station: Option<String>,
    pub quality: Quality,
    pub depot: usize,
    pub stops: Vec<RouteStop>,
    /// Stops in the order driven, starting at the depot.
    pub sequence: Vec<usize>,
}

impl TrainingRoute {
    pub fn validate(&self) -> Result<()> {
        let n = self.stops.len();
        let bad = |msg: String| Error::MalformedRoute {
            route: self.name.clone(),
            msg,
        };
        if self.depot >= n {
            return Err(bad(format!("depot {} outside 1..={n}", self.depot + 1)));
        }
        if self.sequence.len() != n {
            return Err(bad(format!("sequence has {} stops, expected {n}", self.sequence.len())));
        }
        if self.sequence[0] != self.depot {
            return Err(bad("sequence does not start at the depot".into()));
        }
        let mut seen = vec![false; n];
        for &s in &self.sequence {
            if s >= n || seen[s] {
                return Err(bad(format!("sequence is not a permutation (stop {})", s + 1)));
            }
            seen[s] = true;
        }
        for z in self.stops.iter().filter_map(|s| s.zone.as_deref()) {
            if z.is_empty() || z.chars().any(char::is_whitespace) {
                return Err(bad(format!("zone `{z}` is empty or contains whitespace")));
            }
        }
        Ok(())
    }

    /// Zone of a stop; `None` for the depot and for unzoned stops.
    pub fn zone_of(&self, stop: usize) -> Option<&str> {
        if stop == self.depot {
            None
        } else {
            self.stops[stop].zone.as_deref()
        }
    }

    /// Zones along the driven sequence, one entry per stop, depot excluded.
    pub fn zone_walk(&self) -> Result<Vec<&str>> {
        self.sequence
            .iter()
            .filter(|&&s| s != self.depot)
            .map(|&s| self.zone_of(s).ok_or(Error::MissingZone(s)))
            .collect()
    }

    /// Zones in order of first visit, depot excluded.
    pub fn zone_sequence(&self) -> Result<Vec<String>> {
        let mut seen = BTreeSet::new();
        Ok(self
            .zone_walk()?
            .into_iter()
            .filter(|z| seen.insert(*z))
            .map(str::to_string)
            .collect())
    }

    pub fn zones(&self) -> BTreeSet<String> {
        (0..self.stops.len()).filter_map(|s| self.zone_of(s)).map(str::to_string).collect()
    }

    /// Gives every unzoned stop the zone of the nearest zoned stop of the
    /// route (planar distance on lat/lon, ties to the lower index). Returns
    /// the number of stops filled.
    pub fn fill_missing_zones(&mut self) -> Result<usize> {
        let points: Vec<(f64, f64)> = self.stops.iter().map(|s| (s.lat, s.lon)).collect();
        let mut zones: Vec<Option<String>> = self.stops.iter().map(|s| s.zone.clone()).collect();
        zones[self.depot] = None;
        let filled = fill_missing_zone_ids(&points, &mut zones, self.depot).map_err(|_| Error::MalformedRoute {
            route: self.name.clone(),
            msg: "no zoned stop to copy from".into(),
        })?;
        for (i, z) in zones.into_iter().enumerate() {
            if i != self.depot {
                self.stops[i].zone = z;
            }
        }
        Ok(filled)
    }
}

/// Fills `zones[i] == None` (except at `skip`) from the nearest originally
/// zoned point. Ties go to the lowest index.
pub fn fill_missing_zone_ids(points: &[(f64, f64)], zones: &mut [Option<String>], skip: usize) -> Result<usize> {
    let sources: Vec<usize> = (0..zones.len()).filter(|&i| i != skip && zones[i].is_some()).collect();
    let missing: Vec<usize> = (0..zones.len()).filter(|&i| i != skip && zones[i].is_none()).collect();
    if missing.is_empty() {
        return Ok(0);
    }
    if sources.is_empty() {
        return Err(Error::MissingZone(missing[0]));
    }
    for &i in &missing {
        let (xi, yi) = points[i];
        let mut best = sources[0];
        let mut best_d = f64::INFINITY;
        for &j in &sources {
            let (xj, yj) = points[j];
            let d = (xi - xj).powi(2) + (yi - yj).powi(2);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        zones[i] = zones[best].clone();
    }
    Ok(missing.len())
}

fn field<'a>(toks: &mut impl Iterator<Item = &'a str>, line: usize, what: &str) -> Result<&'a str> {
    toks.next().ok_or_else(|| Error::syntax(line, format!("missing {what}")))
}

fn number<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::syntax(line, format!("bad number `{tok}`")))
}

/// Parses the text form of a route.
pub fn parse_route(text: &str) -> Result<TrainingRoute> {
    #[derive(PartialEq)]
    enum Sec {
        Header,
        Stops,
        Sequence,
        Done,
    }
    let mut name = None;
    let mut station = None;
    let mut quality = None;
    let mut depot = None;
    let mut dimension: Option<usize> = None;
    let mut records: BTreeMap<usize, RouteStop> = BTreeMap::new();
    let mut sequence = Vec::new();
    let mut sec = Sec::Header;
    let index = |tok: &str, line: usize, n: Option<usize>| -> Result<usize> {
        let n = n.ok_or_else(|| Error::syntax(line, "STOPS must come first"))?;
        let i: usize = number(tok, line)?;
        if i == 0 || i > n {
            return Err(Error::syntax(line, format!("stop index {i} outside 1..={n}")));
        }
        Ok(i - 1)
    };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if sec == Sec::Done {
            return Err(Error::syntax(line, "text after END"));
        }
        let mut toks = body.split_whitespace();
        let head = toks.next().unwrap_or("");
        match head {
            "ROUTE" => name = Some(field(&mut toks, line, "route name")?.to_string()),
            "STATION" => station = Some(field(&mut toks, line, "station")?.to_string()),
            "QUALITY" => {
                let q = field(&mut toks, line, "quality")?;
                quality = Some(Quality::parse(q).ok_or_else(|| Error::syntax(line, format!("unknown quality `{q}`")))?);
            }
            "DEPOT" => depot = Some(field(&mut toks, line, "depot")?.to_string()),
            "STOPS" => {
                dimension = Some(number(field(&mut toks, line, "stop count")?, line)?);
                sec = Sec::Stops;
            }
            "SEQUENCE" => {
                sec = Sec::Sequence;
            }
            "END" => {
                sec = Sec::Done;
            }
            _ => match sec {
                Sec::Stops => {
                    let i = index(head, line, dimension)?;
                    let zone = field(&mut toks, line, "zone")?;
                    let lat = number(field(&mut toks, line, "lat")?, line)?;
                    let lon = number(field(&mut toks, line, "lon")?, line)?;
                    let e = field(&mut toks, line, "window start")?;
                    let l = field(&mut toks, line, "window end")?;
                    let time_window = match (e, l) {
                        ("-", "-") => None,
                        (e, l) => Some(TimeWindow {
                            earliest: number(e, line)?,
                            latest: number(l, line)?,
                        }),
                    };
                    let service_time = number(field(&mut toks, line, "service time")?, line)?;
                    if toks.next().is_some() {
                        return Err(Error::syntax(line, "trailing fields in stop record"));
                    }
                    let rec = RouteStop {
                        zone: (zone != "-").then(|| zone.to_string()),
                        lat,
                        lon,
                        time_window,
                        service_time,
                    };
                    if records.insert(i, rec).is_some() {
                        return Err(Error::syntax(line, format!("stop {} listed twice", i + 1)));
                    }
                }
                Sec::Sequence => {
                    for tok in std::iter::once(head).chain(toks.by_ref()) {
                        sequence.push(index(tok, line, dimension)?);
                    }
                }
                _ => return Err(Error::syntax(line, format!("unknown keyword `{head}`"))),
            },
        }
        if toks.next().is_some() {
            return Err(Error::syntax(line, format!("trailing fields after {head}")));
        }
    }
    if sec != Sec::Done {
        return Err(Error::syntax(text.lines().count(), "missing END"));
    }
    let name = name.ok_or_else(|| Error::syntax(1, "missing ROUTE"))?;
    let n = dimension.unwrap_or(0);
    if records.len() != n {
        return Err(Error::MalformedRoute {
            route: name,
            msg: format!("{} stop records for {n} stops", records.len()),
        });
    }
    let depot = match depot {
        Some(d) => index(&d, 0, dimension)?,
        None => return Err(Error::syntax(1, "missing DEPOT")),
    };
    let route = TrainingRoute {
        name,
        station,
        quality: quality.ok_or_else(|| Error::syntax(1, "missing QUALITY"))?,
        depot,
        stops: records.into_values().collect(),
        sequence,
    };
    route.validate()?;
    Ok(route)
}

pub fn write_route(route: &TrainingRoute) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ROUTE {}", route.name);
    if let Some(s) = &route.station {
        let _ = writeln!(out, "STATION {s}");
    }
    let _ = writeln!(out, "QUALITY {}", route.quality.as_str());
    let _ = writeln!(out, "DEPOT {}", route.depot + 1);
    let _ = writeln!(out, "STOPS {}", route.stops.len());
    for (i, s) in route.stops.iter().enumerate() {
        let (e, l) = match s.time_window {
            Some(tw) => (tw.earliest.to_string(), tw.latest.to_string()),
            None => ("-".into(), "-".into()),
        };
        let _ = writeln!(
            out,
            "{} {} {} {} {e} {l} {}",
            i + 1,
            s.zone.as_deref().unwrap_or("-"),
            s.lat,
            s.lon,
            s.service_time
        );
    }
    out.push_str("SEQUENCE\n");
    for chunk in route.sequence.chunks(20) {
        let row: Vec<String> = chunk.iter().map(|s| (s + 1).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str("END\n");
    out
}

/// JSON form of a route. Indices are 1-based as in the text form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RouteDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub station: Option<String>,
    pub quality: Quality,
    pub depot: usize,
    pub stops: Vec<StopDoc>,
    pub sequence: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StopDoc {
    pub index: usize,
    #[serde(default)]
    pub zone: Option<String>,
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub window: Option<[Cost; 2]>,
    #[serde(default)]
    pub service: Cost,
}

impl From<&TrainingRoute> for RouteDoc {
    fn from(r: &TrainingRoute) -> RouteDoc {
        RouteDoc {
            name: r.name.clone(),
            station: r.station.clone(),
            quality: r.quality,
            depot: r.depot + 1,
            stops: r
                .stops
                .iter()
                .enumerate()
                .map(|(i, s)| StopDoc {
                    index: i + 1,
                    zone: s.zone.clone(),
                    lat: s.lat,
                    lon: s.lon,
                    window: s.time_window.map(|tw| [tw.earliest, tw.latest]),
                    service: s.service_time,
                })
                .collect(),
            sequence: r.sequence.iter().map(|s| s + 1).collect(),
        }
    }
}

impl TryFrom<RouteDoc> for TrainingRoute {
    type Error = Error;

    fn try_from(doc: RouteDoc) -> Result<TrainingRoute> {
        let n = doc.stops.len();
        let bad = |msg: String| Error::MalformedRoute {
            route: doc.name.clone(),
            msg,
        };
        let one_based = |i: usize| if i == 0 || i > n { Err(bad(format!("index {i} outside 1..={n}"))) } else { Ok(i - 1) };
        let mut stops: Vec<Option<RouteStop>> = vec![None; n];
        for s in &doc.stops {
            let i = one_based(s.index)?;
            if stops[i].is_some() {
                return Err(bad(format!("stop {} listed twice", s.index)));
            }
            stops[i] = Some(RouteStop {
                zone: s.zone.clone().filter(|z| !z.is_empty()),
                lat: s.lat,
                lon: s.lon,
                time_window: s.window.map(|[earliest, latest]| TimeWindow { earliest, latest }),
                service_time: s.service,
            });
        }
        let route = TrainingRoute {
            name: doc.name.clone(),
            station: doc.station.clone(),
            quality: doc.quality,
            depot: one_based(doc.depot)?,
            stops: stops.into_iter().map(|s| s.expect("every index listed once")).collect(),
            sequence: doc.sequence.iter().map(|&s| one_based(s)).collect::<Result<_>>()?,
        };
        route.validate()?;
        Ok(route)
    }
}

pub fn route_to_json(route: &TrainingRoute) -> Result<String> {
    Ok(serde_json::to_string_pretty(&RouteDoc::from(route))?)
}

pub fn route_from_json(text: &str) -> Result<TrainingRoute> {
    serde_json::from_str::<RouteDoc>(text)?.try_into()
}

/// Reads one route from a `.route` or `.json` file.
pub fn read_route(path: &Path) -> Result<TrainingRoute> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        route_from_json(&text)
    } else {
        parse_route(&text)
    }
}

/// Reads every `.route` and `.json` file of a directory, in file-name order.
pub fn read_route_dir(dir: &Path) -> Result<Vec<TrainingRoute>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "route" || e == "json"));
    paths.sort();
    paths.iter().map(|p| read_route(p)).collect()
}
