//! Extended TSPLIB reader and writer.
//!
//! Stop indices in every section are 1-based. Sections end at `-1`, at the
//! next keyword, or at `EOF`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{Cost, RoutingInstance, Stop, TimeWindow, TravelTransform};
use crate::penalty::{Constraint, ConstraintKind, ConstraintSet, Level, Unit, ZoneGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    None,
    EdgeWeight,
    Depot,
    Zone,
    Coord,
    TimeWindow,
    ServiceTime,
    Group,
    Transform,
    Constraints(ConstraintKind),
}

fn section_keyword(word: &str) -> Option<Section> {
    Some(match word {
        "EDGE_WEIGHT_SECTION" => Section::EdgeWeight,
        "DEPOT_SECTION" => Section::Depot,
        "ZONE_SECTION" => Section::Zone,
        "COORD_SECTION" => Section::Coord,
        "TIME_WINDOW_SECTION" => Section::TimeWindow,
        "SERVICE_TIME_SECTION" => Section::ServiceTime,
        "GROUP_SECTION" => Section::Group,
        "TRANSFORM_SECTION" => Section::Transform,
        "NEIGHBOR_CONSTRAINTS" => Section::Constraints(ConstraintKind::Neighbor),
        "PATH_CONSTRAINTS" => Section::Constraints(ConstraintKind::Path),
        "PRECEDENCE_CONSTRAINTS" => Section::Constraints(ConstraintKind::Precedence),
        _ => return None,
    })
}

fn kind_keyword(word: &str) -> Option<ConstraintKind> {
    match word {
        "NEIGHBOR" => Some(ConstraintKind::Neighbor),
        "PATH" => Some(ConstraintKind::Path),
        "PRECEDENCE" => Some(ConstraintKind::Precedence),
        _ => None,
    }
}

fn kind_name(kind: ConstraintKind) -> &'static str {
    match kind {
        ConstraintKind::Neighbor => "NEIGHBOR",
        ConstraintKind::Path => "PATH",
        ConstraintKind::Precedence => "PRECEDENCE",
    }
}

fn int<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::syntax(line, format!("expected an integer, found `{tok}`")))
}

fn float(tok: &str, line: usize) -> Result<f64> {
    tok.parse().map_err(|_| Error::syntax(line, format!("expected a number, found `{tok}`")))
}

/// A constraint line before unit names are resolved.
struct RawConstraint {
    kind: ConstraintKind,
    a: String,
    b: String,
    weight: u64,
    line: usize,
}

struct Parser {
    name: String,
    station: Option<String>,
    dimension: Option<usize>,
    weights: Vec<Cost>,
    depot: Option<usize>,
    zones: Vec<(usize, String)>,
    coords: Vec<(usize, f64, f64)>,
    windows: Vec<(usize, Cost, Cost)>,
    service: Vec<(usize, Cost)>,
    groups: Vec<ZoneGroup>,
    transforms: Vec<(TravelTransform, usize)>,
    singles: Vec<RawConstraint>,
    disjunctions: Vec<Vec<RawConstraint>>,
    /// Members still owed to the open DISJUNCTION block.
    pending: usize,
    cluster_penalty: Option<u64>,
    group_cluster_penalty: Option<u64>,
    time_windows: bool,
}

impl Parser {
    fn stop_index(&self, tok: &str, line: usize) -> Result<usize> {
        let n = self.dimension.ok_or_else(|| Error::syntax(line, "section before DIMENSION"))?;
        let i: usize = int(tok, line)?;
        if i == 0 || i > n {
            return Err(Error::syntax(line, format!("stop index {i} outside 1..={n}")));
        }
        Ok(i - 1)
    }

    fn header(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "NAME" => self.name = value.to_string(),
            "TYPE" => {
                if value != "ATSP" {
                    return Err(Error::syntax(line, format!("unsupported TYPE `{value}`")));
                }
            }
            "DIMENSION" => self.dimension = Some(int(value, line)?),
            "EDGE_WEIGHT_TYPE" => {
                if value != "EXPLICIT" {
                    return Err(Error::syntax(line, format!("unsupported EDGE_WEIGHT_TYPE `{value}`")));
                }
            }
            "EDGE_WEIGHT_FORMAT" => {
                if value != "FULL_MATRIX" {
                    return Err(Error::syntax(line, format!("unsupported EDGE_WEIGHT_FORMAT `{value}`")));
                }
            }
            "STATION" => self.station = Some(value.to_string()),
            "CLUSTER_PENALTY" => self.cluster_penalty = Some(int(value, line)?),
            "GROUP_CLUSTER_PENALTY" => self.group_cluster_penalty = Some(int(value, line)?),
            "TIME_WINDOW_PENALTY" => {
                self.time_windows = match value {
                    "YES" => true,
                    "NO" => false,
                    _ => return Err(Error::syntax(line, "TIME_WINDOW_PENALTY must be YES or NO")),
                }
            }
            "COMMENT" => {}
            _ => return Err(Error::syntax(line, format!("unknown keyword `{key}`"))),
        }
        Ok(())
    }

    fn section_line(&mut self, section: Section, toks: &[&str], line: usize) -> Result<()> {
        let arity = |k: usize| {
            if toks.len() == k {
                Ok(())
            } else {
                Err(Error::syntax(line, format!("expected {k} fields, found {}", toks.len())))
            }
        };
        match section {
            Section::None => return Err(Error::syntax(line, format!("unexpected `{}`", toks.join(" ")))),
            Section::EdgeWeight => {
                for t in toks {
                    if t.contains(['.', 'e', 'E']) {
                        return Err(Error::syntax(line, format!("travel times must be integers, found `{t}`")));
                    }
                    let w: Cost = int(t, line)?;
                    if w < 0 {
                        return Err(Error::syntax(line, "negative travel time"));
                    }
                    self.weights.push(w);
                }
            }
            Section::Depot => {
                arity(1)?;
                if self.depot.is_some() {
                    return Err(Error::syntax(line, "more than one depot"));
                }
                self.depot = Some(self.stop_index(toks[0], line)?);
            }
            Section::Zone => {
                arity(2)?;
                let i = self.stop_index(toks[0], line)?;
                self.zones.push((i, toks[1].to_string()));
            }
            Section::Coord => {
                arity(3)?;
                let i = self.stop_index(toks[0], line)?;
                self.coords.push((i, float(toks[1], line)?, float(toks[2], line)?));
            }
            Section::TimeWindow => {
                arity(3)?;
                let i = self.stop_index(toks[0], line)?;
                let (e, l) = (int(toks[1], line)?, int(toks[2], line)?);
                if e > l {
                    return Err(Error::syntax(line, "time window ends before it starts"));
                }
                self.windows.push((i, e, l));
            }
            Section::ServiceTime => {
                arity(2)?;
                let i = self.stop_index(toks[0], line)?;
                self.service.push((i, int(toks[1], line)?));
            }
            Section::Group => {
                if toks.len() < 3 {
                    return Err(Error::syntax(line, "group line needs a level, a name and at least one zone"));
                }
                let level = match int::<usize>(toks[0], line)? {
                    l @ 1..=3 => Level::from_index(l).expect("1..=3"),
                    l => return Err(Error::syntax(line, format!("group level {l} outside 1..=3"))),
                };
                self.groups.push(ZoneGroup {
                    level,
                    name: toks[1].to_string(),
                    zones: toks[2..].iter().map(|s| s.to_string()).collect(),
                });
            }
            Section::Transform => {
                let t = match toks {
                    ["CLUSTER"] => TravelTransform::Cluster,
                    ["NEIGHBOR", a, b] => TravelTransform::Neighbor(a.to_string(), b.to_string()),
                    ["PATH", a, b] => TravelTransform::Path(a.to_string(), b.to_string()),
                    _ => return Err(Error::syntax(line, "expected CLUSTER, NEIGHBOR a b or PATH a b")),
                };
                self.transforms.push((t, line));
            }
            Section::Constraints(default_kind) => {
                if toks[0] == "DISJUNCTION" {
                    arity(2)?;
                    if self.pending > 0 {
                        return Err(Error::syntax(line, "DISJUNCTION inside an unfinished DISJUNCTION block"));
                    }
                    let k: usize = int(toks[1], line)?;
                    if k == 0 {
                        return Err(Error::syntax(line, "empty DISJUNCTION"));
                    }
                    self.pending = k;
                    self.disjunctions.push(Vec::with_capacity(k));
                    return Ok(());
                }
                let (kind, rest) = match kind_keyword(toks[0]) {
                    Some(k) => (k, &toks[1..]),
                    None => (default_kind, toks),
                };
                if rest.len() != 3 {
                    return Err(Error::syntax(line, "expected `<zone-a> <zone-b> <weight>`"));
                }
                let c = RawConstraint {
                    kind,
                    a: rest[0].to_string(),
                    b: rest[1].to_string(),
                    weight: int(rest[2], line)?,
                    line,
                };
                if self.pending > 0 {
                    self.pending -= 1;
                    self.disjunctions.last_mut().expect("open block").push(c);
                } else {
                    self.singles.push(c);
                }
            }
        }
        Ok(())
    }

    fn finish(self, last_line: usize) -> Result<(RoutingInstance, ConstraintSet)> {
        if self.pending > 0 {
            return Err(Error::syntax(last_line, "DISJUNCTION block is missing members"));
        }
        let n = self.dimension.ok_or_else(|| Error::syntax(last_line, "missing DIMENSION"))?;
        if self.weights.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.weights.len(),
                what: "weights (n*n expected)",
            });
        }
        let matrix: Vec<Vec<Cost>> = self.weights.chunks(n).map(|r| r.to_vec()).collect();
        let mut stops: Vec<Stop> = (0..n).map(Stop::new).collect();
        stops[self.depot.unwrap_or(0)].is_depot = true;
        for (i, z) in self.zones {
            stops[i].zone = Some(z);
        }
        for (i, lat, lon) in self.coords {
            stops[i].lat = Some(lat);
            stops[i].lon = Some(lon);
        }
        for (i, e, l) in self.windows {
            stops[i].time_window = Some(TimeWindow { earliest: e, latest: l });
        }
        for (i, s) in self.service {
            stops[i].service_time = s;
        }
        let mut instance = RoutingInstance::new(self.name, matrix, stops)?;
        instance.station = self.station;

        let zones = instance.zones();
        let mut group_level: HashMap<&str, Level> = HashMap::new();
        for g in &self.groups {
            if zones.contains(&g.name) || group_level.insert(&g.name, g.level).is_some() {
                return Err(Error::InvalidArgument(format!("group name `{}` is not unique", g.name)));
            }
            for z in &g.zones {
                if !zones.contains(z) {
                    return Err(Error::UnknownZone(z.clone()));
                }
            }
        }
        let unit = |name: &str| -> Result<Unit> {
            if zones.contains(name) {
                Ok(Unit::zone(name))
            } else if let Some(&level) = group_level.get(name) {
                Ok(Unit::at(level, name))
            } else {
                Err(Error::UnknownZone(name.to_string()))
            }
        };
        let resolve = |c: &RawConstraint| -> Result<Constraint> {
            let (a, b) = (unit(&c.a)?, unit(&c.b)?);
            if a.level != b.level {
                return Err(Error::syntax(c.line, format!("`{}` and `{}` are on different levels", c.a, c.b)));
            }
            Ok(Constraint::new(c.kind, a, b, c.weight))
        };
        let singles = self.singles.iter().map(resolve).collect::<Result<Vec<_>>>()?;
        let disjunctions = self
            .disjunctions
            .iter()
            .map(|d| d.iter().map(resolve).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        for (t, _) in &self.transforms {
            if let TravelTransform::Neighbor(a, b) | TravelTransform::Path(a, b) = t {
                for z in [a, b] {
                    if !zones.contains(z) {
                        return Err(Error::UnknownZone(z.clone()));
                    }
                }
            }
        }
        let cs = ConstraintSet {
            singles,
            disjunctions,
            groups: self.groups,
            cluster_penalty: self.cluster_penalty,
            group_cluster_penalty: self.group_cluster_penalty,
            time_windows: self.time_windows,
            transforms: self.transforms.into_iter().map(|(t, _)| t).collect(),
        };
        Ok((instance, cs))
    }
}

/// Parses an extended TSPLIB document.
pub fn parse_instance(text: &str) -> Result<(RoutingInstance, ConstraintSet)> {
    let mut p = Parser {
        name: String::new(),
        station: None,
        dimension: None,
        weights: Vec::new(),
        depot: None,
        zones: Vec::new(),
        coords: Vec::new(),
        windows: Vec::new(),
        service: Vec::new(),
        groups: Vec::new(),
        transforms: Vec::new(),
        singles: Vec::new(),
        disjunctions: Vec::new(),
        pending: 0,
        cluster_penalty: None,
        group_cluster_penalty: None,
        time_windows: false,
    };
    let mut section = Section::None;
    let mut last = 0;
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == "EOF" {
            return p.finish(line);
        }
        let first = trimmed.split_whitespace().next().expect("non-empty");
        if let Some(s) = section_keyword(first.trim_end_matches(':')) {
            if p.pending > 0 {
                return Err(Error::syntax(line, "DISJUNCTION block is missing members"));
            }
            if !seen.insert(first.trim_end_matches(':').to_string()) {
                return Err(Error::syntax(line, format!("duplicate section {first}")));
            }
            section = s;
            continue;
        }
        if trimmed == "-1" && section != Section::EdgeWeight {
            section = Section::None;
            continue;
        }
        if section == Section::None {
            if let Some((key, value)) = trimmed.split_once(':') {
                p.header(key.trim(), value.trim(), line)?;
                continue;
            }
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        p.section_line(section, &toks, line)?;
    }
    p.finish(last)
}

fn constraint_line(out: &mut String, c: &Constraint, section: ConstraintKind) {
    if c.kind != section {
        let _ = write!(out, "{} ", kind_name(c.kind));
    }
    let _ = writeln!(out, "{} {} {}", c.a.name, c.b.name, c.weight);
}

/// Writes an instance and its constraints. The output parses back to an
/// equal instance and constraint set.
pub fn write_instance(instance: &RoutingInstance, cs: &ConstraintSet) -> String {
    let n = instance.n();
    let mut out = String::new();
    let _ = writeln!(out, "NAME: {}", instance.name);
    let _ = writeln!(out, "TYPE: ATSP");
    let _ = writeln!(out, "DIMENSION: {n}");
    if let Some(s) = &instance.station {
        let _ = writeln!(out, "STATION: {s}");
    }
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE: EXPLICIT");
    let _ = writeln!(out, "EDGE_WEIGHT_FORMAT: FULL_MATRIX");
    if let Some(rho) = cs.cluster_penalty {
        let _ = writeln!(out, "CLUSTER_PENALTY: {rho}");
    }
    if let Some(rho) = cs.group_cluster_penalty {
        let _ = writeln!(out, "GROUP_CLUSTER_PENALTY: {rho}");
    }
    if cs.time_windows {
        let _ = writeln!(out, "TIME_WINDOW_PENALTY: YES");
    }
    out.push_str("EDGE_WEIGHT_SECTION\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| instance.travel(i, j).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    let _ = writeln!(out, "DEPOT_SECTION\n{}\n-1", instance.depot() + 1);
    let stops = instance.stops();
    if stops.iter().any(|s| s.zone.is_some()) {
        out.push_str("ZONE_SECTION\n");
        for s in stops {
            if let Some(z) = &s.zone {
                let _ = writeln!(out, "{} {z}", s.id + 1);
            }
        }
        out.push_str("-1\n");
    }
    if stops.iter().any(|s| s.lat.is_some() && s.lon.is_some()) {
        out.push_str("COORD_SECTION\n");
        for s in stops {
            if let (Some(lat), Some(lon)) = (s.lat, s.lon) {
                let _ = writeln!(out, "{} {lat} {lon}", s.id + 1);
            }
        }
        out.push_str("-1\n");
    }
    if stops.iter().any(|s| s.time_window.is_some()) {
        out.push_str("TIME_WINDOW_SECTION\n");
        for s in stops {
            if let Some(tw) = s.time_window {
                let _ = writeln!(out, "{} {} {}", s.id + 1, tw.earliest, tw.latest);
            }
        }
        out.push_str("-1\n");
    }
    if stops.iter().any(|s| s.service_time != 0) {
        out.push_str("SERVICE_TIME_SECTION\n");
        for s in stops.iter().filter(|s| s.service_time != 0) {
            let _ = writeln!(out, "{} {}", s.id + 1, s.service_time);
        }
        out.push_str("-1\n");
    }
    if !cs.groups.is_empty() {
        out.push_str("GROUP_SECTION\n");
        for g in &cs.groups {
            let _ = writeln!(out, "{} {} {}", g.level.index(), g.name, g.zones.join(" "));
        }
        out.push_str("-1\n");
    }
    if !cs.transforms.is_empty() {
        out.push_str("TRANSFORM_SECTION\n");
        for t in &cs.transforms {
            match t {
                TravelTransform::Cluster => out.push_str("CLUSTER\n"),
                TravelTransform::Neighbor(a, b) => {
                    let _ = writeln!(out, "NEIGHBOR {a} {b}");
                }
                TravelTransform::Path(a, b) => {
                    let _ = writeln!(out, "PATH {a} {b}");
                }
            }
        }
        out.push_str("-1\n");
    }
    for kind in [ConstraintKind::Neighbor, ConstraintKind::Path, ConstraintKind::Precedence] {
        let singles: Vec<&Constraint> = cs.singles.iter().filter(|c| c.kind == kind).collect();
        // Disjunctions are written in the section of their first member.
        let blocks: Vec<&Vec<Constraint>> = cs
            .disjunctions
            .iter()
            .filter(|d| d.first().map(|c| c.kind) == Some(kind))
            .collect();
        if singles.is_empty() && blocks.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{}_CONSTRAINTS", kind_name(kind));
        for c in singles {
            constraint_line(&mut out, c, kind);
        }
        for d in blocks {
            let _ = writeln!(out, "DISJUNCTION {}", d.len());
            for c in d {
                constraint_line(&mut out, c, kind);
            }
        }
        out.push_str("-1\n");
    }
    out.push_str("EOF\n");
    out
}
