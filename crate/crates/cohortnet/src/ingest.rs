//! Flat-file loading: edge stream, node attributes, cohort start dates,
//! school covariates, and the optional closeness table. Source identifiers
//! are remapped to dense ids in order of first appearance.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{
    date_from_day, day_from_date, AttributeTable, CohortKey, CohortRecord, Day, EdgeEvent, IdMap,
    NodeId, SchoolCovariates, SchoolIdx, SchoolRecord, TemporalEdgeList,
};
use crate::persistence::ClosenessTable;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundlePaths {
    pub edges: PathBuf,
    pub attributes: PathBuf,
    pub cohorts: PathBuf,
    pub schools: PathBuf,
    pub closeness: Option<PathBuf>,
}

impl BundlePaths {
    /// Conventional file names under one directory.
    pub fn in_dir(dir: &Path) -> Self {
        let closeness = dir.join("closeness.csv");
        BundlePaths {
            edges: dir.join("edges.csv"),
            attributes: dir.join("attributes.csv"),
            cohorts: dir.join("cohorts.csv"),
            schools: dir.join("schools.csv"),
            closeness: closeness.exists().then_some(closeness),
        }
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct IngestReport {
    pub edge_rows: u64,
    pub self_loops_rejected: u64,
    pub duplicates_collapsed: u64,
    pub nodes: u64,
    pub edges: u64,
    pub cohorts: u64,
    pub schools: u64,
    pub closeness_rows: u64,
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn malformed(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn check_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let headers = reader
        .headers()
        .map_err(|e| malformed(path, 1, e.to_string()))?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(malformed(
            path,
            1,
            format!("expected header {:?}, got {:?}", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn parse_date(path: &Path, line: u64, s: &str) -> Result<Day> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map(day_from_date)
        .map_err(|_| malformed(path, line, format!("bad date {s:?}, expected YYYY-MM-DD")))
}

fn parse_bool(path: &Path, line: u64, s: &str) -> Result<bool> {
    match s.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(malformed(path, line, format!("bad boolean {other:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: u64, field: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| malformed(path, line, format!("bad {field} value {s:?}")))
}

pub fn load_schools(path: &Path) -> Result<Vec<SchoolRecord>> {
    let mut reader = open_reader(path)?;
    check_header(
        path,
        &mut reader,
        &[
            "school_id",
            "is_private",
            "is_hbcu",
            "is_womens",
            "is_hispanic_serving",
            "is_religious",
            "is_commuter",
            "greek_rate",
            "class_size",
            "grad_rate",
        ],
    )?;
    let mut schools = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| malformed(path, line, e.to_string()))?;
        if record.len() != 10 {
            return Err(malformed(path, line, "expected 10 fields"));
        }
        let raw_id = record[0].trim().to_owned();
        if raw_id.is_empty() {
            return Err(malformed(path, line, "empty school_id"));
        }
        if seen.insert(raw_id.clone(), ()).is_some() {
            return Err(malformed(path, line, format!("duplicate school_id {raw_id:?}")));
        }
        let covariates = SchoolCovariates {
            is_private: parse_bool(path, line, &record[1])?,
            is_hbcu: parse_bool(path, line, &record[2])?,
            is_womens: parse_bool(path, line, &record[3])?,
            is_hispanic_serving: parse_bool(path, line, &record[4])?,
            is_religious: parse_bool(path, line, &record[5])?,
            is_commuter: parse_bool(path, line, &record[6])?,
            greek_rate: parse_num(path, line, "greek_rate", &record[7])?,
            class_size: parse_num(path, line, "class_size", &record[8])?,
            grad_rate: parse_num(path, line, "grad_rate", &record[9])?,
        };
        covariates
            .validate()
            .map_err(|m| malformed(path, line, m))?;
        schools.push(SchoolRecord {
            raw_id,
            covariates,
            cohorts: Vec::new(),
            members: Vec::new(),
        });
    }
    Ok(schools)
}

/// Loads the full input bundle. Edge rows that are self-loops are rejected
/// and counted; any malformed row is a hard error naming its line.
pub fn load_bundle(paths: &BundlePaths) -> Result<(Dataset, IngestReport)> {
    let mut report = IngestReport::default();

    let mut schools = load_schools(&paths.schools)?;
    let school_lookup: HashMap<String, SchoolIdx> = schools
        .iter()
        .enumerate()
        .map(|(i, s)| (s.raw_id.clone(), SchoolIdx(i as u16)))
        .collect();

    // Cohort start dates.
    let path = &paths.cohorts;
    let mut reader = open_reader(path)?;
    check_header(path, &mut reader, &["school_id", "entry_year", "start_date"])?;
    let mut cohorts: Vec<CohortRecord> = Vec::new();
    let mut cohort_lookup: HashMap<CohortKey, u32> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| malformed(path, line, e.to_string()))?;
        if record.len() != 3 {
            return Err(malformed(path, line, "expected 3 fields"));
        }
        let school = *school_lookup
            .get(record[0].trim())
            .ok_or_else(|| Error::UnknownSchool(record[0].trim().to_owned()))?;
        let entry_year: i32 = parse_num(path, line, "entry_year", &record[1])?;
        let start_day = parse_date(path, line, &record[2])?;
        let key = CohortKey { school, entry_year };
        if cohort_lookup.contains_key(&key) {
            return Err(malformed(path, line, "duplicate cohort"));
        }
        cohort_lookup.insert(key, cohorts.len() as u32);
        schools[school.index()].cohorts.push(cohorts.len() as u32);
        cohorts.push(CohortRecord {
            key,
            start_day,
            members: Vec::new(),
        });
    }

    // Node attributes.
    let path = &paths.attributes;
    let mut reader = open_reader(path)?;
    check_header(
        path,
        &mut reader,
        &["node_id", "school_id", "entry_year", "gender", "major", "hometown"],
    )?;
    let mut id_map = IdMap::new();
    let mut attrs = AttributeTable::default();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| malformed(path, line, e.to_string()))?;
        if record.len() != 6 {
            return Err(malformed(path, line, "expected 6 fields"));
        }
        let raw = record[0].trim();
        if raw.is_empty() {
            return Err(malformed(path, line, "empty node_id"));
        }
        let node = id_map.intern(raw);
        if node.index() != attrs.node_count() {
            return Err(malformed(path, line, format!("duplicate node_id {raw:?}")));
        }
        let school = *school_lookup
            .get(record[1].trim())
            .ok_or_else(|| Error::UnknownSchool(record[1].trim().to_owned()))?;
        let entry_year: i32 = parse_num(path, line, "entry_year", &record[2])?;
        let key = CohortKey { school, entry_year };
        let &cohort_idx = cohort_lookup.get(&key).ok_or(Error::MissingCohort {
            school: record[1].trim().to_owned(),
            year: entry_year,
        })?;
        attrs.school.push(school);
        attrs.entry_year.push(entry_year);
        let g = attrs.gender_dict.intern(&record[3]);
        let m = attrs.major_dict.intern(&record[4]);
        let h = attrs.hometown_dict.intern(&record[5]);
        attrs.gender.push(g);
        attrs.major.push(m);
        attrs.hometown.push(h);
        attrs.start_day.push(cohorts[cohort_idx as usize].start_day);
        attrs.cohort_of.push(cohort_idx);
        cohorts[cohort_idx as usize].members.push(node);
        schools[school.index()].members.push(node);
    }
    for c in &mut cohorts {
        c.members.sort_unstable();
    }
    for s in &mut schools {
        s.members.sort_unstable();
    }
    attrs.cohorts = cohorts;
    attrs.schools = schools;

    // Edge stream.
    let path = &paths.edges;
    let mut reader = open_reader(path)?;
    check_header(path, &mut reader, &["src_id", "dst_id", "date"])?;
    let mut events = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| malformed(path, line, e.to_string()))?;
        if record.len() != 3 {
            return Err(malformed(path, line, "expected 3 fields"));
        }
        report.edge_rows += 1;
        let src = record[0].trim();
        let dst = record[1].trim();
        let t = parse_date(path, line, &record[2])?;
        let u = id_map.get(src).ok_or_else(|| Error::MissingAttributes {
            node: src.to_owned(),
        })?;
        let v = id_map.get(dst).ok_or_else(|| Error::MissingAttributes {
            node: dst.to_owned(),
        })?;
        match EdgeEvent::new(u, v, t) {
            Some(e) => events.push(e),
            None => report.self_loops_rejected += 1,
        }
    }
    let accepted = events.len() as u64;
    let events = TemporalEdgeList::from_events(events);
    report.duplicates_collapsed = accepted - events.len() as u64;

    // Optional closeness table.
    let closeness = match &paths.closeness {
        Some(path) => {
            let mut reader = open_reader(path)?;
            check_header(path, &mut reader, &["ego_id", "alter_id", "rank"])?;
            let mut rows = Vec::new();
            let mut seen: HashMap<(u32, u32), ()> = HashMap::new();
            for (i, record) in reader.records().enumerate() {
                let line = i as u64 + 2;
                let record = record.map_err(|e| malformed(path, line, e.to_string()))?;
                if record.len() != 3 {
                    return Err(malformed(path, line, "expected 3 fields"));
                }
                let ego = id_map
                    .get(record[0].trim())
                    .ok_or_else(|| Error::MissingAttributes {
                        node: record[0].trim().to_owned(),
                    })?;
                let alter = id_map
                    .get(record[1].trim())
                    .ok_or_else(|| Error::MissingAttributes {
                        node: record[1].trim().to_owned(),
                    })?;
                let rank: u32 = parse_num(path, line, "rank", &record[2])?;
                if rank == 0 {
                    return Err(malformed(path, line, "ranks start at 1"));
                }
                if seen.insert((ego.0, rank), ()).is_some() {
                    return Err(malformed(
                        path,
                        line,
                        format!("duplicate rank {rank} for ego {:?}", record[0].trim()),
                    ));
                }
                rows.push((ego, alter, rank));
                report.closeness_rows += 1;
            }
            Some(ClosenessTable::from_ranks(rows))
        }
        None => None,
    };

    report.nodes = attrs.node_count() as u64;
    report.edges = events.len() as u64;
    report.cohorts = attrs.cohorts.len() as u64;
    report.schools = attrs.schools.len() as u64;

    Ok((
        Dataset {
            events,
            attrs,
            id_map,
            closeness,
        },
        report,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn date_str(day: Day) -> String {
    date_from_day(day).format("%Y-%m-%d").to_string()
}

/// Writes a dataset back out in the exact schemas `load_bundle` consumes.
pub fn write_bundle(dataset: &Dataset, dir: &Path) -> Result<BundlePaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let attrs = &dataset.attrs;

    let path = dir.join("schools.csv");
    let mut w = create(&path)?;
    writeln!(
        w,
        "school_id,is_private,is_hbcu,is_womens,is_hispanic_serving,is_religious,is_commuter,greek_rate,class_size,grad_rate"
    )
    .map_err(|e| Error::io(&path, e))?;
    for s in &attrs.schools {
        let c = &s.covariates;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            s.raw_id,
            c.is_private as u8,
            c.is_hbcu as u8,
            c.is_womens as u8,
            c.is_hispanic_serving as u8,
            c.is_religious as u8,
            c.is_commuter as u8,
            c.greek_rate,
            c.class_size,
            c.grad_rate
        )
        .map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("cohorts.csv");
    let mut w = create(&path)?;
    writeln!(w, "school_id,entry_year,start_date").map_err(|e| Error::io(&path, e))?;
    for c in &attrs.cohorts {
        writeln!(
            w,
            "{},{},{}",
            attrs.schools[c.key.school.index()].raw_id,
            c.key.entry_year,
            date_str(c.start_day)
        )
        .map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("attributes.csv");
    let mut w = create(&path)?;
    writeln!(w, "node_id,school_id,entry_year,gender,major,hometown")
        .map_err(|e| Error::io(&path, e))?;
    for i in 0..attrs.node_count() {
        let unknown_to_empty = |dict: &crate::graph::CategoryDict, v: u32| {
            if v == crate::graph::UNKNOWN_CATEGORY {
                String::new()
            } else {
                dict.name(v).to_owned()
            }
        };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            dataset.id_map.raw(NodeId(i as u32)),
            attrs.schools[attrs.school[i].index()].raw_id,
            attrs.entry_year[i],
            unknown_to_empty(&attrs.gender_dict, attrs.gender[i]),
            unknown_to_empty(&attrs.major_dict, attrs.major[i]),
            unknown_to_empty(&attrs.hometown_dict, attrs.hometown[i]),
        )
        .map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("edges.csv");
    let mut w = create(&path)?;
    writeln!(w, "src_id,dst_id,date").map_err(|e| Error::io(&path, e))?;
    for e in dataset.events.iter() {
        writeln!(
            w,
            "{},{},{}",
            dataset.id_map.raw(e.u),
            dataset.id_map.raw(e.v),
            date_str(e.t)
        )
        .map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let closeness_path = if let Some(table) = &dataset.closeness {
        let path = dir.join("closeness.csv");
        let mut w = create(&path)?;
        writeln!(w, "ego_id,alter_id,rank").map_err(|e| Error::io(&path, e))?;
        for (ego, alter, rank) in table.rows() {
            writeln!(
                w,
                "{},{},{}",
                dataset.id_map.raw(ego),
                dataset.id_map.raw(alter),
                rank
            )
            .map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Some(path)
    } else {
        None
    };

    Ok(BundlePaths {
        edges: dir.join("edges.csv"),
        attributes: dir.join("attributes.csv"),
        cohorts: dir.join("cohorts.csv"),
        schools: dir.join("schools.csv"),
        closeness: closeness_path,
    })
}
