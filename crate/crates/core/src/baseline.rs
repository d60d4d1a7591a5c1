//! Empirical baseline ingestion.
//!
//! Two UTF-8 CSV inputs are accepted, both with a mandatory header row:
//!
//! * `community,user,count`: comments per (community, user), already counted.
//!   Repeated pairs are summed. A `community,user` header (no count column)
//!   switches to counting mode, where every row is one comment.
//! * `community,size`: pre-aggregated active-member counts.
//!
//! A user is an active member of a community with at least `min_comments`
//! comments there. Communities above `size_cap` are dropped when
//! `exclude_above_cap` is set.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

use crate::population::SizeDistribution;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("unexpected header {found:?}: expected {expected}")]
    Header { found: String, expected: &'static str },
    #[error("line {line}: duplicate community `{key}`")]
    DuplicateCommunity { key: String, line: u64 },
    #[error("invalid baseline config: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl BaselineError {
    /// True for malformed input, false for well-formed input that fails a
    /// rule (duplicates, bad config).
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            BaselineError::Parse { .. } | BaselineError::Header { .. } | BaselineError::Io(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BaselineConfig {
    pub min_comments: u64,
    pub size_cap: u32,
    pub exclude_above_cap: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            min_comments: 5,
            size_cap: 9000,
            exclude_above_cap: true,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if self.min_comments == 0 {
            return Err(BaselineError::Config("min_comments must be >= 1".into()));
        }
        if self.size_cap == 0 {
            return Err(BaselineError::Config("size_cap must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentEvent {
    pub community_key: String,
    pub user_key: String,
    pub count: u64,
}

impl CommentEvent {
    pub fn new(community: &str, user: &str, count: u64) -> Self {
        Self {
            community_key: community.to_string(),
            user_key: user.to_string(),
            count,
        }
    }
}

/// Community sizes keyed by community, ascending by key.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct BaselineSizes {
    pub communities: Vec<(String, u32)>,
    /// Communities dropped by the size cap, with their sizes.
    pub excluded: Vec<(String, u32)>,
}

impl BaselineSizes {
    pub fn distribution(&self) -> SizeDistribution {
        SizeDistribution::new(self.communities.iter().map(|(_, s)| *s).collect())
    }

    fn from_map(map: BTreeMap<String, u32>, cfg: &BaselineConfig) -> Self {
        let mut out = BaselineSizes::default();
        for (key, size) in map {
            if cfg.exclude_above_cap && size > cfg.size_cap {
                out.excluded.push((key, size));
            } else {
                out.communities.push((key, size));
            }
        }
        out
    }

    /// CSV `community,size`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BaselineError> {
        let io = |e: csv::Error| BaselineError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["community", "size"]).map_err(io)?;
        for (key, size) in &self.communities {
            w.write_record([key.as_str(), &size.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| BaselineError::Io(e.to_string()))
    }
}

/// Counts active members per community. Order of events does not matter.
pub fn aggregate_members<I>(events: I, cfg: &BaselineConfig) -> Result<BaselineSizes, BaselineError>
where
    I: IntoIterator<Item = CommentEvent>,
{
    cfg.validate()?;
    let mut counts: HashMap<String, HashMap<String, u64>> = HashMap::new();
    for ev in events {
        let users = counts.entry(ev.community_key).or_default();
        let c = users.entry(ev.user_key).or_insert(0);
        *c = c.saturating_add(ev.count);
    }
    let sizes = counts
        .into_iter()
        .map(|(community, users)| {
            let active = users.values().filter(|&&n| n >= cfg.min_comments).count();
            (community, u32::try_from(active).unwrap_or(u32::MAX))
        })
        .collect();
    Ok(BaselineSizes::from_map(sizes, cfg))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(input)
}

fn csv_error(e: csv::Error) -> BaselineError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Io(io) => BaselineError::Io(io.to_string()),
        _ => BaselineError::Parse {
            line,
            message: e.to_string(),
        },
    }
}

fn header_names<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<String>, BaselineError> {
    Ok(rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_ascii_lowercase())
        .collect())
}

/// Parses a comment-count file into events.
pub fn parse_events<R: Read>(input: R) -> Result<Vec<CommentEvent>, BaselineError> {
    const EXPECTED: &str = "`community,user,count` or `community,user`";
    let mut rdr = reader(input);
    let header = header_names(&mut rdr)?;
    let counting = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["community", "user", "count"] => false,
        ["community", "user"] => true,
        _ => {
            return Err(BaselineError::Header {
                found: header.join(","),
                expected: EXPECTED,
            })
        }
    };
    let mut events = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let community = &record[0];
        let user = &record[1];
        if community.is_empty() || user.is_empty() {
            return Err(BaselineError::Parse {
                line,
                message: "empty community or user".into(),
            });
        }
        let count = if counting {
            1
        } else {
            match record[2].parse::<u64>() {
                Ok(n) if n > 0 => n,
                _ => {
                    return Err(BaselineError::Parse {
                        line,
                        message: format!("count must be a positive integer, got `{}`", &record[2]),
                    })
                }
            }
        };
        events.push(CommentEvent::new(community, user, count));
    }
    Ok(events)
}

/// Reads and aggregates a comment-count file in one call.
pub fn load_events<R: Read>(input: R, cfg: &BaselineConfig) -> Result<BaselineSizes, BaselineError> {
    aggregate_members(parse_events(input)?, cfg)
}

/// Reads a `community,size` table.
pub fn parse_sizes<R: Read>(input: R, cfg: &BaselineConfig) -> Result<BaselineSizes, BaselineError> {
    cfg.validate()?;
    let mut rdr = reader(input);
    let header = header_names(&mut rdr)?;
    if header != ["community", "size"] {
        return Err(BaselineError::Header {
            found: header.join(","),
            expected: "`community,size`",
        });
    }
    let mut sizes = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let key = &record[0];
        if key.is_empty() {
            return Err(BaselineError::Parse {
                line,
                message: "empty community".into(),
            });
        }
        let size: u32 = record[1].parse().map_err(|_| BaselineError::Parse {
            line,
            message: format!("size must be a non-negative integer, got `{}`", &record[1]),
        })?;
        if sizes.insert(key.to_string(), size).is_some() {
            return Err(BaselineError::DuplicateCommunity {
                key: key.to_string(),
                line,
            });
        }
    }
    Ok(BaselineSizes::from_map(sizes, cfg))
}

pub fn load_sizes(path: &std::path::Path, cfg: &BaselineConfig) -> Result<BaselineSizes, BaselineError> {
    let file = std::fs::File::open(path)
        .map_err(|e| BaselineError::Io(format!("{}: {e}", path.display())))?;
    parse_sizes(file, cfg)
}
