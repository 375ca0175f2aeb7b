//! Streaming ingestion of data-dump XML into typed CSV and event logs.
//!
//! Dump files are a single root element wrapping millions of `<row .../>`
//! elements. The parser walks them one event at a time and keeps only
//! the attributes the pipeline needs, so peak memory stays flat no
//! matter how large the input is. Rows missing required attributes are
//! counted and skipped; the stream only fails when the skip fraction
//! crosses a quality threshold.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use chrono::NaiveDateTime;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use crate::event::{InteractionEvent, InteractionKind, UserId};
use crate::params::ModelParams;
use crate::sosim::{PostIndex, PostType, VoteEvent};

/// Entities the pipeline consumes from the dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityKind {
    Post,
    Comment,
    Vote,
    User,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Post => "post",
            EntityKind::Comment => "comment",
            EntityKind::Vote => "vote",
            EntityKind::User => "user",
        }
    }

    /// Attributes a row must carry to be retained.
    pub fn required_attributes(self) -> &'static [&'static str] {
        match self {
            EntityKind::Post => &["Id", "CreationDate", "PostTypeId", "OwnerUserId"],
            EntityKind::Comment => &["Id", "CreationDate", "UserId"],
            EntityKind::Vote => &["Id", "CreationDate", "VoteTypeId", "PostId"],
            EntityKind::User => &["Id"],
        }
    }

    /// Attributes retained when present but not demanded.
    pub fn optional_attributes(self) -> &'static [&'static str] {
        match self {
            EntityKind::Post => &["ParentId"],
            EntityKind::Comment => &[],
            EntityKind::Vote => &["UserId"],
            EntityKind::User => &["Reputation", "CreationDate"],
        }
    }

    /// Column order used for the CSV form of this entity.
    pub fn csv_columns(self) -> Vec<&'static str> {
        let mut columns = self.required_attributes().to_vec();
        columns.extend_from_slice(self.optional_attributes());
        columns
    }

    /// Accepted spellings per attribute; dumps write `Id` where older
    /// exports write `PostId`.
    fn aliases(attribute: &'static str) -> &'static [&'static str] {
        match attribute {
            "Id" => &["Id", "PostId", "CommentId", "VoteId"],
            other => std::slice::from_ref(Box::leak(Box::new(other))),
        }
    }
}

/// One retained dump row: the entity kind plus its kept attributes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DumpRecord {
    pub entity: EntityKind,
    pub attributes: BTreeMap<String, String>,
}

impl DumpRecord {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).map(String::as_str)
    }
}

impl PartialOrd for EntityKind {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EntityKind {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("xml stream error at byte {position}: {source}")]
    Xml {
        position: u64,
        source: quick_xml::Error,
    },
    #[error("attribute error at byte {position}: {source}")]
    Attr {
        position: u64,
        source: quick_xml::events::attributes::AttrError,
    },
    #[error(
        "ingest quality below threshold: {skipped} of {rows} rows skipped \
         (limit {limit_percent}%)"
    )]
    QualityThreshold {
        rows: u64,
        skipped: u64,
        limit_percent: f64,
    },
    #[error("expected {expected:?} records, found {found:?}")]
    EntityMismatch {
        expected: EntityKind,
        found: EntityKind,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Counters describing one parse pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    /// `<row>` elements seen.
    pub rows: u64,
    /// Records emitted downstream.
    pub emitted: u64,
    /// Rows dropped for missing or empty required attributes.
    pub skipped: u64,
}

/// Skip-fraction gate applied at end of stream.
///
/// The fraction only becomes meaningful with volume, so files below
/// `min_rows` never trip the gate; their skip counts still surface in
/// the stats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityThreshold {
    pub max_skip_fraction: f64,
    pub min_rows: u64,
}

impl Default for QualityThreshold {
    fn default() -> Self {
        Self {
            max_skip_fraction: 0.01,
            min_rows: 1_000,
        }
    }
}

impl QualityThreshold {
    pub fn check(&self, stats: &IngestStats) -> Result<(), IngestError> {
        if stats.rows >= self.min_rows
            && (stats.skipped as f64) > self.max_skip_fraction * stats.rows as f64
        {
            return Err(IngestError::QualityThreshold {
                rows: stats.rows,
                skipped: stats.skipped,
                limit_percent: self.max_skip_fraction * 100.0,
            });
        }
        Ok(())
    }
}

/// Streaming parser over one dump file.
///
/// Yields retained records in file order; the buffer is reused between
/// rows. When the stream ends, the quality threshold is evaluated and a
/// violation surfaces as the final item.
pub struct DumpParser<R: BufRead> {
    reader: Reader<R>,
    entity: EntityKind,
    threshold: QualityThreshold,
    buffer: Vec<u8>,
    stats: IngestStats,
    done: bool,
}

impl<R: BufRead> DumpParser<R> {
    pub fn new(entity: EntityKind, input: R) -> Self {
        let mut reader = Reader::from_reader(input);
        reader.config_mut().trim_text(true);
        Self {
            reader,
            entity,
            threshold: QualityThreshold::default(),
            buffer: Vec::with_capacity(4096),
            stats: IngestStats::default(),
            done: false,
        }
    }

    pub fn with_threshold(mut self, threshold: QualityThreshold) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    fn extract(&mut self, element: &BytesStart<'_>) -> Result<Option<DumpRecord>, IngestError> {
        let position = self.reader.buffer_position();
        let mut found: HashMap<&str, String> = HashMap::new();
        for attr in element.attributes() {
            let attr = attr.map_err(|source| IngestError::Attr { position, source })?;
            let key = attr.key.as_ref();
            let wanted = self
                .entity
                .required_attributes()
                .iter()
                .chain(self.entity.optional_attributes())
                .find(|&&name| {
                    EntityKind::aliases(name)
                        .iter()
                        .any(|alias| alias.as_bytes() == key)
                });
            if let Some(&name) = wanted {
                let value = attr
                    .unescape_value()
                    .map_err(|source| IngestError::Xml { position, source })?;
                if !value.is_empty() {
                    found.entry(name).or_insert_with(|| value.into_owned());
                }
            }
        }
        for &required in self.entity.required_attributes() {
            if !found.contains_key(required) {
                return Ok(None);
            }
        }
        // Answers are only addressable through their parent question.
        if self.entity == EntityKind::Post
            && found.get("PostTypeId").map(String::as_str) == Some("2")
            && !found.contains_key("ParentId")
        {
            return Ok(None);
        }
        let attributes = found
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        Ok(Some(DumpRecord {
            entity: self.entity,
            attributes,
        }))
    }
}

impl<R: BufRead> Iterator for DumpParser<R> {
    type Item = Result<DumpRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.buffer.clear();
            let event = match self.reader.read_event_into(&mut self.buffer) {
                Ok(event) => event,
                Err(source) => {
                    self.done = true;
                    return Some(Err(IngestError::Xml {
                        position: self.reader.buffer_position(),
                        source,
                    }));
                }
            };
            match event {
                Event::Eof => {
                    self.done = true;
                    return match self.threshold.check(&self.stats) {
                        Ok(()) => None,
                        Err(e) => Some(Err(e)),
                    };
                }
                Event::Empty(ref element) | Event::Start(ref element)
                    if element.name().as_ref() == b"row" =>
                {
                    self.stats.rows += 1;
                    match self.extract(element) {
                        Ok(Some(record)) => {
                            self.stats.emitted += 1;
                            return Some(Ok(record));
                        }
                        Ok(None) => {
                            self.stats.skipped += 1;
                        }
                        Err(e) => {
                            self.done = true;
                            return Some(Err(e));
                        }
                    }
                }
                _ => {}
            }
        }
    }
}

/// Parses a dump stream into records.
pub fn parse_dump<R: BufRead>(entity: EntityKind, input: R) -> DumpParser<R> {
    DumpParser::new(entity, input)
}

/// Streams records into CSV with a fixed column order per entity.
///
/// Returns the number of data rows written, which equals the number of
/// records consumed.
pub fn convert_to_csv<I, W>(
    entity: EntityKind,
    records: I,
    output: W,
) -> Result<u64, IngestError>
where
    I: IntoIterator<Item = Result<DumpRecord, IngestError>>,
    W: Write,
{
    let columns = entity.csv_columns();
    let mut writer = csv::Writer::from_writer(output);
    writer.write_record(&columns)?;
    let mut count = 0;
    for record in records {
        let record = record?;
        if record.entity != entity {
            return Err(IngestError::EntityMismatch {
                expected: entity,
                found: record.entity,
            });
        }
        writer.write_record(columns.iter().map(|c| record.get(c).unwrap_or("")))?;
        count += 1;
    }
    writer.flush()?;
    Ok(count)
}

/// Reads records back from the CSV form written by [`convert_to_csv`].
///
/// Empty fields mean the attribute was absent.
pub fn parse_csv<R: std::io::Read>(
    entity: EntityKind,
    input: R,
) -> impl Iterator<Item = Result<DumpRecord, IngestError>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader
        .headers()
        .map(|h| h.iter().map(String::from).collect::<Vec<_>>());
    let mut header_error = headers.as_ref().err().is_some();
    let headers = headers.unwrap_or_default();
    reader.into_records().filter_map(move |row| {
        if header_error {
            header_error = false;
            return Some(Err(IngestError::Csv(csv::Error::from(
                std::io::Error::new(std::io::ErrorKind::InvalidData, "unreadable csv header"),
            ))));
        }
        match row {
            Err(e) => Some(Err(IngestError::Csv(e))),
            Ok(row) => {
                let attributes: BTreeMap<String, String> = headers
                    .iter()
                    .zip(row.iter())
                    .filter(|(_, value)| !value.is_empty())
                    .map(|(key, value)| (key.clone(), value.to_string()))
                    .collect();
                Some(Ok(DumpRecord { entity, attributes }))
            }
        }
    })
}

/// Parses dump timestamps: ISO-8601, optional fractional seconds, UTC.
pub fn parse_timestamp(text: &str) -> Option<i64> {
    NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S%.f")
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

/// Counters from event-log construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventLogAudit {
    pub posts_retained: u64,
    pub comments_retained: u64,
    /// Records without a usable author id.
    pub dropped_missing_user: u64,
    pub dropped_bad_timestamp: u64,
    /// Posts whose type maps to neither question nor answer.
    pub dropped_bad_kind: u64,
}

impl EventLogAudit {
    pub fn total_retained(&self) -> u64 {
        self.posts_retained + self.comments_retained
    }

    pub fn total_dropped(&self) -> u64 {
        self.dropped_missing_user + self.dropped_bad_timestamp + self.dropped_bad_kind
    }
}

/// Per-user, time-ordered interaction lists.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    events: HashMap<UserId, Vec<InteractionEvent>>,
    pub audit: EventLogAudit,
}

impl EventLog {
    /// Events for one user, sorted by time; empty when the user never
    /// interacted.
    pub fn user_events(&self, user: UserId) -> &[InteractionEvent] {
        self.events.get(&user).map(Vec::as_slice).unwrap_or(&[])
    }

    /// User ids present in the log, ascending.
    pub fn users(&self) -> Vec<UserId> {
        let mut users: Vec<UserId> = self.events.keys().copied().collect();
        users.sort_unstable();
        users
    }

    pub fn total_events(&self) -> usize {
        self.events.values().map(Vec::len).sum()
    }
}

fn record_id(record: &DumpRecord) -> u64 {
    record
        .get("Id")
        .and_then(|v| v.parse().ok())
        .unwrap_or(u64::MAX)
}

/// Merges posts and comments into per-user interaction lists.
///
/// Each list is sorted by timestamp, with ties broken by kind (questions,
/// then answers, then comments) and id so the order is stable across
/// runs. Records with a missing or unparsable author, timestamp, or post
/// type are dropped and counted.
pub fn build_event_log<P, C>(posts: P, comments: C, params: &ModelParams) -> Result<EventLog, IngestError>
where
    P: IntoIterator<Item = Result<DumpRecord, IngestError>>,
    C: IntoIterator<Item = Result<DumpRecord, IngestError>>,
{
    // (timestamp, kind, source id) is the stable sort key.
    let mut keyed: HashMap<UserId, Vec<(i64, InteractionKind, u64)>> = HashMap::new();
    let mut audit = EventLogAudit::default();

    for record in posts {
        let record = record?;
        let kind = match record.get("PostTypeId") {
            Some("1") => InteractionKind::Question,
            Some("2") => InteractionKind::Answer,
            _ => {
                audit.dropped_bad_kind += 1;
                continue;
            }
        };
        let Some(user) = record.get("OwnerUserId").and_then(|v| v.parse::<UserId>().ok()) else {
            audit.dropped_missing_user += 1;
            continue;
        };
        let Some(ts) = record.get("CreationDate").and_then(parse_timestamp) else {
            audit.dropped_bad_timestamp += 1;
            continue;
        };
        keyed.entry(user).or_default().push((ts, kind, record_id(&record)));
        audit.posts_retained += 1;
    }

    for record in comments {
        let record = record?;
        let Some(user) = record.get("UserId").and_then(|v| v.parse::<UserId>().ok()) else {
            audit.dropped_missing_user += 1;
            continue;
        };
        let Some(ts) = record.get("CreationDate").and_then(parse_timestamp) else {
            audit.dropped_bad_timestamp += 1;
            continue;
        };
        keyed
            .entry(user)
            .or_default()
            .push((ts, InteractionKind::Comment, record_id(&record)));
        audit.comments_retained += 1;
    }

    let events = keyed
        .into_iter()
        .map(|(user, mut list)| {
            list.sort_unstable();
            let events = list
                .into_iter()
                .map(|(ts, kind, _)| {
                    InteractionEvent::new(user, ts, kind, params.default_basic_value)
                })
                .collect();
            (user, events)
        })
        .collect();

    Ok(EventLog { events, audit })
}

/// Converts vote records into [`VoteEvent`]s sorted by time.
///
/// Unparsable rows are dropped and counted in the returned tally.
pub fn build_vote_log<I>(records: I) -> Result<(Vec<VoteEvent>, u64), IngestError>
where
    I: IntoIterator<Item = Result<DumpRecord, IngestError>>,
{
    let mut votes = Vec::new();
    let mut dropped = 0u64;
    for record in records {
        let record = record?;
        let parsed = (|| {
            let vote_id = record.get("Id")?.parse().ok()?;
            let post_id = record.get("PostId")?.parse().ok()?;
            let vote_type: u8 = record.get("VoteTypeId")?.parse().ok()?;
            let timestamp = record.get("CreationDate").and_then(parse_timestamp)?;
            Some(VoteEvent {
                vote_id,
                post_id,
                vote_type,
                timestamp,
            })
        })();
        match parsed {
            Some(vote) => votes.push(vote),
            None => dropped += 1,
        }
    }
    votes.sort_unstable_by_key(|v| (v.timestamp, v.vote_id));
    Ok((votes, dropped))
}

/// Builds the post index for vote routing from post records.
pub fn build_post_index<I>(records: I) -> Result<(PostIndex, u64), IngestError>
where
    I: IntoIterator<Item = Result<DumpRecord, IngestError>>,
{
    let mut index = PostIndex::new();
    let mut dropped = 0u64;
    for record in records {
        let record = record?;
        let parsed = (|| {
            let post_id = record.get("Id")?.parse().ok()?;
            let author: UserId = record.get("OwnerUserId")?.parse().ok()?;
            let post_type = match record.get("PostTypeId")? {
                "1" => PostType::Question,
                "2" => PostType::Answer,
                _ => return None,
            };
            Some((post_id, author, post_type))
        })();
        match parsed {
            Some((post_id, author, post_type)) => index.insert(post_id, author, post_type),
            None => dropped += 1,
        }
    }
    Ok((index, dropped))
}

/// Reads the dump's own reputation snapshot from user records.
pub fn build_reputation_snapshot<I>(records: I) -> Result<(HashMap<UserId, i64>, u64), IngestError>
where
    I: IntoIterator<Item = Result<DumpRecord, IngestError>>,
{
    let mut snapshot = HashMap::new();
    let mut dropped = 0u64;
    for record in records {
        let record = record?;
        let parsed = (|| {
            let user: UserId = record.get("Id")?.parse().ok()?;
            let reputation: i64 = record.get("Reputation")?.parse().ok()?;
            Some((user, reputation))
        })();
        match parsed {
            Some((user, reputation)) => {
                snapshot.insert(user, reputation);
            }
            None => dropped += 1,
        }
    }
    Ok((snapshot, dropped))
}
