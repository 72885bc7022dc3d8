//! Search-log wire format and session assembly.
//!
//! One record per line, tab-separated, four record types distinguished by
//! the third field:
//!
//! ```text
//! M: SessionID  Day         M  UserID  SwitchType        session metadata
//! Q: SessionID  TimePassed  Q  SERPID  QueryID  url,...  query + shown results
//! C: SessionID  TimePassed  C  SERPID  URLID             click
//! S: SessionID  TimePassed  S                            switch action
//! ```
//!
//! A session's records are contiguous in the file and start with its `M`
//! record. `ListOfURLs` is comma-separated, top result first. Input may be
//! plain text or gzip (by `.gz` extension), UTF-8 with LF line endings.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use thiserror::Error;

use crate::model::Label;

/// Per-session switch indicator: none, SERP-monitored, toolbar-monitored,
/// or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SwitchType {
    N,
    P,
    B,
    H,
}

impl SwitchType {
    pub const ALL: [SwitchType; 4] = [SwitchType::N, SwitchType::P, SwitchType::B, SwitchType::H];

    pub fn as_str(self) -> &'static str {
        match self {
            SwitchType::N => "N",
            SwitchType::P => "P",
            SwitchType::B => "B",
            SwitchType::H => "H",
        }
    }
}

impl std::fmt::Display for SwitchType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SwitchType {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, RecordError> {
        match s {
            "N" => Ok(SwitchType::N),
            "P" => Ok(SwitchType::P),
            "B" => Ok(SwitchType::B),
            "H" => Ok(SwitchType::H),
            other => Err(RecordError::UnknownSwitchType(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetadataRecord {
    pub session_id: u64,
    pub day: u64,
    pub user_id: u64,
    pub switch_type: SwitchType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryEvent {
    pub time_passed: u64,
    pub serp_id: u64,
    pub query_id: u64,
    pub urls: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClickEvent {
    pub time_passed: u64,
    pub serp_id: u64,
    pub url_id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwitchEvent {
    pub time_passed: u64,
}

/// One parsed log line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogRecord {
    Metadata(MetadataRecord),
    Query { session_id: u64, event: QueryEvent },
    Click { session_id: u64, event: ClickEvent },
    Switch { session_id: u64, event: SwitchEvent },
}

impl LogRecord {
    pub fn session_id(&self) -> u64 {
        match self {
            LogRecord::Metadata(m) => m.session_id,
            LogRecord::Query { session_id, .. }
            | LogRecord::Click { session_id, .. }
            | LogRecord::Switch { session_id, .. } => *session_id,
        }
    }
}

/// A session event after assembly (session id lifted to the session).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionEvent {
    Query(QueryEvent),
    Click(ClickEvent),
    Switch(SwitchEvent),
}

impl SessionEvent {
    pub fn time_passed(&self) -> u64 {
        match self {
            SessionEvent::Query(e) => e.time_passed,
            SessionEvent::Click(e) => e.time_passed,
            SessionEvent::Switch(e) => e.time_passed,
        }
    }

    pub fn type_letter(&self) -> char {
        match self {
            SessionEvent::Query(_) => 'Q',
            SessionEvent::Click(_) => 'C',
            SessionEvent::Switch(_) => 'S',
        }
    }
}

/// A fully assembled session: metadata plus its time-ordered events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub session_id: u64,
    pub day: u64,
    pub user_id: u64,
    pub switch_type: SwitchType,
    /// Sorted by `time_passed`, original file order preserved on ties.
    pub events: Vec<SessionEvent>,
    /// Clicks whose SERP id matched no preceding query (kept, not dropped).
    pub unmatched_clicks: u32,
}

impl Session {
    pub fn queries(&self) -> impl Iterator<Item = &QueryEvent> {
        self.events.iter().filter_map(|e| match e {
            SessionEvent::Query(q) => Some(q),
            _ => None,
        })
    }

    pub fn clicks(&self) -> impl Iterator<Item = &ClickEvent> {
        self.events.iter().filter_map(|e| match e {
            SessionEvent::Click(c) => Some(c),
            _ => None,
        })
    }

    /// Copy with all switch evidence removed: no `S` events and the switch
    /// type reset to `N`. What a test-period session looks like.
    pub fn without_switch_data(&self) -> Session {
        Session {
            session_id: self.session_id,
            day: self.day,
            user_id: self.user_id,
            switch_type: SwitchType::N,
            events: self
                .events
                .iter()
                .filter(|e| !matches!(e, SessionEvent::Switch(_)))
                .cloned()
                .collect(),
            unmatched_clicks: self.unmatched_clicks,
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing and formatting
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecordError {
    #[error("expected {expected} fields for record type {record_type}, got {got}")]
    FieldCount {
        record_type: char,
        expected: usize,
        got: usize,
    },
    #[error("line has fewer than 3 fields")]
    TooFewFields,
    #[error("unknown record type {0:?}")]
    UnknownRecordType(String),
    #[error("unknown switch type {0:?}")]
    UnknownSwitchType(String),
    #[error("field {field} is not a valid integer: {value:?}")]
    Int { field: &'static str, value: String },
    #[error("day {0} outside 1..=30")]
    InvalidDay(u64),
    #[error("query record has an empty url list")]
    EmptyUrlList,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: u64,
        #[source]
        source: RecordError,
    },
    #[error("orphan event for session {session_id}: no preceding metadata record")]
    OrphanEvent { session_id: u64 },
}

fn parse_int(field: &'static str, value: &str) -> Result<u64, RecordError> {
    // Only canonical decimal (no sign, no leading zeros except "0") so that
    // parse/format round-trips byte-for-byte.
    if value.is_empty()
        || !value.bytes().all(|b| b.is_ascii_digit())
        || (value.len() > 1 && value.starts_with('0'))
    {
        return Err(RecordError::Int {
            field,
            value: value.to_string(),
        });
    }
    value.parse().map_err(|_| RecordError::Int {
        field,
        value: value.to_string(),
    })
}

/// Parses one log line into its typed record.
pub fn parse_record(line: &str) -> Result<LogRecord, RecordError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 3 {
        return Err(RecordError::TooFewFields);
    }
    let expect = |record_type: char, expected: usize| -> Result<(), RecordError> {
        if fields.len() == expected {
            Ok(())
        } else {
            Err(RecordError::FieldCount {
                record_type,
                expected,
                got: fields.len(),
            })
        }
    };
    match fields[2] {
        "M" => {
            expect('M', 5)?;
            let day = parse_int("Day", fields[1])?;
            if !(1..=30).contains(&day) {
                return Err(RecordError::InvalidDay(day));
            }
            Ok(LogRecord::Metadata(MetadataRecord {
                session_id: parse_int("SessionID", fields[0])?,
                day,
                user_id: parse_int("UserID", fields[3])?,
                switch_type: fields[4].parse()?,
            }))
        }
        "Q" => {
            expect('Q', 6)?;
            let urls = fields[5]
                .split(',')
                .map(|u| parse_int("URLID", u))
                .collect::<Result<Vec<u64>, _>>()?;
            if urls.is_empty() {
                return Err(RecordError::EmptyUrlList);
            }
            Ok(LogRecord::Query {
                session_id: parse_int("SessionID", fields[0])?,
                event: QueryEvent {
                    time_passed: parse_int("TimePassed", fields[1])?,
                    serp_id: parse_int("SERPID", fields[3])?,
                    query_id: parse_int("QueryID", fields[4])?,
                    urls,
                },
            })
        }
        "C" => {
            expect('C', 5)?;
            Ok(LogRecord::Click {
                session_id: parse_int("SessionID", fields[0])?,
                event: ClickEvent {
                    time_passed: parse_int("TimePassed", fields[1])?,
                    serp_id: parse_int("SERPID", fields[3])?,
                    url_id: parse_int("URLID", fields[4])?,
                },
            })
        }
        "S" => {
            expect('S', 3)?;
            Ok(LogRecord::Switch {
                session_id: parse_int("SessionID", fields[0])?,
                event: SwitchEvent {
                    time_passed: parse_int("TimePassed", fields[1])?,
                },
            })
        }
        other => Err(RecordError::UnknownRecordType(other.to_string())),
    }
}

/// Renders a record as one log line (no trailing newline). Inverse of
/// [`parse_record`] for well-formed input.
pub fn format_record(record: &LogRecord) -> String {
    match record {
        LogRecord::Metadata(m) => format!(
            "{}\t{}\tM\t{}\t{}",
            m.session_id, m.day, m.user_id, m.switch_type
        ),
        LogRecord::Query { session_id, event } => {
            let urls = event
                .urls
                .iter()
                .map(|u| u.to_string())
                .collect::<Vec<_>>()
                .join(",");
            format!(
                "{}\t{}\tQ\t{}\t{}\t{}",
                session_id, event.time_passed, event.serp_id, event.query_id, urls
            )
        }
        LogRecord::Click { session_id, event } => format!(
            "{}\t{}\tC\t{}\t{}",
            session_id, event.time_passed, event.serp_id, event.url_id
        ),
        LogRecord::Switch { session_id, event } => {
            format!("{}\t{}\tS", session_id, event.time_passed)
        }
    }
}

/// Line-by-line record reader. Strict by default; in permissive mode
/// malformed lines are counted and skipped instead of failing the stream.
pub struct LogReader<R: BufRead> {
    lines: io::Lines<R>,
    line_no: u64,
    permissive: bool,
    skipped: u64,
}

impl<R: BufRead> LogReader<R> {
    pub fn new(input: R) -> Self {
        LogReader {
            lines: input.lines(),
            line_no: 0,
            permissive: false,
            skipped: 0,
        }
    }

    pub fn permissive(mut self, enabled: bool) -> Self {
        self.permissive = enabled;
        self
    }

    /// Malformed lines skipped so far (permissive mode only).
    pub fn skipped(&self) -> u64 {
        self.skipped
    }
}

impl<R: BufRead> Iterator for LogReader<R> {
    type Item = Result<LogRecord, LogError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(LogError::Io(e))),
            };
            self.line_no += 1;
            match parse_record(&line) {
                Ok(record) => return Some(Ok(record)),
                Err(_) if self.permissive => {
                    self.skipped += 1;
                    continue;
                }
                Err(source) => {
                    return Some(Err(LogError::Parse {
                        line: self.line_no,
                        source,
                    }))
                }
            }
        }
    }
}

/// Streams sessions out of a record stream: one session per metadata record,
/// bounded memory (one open session at a time). Events are attached to the
/// session opened by the closest preceding metadata record and sorted by
/// time; an event without one is an orphan error.
pub struct SessionAssembler<I> {
    records: I,
    current: Option<Session>,
    poisoned: bool,
    finished: bool,
}

pub fn assemble_sessions<I>(records: I) -> SessionAssembler<I::IntoIter>
where
    I: IntoIterator<Item = Result<LogRecord, LogError>>,
{
    SessionAssembler {
        records: records.into_iter(),
        current: None,
        poisoned: false,
        finished: false,
    }
}

fn finish_session(mut session: Session) -> Session {
    session.events.sort_by_key(SessionEvent::time_passed);
    let mut serps_seen = HashSet::new();
    let mut unmatched = 0u32;
    for event in &session.events {
        match event {
            SessionEvent::Query(q) => {
                serps_seen.insert(q.serp_id);
            }
            SessionEvent::Click(c) => {
                if !serps_seen.contains(&c.serp_id) {
                    unmatched += 1;
                }
            }
            SessionEvent::Switch(_) => {}
        }
    }
    session.unmatched_clicks = unmatched;
    session
}

impl<I> Iterator for SessionAssembler<I>
where
    I: Iterator<Item = Result<LogRecord, LogError>>,
{
    type Item = Result<Session, LogError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.poisoned || self.finished {
            return None;
        }
        loop {
            match self.records.next() {
                None => {
                    self.finished = true;
                    return self.current.take().map(|s| Ok(finish_session(s)));
                }
                Some(Err(e)) => {
                    self.poisoned = true;
                    return Some(Err(e));
                }
                Some(Ok(LogRecord::Metadata(m))) => {
                    let next = Session {
                        session_id: m.session_id,
                        day: m.day,
                        user_id: m.user_id,
                        switch_type: m.switch_type,
                        events: Vec::new(),
                        unmatched_clicks: 0,
                    };
                    if let Some(done) = self.current.replace(next) {
                        return Some(Ok(finish_session(done)));
                    }
                }
                Some(Ok(record)) => {
                    let session_id = record.session_id();
                    let event = match record {
                        LogRecord::Query { event, .. } => SessionEvent::Query(event),
                        LogRecord::Click { event, .. } => SessionEvent::Click(event),
                        LogRecord::Switch { event, .. } => SessionEvent::Switch(event),
                        LogRecord::Metadata(_) => unreachable!(),
                    };
                    match self.current.as_mut() {
                        Some(s) if s.session_id == session_id => s.events.push(event),
                        _ => {
                            self.poisoned = true;
                            return Some(Err(LogError::OrphanEvent { session_id }));
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

/// How a session's switch type maps onto a binary training label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Positive iff the session switched at all (P, B or H).
    Binary,
    /// Positive iff the session switched via the target channel. Blended
    /// sessions (H) count as positive for both the B and the P target.
    OneVsRest(SwitchType),
}

pub fn session_label(session: &Session, mode: LabelMode) -> Label {
    let st = session.switch_type;
    let positive = match mode {
        LabelMode::Binary => st != SwitchType::N,
        LabelMode::OneVsRest(SwitchType::B) => st == SwitchType::B || st == SwitchType::H,
        LabelMode::OneVsRest(SwitchType::P) => st == SwitchType::P || st == SwitchType::H,
        LabelMode::OneVsRest(target) => st == target,
    };
    if positive {
        Label::Switch
    } else {
        Label::NoSwitch
    }
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

/// Opens a log file for reading, transparently decompressing `.gz`.
pub fn open_log(path: &Path) -> io::Result<Box<dyn BufRead>> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Reads and assembles a whole log file into memory.
pub fn read_sessions(path: &Path) -> Result<Vec<Session>, LogError> {
    let reader = LogReader::new(open_log(path)?);
    assemble_sessions(reader).collect()
}
