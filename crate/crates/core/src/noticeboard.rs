//! In-process publish/subscribe board through which every component talks.
//!
//! A command is written once and read by everyone who needs it, so there is
//! no broadcast. The board also keeps the message accounting:
//!
//! * `publishes`: one per board write,
//! * `paired_reads`: one per (message, distinct reader) pair,
//! * `probe_exchanges`: one per controller/switch query-and-reply,
//! * `total_messages = publishes + probe_exchanges`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ControllerId, SwitchId};

#[derive(Debug, Error)]
pub enum BoardError {
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error("round {0} has not finished")]
    RoundNotFinished(u64),
    #[error("malformed payload on {topic} (seq {seq}): {source}")]
    Payload {
        topic: Topic,
        seq: u64,
        #[source]
        source: serde_json::Error,
    },
    #[error("could not serialize payload: {0}")]
    Encode(#[source] serde_json::Error),
    #[error("audit log write failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    PolicyAssignments,
    TrustCommands,
    RatingsSubmissions,
    AggregatedRatings,
    TrustReports,
    Verdicts,
}

impl Topic {
    pub const ALL: [Topic; 6] = [
        Topic::PolicyAssignments,
        Topic::TrustCommands,
        Topic::RatingsSubmissions,
        Topic::AggregatedRatings,
        Topic::TrustReports,
        Topic::Verdicts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Topic::PolicyAssignments => "policy_assignments",
            Topic::TrustCommands => "trust_commands",
            Topic::RatingsSubmissions => "ratings_submissions",
            Topic::AggregatedRatings => "aggregated_ratings",
            Topic::TrustReports => "trust_reports",
            Topic::Verdicts => "verdicts",
        }
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topic {
    type Err = BoardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topic::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| BoardError::UnknownTopic(s.to_string()))
    }
}

/// Who wrote or read a message.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Component {
    PolicyDistributor,
    TrustCollector,
    Administrator,
    Controller(ControllerId),
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::PolicyDistributor => f.write_str("policy_distributor"),
            Component::TrustCollector => f.write_str("trust_collector"),
            Component::Administrator => f.write_str("administrator"),
            Component::Controller(id) => write!(f, "{id}"),
        }
    }
}

impl From<Component> for String {
    fn from(c: Component) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Component {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        match s.as_str() {
            "policy_distributor" => Ok(Component::PolicyDistributor),
            "trust_collector" => Ok(Component::TrustCollector),
            "administrator" => Ok(Component::Administrator),
            other => other
                .parse()
                .map(Component::Controller)
                .map_err(|e| e.to_string()),
        }
    }
}

impl From<ControllerId> for Component {
    fn from(id: ControllerId) -> Self {
        Component::Controller(id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardMessage {
    pub seq: u64,
    pub topic: Topic,
    pub sender: Component,
    pub round: u64,
    pub payload: serde_json::Value,
}

impl BoardMessage {
    pub fn decode<T: DeserializeOwned>(&self) -> Result<T, BoardError> {
        T::deserialize(&self.payload).map_err(|source| BoardError::Payload {
            topic: self.topic,
            seq: self.seq,
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageMetrics {
    pub publishes: u64,
    pub paired_reads: u64,
    pub probe_exchanges: u64,
    pub total_messages: u64,
}

impl MessageMetrics {
    fn seal(mut self) -> Self {
        self.total_messages = self.publishes + self.probe_exchanges;
        self
    }
}

#[derive(Default)]
struct BoardState {
    log: Vec<BoardMessage>,
    per_round: BTreeMap<u64, MessageMetrics>,
    seen: HashSet<(u64, Component)>,
    finished: BTreeSet<u64>,
}

/// The shared board. All methods take `&self`; a single internal lock makes
/// publishes totally ordered.
#[derive(Default)]
pub struct Noticeboard {
    state: Mutex<BoardState>,
}

impl Noticeboard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn publish<T: Serialize + ?Sized>(
        &self,
        topic: Topic,
        sender: impl Into<Component>,
        round: u64,
        payload: &T,
    ) -> Result<u64, BoardError> {
        let payload = serde_json::to_value(payload).map_err(BoardError::Encode)?;
        Ok(self.publish_value(topic, sender.into(), round, payload))
    }

    /// Publish addressed by topic name, for callers holding untyped input.
    pub fn publish_named<T: Serialize + ?Sized>(
        &self,
        topic: &str,
        sender: impl Into<Component>,
        round: u64,
        payload: &T,
    ) -> Result<u64, BoardError> {
        self.publish(topic.parse()?, sender, round, payload)
    }

    fn publish_value(
        &self,
        topic: Topic,
        sender: Component,
        round: u64,
        payload: serde_json::Value,
    ) -> u64 {
        let mut st = self.lock();
        let seq = st.log.len() as u64 + 1;
        st.log.push(BoardMessage {
            seq,
            topic,
            sender,
            round,
            payload,
        });
        st.per_round.entry(round).or_default().publishes += 1;
        seq
    }

    /// Messages on `topic` with `seq > after_seq`, in order.
    pub fn poll(
        &self,
        topic: Topic,
        reader: impl Into<Component>,
        after_seq: u64,
    ) -> Vec<BoardMessage> {
        let reader = reader.into();
        let mut st = self.lock();
        let found: Vec<BoardMessage> = st
            .log
            .iter()
            .skip(after_seq as usize)
            .filter(|m| m.topic == topic)
            .cloned()
            .collect();
        for m in &found {
            if st.seen.insert((m.seq, reader.clone())) {
                st.per_round.entry(m.round).or_default().paired_reads += 1;
            }
        }
        found
    }

    pub fn record_probe(&self, round: u64, _controller: ControllerId, _switch: SwitchId) {
        self.lock().per_round.entry(round).or_default().probe_exchanges += 1;
    }

    pub fn finish_round(&self, round: u64) {
        self.lock().finished.insert(round);
    }

    pub fn snapshot_metrics(&self, round: u64) -> Result<MessageMetrics, BoardError> {
        let st = self.lock();
        if !st.finished.contains(&round) {
            return Err(BoardError::RoundNotFinished(round));
        }
        Ok(st.per_round.get(&round).copied().unwrap_or_default().seal())
    }

    /// Counters so far, whether or not the round has finished.
    pub fn live_metrics(&self, round: u64) -> MessageMetrics {
        self.lock()
            .per_round
            .get(&round)
            .copied()
            .unwrap_or_default()
            .seal()
    }

    pub fn latest_seq(&self) -> u64 {
        self.lock().log.len() as u64
    }

    pub fn messages(&self) -> Vec<BoardMessage> {
        self.lock().log.clone()
    }

    /// Writes the complete log as JSON lines: `{seq, topic, sender, round, payload}`.
    pub fn write_audit_log<W: Write>(&self, mut out: W) -> Result<(), BoardError> {
        let st = self.lock();
        for m in &st.log {
            serde_json::to_writer(&mut out, m).map_err(BoardError::Encode)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, BoardState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Per-reader, per-topic read position.
#[derive(Debug, Clone, Default)]
pub struct Cursor {
    positions: BTreeMap<Topic, u64>,
}

impl Cursor {
    /// Polls everything new on `topic` and advances the position.
    pub fn poll(
        &mut self,
        board: &Noticeboard,
        topic: Topic,
        reader: impl Into<Component>,
    ) -> Vec<BoardMessage> {
        let pos = self.positions.entry(topic).or_insert(0);
        let msgs = board.poll(topic, reader, *pos);
        if let Some(last) = msgs.last() {
            *pos = last.seq;
        }
        msgs
    }
}
