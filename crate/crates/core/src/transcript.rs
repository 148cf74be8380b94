//! Self-contained public record of a session, and the auditor that
//! re-decides it from the record alone.
//!
//! The JSON document has a header (format version, group, encoded public
//! parameters, session setup), the ordered list of broadcast messages with
//! phase tags and sequence numbers, the verifier's client verdicts and the
//! session outcome. Binary fields are base64 of their canonical encodings.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;

use crate::dp_params::check_field_guard;
use crate::group::{GroupId, PrimeGroup, PublicParams, ScalarField};
use crate::party::PartyId;
use crate::protocol::{Message, Phase, Rejection, SessionOutcome, SessionSetup, Stage, Verifier};
use crate::shares::{ClientVerdict, RejectReason};
use crate::with_group;

pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub seq: u64,
    pub phase: Phase,
    pub from: PartyId,
    pub body: String,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictRecord {
    pub client: u64,
    pub verdict: ClientVerdict,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateRecord {
    pub bin: u32,
    /// base64 scalar encoding of the noisy sum.
    pub y: String,
    pub estimate: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OutcomeRecord {
    Accepted {
        aggregates: Vec<AggregateRecord>,
        excluded_clients: Vec<u64>,
    },
    Rejected(Rejection),
}

impl OutcomeRecord {
    pub fn from_outcome<S: ScalarField>(o: &SessionOutcome<S>) -> Self {
        match o {
            SessionOutcome::Accepted {
                aggregates,
                excluded_clients,
            } => OutcomeRecord::Accepted {
                aggregates: aggregates
                    .iter()
                    .map(|a| AggregateRecord {
                        bin: a.bin,
                        y: B64.encode(a.y.encode()),
                        estimate: a.estimate,
                    })
                    .collect(),
                excluded_clients: excluded_clients.clone(),
            },
            SessionOutcome::Rejected(r) => OutcomeRecord::Rejected(r.clone()),
        }
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        match self {
            OutcomeRecord::Rejected(r) => Some(r),
            OutcomeRecord::Accepted { .. } => None,
        }
    }

    /// Centered estimates per bin of an accepted session.
    pub fn estimates(&self) -> Option<Vec<i64>> {
        match self {
            OutcomeRecord::Accepted { aggregates, .. } => Some(aggregates.iter().map(|a| a.estimate).collect()),
            OutcomeRecord::Rejected(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionTranscript {
    pub version: u32,
    pub group: GroupId,
    pub public_params: String,
    pub setup: SessionSetup,
    pub messages: Vec<Envelope>,
    pub client_verdicts: Vec<VerdictRecord>,
    pub outcome: OutcomeRecord,
}

impl serde::Serialize for GroupId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> serde::Deserialize<'de> for GroupId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl SessionTranscript {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("transcript serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, MalformedTranscript> {
        serde_json::from_str(text).map_err(|e| MalformedTranscript(format!("invalid transcript: {e}")))
    }
}

/// Append-only log kept by whoever relays the broadcast.
pub struct TranscriptLog<G: PrimeGroup> {
    pp: PublicParams<G>,
    setup: SessionSetup,
    messages: Vec<Envelope>,
}

impl<G: PrimeGroup> TranscriptLog<G> {
    pub fn new(pp: PublicParams<G>, setup: SessionSetup) -> Self {
        TranscriptLog {
            pp,
            setup,
            messages: Vec::new(),
        }
    }

    pub fn record(&mut self, msg: &Message<G>) {
        self.messages.push(Envelope {
            seq: self.messages.len() as u64,
            phase: msg.phase(),
            from: msg.sender(),
            body: B64.encode(msg.encode_body()),
        });
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn finish(self, verdicts: &[(u64, ClientVerdict)], outcome: &SessionOutcome<G::Scalar>) -> SessionTranscript {
        SessionTranscript {
            version: TRANSCRIPT_VERSION,
            group: G::ID,
            public_params: B64.encode(self.pp.encode()),
            setup: self.setup,
            messages: self.messages,
            client_verdicts: verdicts
                .iter()
                .map(|(client, verdict)| VerdictRecord {
                    client: *client,
                    verdict: verdict.clone(),
                })
                .collect(),
            outcome: OutcomeRecord::from_outcome(outcome),
        }
    }
}

/// The document cannot be interpreted at all (as opposed to describing a
/// session that fails its checks).
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
#[error("{0}")]
pub struct MalformedTranscript(pub String);

/// Where the published record disagrees with the recomputation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordMismatch {
    ClientVerdicts,
    Outcome,
}

impl RecordMismatch {
    fn rejection(self) -> Rejection {
        let detail = match self {
            RecordMismatch::ClientVerdicts => "client verdicts differ from the recomputed ones",
            RecordMismatch::Outcome => "published outcome differs from the recomputed one",
        };
        Rejection {
            stage: Stage::Record,
            blame: PartyId::Verifier,
            detail: detail.to_string(),
        }
    }
}

/// Result of re-deciding a transcript.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    /// Outcome recomputed from the messages alone.
    pub recomputed: OutcomeRecord,
    pub record_mismatch: Option<RecordMismatch>,
    pub client_verdicts: Vec<VerdictRecord>,
}

impl AuditReport {
    /// Final verdict. Wrong client verdicts are reported first, since they
    /// change every downstream check; then a recomputed rejection; then an
    /// outcome mismatch. Record mismatches are blamed on the verifier, who
    /// published the record.
    pub fn verdict(&self) -> Result<&OutcomeRecord, Rejection> {
        if self.record_mismatch == Some(RecordMismatch::ClientVerdicts) {
            return Err(RecordMismatch::ClientVerdicts.rejection());
        }
        if let Some(r) = self.recomputed.rejection() {
            return Err(r.clone());
        }
        match self.record_mismatch {
            Some(m) => Err(m.rejection()),
            None => Ok(&self.recomputed),
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.verdict().is_ok()
    }
}

/// Parses and re-decides a transcript document.
pub fn verify_session_json(text: &str) -> Result<AuditReport, MalformedTranscript> {
    verify_session(&SessionTranscript::from_json(text)?)
}

/// Recomputes every check from the transcript alone.
pub fn verify_session(t: &SessionTranscript) -> Result<AuditReport, MalformedTranscript> {
    if t.version != TRANSCRIPT_VERSION {
        return Err(MalformedTranscript(format!("unsupported transcript version {}", t.version)));
    }
    with_group!(t.group, G => verify_typed::<G>(t))
}

fn stage_of(phase: Phase) -> Stage {
    match phase {
        Phase::Client => Stage::Clients,
        Phase::BitCommit => Stage::BitCommit,
        Phase::MorraCommit | Phase::MorraReveal => Stage::Morra,
        Phase::Output => Stage::Output,
    }
}

fn verify_typed<G: PrimeGroup>(t: &SessionTranscript) -> Result<AuditReport, MalformedTranscript> {
    let pp_bytes = B64
        .decode(&t.public_params)
        .map_err(|e| MalformedTranscript(format!("public parameters: {e}")))?;
    let pp = PublicParams::<G>::decode(&pp_bytes).map_err(|e| MalformedTranscript(format!("public parameters: {e}")))?;
    let setup = &t.setup;
    setup
        .privacy
        .validate()
        .map_err(|e| MalformedTranscript(format!("privacy parameters: {e}")))?;
    if setup.provers == 0 || setup.bins == 0 {
        return Err(MalformedTranscript("session needs at least one prover and one bin".into()));
    }
    let clients = t.messages.iter().filter(|m| m.phase == Phase::Client).count() as u64;
    check_field_guard::<G>(clients, setup.provers as u64, setup.coins())
        .map_err(|e| MalformedTranscript(e.to_string()))?;

    let mut judge = Verifier::new(pp, setup.clone());
    for (i, env) in t.messages.iter().enumerate() {
        if env.seq != i as u64 {
            return Err(MalformedTranscript(format!("message {i} has sequence number {}", env.seq)));
        }
        let decoded = B64
            .decode(&env.body)
            .map_err(|e| e.to_string())
            .and_then(|bytes| Message::<G>::decode_body(env.phase, &bytes).map_err(|e| e.to_string()));
        let msg = match decoded {
            Ok(m) if m.sender() == env.from => m,
            Ok(m) => {
                let detail = format!("message {i} body is from {}", m.sender());
                if !reject_message(&mut judge, env, detail) {
                    break;
                }
                continue;
            }
            Err(e) => {
                let detail = format!("message {i} does not decode: {e}");
                if !reject_message(&mut judge, env, detail) {
                    break;
                }
                continue;
            }
        };
        if judge.handle(msg).is_err() {
            break;
        }
    }
    let outcome = judge.finish();
    let recomputed = OutcomeRecord::from_outcome(&outcome);
    let client_verdicts: Vec<VerdictRecord> = judge
        .client_verdicts()
        .iter()
        .map(|(client, verdict)| VerdictRecord {
            client: *client,
            verdict: verdict.clone(),
        })
        .collect();

    let record_mismatch = if client_verdicts != t.client_verdicts {
        Some(RecordMismatch::ClientVerdicts)
    } else if recomputed != t.outcome {
        Some(RecordMismatch::Outcome)
    } else {
        None
    };
    Ok(AuditReport {
        recomputed,
        record_mismatch,
        client_verdicts,
    })
}

/// Handles an undecodable or misattributed message. A bad client message
/// only excludes that client; anything else aborts with blame on the sender.
/// Returns whether replay continues.
fn reject_message<G: PrimeGroup>(judge: &mut Verifier<G>, env: &Envelope, detail: String) -> bool {
    match (env.phase, env.from) {
        (Phase::Client, PartyId::Client(id)) => {
            judge.exclude_client(id, RejectReason::Malformed { detail });
            true
        }
        _ => {
            judge.abort(stage_of(env.phase), env.from, detail);
            false
        }
    }
}
