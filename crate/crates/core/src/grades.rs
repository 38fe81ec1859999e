//! Interface capability grades and compliance checking of measured traces.
//!
//! Availability, reliability and latency are estimated from an
//! [`InterfaceTrace`] of discrete events and compared against the ultra- and
//! normal-grade thresholds of [`grade_spec`]. Probability thresholds are
//! strict (`measured > min`); the latency bound and the device range are
//! closed.

use std::collections::{HashMap, HashSet};

use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    Ultra,
    Normal,
}

impl Grade {
    pub fn as_str(self) -> &'static str {
        match self {
            Grade::Ultra => "ultra",
            Grade::Normal => "normal",
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Grade {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ultra" => Ok(Grade::Ultra),
            "normal" => Ok(Grade::Normal),
            other => Err(format!("unknown grade `{other}` (expected ultra or normal)")),
        }
    }
}

/// Capability thresholds of one grade for the A and T interfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradeSpec {
    pub grade: Grade,
    pub availability_min: f64,
    pub reliability_min: f64,
    /// Share of the end-to-end latency budget granted to one interface.
    pub latency_fraction: f64,
    pub device_min: u32,
    pub device_max: u32,
}

pub fn grade_spec(grade: Grade) -> GradeSpec {
    match grade {
        Grade::Ultra => GradeSpec {
            grade,
            availability_min: 0.9999999,
            reliability_min: 0.99999,
            latency_fraction: 0.10,
            device_min: 1,
            device_max: 50,
        },
        Grade::Normal => GradeSpec {
            grade,
            availability_min: 0.99999,
            reliability_min: 0.9999,
            latency_fraction: 0.50,
            device_min: 50,
            device_max: 100,
        },
    }
}

impl GradeSpec {
    /// Per-interface latency deadline for an end-to-end budget.
    pub fn interface_deadline(&self, e2e_budget: f64) -> f64 {
        self.latency_fraction * e2e_budget
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("event at t={time} precedes the previous event at t={previous}")]
    TimeNotMonotone { time: f64, previous: f64 },
    #[error("PDU {0} delivered but never sent")]
    UnknownPdu(u64),
    #[error("PDU {0} sent twice")]
    DuplicateSend(u64),
    #[error("PDU {0} delivered twice")]
    DuplicateDelivery(u64),
    #[error("invalid event field: {0}")]
    BadField(String),
    #[error("trace has no access attempts")]
    NoAttempts,
    #[error("trace has no sent PDUs")]
    NoSentPdus,
    #[error("trace has no delivered PDUs")]
    NoDelivered,
    #[error("PDU {id} has size {size} bits, expected {expected}")]
    SizeMismatch { id: u64, size: u64, expected: u64 },
    #[error("percentile {0} outside [0, 100]")]
    BadPercentile(f64),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEvent {
    AttemptAccess {
        granted: bool,
    },
    PduSent {
        id: u64,
        size_bits: u64,
    },
    /// `delay` is measured from ingress at the transmitter to egress at the receiver.
    PduDelivered {
        id: u64,
        delay: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub event: TraceEvent,
}

/// Set of PDU ids tuned for traces whose ids mostly arrive in increasing
/// order: those are appended to a sorted vector, the rest go to a hash set.
#[derive(Debug, Clone, Default, PartialEq)]
struct IdSet {
    sorted: Vec<u64>,
    others: HashSet<u64>,
}

impl IdSet {
    fn contains(&self, id: u64) -> bool {
        self.sorted.last() == Some(&id) || self.sorted.binary_search(&id).is_ok() || self.others.contains(&id)
    }

    /// Returns false if `id` was already present.
    fn insert(&mut self, id: u64) -> bool {
        if self.others.contains(&id) {
            return false;
        }
        match self.sorted.last() {
            Some(&last) if id <= last => self.sorted.binary_search(&id).is_err() && self.others.insert(id),
            _ => {
                self.sorted.push(id);
                true
            }
        }
    }
}

/// Time-ordered interface events. Delivered ids are always a subset of sent ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InterfaceTrace {
    records: Vec<TraceRecord>,
    sent: IdSet,
    delivered: IdSet,
}

impl InterfaceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn push(&mut self, time: f64, event: TraceEvent) -> Result<(), TraceError> {
        if !time.is_finite() {
            return Err(TraceError::BadField(format!("time {time}")));
        }
        if let Some(last) = self.records.last() {
            if time < last.time {
                return Err(TraceError::TimeNotMonotone { time, previous: last.time });
            }
        }
        match event {
            TraceEvent::AttemptAccess { .. } => {}
            TraceEvent::PduSent { id, size_bits } => {
                if size_bits == 0 {
                    return Err(TraceError::BadField(format!("PDU {id} has zero size")));
                }
                if !self.sent.insert(id) {
                    return Err(TraceError::DuplicateSend(id));
                }
            }
            TraceEvent::PduDelivered { id, delay } => {
                if !(delay >= 0.0 && delay.is_finite()) {
                    return Err(TraceError::BadField(format!("PDU {id} delay {delay}")));
                }
                if !self.sent.contains(id) {
                    return Err(TraceError::UnknownPdu(id));
                }
                if !self.delivered.insert(id) {
                    return Err(TraceError::DuplicateDelivery(id));
                }
            }
        }
        self.records.push(TraceRecord { time, event });
        Ok(())
    }

    fn sent_sizes(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.records.iter().filter_map(|r| match r.event {
            TraceEvent::PduSent { id, size_bits } => Some((id, size_bits)),
            _ => None,
        })
    }

    fn delays(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.records.iter().filter_map(|r| match r.event {
            TraceEvent::PduDelivered { id, delay } => Some((id, delay)),
            _ => None,
        })
    }

    /// Size of the first sent PDU, if any.
    pub fn pdu_size(&self) -> Option<u64> {
        self.sent_sizes().next().map(|(_, s)| s)
    }

    /// Writes `time,event,granted,id,size_bits,delay_s` rows.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), TraceError> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| TraceError::Csv(e.to_string());
        w.write_record(["time", "event", "granted", "id", "size_bits", "delay_s"]).map_err(csv_err)?;
        for r in &self.records {
            let time = r.time.to_string();
            let row: [String; 6] = match r.event {
                TraceEvent::AttemptAccess { granted } => {
                    [time, "attempt".into(), granted.to_string(), String::new(), String::new(), String::new()]
                }
                TraceEvent::PduSent { id, size_bits } => {
                    [time, "sent".into(), String::new(), id.to_string(), size_bits.to_string(), String::new()]
                }
                TraceEvent::PduDelivered { id, delay } => {
                    [time, "delivered".into(), String::new(), id.to_string(), String::new(), delay.to_string()]
                }
            };
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| TraceError::Csv(e.to_string()))
    }

    /// Reads the format produced by [`InterfaceTrace::write_csv`]. Lines starting with `#` are skipped.
    pub fn read_csv<R: io::Read>(input: R) -> Result<Self, TraceError> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let mut trace = Self::new();
        for row in reader.records() {
            let row = row.map_err(|e| TraceError::Csv(e.to_string()))?;
            let field = |i: usize| row.get(i).unwrap_or("").trim();
            fn num<T: FromStr>(s: &str, name: &str) -> Result<T, TraceError> {
                s.parse().map_err(|_| TraceError::BadField(format!("{name} `{s}`")))
            }
            let time: f64 = num(field(0), "time")?;
            let event = match field(1) {
                "attempt" => TraceEvent::AttemptAccess { granted: num(field(2), "granted")? },
                "sent" => TraceEvent::PduSent { id: num(field(3), "id")?, size_bits: num(field(4), "size_bits")? },
                "delivered" => TraceEvent::PduDelivered { id: num(field(3), "id")?, delay: num(field(5), "delay_s")? },
                other => return Err(TraceError::BadField(format!("event `{other}`"))),
            };
            trace.push(time, event)?;
        }
        Ok(trace)
    }
}

/// Granted attempts over total attempts.
pub fn measure_availability(trace: &InterfaceTrace) -> Result<f64, TraceError> {
    let (mut granted, mut total) = (0u64, 0u64);
    for r in trace.records() {
        if let TraceEvent::AttemptAccess { granted: g } = r.event {
            total += 1;
            granted += u64::from(g);
        }
    }
    if total == 0 {
        return Err(TraceError::NoAttempts);
    }
    Ok(granted as f64 / total as f64)
}

/// Fraction of sent PDUs delivered with `delay <= deadline`.
pub fn measure_reliability(trace: &InterfaceTrace, pdu_size: u64, deadline: f64) -> Result<f64, TraceError> {
    let mut sent = 0u64;
    for (id, size) in trace.sent_sizes() {
        if size != pdu_size {
            return Err(TraceError::SizeMismatch { id, size, expected: pdu_size });
        }
        sent += 1;
    }
    if sent == 0 {
        return Err(TraceError::NoSentPdus);
    }
    let on_time = trace.delays().filter(|&(_, d)| d <= deadline).count() as u64;
    Ok(on_time as f64 / sent as f64)
}

/// Nearest-rank `q`-th percentile (q in [0, 100]) of the delivery delays. Lost PDUs are excluded.
pub fn measure_latency_percentile(trace: &InterfaceTrace, q: f64) -> Result<f64, TraceError> {
    if !(0.0..=100.0).contains(&q) {
        return Err(TraceError::BadPercentile(q));
    }
    let mut delays: Vec<f64> = trace.delays().map(|(_, d)| d).collect();
    if delays.is_empty() {
        return Err(TraceError::NoDelivered);
    }
    delays.sort_by(f64::total_cmp);
    Ok(nearest_rank(&delays, q / 100.0))
}

/// Nearest-rank quantile of an ascending slice, `p` in [0, 1].
pub(crate) fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Availability,
    Reliability,
    Latency,
    Scalability,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Availability => "availability",
            Metric::Reliability => "reliability",
            Metric::Latency => "latency",
            Metric::Scalability => "scalability",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricCheck {
    pub metric: Metric,
    pub measured: f64,
    /// Lower bound for probabilities, upper bound for latency. For
    /// scalability this is `device_max`; `device_min` is in the grade spec.
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceReport {
    pub grade: Grade,
    pub checks: Vec<MetricCheck>,
}

impl ComplianceReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, metric: Metric) -> Option<&MetricCheck> {
        self.checks.iter().find(|c| c.metric == metric)
    }
}

impl fmt::Display for ComplianceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "grade = {}", self.grade)?;
        for c in &self.checks {
            writeln!(
                f,
                "{}\tmeasured={}\tthreshold={}\t{}",
                c.metric.as_str(),
                c.measured,
                c.threshold,
                if c.pass { "pass" } else { "fail" }
            )?;
        }
        writeln!(f, "overall = {}", if self.pass() { "pass" } else { "fail" })
    }
}

/// Estimated interface figures to be compared against a grade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurements {
    pub availability: f64,
    pub reliability: f64,
    /// Tail latency (the policy's percentile) in seconds.
    pub latency: f64,
    pub n_devices: u32,
}

/// Compares measurements against a grade. Probabilities must strictly exceed
/// their minimum; latency must not exceed `latency_fraction * e2e_budget`.
pub fn evaluate(grade: Grade, m: &Measurements, e2e_budget: f64) -> ComplianceReport {
    let spec = grade_spec(grade);
    let deadline = spec.interface_deadline(e2e_budget);
    let devices_ok = (spec.device_min..=spec.device_max).contains(&m.n_devices);
    ComplianceReport {
        grade,
        checks: vec![
            MetricCheck {
                metric: Metric::Availability,
                measured: m.availability,
                threshold: spec.availability_min,
                pass: m.availability > spec.availability_min,
            },
            MetricCheck {
                metric: Metric::Reliability,
                measured: m.reliability,
                threshold: spec.reliability_min,
                pass: m.reliability > spec.reliability_min,
            },
            MetricCheck {
                metric: Metric::Latency,
                measured: m.latency,
                threshold: deadline,
                pass: m.latency <= deadline,
            },
            MetricCheck {
                metric: Metric::Scalability,
                measured: f64::from(m.n_devices),
                threshold: f64::from(spec.device_max),
                pass: devices_ok,
            },
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompliancePolicy {
    pub e2e_budget: f64,
    pub n_devices: u32,
    /// Percentile of delivery delay compared against the interface deadline.
    pub latency_percentile: f64,
    /// Expected PDU size; defaults to the first sent PDU's size.
    pub pdu_size: Option<u64>,
}

impl CompliancePolicy {
    pub fn new(e2e_budget: f64, n_devices: u32) -> Self {
        Self { e2e_budget, n_devices, latency_percentile: 99.0, pdu_size: None }
    }
}

/// Measures a trace and checks it against `grade` with a 99th-percentile latency bound.
pub fn check_compliance(
    trace: &InterfaceTrace,
    grade: Grade,
    e2e_budget: f64,
    n_devices: u32,
) -> Result<ComplianceReport, TraceError> {
    check_compliance_with(trace, grade, &CompliancePolicy::new(e2e_budget, n_devices))
}

pub fn check_compliance_with(
    trace: &InterfaceTrace,
    grade: Grade,
    policy: &CompliancePolicy,
) -> Result<ComplianceReport, TraceError> {
    let deadline = grade_spec(grade).interface_deadline(policy.e2e_budget);
    let pdu_size = policy.pdu_size.or_else(|| trace.pdu_size()).ok_or(TraceError::NoSentPdus)?;
    let m = Measurements {
        availability: measure_availability(trace)?,
        reliability: measure_reliability(trace, pdu_size, deadline)?,
        latency: measure_latency_percentile(trace, policy.latency_percentile)?,
        n_devices: policy.n_devices,
    };
    Ok(evaluate(grade, &m, policy.e2e_budget))
}

/// Delivered delays keyed by PDU id; handy for auditing a trace.
pub fn delivery_delays(trace: &InterfaceTrace) -> HashMap<u64, f64> {
    trace.delays().collect()
}
