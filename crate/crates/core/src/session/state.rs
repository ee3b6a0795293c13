use serde::{Deserialize, Serialize};

use super::plan::{PhaseTimings, SessionPlan};
use crate::error::{Error, Result};
use crate::taxonomy::Category;
use crate::trial::{Response, TrialRow};

/// Frame rate assumed when a client does not report one.
pub const DEFAULT_REFRESH_HZ: f64 = 60.0;
/// Allowed deviation of the reported stimulus duration, in frames.
pub const TIMING_TOLERANCE_FRAMES: f64 = 2.0;

/// Phase durations measured by the client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportedTimings {
    pub fixation_ms: f64,
    pub stimulus_ms: f64,
    pub mask_ms: f64,
    #[serde(default)]
    pub response_ms: Option<f64>,
    #[serde(default)]
    pub refresh_hz: Option<f64>,
}

impl ReportedTimings {
    /// Whether the stimulus duration is off by more than two frames.
    pub fn is_off(&self, planned: &PhaseTimings) -> bool {
        let hz = self.refresh_hz.filter(|h| *h > 0.0).unwrap_or(DEFAULT_REFRESH_HZ);
        let frame = 1000.0 / hz;
        !((self.stimulus_ms - planned.stimulus_ms as f64).abs() <= TIMING_TOLERANCE_FRAMES * frame)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    /// Logical time passes.
    Tick { ms: u32 },
    /// Click on a response icon, `t_ms` after response-screen onset.
    Click { category: Category, t_ms: i64 },
    /// Leave a break.
    Continue,
    /// Client-measured timings for an already recorded trial.
    Timings { trial_index: usize, reported: ReportedTimings },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Practice,
    Main,
    Break,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Fixation,
    Stimulus,
    Mask,
    Response,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub image_id: String,
    pub condition: String,
    pub true_category: Category,
    pub response: Response,
    pub rt_ms: Option<u32>,
    pub block: u32,
    pub is_practice: bool,
    #[serde(default)]
    pub reported_timings: Option<ReportedTimings>,
    #[serde(default)]
    pub timing_flagged: bool,
}

/// Event-sourced state of one observer's session.
#[derive(Debug, Clone)]
pub struct SessionState {
    plan: SessionPlan,
    cursor: usize,
    clock_ms: u32,
    provisional: Option<(Category, u32)>,
    on_break: bool,
    records: Vec<TrialRecord>,
    ignored_clicks: u64,
    events: Vec<Event>,
}

impl SessionState {
    pub fn new(plan: SessionPlan) -> Self {
        SessionState { plan, cursor: 0, clock_ms: 0, provisional: None, on_break: false, records: Vec::new(), ignored_clicks: 0, events: Vec::new() }
    }

    /// Rebuilds a state by applying a recorded event log.
    pub fn replay(plan: SessionPlan, events: &[Event]) -> Result<Self> {
        let mut s = Self::new(plan);
        for e in events {
            s.advance(e.clone())?;
        }
        Ok(s)
    }

    pub fn plan(&self) -> &SessionPlan {
        &self.plan
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn clock_ms(&self) -> u32 {
        self.clock_ms
    }

    /// Clicks that fell outside a response window or during a break.
    pub fn ignored_clicks(&self) -> u64 {
        self.ignored_clicks
    }

    pub fn is_finished(&self) -> bool {
        self.cursor >= self.plan.trials.len()
    }

    pub fn status(&self) -> Status {
        if self.is_finished() {
            Status::Finished
        } else if self.on_break {
            Status::Break
        } else if self.plan.trials[self.cursor].is_practice {
            Status::Practice
        } else {
            Status::Main
        }
    }

    pub fn phase(&self) -> Phase {
        let t = &self.plan.timing;
        match self.clock_ms {
            c if c < t.fixation_ms => Phase::Fixation,
            c if c < t.fixation_ms + t.stimulus_ms => Phase::Stimulus,
            c if c < t.response_onset_ms() => Phase::Mask,
            _ => Phase::Response,
        }
    }

    pub fn advance(&mut self, event: Event) -> Result<()> {
        if self.is_finished() && !matches!(event, Event::Timings { .. }) {
            return Err(Error::Session("session is finished".into()));
        }
        match &event {
            Event::Tick { ms } => {
                let mut remaining = *ms;
                while !self.on_break && !self.is_finished() {
                    let room = self.plan.timing.trial_ms() - self.clock_ms;
                    if remaining < room {
                        self.clock_ms += remaining;
                        break;
                    }
                    remaining -= room;
                    self.finish_trial();
                }
            }
            Event::Click { category, t_ms } => {
                let window = self.plan.timing.response_ms as i64;
                if self.on_break || !(0..window).contains(t_ms) {
                    self.ignored_clicks += 1;
                } else {
                    let t = *t_ms as u32;
                    if self.provisional.is_none_or(|(_, prev)| t >= prev) {
                        self.provisional = Some((*category, t));
                    }
                }
            }
            Event::Continue => self.on_break = false,
            Event::Timings { trial_index, reported } => {
                let timing = self.plan.timing;
                let rec = self
                    .records
                    .get_mut(*trial_index)
                    .ok_or_else(|| Error::Session(format!("trial {trial_index} has not been recorded")))?;
                rec.reported_timings = Some(*reported);
                rec.timing_flagged = reported.is_off(&timing);
            }
        }
        self.events.push(event);
        Ok(())
    }

    fn finish_trial(&mut self) {
        let t = &self.plan.trials[self.cursor];
        let (response, rt_ms) = match self.provisional.take() {
            Some((c, rt)) => (Response::Category(c), Some(rt)),
            None => (Response::NoResponse, None),
        };
        self.records.push(TrialRecord {
            trial_index: t.index,
            image_id: t.image_id.clone(),
            condition: t.condition.clone(),
            true_category: t.category,
            response,
            rt_ms,
            block: t.block,
            is_practice: t.is_practice,
            reported_timings: None,
            timing_flagged: false,
        });
        let block = t.block;
        self.cursor += 1;
        self.clock_ms = 0;
        if let Some(next) = self.plan.trials.get(self.cursor) {
            self.on_break = next.block != block;
        }
    }

    /// Accuracy over the block that just ended, when at a break or after the last trial.
    pub fn block_feedback(&self) -> Option<f64> {
        if !(self.on_break || self.is_finished()) {
            return None;
        }
        let block = self.records.last()?.block;
        let in_block: Vec<&TrialRecord> = self.records.iter().filter(|r| r.block == block).collect();
        let correct = in_block.iter().filter(|r| r.response == Response::Category(r.true_category)).count();
        Some(correct as f64 / in_block.len() as f64)
    }

    /// Records one complete trial as a client reports it: the trial runs its full
    /// logical duration with the click, if any, `rt_ms` after response onset. Posting a
    /// trial that is already recorded returns the stored record with `true`.
    pub fn submit(&mut self, trial_index: usize, response: Option<Category>, rt_ms: Option<u32>, reported: Option<ReportedTimings>) -> Result<(TrialRecord, bool)> {
        if let Some(rec) = self.records.get(trial_index) {
            return Ok((rec.clone(), true));
        }
        if self.is_finished() {
            return Err(Error::Session("session is finished".into()));
        }
        if trial_index != self.cursor {
            return Err(Error::Session(format!("expected trial {}, got {trial_index}", self.cursor)));
        }
        if self.clock_ms != 0 {
            return Err(Error::Session("trial already in progress".into()));
        }
        if response.is_some() && rt_ms.is_none() {
            return Err(Error::invalid("a response needs rt_ms"));
        }
        if self.on_break {
            self.advance(Event::Continue)?;
        }
        let timing = self.plan.timing;
        self.advance(Event::Tick { ms: timing.response_onset_ms() })?;
        if let (Some(category), Some(rt)) = (response, rt_ms) {
            self.advance(Event::Click { category, t_ms: rt as i64 })?;
        }
        self.advance(Event::Tick { ms: timing.response_ms })?;
        if let Some(reported) = reported {
            self.advance(Event::Timings { trial_index, reported })?;
        }
        Ok((self.records[trial_index].clone(), false))
    }

    /// Raw-trial rows for export.
    pub fn to_rows(&self, subject: &str, session: u32) -> Vec<TrialRow> {
        self.records
            .iter()
            .map(|r| TrialRow {
                experiment: self.plan.experiment.clone(),
                subject_or_run: subject.to_string(),
                session,
                block: r.block,
                trial: r.trial_index as u32 + 1,
                image_id: r.image_id.clone(),
                condition: r.condition.clone(),
                true_category: r.true_category,
                response: r.response,
                rt_ms: r.rt_ms,
                is_practice: r.is_practice,
            })
            .collect()
    }
}
