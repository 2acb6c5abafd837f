//! JSON run reports.
//!
//! Field order is fixed by the struct definitions and maps are `BTreeMap`s,
//! so serializing the same run twice gives identical bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::engine::{ConstructionState, Fault, RunConfig, StageRecord};
use crate::error::{Error, Result};
use crate::selector::{CaseParams, SelectionMeta};
use crate::verifier::CheckResult;

pub const SCHEMA_VERSION: u32 = 1;

/// The configuration as written to a report; `alpha` is an exact `NUM/DEN`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub case: String,
    pub p1: bool,
    pub p2: bool,
    pub p3: bool,
    pub kmax: u64,
    pub seed: u64,
    pub alpha: String,
    pub rho: u64,
    pub kmin: u64,
    pub candidate_cap: u64,
    pub count_cap: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ignore_selection: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject: Option<String>,
}

impl ConfigEcho {
    pub fn from_config(c: &RunConfig) -> Self {
        ConfigEcho {
            case: c.case.name().to_string(),
            p1: c.case.p1,
            p2: c.case.p2,
            p3: c.case.p3,
            kmax: c.kmax,
            seed: c.seed,
            alpha: format!("{}/{}", c.alpha_num, c.alpha_den),
            rho: c.rho,
            kmin: c.kmin,
            candidate_cap: c.candidate_cap,
            count_cap: c.count_cap,
            ignore_selection: c.ignore_selection,
            inject: c.inject.map(|f| f.name().to_string()),
        }
    }

    pub fn to_config(&self) -> Result<RunConfig> {
        let case: CaseParams = self.case.parse()?;
        if (case.p1, case.p2, case.p3) != (self.p1, self.p2, self.p3) {
            return Err(Error::Config(format!(
                "case {} disagrees with p1/p2/p3 = {}/{}/{}",
                self.case, self.p1, self.p2, self.p3
            )));
        }
        let (alpha_num, alpha_den) = parse_fraction(&self.alpha)?;
        let mut c = RunConfig::new(case, self.kmax, self.seed);
        c.alpha_num = alpha_num;
        c.alpha_den = alpha_den;
        c.rho = self.rho;
        c.kmin = self.kmin;
        c.candidate_cap = self.candidate_cap;
        c.count_cap = self.count_cap;
        c.ignore_selection = self.ignore_selection;
        c.inject = self.inject.as_deref().map(Fault::parse).transpose()?;
        c.validate()?;
        Ok(c)
    }
}

/// Parses `NUM/DEN` with a positive denominator.
pub fn parse_fraction(s: &str) -> Result<(u64, u64)> {
    let bad = || Error::Config(format!("expected NUM/DEN, got {s:?}"));
    let (num, den) = s.split_once('/').ok_or_else(bad)?;
    let num: u64 = num.trim().parse().map_err(|_| bad())?;
    let den: u64 = den.trim().parse().map_err(|_| bad())?;
    if den == 0 {
        return Err(Error::Config("alpha denominator must be positive".into()));
    }
    Ok((num, den))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSummary {
    pub k: u64,
    pub n_k: u64,
    pub b_k_len: u64,
    pub c_k_len: u64,
    pub f: Vec<u64>,
    pub g: Vec<u64>,
    pub h: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eligible_count: Option<u64>,
}

impl StageSummary {
    pub fn from_record(s: &StageRecord) -> Self {
        StageSummary {
            k: s.k,
            n_k: s.n_k,
            b_k_len: s.b_k.len(),
            c_k_len: s.c_k.len(),
            f: s.f.clone(),
            g: s.g.clone(),
            h: s.h.clone(),
            selection: s.meta.clone(),
            eligible_count: s.eligible_count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub stages: Vec<StageSummary>,
    #[serde(default)]
    pub checks: Vec<CheckResult>,
    pub metrics: BTreeMap<String, Value>,
    /// Wall-clock seconds per phase; only present when asked for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<BTreeMap<String, f64>>,
}

impl RunReport {
    pub fn from_state(state: &ConstructionState) -> Self {
        let mut metrics = BTreeMap::new();
        metrics.insert("universe".into(), json!(state.universe()));
        metrics.insert("b_len".into(), json!(state.b_cum.len()));
        metrics.insert("c_len".into(), json!(state.c_cum.len()));
        metrics.insert("activation".into(), json!(state.activation));
        if !state.b_sequence.is_empty() {
            metrics.insert("b_sequence".into(), json!(state.b_sequence));
        }
        RunReport {
            schema_version: SCHEMA_VERSION,
            config: ConfigEcho::from_config(&state.config),
            stages: state.stages.iter().map(StageSummary::from_record).collect(),
            checks: Vec::new(),
            metrics,
            timing: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: RunReport =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("corrupt report: {e}")))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }

    /// First stage whose recorded summary differs from `state`, if any.
    pub fn first_mismatch(&self, state: &ConstructionState) -> Option<u64> {
        let fresh: Vec<StageSummary> = state.stages.iter().map(StageSummary::from_record).collect();
        if fresh.len() != self.stages.len() {
            return Some(fresh.len().min(self.stages.len()) as u64 + 1);
        }
        fresh
            .iter()
            .zip(&self.stages)
            .find(|(a, b)| a != b)
            .map(|(a, _)| a.k)
    }
}
