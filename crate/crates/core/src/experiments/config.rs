//! Flat `key = value` scenario files with dotted sections.
//!
//! Blank lines and `#` comments are ignored. Lists are comma separated and
//! optional values take `none`. Unknown keys are errors.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::consensus::Method;
use crate::dlt::{builtin_profile, Bytes, DltName, DltProfile, LifecycleConfig, ProofModel};
use crate::lorawan::{LorawanConfig, SirMatrix, SubBandPlan};
use crate::sync::{ProtocolClass, SyncConfig, TxSizing};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{key}`: cannot use {value:?}: {reason}")]
    Value {
        key: String,
        value: String,
        reason: String,
    },
    #[error("`{key}` given twice")]
    Duplicate { key: String },
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Case1,
    Case2,
    Toa,
    Rates,
}

impl Scenario {
    pub fn key(self) -> &'static str {
        match self {
            Scenario::Case1 => "case1",
            Scenario::Case2 => "case2",
            Scenario::Toa => "toa",
            Scenario::Rates => "rates",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "case1" => Ok(Scenario::Case1),
            "case2" => Ok(Scenario::Case2),
            "toa" => Ok(Scenario::Toa),
            "rates" => Ok(Scenario::Rates),
            _ => Err("expected case1, case2, toa or rates".into()),
        }
    }
}

/// Publishing over LoRaWAN.
#[derive(Debug, Clone, PartialEq)]
pub struct Case1Params {
    pub publish_rate_per_week: f64,
    pub payload_bytes: Bytes,
    pub horizon_weeks: f64,
    /// Overrides the profile's device-side PoW time; `None` keeps it.
    pub pow_time_s: Option<f64>,
    pub endorsement_available: bool,
    pub endorsement_bytes: Bytes,
    pub signing_time_s: f64,
    pub forward_delay_s: f64,
    pub notify_delay_s: f64,
}

impl Default for Case1Params {
    fn default() -> Self {
        Self {
            publish_rate_per_week: 1.0,
            payload_bytes: 50,
            horizon_weeks: 26.0,
            pow_time_s: Some(0.0),
            endorsement_available: true,
            endorsement_bytes: 72,
            signing_time_s: 0.0,
            forward_delay_s: 0.0,
            notify_delay_s: 0.0,
        }
    }
}

/// Distributed averaging over lossy links.
#[derive(Debug, Clone, PartialEq)]
pub struct Case2Params {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub period_s: f64,
    pub block_period_s: f64,
    pub periods: u32,
    pub methods: Vec<Method>,
    pub init_min: f64,
    pub init_max: f64,
    pub signature_bytes: Bytes,
    pub value_bytes: Bytes,
    /// Ledger behind methods B and C.
    pub dlt: DltName,
}

impl Default for Case2Params {
    fn default() -> Self {
        Self {
            n: 1000,
            k: 5,
            p: 0.1,
            period_s: 10.0,
            block_period_s: 10.0,
            periods: 30,
            methods: Method::ALL.to_vec(),
            init_min: 0.0,
            init_max: 100.0,
            signature_bytes: 72,
            value_bytes: 4,
            dlt: DltName::Ethereum,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub dlts: Vec<DltName>,
    /// One profile per DLT, indexed like `DltName::ALL`.
    pub profiles: Vec<DltProfile>,
    pub protocol: ProtocolClass,
    pub seeds: Vec<u64>,
    pub out: String,
    pub case1: Case1Params,
    pub lorawan: LorawanConfig,
    pub receipt_bytes: Bytes,
    pub sync: SyncConfig,
    pub case2: Case2Params,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Case1,
            dlts: DltName::ALL.to_vec(),
            profiles: DltName::ALL.iter().map(|&d| builtin_profile(d)).collect(),
            protocol: ProtocolClass::P2Digest,
            seeds: vec![1, 2, 3, 4, 5],
            out: "results".into(),
            case1: Case1Params::default(),
            lorawan: LorawanConfig::default(),
            receipt_bytes: 10,
            sync: SyncConfig::default(),
            case2: Case2Params::default(),
        }
    }
}

fn fmt_list<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn fmt_opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn fmt_proof(model: ProofModel) -> String {
    match model {
        ProofModel::Fixed(b) => b.to_string(),
        ProofModel::Tree => "tree".into(),
    }
}

fn profile_index(name: DltName) -> usize {
    DltName::ALL.iter().position(|&d| d == name).expect("every name is listed")
}

struct Val<'a> {
    key: &'a str,
    raw: &'a str,
}

impl Val<'_> {
    fn fail<T>(&self, reason: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError::Value {
            key: self.key.to_string(),
            value: self.raw.to_string(),
            reason: reason.into(),
        })
    }

    fn parse_one<T: FromStr>(&self, s: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match s.trim().parse::<T>() {
            Ok(v) => Ok(v),
            Err(e) => self.fail(e.to_string()),
        }
    }

    fn get<T: FromStr>(&self) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.parse_one(self.raw)
    }

    fn float(&self) -> Result<f64, ConfigError> {
        let v: f64 = self.get()?;
        if v.is_finite() {
            Ok(v)
        } else {
            self.fail("must be finite")
        }
    }

    fn opt<T: FromStr>(&self) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        if self.raw.trim() == "none" {
            Ok(None)
        } else {
            self.get().map(Some)
        }
    }

    fn list<T: FromStr>(&self) -> Result<Vec<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| self.parse_one(s))
            .collect()
    }

    fn six(&self) -> Result<[f64; 6], ConfigError> {
        let v: Vec<f64> = self.list()?;
        match <[f64; 6]>::try_from(v) {
            Ok(a) if a.iter().all(|x| x.is_finite()) => Ok(a),
            _ => self.fail("expected six finite numbers for SF7..SF12"),
        }
    }

    fn proof(&self) -> Result<ProofModel, ConfigError> {
        if self.raw.trim() == "tree" {
            Ok(ProofModel::Tree)
        } else {
            self.get().map(ProofModel::Fixed)
        }
    }

    fn seeds(&self) -> Result<Vec<u64>, ConfigError> {
        let mut seeds = Vec::new();
        for part in self.raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some((lo, hi)) = part.split_once("..") {
                let (lo, hi): (u64, u64) = (self.parse_one(lo)?, self.parse_one(hi)?);
                if hi <= lo {
                    return self.fail("empty seed range");
                }
                seeds.extend(lo..hi);
            } else {
                seeds.push(self.parse_one(part)?);
            }
        }
        Ok(seeds)
    }
}

impl ScenarioConfig {
    /// Every key with its current value, in file order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut e: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| e.push((k.to_string(), v));
        put("scenario", self.scenario.to_string());
        put("dlt", fmt_list(&self.dlts.iter().map(|d| d.key()).collect::<Vec<_>>()));
        put("protocol", self.protocol.key().to_string());
        put("seeds", fmt_list(&self.seeds));
        put("out", self.out.clone());

        for p in &self.profiles {
            let k = |field: &str| format!("dlt.{}.{field}", p.name.key());
            put(&k("capacity_tps"), p.capacity_tps.to_string());
            put(&k("validation_time_s"), p.validation_time.to_string());
            put(&k("validation_jitter"), p.validation_jitter.to_string());
            put(&k("block_size"), fmt_opt(p.block_size));
            put(&k("header_size"), fmt_opt(p.header_size));
            put(&k("min_tx_size"), p.min_tx_size.to_string());
            put(&k("tx_data_capacity"), fmt_opt(p.tx_data_capacity));
            put(&k("block_period_s"), fmt_opt(p.block_period));
            put(&k("local_pow_time_s"), fmt_opt(p.local_pow_time));
            put(&k("endorsement_required"), p.endorsement_required.to_string());
        }

        let c1 = &self.case1;
        put("case1.publish_rate_per_week", c1.publish_rate_per_week.to_string());
        put("case1.payload_bytes", c1.payload_bytes.to_string());
        put("case1.horizon_weeks", c1.horizon_weeks.to_string());
        put("case1.pow_time_s", fmt_opt(c1.pow_time_s));
        put("case1.endorsement_available", c1.endorsement_available.to_string());
        put("case1.endorsement_bytes", c1.endorsement_bytes.to_string());
        put("case1.signing_time_s", c1.signing_time_s.to_string());
        put("case1.forward_delay_s", c1.forward_delay_s.to_string());
        put("case1.notify_delay_s", c1.notify_delay_s.to_string());

        let l = &self.lorawan;
        let b = &l.budget;
        put("lorawan.radius_m", l.radius_m.to_string());
        put("lorawan.devices", l.devices.to_string());
        put("lorawan.sf_thresholds_m", fmt_list(&l.sf_thresholds_m));
        put("lorawan.tx_power_dbm", b.tx_power_dbm.to_string());
        put("lorawan.ap_tx_power_dbm", b.ap_tx_power_dbm.to_string());
        put("lorawan.path_loss_ref_db", b.path_loss_ref_db.to_string());
        put("lorawan.path_loss_exponent", b.path_loss_exponent.to_string());
        put("lorawan.sensitivity_dbm", fmt_list(&b.sensitivity_dbm));
        put("lorawan.shadowing_sigma_db", b.shadowing_sigma_db.to_string());
        put("lorawan.rayleigh_fading", b.rayleigh_fading.to_string());
        match uniform_sir(&l.sir) {
            Some((co, inter)) => {
                put("lorawan.co_sf_sir_db", co.to_string());
                put("lorawan.inter_sf_sir_db", inter.to_string());
            }
            None => put(
                "lorawan.sir_matrix_db",
                fmt_list(&l.sir.0.iter().flatten().copied().collect::<Vec<_>>()),
            ),
        }
        put("lorawan.demodulators", l.demodulators.to_string());
        put(
            "lorawan.ul_channels",
            fmt_list(&l.uplink_subbands.iter().map(|s| s.channels).collect::<Vec<_>>()),
        );
        put(
            "lorawan.ul_duty_cycle",
            fmt_list(&l.uplink_subbands.iter().map(|s| s.duty_cycle).collect::<Vec<_>>()),
        );
        put("lorawan.dl_duty_cycle", l.downlink_duty_cycle.to_string());
        put("lorawan.broadcast_duty_cycle", l.broadcast_duty_cycle.to_string());
        put("lorawan.ack_turnaround_s", l.ack_turnaround_s.to_string());
        put("lorawan.max_retx", l.max_retx.to_string());

        put("sync.receipt_bytes", self.receipt_bytes.to_string());
        put("sync.ack_bytes", self.sync.incentive_ack_bytes.to_string());
        put("sync.state_proof", fmt_proof(self.sync.state_proof));
        put("sync.tx_proof", fmt_proof(self.sync.tx_proof));
        put(
            "sync.tx_sizing",
            match self.sync.tx_sizing {
                TxSizing::Actual => "actual",
                TxSizing::Minimum => "minimum",
            }
            .into(),
        );

        let c2 = &self.case2;
        put("case2.n", c2.n.to_string());
        put("case2.k", c2.k.to_string());
        put("case2.p", c2.p.to_string());
        put("case2.period_s", c2.period_s.to_string());
        put("case2.block_period_s", c2.block_period_s.to_string());
        put("case2.periods", c2.periods.to_string());
        put("case2.methods", fmt_list(&c2.methods));
        put("case2.init_min", c2.init_min.to_string());
        put("case2.init_max", c2.init_max.to_string());
        put("case2.signature_bytes", c2.signature_bytes.to_string());
        put("case2.value_bytes", c2.value_bytes.to_string());
        put("case2.dlt", c2.dlt.key().to_string());
        e
    }

    /// The configuration as a scenario file.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut section = String::new();
        for (k, v) in self.entries() {
            let s = k.rsplit_once('.').map_or("", |(s, _)| s).to_string();
            if !s.is_empty() && s != section {
                out.push('\n');
                section = s;
            }
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        let key = key.trim();
        let raw = raw.trim();
        let v = Val { key, raw };
        if let Some(rest) = key.strip_prefix("dlt.") {
            return self.set_profile(rest, &v);
        }
        match key {
            "scenario" => self.scenario = v.get()?,
            "dlt" => {
                let dlts: Vec<DltName> = v.list()?;
                if dlts.is_empty() {
                    return v.fail("at least one DLT is required");
                }
                self.dlts = dlts;
            }
            "protocol" => self.protocol = v.get()?,
            "seeds" => {
                let seeds = v.seeds()?;
                if seeds.is_empty() {
                    return v.fail("at least one seed is required");
                }
                self.seeds = seeds;
            }
            "out" => self.out = raw.to_string(),

            "case1.publish_rate_per_week" => self.case1.publish_rate_per_week = v.float()?,
            "case1.payload_bytes" => self.case1.payload_bytes = v.get()?,
            "case1.horizon_weeks" => self.case1.horizon_weeks = v.float()?,
            "case1.pow_time_s" => self.case1.pow_time_s = v.opt()?,
            "case1.endorsement_available" => self.case1.endorsement_available = v.get()?,
            "case1.endorsement_bytes" => self.case1.endorsement_bytes = v.get()?,
            "case1.signing_time_s" => self.case1.signing_time_s = v.float()?,
            "case1.forward_delay_s" => self.case1.forward_delay_s = v.float()?,
            "case1.notify_delay_s" => self.case1.notify_delay_s = v.float()?,

            "lorawan.radius_m" => self.lorawan.radius_m = v.float()?,
            "lorawan.devices" => self.lorawan.devices = v.get()?,
            "lorawan.sf_thresholds_m" => self.lorawan.sf_thresholds_m = v.six()?,
            "lorawan.tx_power_dbm" => self.lorawan.budget.tx_power_dbm = v.float()?,
            "lorawan.ap_tx_power_dbm" => self.lorawan.budget.ap_tx_power_dbm = v.float()?,
            "lorawan.path_loss_ref_db" => self.lorawan.budget.path_loss_ref_db = v.float()?,
            "lorawan.path_loss_exponent" => self.lorawan.budget.path_loss_exponent = v.float()?,
            "lorawan.sensitivity_dbm" => self.lorawan.budget.sensitivity_dbm = v.six()?,
            "lorawan.shadowing_sigma_db" => self.lorawan.budget.shadowing_sigma_db = v.float()?,
            "lorawan.rayleigh_fading" => self.lorawan.budget.rayleigh_fading = v.get()?,
            "lorawan.co_sf_sir_db" => {
                let inter = uniform_sir(&self.lorawan.sir).map_or(-16.0, |(_, i)| i);
                self.lorawan.sir = SirMatrix::uniform(v.float()?, inter);
            }
            "lorawan.inter_sf_sir_db" => {
                let co = uniform_sir(&self.lorawan.sir).map_or(6.0, |(c, _)| c);
                self.lorawan.sir = SirMatrix::uniform(co, v.float()?);
            }
            "lorawan.sir_matrix_db" => {
                let flat: Vec<f64> = v.list()?;
                if flat.len() != 36 || flat.iter().any(|x| !x.is_finite()) {
                    return v.fail("expected 36 finite values, row-major SF7..SF12");
                }
                let mut m = [[0.0; 6]; 6];
                for (i, x) in flat.into_iter().enumerate() {
                    m[i / 6][i % 6] = x;
                }
                self.lorawan.sir = SirMatrix(m);
            }
            "lorawan.demodulators" => self.lorawan.demodulators = v.get()?,
            "lorawan.ul_channels" => {
                let channels: Vec<u32> = v.list()?;
                if channels.is_empty() {
                    return v.fail("at least one sub-band is required");
                }
                let old = &self.lorawan.uplink_subbands;
                let fallback = old.last().map_or(0.01, |s| s.duty_cycle);
                self.lorawan.uplink_subbands = channels
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| SubBandPlan {
                        channels: c,
                        duty_cycle: old.get(i).map_or(fallback, |s| s.duty_cycle),
                    })
                    .collect();
            }
            "lorawan.ul_duty_cycle" => {
                let duties: Vec<f64> = v.list()?;
                let bands = &mut self.lorawan.uplink_subbands;
                match duties.len() {
                    1 => bands.iter_mut().for_each(|b| b.duty_cycle = duties[0]),
                    n if n == bands.len() => {
                        for (b, d) in bands.iter_mut().zip(duties) {
                            b.duty_cycle = d;
                        }
                    }
                    _ => return v.fail("give one duty cycle, or one per sub-band"),
                }
            }
            "lorawan.dl_duty_cycle" => self.lorawan.downlink_duty_cycle = v.float()?,
            "lorawan.broadcast_duty_cycle" => self.lorawan.broadcast_duty_cycle = v.float()?,
            "lorawan.ack_turnaround_s" => self.lorawan.ack_turnaround_s = v.float()?,
            "lorawan.max_retx" => self.lorawan.max_retx = v.get()?,

            "sync.receipt_bytes" => self.receipt_bytes = v.get()?,
            "sync.ack_bytes" => self.sync.incentive_ack_bytes = v.get()?,
            "sync.state_proof" => self.sync.state_proof = v.proof()?,
            "sync.tx_proof" => self.sync.tx_proof = v.proof()?,
            "sync.tx_sizing" => {
                self.sync.tx_sizing = match raw {
                    "actual" => TxSizing::Actual,
                    "minimum" => TxSizing::Minimum,
                    _ => return v.fail("expected actual or minimum"),
                }
            }

            "case2.n" => self.case2.n = v.get()?,
            "case2.k" => self.case2.k = v.get()?,
            "case2.p" => self.case2.p = v.float()?,
            "case2.period_s" => self.case2.period_s = v.float()?,
            "case2.block_period_s" => self.case2.block_period_s = v.float()?,
            "case2.periods" => self.case2.periods = v.get()?,
            "case2.methods" => {
                let methods: Vec<Method> = v.list()?;
                if methods.is_empty() {
                    return v.fail("at least one method is required");
                }
                self.case2.methods = methods;
            }
            "case2.init_min" => self.case2.init_min = v.float()?,
            "case2.init_max" => self.case2.init_max = v.float()?,
            "case2.signature_bytes" => self.case2.signature_bytes = v.get()?,
            "case2.value_bytes" => self.case2.value_bytes = v.get()?,
            "case2.dlt" => self.case2.dlt = v.get()?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    fn set_profile(&mut self, rest: &str, v: &Val<'_>) -> Result<(), ConfigError> {
        let unknown = || ConfigError::UnknownKey(v.key.to_string());
        let (name, field) = rest.split_once('.').ok_or_else(unknown)?;
        let name: DltName = name.parse().map_err(|_| unknown())?;
        let p = &mut self.profiles[profile_index(name)];
        match field {
            "capacity_tps" => p.capacity_tps = v.float()?,
            "validation_time_s" => p.validation_time = v.float()?,
            "validation_jitter" => p.validation_jitter = v.get()?,
            "block_size" => p.block_size = v.opt()?,
            "header_size" => p.header_size = v.opt()?,
            "min_tx_size" => p.min_tx_size = v.get()?,
            "tx_data_capacity" => p.tx_data_capacity = v.opt()?,
            "block_period_s" => p.block_period = v.opt()?,
            "local_pow_time_s" => p.local_pow_time = v.opt()?,
            "endorsement_required" => p.endorsement_required = v.get()?,
            _ => return Err(unknown()),
        }
        Ok(())
    }

    /// Parses a scenario file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: line.to_string(),
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate { key: key.to_string() });
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Applies a command-line `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: assignment.to_string(),
        })?;
        self.set(key, value)
    }

    pub fn profile(&self, name: DltName) -> &DltProfile {
        &self.profiles[profile_index(name)]
    }

    /// Lifecycle settings for case 1.
    pub fn lifecycle(&self) -> LifecycleConfig {
        LifecycleConfig {
            endorsement_available: self.case1.endorsement_available,
            endorsement_bytes: self.case1.endorsement_bytes,
            pow_time: self.case1.pow_time_s,
            signing_time: self.case1.signing_time_s,
            forward_delay: self.case1.forward_delay_s,
            notify_delay: self.case1.notify_delay_s,
            receipt_bytes: self.receipt_bytes,
            incentive_ack_bytes: self.sync.incentive_ack_bytes,
            tx_proof_bytes: match self.sync.tx_proof {
                ProofModel::Fixed(b) => b,
                ProofModel::Tree => LifecycleConfig::default().tx_proof_bytes,
            },
            ..LifecycleConfig::default()
        }
    }

    /// Cross-field checks that parsing alone cannot make.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        for p in &self.profiles {
            p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        self.lorawan
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let c1 = &self.case1;
        if !(c1.publish_rate_per_week > 0.0) || !(c1.horizon_weeks > 0.0) {
            return invalid("case1 publish rate and horizon must be positive".into());
        }
        if c1.payload_bytes == 0 {
            return invalid("case1.payload_bytes must be positive".into());
        }
        if c1.pow_time_s.is_some_and(|t| t < 0.0)
            || c1.signing_time_s < 0.0
            || c1.forward_delay_s < 0.0
            || c1.notify_delay_s < 0.0
        {
            return invalid("case1 delays must be non-negative".into());
        }
        if self.scenario == Scenario::Case1 && self.protocol == ProtocolClass::P1 {
            return invalid("P1 (full node) devices are not supported over LoRaWAN".into());
        }
        let c2 = &self.case2;
        if c2.k == 0 || c2.n <= c2.k {
            return invalid(format!("case2 needs n > k >= 1, got n = {}, k = {}", c2.n, c2.k));
        }
        if !(c2.init_min <= c2.init_max) {
            return invalid("case2.init_min exceeds case2.init_max".into());
        }
        if !self.profile(c2.dlt).has_blocks() {
            return invalid(format!("case2.dlt = {} has no blocks", c2.dlt.key()));
        }
        crate::consensus::MethodConfig {
            method: Method::A,
            period_s: c2.period_s,
            block_period_s: c2.block_period_s,
            p: c2.p,
            periods: c2.periods,
        }
        .validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

fn uniform_sir(m: &SirMatrix) -> Option<(f64, f64)> {
    let co = m.0[0][0];
    let inter = m.0[0][1];
    (*m == SirMatrix::uniform(co, inter)).then_some((co, inter))
}
