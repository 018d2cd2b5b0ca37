//! Translations between representations of the reals.
//!
//! Every enclosure-producing translation is a [`Stage`]: a per-index
//! enclosure computed under explicit [`Fuel`]. Its output name answers `n`
//! with the running intersection of stages `0..=n`, which makes the output
//! nested whatever the input does. The same stages drive the
//! [`delay_transform`], which only needs to interrupt them when fuel runs out.

use std::sync::{Arc, Mutex};

use crate::bitcodec::{BitString, MonotoneTable};
use crate::dyadic::Dyadic;
use crate::interval::DyadicInterval;
use crate::meter::{cost, ops, Fuel};
use crate::names::{
    CauchyName, EnclosureRepr, IntervalRealName, IrramRealName, Name, NameError,
    StringFunctionName,
};
use crate::sop::Polynomial;

/// Search fuel used when none is given: probes per search.
pub const DEFAULT_FUEL: u64 = 1 << 20;

/// One enclosure per index, computed under fuel.
pub trait Stage: Send + Sync + 'static {
    /// The enclosure of index `k`, or `None` if `fuel` ran out first.
    fn stage(&self, k: u64, fuel: &mut Fuel) -> Result<Option<DyadicInterval>, NameError>;

    fn describe(&self) -> String;
}

/// Outcome of advancing a run by one output index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Progress {
    Done { index: u64, answer: DyadicInterval },
    Pending,
}

/// A translation as a resumable computation completing its output indices
/// `0, 1, 2, ...` in order, one task per index.
pub trait ResumableTranslation: Send + Sync + 'static {
    fn describe(&self) -> String;

    fn start(&self) -> Box<dyn TaskRun>;
}

pub trait TaskRun {
    /// Runs the next task within `fuel`.
    fn advance(&mut self, fuel: &mut Fuel) -> Result<Progress, NameError>;
}

/// A stage-built translation.
#[derive(Clone)]
pub struct Staged {
    stage: Arc<dyn Stage>,
}

struct StagedRun {
    stage: Arc<dyn Stage>,
    next: u64,
    acc: Option<DyadicInterval>,
}

impl TaskRun for StagedRun {
    fn advance(&mut self, fuel: &mut Fuel) -> Result<Progress, NameError> {
        let Some(s) = self.stage.stage(self.next, fuel)? else {
            return Ok(Progress::Pending);
        };
        let acc = match &self.acc {
            None => s,
            Some(prev) => {
                if !fuel.pay(cost::intersect(prev, &s)) {
                    return Ok(Progress::Pending);
                }
                prev.intersect(&s)?
            }
        };
        let index = self.next;
        self.acc = Some(acc.clone());
        self.next += 1;
        Ok(Progress::Done { index, answer: acc })
    }
}

impl Staged {
    pub fn new(stage: impl Stage) -> Self {
        Staged {
            stage: Arc::new(stage),
        }
    }

    /// The output name: `n -> ⋂_{k <= n} stage(k)`, sharing one prefix of
    /// running intersections across queries.
    pub fn name(&self) -> IntervalRealName {
        let run = Mutex::new((
            StagedRun {
                stage: Arc::clone(&self.stage),
                next: 0,
                acc: None,
            },
            Vec::<DyadicInterval>::new(),
        ));
        Name::from_callback(self.stage.describe(), move |&n: &u64| {
            let mut guard = run.lock().expect("run lock");
            let (run, prefix) = &mut *guard;
            let mut fuel = Fuel::unlimited();
            while prefix.len() as u64 <= n {
                match run.advance(&mut fuel)? {
                    Progress::Done { answer, .. } => prefix.push(answer),
                    Progress::Pending => unreachable!("unlimited fuel"),
                }
            }
            Ok(prefix[n as usize].clone())
        })
    }
}

impl ResumableTranslation for Staged {
    fn describe(&self) -> String {
        self.stage.describe()
    }

    fn start(&self) -> Box<dyn TaskRun> {
        Box::new(StagedRun {
            stage: Arc::clone(&self.stage),
            next: 0,
            acc: None,
        })
    }
}

struct CauchyStage {
    phi: CauchyName,
}

impl Stage for CauchyStage {
    fn stage(&self, k: u64, fuel: &mut Fuel) -> Result<Option<DyadicInterval>, NameError> {
        if !fuel.try_spend(1 + k) {
            return Ok(None);
        }
        let d = self.phi.query(&k)?;
        Ok(Some(DyadicInterval::ball(d, Dyadic::pow2(-(k as i64)))))
    }

    fn describe(&self) -> String {
        format!("cauchy_to_interval({})", self.phi.note())
    }
}

struct EnclosureStage<R: EnclosureRepr> {
    phi: Name<R>,
    /// Rounding precision per index, if normalizing.
    p: Option<Polynomial>,
}

impl<R: EnclosureRepr> Stage for EnclosureStage<R> {
    fn stage(&self, k: u64, fuel: &mut Fuel) -> Result<Option<DyadicInterval>, NameError> {
        if !fuel.try_spend(1 + k) {
            return Ok(None);
        }
        let j = self.phi.query(&k)?;
        match &self.p {
            None => Ok(Some(j)),
            Some(p) => {
                let pk = p.eval(k);
                if !fuel.pay(cost::outward_round(&j, pk)) {
                    return Ok(None);
                }
                Ok(Some(j.outward_round(pk)))
            }
        }
    }

    fn describe(&self) -> String {
        match &self.p {
            None => format!("irram_to_interval({})", self.phi.note()),
            Some(p) => format!("normalize_interval({}, {p})", self.phi.note()),
        }
    }
}

pub fn cauchy_to_interval_staged(phi: &CauchyName) -> Staged {
    Staged::new(CauchyStage { phi: phi.clone() })
}

/// `n -> ⋂_{k <= n} [phi(k) ± 2^(-k)]`.
pub fn cauchy_to_interval(phi: &CauchyName) -> IntervalRealName {
    cauchy_to_interval_staged(phi).name()
}

pub fn normalize_staged<R: EnclosureRepr>(phi: &Name<R>, p: &Polynomial) -> Result<Staged, NameError> {
    if p.is_constant() {
        return Err(NameError::Invalid(format!("normalizer precision {p} is constant")));
    }
    Ok(Staged::new(EnclosureStage {
        phi: phi.clone(),
        p: Some(p.clone()),
    }))
}

/// `n -> ⋂_{k <= n} outward_round(phi(k), p(k))`.
pub fn normalize_interval<R: EnclosureRepr>(
    phi: &Name<R>,
    p: &Polynomial,
) -> Result<IntervalRealName, NameError> {
    Ok(normalize_staged(phi, p)?.name())
}

pub fn irram_to_interval_staged(phi: &IrramRealName) -> Staged {
    Staged::new(EnclosureStage {
        phi: phi.clone(),
        p: None,
    })
}

/// `n -> ⋂_{k <= n} phi(k)`.
pub fn irram_to_interval(phi: &IrramRealName) -> IntervalRealName {
    irram_to_interval_staged(phi).name()
}

/// Answers `n` with the midpoint of the first enclosure of diameter at most
/// `2^(-n-1)`, rounded to the `2^(-n-2)` grid, so the error stays within
/// `2^(-n)` and the answer has `O(n + mag)` bits.
pub fn interval_to_cauchy(phi: &IntervalRealName) -> CauchyName {
    interval_to_cauchy_with_fuel(phi, DEFAULT_FUEL)
}

pub fn interval_to_cauchy_with_fuel(phi: &IntervalRealName, fuel: u64) -> CauchyName {
    let phi = phi.clone();
    let note = format!("interval_to_cauchy({})", phi.note());
    Name::from_callback(note, move |&n: &u64| {
        let threshold = Dyadic::pow2(-(n as i64) - 2);
        for m in 0..fuel {
            let j = phi.query(&m)?;
            if let DyadicInterval::Finite { center, radius } = &j {
                ops::charge_cmp(radius, &threshold);
                if *radius <= threshold {
                    return Ok(ops::round_nearest(center, n + 2));
                }
            }
        }
        Err(NameError::FuelExhausted {
            spent: fuel,
            context: format!("no enclosure of diameter <= 2^-{}", n + 1),
        })
    })
}

/// Pads `phi(a)` to length `B(|a|) + 1` as `phi(a) 0 1^(B(|a|) - |phi(a)|)`.
pub fn pad_length_monotone(phi: &StringFunctionName, bound: &MonotoneTable) -> StringFunctionName {
    let phi = phi.clone();
    let bound = bound.clone();
    let note = format!("padded {}", phi.note());
    Name::from_callback(note, move |a: &BitString| {
        let body = phi.query(a)?;
        let b = bound.get(a.len() as u128)?;
        let len = body.len() as u64;
        if b < len {
            return Err(NameError::BoundViolated { bound: b, length: len });
        }
        let mut out = body;
        out.push(false);
        out.extend_from(&BitString::ones((b - len) as usize));
        Ok(out)
    })
}

/// Removes the trailing run of ones and the `0` marker before it.
pub fn strip_padding(padded: &StringFunctionName) -> StringFunctionName {
    let padded = padded.clone();
    let note = format!("stripped {}", padded.note());
    Name::from_callback(note, move |a: &BitString| {
        let s = padded.query(a)?;
        let bits = s.bits();
        let marker = bits
            .iter()
            .rposition(|&b| !b)
            .ok_or_else(|| NameError::Invalid(format!("`{s}` has no padding marker")))?;
        Ok(s.prefix(marker))
    })
}

/// Wraps `t` so that query `n` spends `budget_per_bit * n` fuel running the
/// tasks of `t` in order and answers with the last one completed, or the
/// infinite interval if none completes.
pub fn delay_transform(t: Arc<dyn ResumableTranslation>, budget_per_bit: u64) -> IntervalRealName {
    let note = format!("delay({}, {budget_per_bit})", t.describe());
    Name::from_callback(note, move |&n: &u64| {
        let mut fuel = Fuel::new(budget_per_bit.saturating_mul(n));
        let mut run = t.start();
        let mut last = DyadicInterval::Infinite;
        while let Progress::Done { answer, .. } = run.advance(&mut fuel)? {
            last = answer;
        }
        Ok(last)
    })
}

/// Index of the task answering query `n` of a delayed translation, if any.
pub fn delay_completed_tasks(t: &dyn ResumableTranslation, budget_per_bit: u64, n: u64) -> Result<Option<u64>, NameError> {
    let mut fuel = Fuel::new(budget_per_bit.saturating_mul(n));
    let mut run = t.start();
    let mut last = None;
    while let Progress::Done { index, .. } = run.advance(&mut fuel)? {
        last = Some(index);
    }
    Ok(last)
}
