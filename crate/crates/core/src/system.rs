//! Systems: the virtual description, the parameter-bound (metastable) system,
//! its execution, and the structural/operational split.

use crate::ann::PerceptronUpdate;
use crate::ca::{self, RuleTable};
use crate::error::{Error, Result};
use crate::milieu::{LinkKind, MilieuMatrix};
use crate::state::{EntityTuple, StateSet};
use crate::trajectory::Trajectory;

/// How entity states advance in one call to [`MetastableSystem::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Schedule {
    /// Every entity is updated from the frozen time-`t` snapshot.
    SynchronousAll,
    /// One layer of a layered network is updated per step, in order.
    LayeredSweep,
}

impl Schedule {
    pub fn name(self) -> &'static str {
        match self {
            Schedule::SynchronousAll => "synchronous",
            Schedule::LayeredSweep => "layered",
        }
    }
}

/// Which parameters of a system were not given and had to be searched for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Unknowns {
    pub update: bool,
    pub milieu: bool,
    pub initial: bool,
}

/// Abstract description of a system before its parameters are bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemSpec {
    pub states: StateSet,
    pub p: usize,
    pub schedule: Schedule,
    pub unknowns: Unknowns,
}

impl SystemSpec {
    pub fn new(states: StateSet, p: usize, schedule: Schedule) -> Self {
        Self { states, p, schedule, unknowns: Unknowns::default() }
    }

    pub fn with_unknowns(mut self, unknowns: Unknowns) -> Self {
        self.unknowns = unknowns;
        self
    }
}

/// The update function `φ`.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateFunction {
    RuleTable(RuleTable),
    Perceptron(PerceptronUpdate),
}

impl UpdateFunction {
    pub fn kind_name(&self) -> &'static str {
        match self {
            UpdateFunction::RuleTable(_) => "ca",
            UpdateFunction::Perceptron(_) => "ann",
        }
    }
}

/// A system with every parameter bound, ready to execute.
#[derive(Debug, Clone, PartialEq)]
pub struct MetastableSystem {
    spec: SystemSpec,
    phi: UpdateFunction,
    milieu: MilieuMatrix,
    initial: EntityTuple,
    current: EntityTuple,
    t: u64,
}

/// Bind all parameters into a runnable system at `t = 0`.
pub fn modulate(
    spec: SystemSpec,
    phi: UpdateFunction,
    milieu: MilieuMatrix,
    initial: EntityTuple,
) -> Result<MetastableSystem> {
    let p = spec.p;
    if p == 0 {
        return Err(Error::DimensionMismatch("p must be at least 1".into()));
    }
    if milieu.dimension() != p {
        return Err(Error::DimensionMismatch(format!("milieu is {0}x{0} but p = {p}", milieu.dimension())));
    }
    if initial.len() != p {
        return Err(Error::DimensionMismatch(format!("initial state has {} entities but p = {p}", initial.len())));
    }
    // Re-validate against the spec's state set (the tuple may carry another).
    let initial = EntityTuple::new(spec.states, initial.states().to_vec())?;
    check_update_fits(&spec, &phi, &milieu)?;
    Ok(MetastableSystem { spec, phi, current: initial.clone(), milieu, initial, t: 0 })
}

fn check_update_fits(spec: &SystemSpec, phi: &UpdateFunction, milieu: &MilieuMatrix) -> Result<()> {
    match phi {
        UpdateFunction::RuleTable(_) => {
            if spec.states != StateSet::Boolean {
                return Err(Error::IncompatibleUpdate("a rule table needs boolean states".into()));
            }
            if spec.schedule != Schedule::SynchronousAll {
                return Err(Error::IncompatibleUpdate("a rule table runs under the synchronous schedule".into()));
            }
            for i in 0..spec.p {
                ca::neighborhood(milieu, i)?;
            }
            Ok(())
        }
        UpdateFunction::Perceptron(update) => {
            if spec.schedule != Schedule::LayeredSweep {
                return Err(Error::IncompatibleUpdate("a perceptron network runs under the layered schedule".into()));
            }
            if milieu.kind() != LinkKind::Weighted {
                return Err(Error::IncompatibleUpdate("a perceptron network needs a weighted milieu".into()));
            }
            update.check_milieu(milieu)
        }
    }
}

/// Structural parameters: what the system is made of.
#[derive(Debug, Clone, PartialEq)]
pub struct Structural {
    pub p: usize,
    pub states: StateSet,
    pub initial: EntityTuple,
    pub current: EntityTuple,
    pub t: u64,
}

/// Operational parameters: how the system changes.
#[derive(Debug, Clone, PartialEq)]
pub struct Operational {
    pub phi: UpdateFunction,
    pub milieu: MilieuMatrix,
    pub schedule: Schedule,
    /// Milieu size `q_i` per entity.
    pub milieu_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demodulated {
    pub structural: Structural,
    pub operational: Operational,
    pub unknowns: Unknowns,
}

impl Demodulated {
    /// Rebuild the system, including its current state and time step.
    pub fn remodulate(self) -> Result<MetastableSystem> {
        let spec = SystemSpec {
            states: self.structural.states,
            p: self.structural.p,
            schedule: self.operational.schedule,
            unknowns: self.unknowns,
        };
        let mut system = modulate(spec, self.operational.phi, self.operational.milieu, self.structural.initial)?;
        let current = EntityTuple::new(spec.states, self.structural.current.states().to_vec())?;
        if current.len() != spec.p {
            return Err(Error::DimensionMismatch("current state has the wrong length".into()));
        }
        system.current = current;
        system.t = self.structural.t;
        Ok(system)
    }
}

/// Split a system into its structural and operational parameters.
pub fn demodulate(system: &MetastableSystem) -> Demodulated {
    Demodulated {
        structural: Structural {
            p: system.spec.p,
            states: system.spec.states,
            initial: system.initial.clone(),
            current: system.current.clone(),
            t: system.t,
        },
        operational: Operational {
            phi: system.phi.clone(),
            milieu: system.milieu.clone(),
            schedule: system.spec.schedule,
            milieu_sizes: system.milieu.milieu_sizes(),
        },
        unknowns: system.spec.unknowns,
    }
}

impl MetastableSystem {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn phi(&self) -> &UpdateFunction {
        &self.phi
    }

    pub fn milieu(&self) -> &MilieuMatrix {
        &self.milieu
    }

    pub fn initial(&self) -> &EntityTuple {
        &self.initial
    }

    pub fn current(&self) -> &EntityTuple {
        &self.current
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn p(&self) -> usize {
        self.spec.p
    }

    /// The system one step later.
    pub fn step(&self) -> Result<Self> {
        let mut next = self.clone();
        next.advance()?;
        Ok(next)
    }

    /// Advance this system by one step in place.
    pub fn advance(&mut self) -> Result<()> {
        match self.spec.schedule {
            Schedule::SynchronousAll => {
                let order: Vec<usize> = (0..self.spec.p).collect();
                self.advance_synchronous(&order)
            }
            Schedule::LayeredSweep => self.advance_layer(),
        }
    }

    /// Synchronous step evaluating entities in the given order. The result
    /// does not depend on the order; `order` must be a permutation of `0..p`.
    pub fn step_in_order(&self, order: &[usize]) -> Result<Self> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..self.spec.p).collect::<Vec<_>>() {
            return Err(Error::DimensionMismatch("evaluation order must be a permutation of the entities".into()));
        }
        let mut next = self.clone();
        match self.spec.schedule {
            Schedule::SynchronousAll => next.advance_synchronous(order)?,
            Schedule::LayeredSweep => next.advance_layer()?,
        }
        Ok(next)
    }

    fn advance_synchronous(&mut self, order: &[usize]) -> Result<()> {
        let snapshot = self.current.states();
        let mut next = snapshot.to_vec();
        for &i in order {
            next[i] = self.evaluate(i, snapshot)?;
        }
        self.commit(next)
    }

    fn advance_layer(&mut self) -> Result<()> {
        let UpdateFunction::Perceptron(update) = &self.phi else {
            return Err(Error::IncompatibleUpdate("the layered schedule needs a perceptron network".into()));
        };
        let layer = update.layer_at_time(self.t);
        let snapshot = self.current.states();
        let mut next = snapshot.to_vec();
        for j in update.layer_range(layer) {
            next[j] = self.evaluate(j, snapshot)?;
        }
        self.commit(next)
    }

    fn commit(&mut self, next: Vec<f64>) -> Result<()> {
        let set = self.spec.states;
        if let Some((index, &value)) = next.iter().enumerate().find(|(_, v)| !set.contains(**v)) {
            return Err(Error::UpdateDomainViolation { index, value, set: set.name() });
        }
        self.current = EntityTuple::from_parts_unchecked(set, next);
        self.t += 1;
        Ok(())
    }

    /// New state of entity `i` from the given snapshot.
    fn evaluate(&self, i: usize, snapshot: &[f64]) -> Result<f64> {
        match &self.phi {
            UpdateFunction::RuleTable(table) => {
                let [l, c, r] = ca::neighborhood(&self.milieu, i)?;
                let bit = |k: usize| u8::from(snapshot[k] != 0.0);
                Ok(f64::from(ca::ca_update(bit(l), bit(c), bit(r), table)))
            }
            UpdateFunction::Perceptron(update) => {
                let links = self.milieu.row(i);
                let activations: Vec<f64> = links.iter().map(|l| snapshot[l.source]).collect();
                let weights: Vec<f64> = links.iter().map(|l| l.weight).collect();
                let bias = update.bias(i).unwrap_or(0.0);
                let input = crate::ann::input_sum(&activations, &weights, bias)?;
                Ok(f64::from(crate::ann::activate(input)?))
            }
        }
    }

    /// Execute `steps` steps, recording `steps + 1` snapshots.
    pub fn run(&self, steps: u64) -> Result<Trajectory> {
        let mut system = self.clone();
        let mut snapshots = Vec::with_capacity(steps as usize + 1);
        snapshots.push(system.current.clone());
        for _ in 0..steps {
            system.advance()?;
            snapshots.push(system.current.clone());
        }
        Ok(Trajectory::new(snapshots))
    }

    /// State after `steps` steps without recording the trajectory.
    pub fn run_to_end(&self, steps: u64) -> Result<EntityTuple> {
        let mut system = self.clone();
        for _ in 0..steps {
            system.advance()?;
        }
        Ok(system.current)
    }
}
