//! Multilayer feedforward threshold-perceptron networks.
//!
//! Entity `ℓ·w + k` is perceptron `k` of layer `ℓ`. Weights live in the
//! milieu matrix (row `j` holds the links into perceptron `j`), biases in a
//! separate vector with the bias activation fixed at 1.

use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};
use crate::milieu::{Link, LinkKind, MilieuMatrix};
pub use crate::parallel::attempt_rng;
use crate::parallel::first_success;
use crate::state::{match_score, EntityTuple};
use crate::system::{modulate, MetastableSystem, Schedule, SystemSpec, UpdateFunction};

/// Activation threshold of every perceptron.
pub const THRESHOLD: f64 = 0.5;

/// Weights are kept on a 1e-9 grid so their nine-place text form is exact.
pub fn quantize_weight(w: f64) -> f64 {
    (w * 1e9).round() / 1e9
}

/// In-function of a perceptron: `bias + Σ weight·activation`, summed in order.
pub fn input_sum(activations: &[f64], weights: &[f64], bias: f64) -> Result<f64> {
    if activations.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} activations but {} weights",
            activations.len(),
            weights.len()
        )));
    }
    Ok(activations.iter().zip(weights).fold(bias, |acc, (a, w)| acc + w * a))
}

/// Threshold activation; `0.5` itself activates.
pub fn activate(input: f64) -> Result<u8> {
    if !input.is_finite() {
        return Err(Error::NonFiniteInput(input));
    }
    Ok(u8::from(input >= THRESHOLD))
}

/// Perceptron learning rule: `ω + r·(y − a_j)·a_i`.
pub fn perceptron_update(weight: f64, rate: f64, target: u8, actual: u8, incoming: f64) -> f64 {
    weight + rate * (f64::from(target) - f64::from(actual)) * incoming
}

/// Update-function payload of a layered network: its shape and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronUpdate {
    layers: usize,
    width: usize,
    /// One bias per perceptron of layers `1..layers`, entity order.
    biases: Vec<f64>,
}

impl PerceptronUpdate {
    pub fn new(layers: usize, width: usize, biases: Vec<f64>) -> Result<Self> {
        if layers < 2 || width == 0 {
            return Err(Error::BadDimensions(format!(
                "need at least 2 layers of width at least 1, got {layers}x{width}"
            )));
        }
        if biases.len() != (layers - 1) * width {
            return Err(Error::DimensionMismatch(format!(
                "{} biases for {} non-input perceptrons",
                biases.len(),
                (layers - 1) * width
            )));
        }
        if biases.iter().any(|b| !b.is_finite()) {
            return Err(Error::IncompatibleUpdate("biases must be finite".into()));
        }
        Ok(Self { layers, width, biases })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn entity_count(&self) -> usize {
        self.layers * self.width
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Bias of entity `i`; `None` for input perceptrons.
    pub fn bias(&self, i: usize) -> Option<f64> {
        i.checked_sub(self.width).and_then(|k| self.biases.get(k).copied())
    }

    pub fn layer_range(&self, layer: usize) -> Range<usize> {
        layer * self.width..(layer + 1) * self.width
    }

    /// Layer computed by the step taken at time `t`.
    pub fn layer_at_time(&self, t: u64) -> usize {
        (t % (self.layers as u64 - 1)) as usize + 1
    }

    /// Links may only run from layer `ℓ` into layer `ℓ + 1`.
    pub fn check_milieu(&self, milieu: &MilieuMatrix) -> Result<()> {
        if milieu.dimension() != self.entity_count() {
            return Err(Error::DimensionMismatch(format!(
                "milieu has {} entities, network has {}",
                milieu.dimension(),
                self.entity_count()
            )));
        }
        for j in 0..milieu.dimension() {
            let layer = j / self.width;
            let bad = milieu.row(j).iter().find(|l| layer == 0 || l.source / self.width != layer - 1);
            if let Some(link) = bad {
                return Err(Error::IncompatibleUpdate(format!(
                    "link {} -> {j} does not join consecutive layers",
                    link.source
                )));
            }
        }
        Ok(())
    }
}

/// A network's weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredTopology {
    update: PerceptronUpdate,
    milieu: MilieuMatrix,
}

/// Fully connected consecutive layers with all weights and biases zero.
pub fn layered_milieu(layers: usize, width: usize) -> Result<LayeredTopology> {
    if layers < 2 || width == 0 {
        return Err(Error::BadDimensions(format!("need at least 2 layers of width at least 1, got {layers}x{width}")));
    }
    let p = layers * width;
    let rows = (0..p)
        .map(|j| {
            let layer = j / width;
            if layer == 0 {
                Vec::new()
            } else {
                ((layer - 1) * width..layer * width).map(|source| Link { source, weight: 0.0 }).collect()
            }
        })
        .collect();
    Ok(LayeredTopology {
        update: PerceptronUpdate::new(layers, width, vec![0.0; (layers - 1) * width])?,
        milieu: MilieuMatrix::from_rows(LinkKind::Weighted, rows)?,
    })
}

/// Activations of every layer after a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub layers: Vec<Vec<u8>>,
}

impl Forward {
    pub fn output(&self) -> &[u8] {
        self.layers.last().expect("at least two layers")
    }
}

impl LayeredTopology {
    pub fn from_parts(update: PerceptronUpdate, milieu: MilieuMatrix) -> Result<Self> {
        if milieu.kind() != LinkKind::Weighted {
            return Err(Error::IncompatibleUpdate("a network needs a weighted milieu".into()));
        }
        update.check_milieu(&milieu)?;
        Ok(Self { update, milieu })
    }

    /// Recover the network from a perceptron system.
    pub fn from_system(system: &MetastableSystem) -> Result<Self> {
        match system.phi() {
            UpdateFunction::Perceptron(update) => Self::from_parts(update.clone(), system.milieu().clone()),
            UpdateFunction::RuleTable(_) => Err(Error::IncompatibleUpdate("not a perceptron system".into())),
        }
    }

    pub fn layers(&self) -> usize {
        self.update.layers
    }

    pub fn width(&self) -> usize {
        self.update.width
    }

    pub fn entity_count(&self) -> usize {
        self.update.entity_count()
    }

    pub fn update(&self) -> &PerceptronUpdate {
        &self.update
    }

    pub fn milieu(&self) -> &MilieuMatrix {
        &self.milieu
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.milieu.get(to, from)
    }

    pub fn set_weight(&mut self, from: usize, to: usize, weight: f64) -> Result<()> {
        self.milieu.set_weight(to, from, weight)
    }

    pub fn bias(&self, entity: usize) -> Option<f64> {
        self.update.bias(entity)
    }

    pub fn set_bias(&mut self, entity: usize, bias: f64) -> Result<()> {
        let k = entity
            .checked_sub(self.update.width)
            .filter(|&k| k < self.update.biases.len())
            .ok_or_else(|| Error::DimensionMismatch(format!("entity {entity} has no bias")))?;
        self.update.biases[k] = bias;
        Ok(())
    }

    fn check_input(&self, input: &EntityTuple) -> Result<()> {
        if input.len() != self.width() {
            return Err(Error::DimensionMismatch(format!(
                "input has {} entries, layer width is {}",
                input.len(),
                self.width()
            )));
        }
        Ok(())
    }

    /// Activations of one layer computed from the previous layer's.
    fn layer_activations(&self, layer: usize, previous: &[f64]) -> Result<Vec<u8>> {
        let offset = (layer - 1) * self.width();
        self.update
            .layer_range(layer)
            .map(|j| {
                let links = self.milieu.row(j);
                let activations: Vec<f64> = links.iter().map(|l| previous[l.source - offset]).collect();
                let weights: Vec<f64> = links.iter().map(|l| l.weight).collect();
                activate(input_sum(&activations, &weights, self.update.bias(j).unwrap_or(0.0))?)
            })
            .collect()
    }

    /// Propagate `input` layer by layer to the output layer.
    pub fn forward(&self, input: &EntityTuple) -> Result<Forward> {
        self.check_input(input)?;
        let mut layers = Vec::with_capacity(self.layers());
        let mut current: Vec<f64> = input.states().to_vec();
        layers.push(input.bits());
        for layer in 1..self.layers() {
            let next = self.layer_activations(layer, &current)?;
            current = next.iter().map(|&b| f64::from(b)).collect();
            layers.push(next);
        }
        Ok(Forward { layers })
    }

    /// The network as a layered-sweep system: layer 0 holds `input`, every
    /// other perceptron starts at 0. `layers - 1` steps produce the output.
    pub fn system(&self, input: &EntityTuple) -> Result<MetastableSystem> {
        self.check_input(input)?;
        let mut states = input.states().to_vec();
        states.resize(self.entity_count(), 0.0);
        let set = input.set();
        modulate(
            SystemSpec::new(set, self.entity_count(), Schedule::LayeredSweep),
            UpdateFunction::Perceptron(self.update.clone()),
            self.milieu.clone(),
            EntityTuple::new(set, states)?,
        )
    }

    /// Fill every weight and bias with independent draws from `[low, high]`,
    /// layer by layer, each perceptron's incoming weights then its bias.
    pub fn randomize<R: Rng>(&mut self, rng: &mut R, low: f64, high: f64) {
        let width = self.width();
        for j in width..self.entity_count() {
            for link in self.milieu.row_mut(j) {
                link.weight = quantize_weight(rng.gen_range(low..=high));
            }
            self.update.biases[j - width] = quantize_weight(rng.gen_range(low..=high));
        }
    }

    /// Apply the learning rule to every weight and bias into `layer`, given
    /// the previous layer's activations, the layer's actual activations and
    /// its targets.
    fn learn_layer(&mut self, layer: usize, previous: &[u8], actual: &[u8], target: &[u8], rate: f64) {
        let width = self.width();
        let offset = (layer - 1) * width;
        for (k, j) in self.update.layer_range(layer).enumerate() {
            if actual[k] == target[k] {
                continue;
            }
            for link in self.milieu.row_mut(j) {
                let incoming = f64::from(previous[link.source - offset]);
                link.weight = quantize_weight(perceptron_update(link.weight, rate, target[k], actual[k], incoming));
            }
            let b = &mut self.update.biases[j - width];
            *b = quantize_weight(perceptron_update(*b, rate, target[k], actual[k], 1.0));
        }
    }
}

fn errors(actual: &[u8], target: &[u8]) -> usize {
    actual.iter().zip(target).filter(|(a, t)| a != t).count()
}

/// Train only the weights into the output layer with the hidden activations
/// `hidden` (the second-to-last layer) held fixed. Returns the number of
/// wrong output bits before each epoch and after the last one.
pub fn fit_output_layer(
    topology: &mut LayeredTopology,
    hidden: &[u8],
    target: &[u8],
    rate: f64,
    epochs: usize,
) -> Result<Vec<usize>> {
    let out = topology.layers() - 1;
    let hidden_f: Vec<f64> = hidden.iter().map(|&b| f64::from(b)).collect();
    let mut history = Vec::with_capacity(epochs + 1);
    for epoch in 0..=epochs {
        let actual = topology.layer_activations(out, &hidden_f)?;
        let wrong = errors(&actual, target);
        history.push(wrong);
        if wrong == 0 || epoch == epochs {
            break;
        }
        topology.learn_layer(out, hidden, &actual, target, rate);
    }
    Ok(history)
}

/// Which weights the learning rule adjusts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Only the weights into the output layer; hidden weights stay at their
    /// random initial values for the whole attempt.
    OutputLayerOnly,
    /// Every layer learns against its own target tuple.
    LayerwiseTargets,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::OutputLayerOnly => "output-layer",
            Strategy::LayerwiseTargets => "layerwise",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "output-layer" => Some(Strategy::OutputLayerOnly),
            "layerwise" => Some(Strategy::LayerwiseTargets),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub rate: f64,
    pub epochs: usize,
    pub budget: usize,
    pub init_low: f64,
    pub init_high: f64,
    pub strategy: Strategy,
    /// Targets of the hidden layers `1..layers-1` for
    /// [`Strategy::LayerwiseTargets`]. When absent every hidden layer is
    /// trained toward the output target.
    pub hidden_targets: Option<Vec<EntityTuple>>,
    /// Evaluate attempts on the rayon pool. The report is identical either way.
    pub parallel: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            rate: 0.1,
            epochs: 200,
            budget: 100_000,
            init_low: -1.0,
            init_high: 1.0,
            strategy: Strategy::OutputLayerOnly,
            hidden_targets: None,
            parallel: false,
        }
    }
}

impl TrainingConfig {
    fn validate(&self, topology: &LayeredTopology) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {} must be finite and > 0", self.rate)));
        }
        if self.epochs == 0 || self.budget == 0 {
            return Err(Error::InvalidConfig("epochs and budget must be at least 1".into()));
        }
        if !(self.init_low <= self.init_high && self.init_low.is_finite() && self.init_high.is_finite()) {
            return Err(Error::InvalidConfig("bad weight initialisation range".into()));
        }
        if let Some(targets) = &self.hidden_targets {
            if targets.len() != topology.layers() - 2 || targets.iter().any(|t| t.len() != topology.width()) {
                return Err(Error::DimensionMismatch(format!(
                    "need {} hidden targets of width {}",
                    topology.layers() - 2,
                    topology.width()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub attempts: usize,
    pub best_match: f64,
    /// 1-based attempt that produced the best match (lowest index on ties).
    pub best_attempt: usize,
    pub best: LayeredTopology,
    /// Best match reached within each attempt.
    pub history: Vec<f64>,
}

impl TrainingReport {
    pub fn exact(&self) -> bool {
        self.best_match == 1.0
    }
}

struct Attempt {
    best_match: f64,
    network: LayeredTopology,
}

fn run_attempt(
    shape: &LayeredTopology,
    input: &EntityTuple,
    target: &EntityTuple,
    config: &TrainingConfig,
    seed: u64,
    index: usize,
) -> Result<Attempt> {
    let mut net = shape.clone();
    let mut rng = attempt_rng(seed, index);
    net.randomize(&mut rng, config.init_low, config.init_high);
    let target_bits = target.bits();
    let out = net.layers() - 1;
    let score = |bits: &[u8]| -> Result<f64> { match_score(&EntityTuple::from_bits(bits)?, target) };

    let best_match = match config.strategy {
        Strategy::OutputLayerOnly => {
            let forward = net.forward(input)?;
            let hidden = forward.layers[out - 1].clone();
            let history = fit_output_layer(&mut net, &hidden, &target_bits, config.rate, config.epochs)?;
            let fewest = history.iter().copied().min().unwrap_or(net.width());
            (net.width() - fewest) as f64 / net.width() as f64
        }
        Strategy::LayerwiseTargets => {
            let layer_targets: Vec<Vec<u8>> = (1..net.layers())
                .map(|layer| match (&config.hidden_targets, layer == out) {
                    (Some(targets), false) => targets[layer - 1].bits(),
                    _ => target_bits.clone(),
                })
                .collect();
            let mut best: f64 = 0.0;
            for epoch in 0..=config.epochs {
                let forward = net.forward(input)?;
                best = best.max(score(forward.output())?);
                if best == 1.0 || epoch == config.epochs {
                    break;
                }
                for layer in 1..net.layers() {
                    net.learn_layer(
                        layer,
                        &forward.layers[layer - 1],
                        &forward.layers[layer],
                        &layer_targets[layer - 1],
                        config.rate,
                    );
                }
            }
            best
        }
    };
    Ok(Attempt { best_match, network: net })
}

/// Repeat randomly initialised training attempts until the output matches
/// `target` exactly or the budget runs out.
pub fn train(
    topology: &LayeredTopology,
    input: &EntityTuple,
    target: &EntityTuple,
    config: &TrainingConfig,
    seed: u64,
) -> Result<TrainingReport> {
    topology.check_input(input)?;
    if target.len() != topology.width() {
        return Err(Error::DimensionMismatch(format!(
            "target has {} entries, layer width is {}",
            target.len(),
            topology.width()
        )));
    }
    config.validate(topology)?;

    let attempts = first_success(
        config.budget,
        config.parallel,
        |index| run_attempt(topology, input, target, config, seed, index),
        |a: &Attempt| a.best_match == 1.0,
    )?;

    let history: Vec<f64> = attempts.iter().map(|a| a.best_match).collect();
    let (best_index, _) =
        history
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bm), (i, &m)| if m > bm { (i, m) } else { (bi, bm) });
    let count = attempts.len();
    let best = attempts.into_iter().nth(best_index).expect("budget >= 1");
    Ok(TrainingReport {
        attempts: count,
        best_match: best.best_match,
        best_attempt: best_index + 1,
        best: best.network,
        history,
    })
}

/// Convenience: the network's output for `input` as an entity tuple.
pub fn output_tuple(topology: &LayeredTopology, input: &EntityTuple) -> Result<EntityTuple> {
    EntityTuple::from_bits(topology.forward(input)?.output())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_sum_examples() {
        assert_eq!(input_sum(&[1.0, 1.0], &[0.0, 0.0], 0.0).unwrap(), 0.0);
        let v = input_sum(&[1.0, 0.0, 1.0], &[0.2, 0.9, 0.4], 0.1).unwrap();
        assert!((v - 0.7).abs() < 1e-12);
        assert_eq!(input_sum(&[0.0, 0.0], &[0.3, -0.2], 0.6).unwrap(), 0.6);
        assert!(matches!(input_sum(&[1.0], &[0.1, 0.2], 0.0), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn activation_threshold() {
        assert_eq!(activate(0.5).unwrap(), 1);
        assert_eq!(activate(0.499_999_999).unwrap(), 0);
        assert_eq!(activate(-3.0).unwrap(), 0);
        assert!(matches!(activate(f64::NAN), Err(Error::NonFiniteInput(_))));
        assert!(activate(f64::INFINITY).is_err());
    }

    #[test]
    fn learning_rule_examples() {
        assert!((perceptron_update(0.2, 0.1, 1, 0, 1.0) - 0.3).abs() < 1e-15);
        assert_eq!(perceptron_update(0.2, 0.1, 1, 1, 1.0), 0.2);
        assert_eq!(perceptron_update(0.2, 0.1, 0, 1, 0.0), 0.2);
    }

    #[test]
    fn topology_shapes() {
        let t = layered_milieu(15, 31).unwrap();
        assert_eq!(t.entity_count(), 465);
        for j in 31..62 {
            assert_eq!(t.milieu().row(j).len(), 31);
            assert!(t.bias(j).is_some());
        }
        assert!(t.bias(0).is_none() && t.bias(30).is_none());
        assert!(t.milieu().row(0).is_empty());

        let small = layered_milieu(2, 1).unwrap();
        assert_eq!(small.milieu().link_count(), 1);
        assert_eq!(small.update().biases().len(), 1);

        assert!(matches!(layered_milieu(1, 31), Err(Error::BadDimensions(_))));
        assert!(matches!(layered_milieu(3, 0), Err(Error::BadDimensions(_))));
    }

    #[test]
    fn forward_examples() {
        let zero = layered_milieu(4, 5).unwrap();
        let input = EntityTuple::from_bits(&[1, 0, 1, 1, 0]).unwrap();
        assert_eq!(zero.forward(&input).unwrap().output(), &[0; 5]);

        let mut one = layered_milieu(2, 1).unwrap();
        one.set_weight(0, 1, 1.0).unwrap();
        let out = one.forward(&EntityTuple::from_bits(&[1]).unwrap()).unwrap();
        assert_eq!(out.output(), &[1]);
        assert!(one.forward(&EntityTuple::from_bits(&[1, 0]).unwrap()).is_err());
    }

    #[test]
    fn forward_matches_layered_system() {
        let mut net = layered_milieu(5, 7).unwrap();
        net.randomize(&mut attempt_rng(3, 0), -1.0, 1.0);
        let input = EntityTuple::from_bits(&[1, 0, 0, 1, 1, 0, 1]).unwrap();
        let fw = net.forward(&input).unwrap();
        let end = net.system(&input).unwrap().run_to_end(4).unwrap();
        let flat: Vec<u8> = fw.layers.concat();
        assert_eq!(end.bits(), flat);
    }

    #[test]
    fn output_layer_errors_never_increase() {
        let mut net = layered_milieu(3, 9).unwrap();
        net.randomize(&mut attempt_rng(11, 2), -1.0, 1.0);
        let hidden = [1, 0, 1, 1, 0, 0, 1, 0, 1];
        let target = [0, 1, 1, 0, 1, 0, 0, 1, 1];
        let history = fit_output_layer(&mut net, &hidden, &target, 0.1, 200).unwrap();
        assert!(history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*history.last().unwrap(), 0);
    }

    #[test]
    fn rate_must_be_positive() {
        let net = layered_milieu(3, 6).unwrap();
        let input = EntityTuple::from_bits(&[1, 0, 1, 0, 1, 1]).unwrap();
        for rate in [0.0, -0.1, f64::NAN, f64::INFINITY] {
            let config = TrainingConfig { rate, budget: 1, ..TrainingConfig::default() };
            assert!(matches!(train(&net, &input, &input, &config, 1), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn target_equal_to_initial_output_needs_one_attempt() {
        let net = layered_milieu(4, 8).unwrap();
        let input = EntityTuple::from_bits(&[1, 1, 0, 0, 1, 0, 1, 0]).unwrap();
        let mut init = net.clone();
        init.randomize(&mut attempt_rng(5, 0), -1.0, 1.0);
        let target = output_tuple(&init, &input).unwrap();
        let report = train(&net, &input, &target, &TrainingConfig::default(), 5).unwrap();
        assert_eq!(report.attempts, 1);
        assert_eq!(report.best_match, 1.0);
        assert!(report.exact());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let net = layered_milieu(3, 2).unwrap();
        let x = EntityTuple::from_bits(&[1, 0]).unwrap();
        let bad = TrainingConfig { budget: 0, ..TrainingConfig::default() };
        assert!(train(&net, &x, &x, &bad, 0).is_err());
        let bad = TrainingConfig { rate: -0.1, ..TrainingConfig::default() };
        assert!(train(&net, &x, &x, &bad, 0).is_err());
        let y = EntityTuple::from_bits(&[1]).unwrap();
        assert!(train(&net, &x, &y, &TrainingConfig::default(), 0).is_err());
    }

    #[test]
    fn weights_stay_on_grid() {
        let mut net = layered_milieu(2, 3).unwrap();
        net.randomize(&mut attempt_rng(1, 1), -1.0, 1.0);
        for row in net.milieu().rows() {
            for l in row {
                assert_eq!(crate::trajectory::format_real(l.weight).parse::<f64>().unwrap(), l.weight);
            }
        }
    }
}
