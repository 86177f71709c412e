use serde::{Deserialize, Serialize};

use super::layers::{Cache, Layer, LayerSpec, Mode};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDef {
    pub name: String,
    /// Per-sample shape (no batch axis).
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDef {
    pub name: String,
    pub spec: LayerSpec,
    /// Names of graph inputs or earlier nodes.
    pub inputs: Vec<String>,
    #[serde(default = "default_true")]
    pub trainable: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDef {
    pub name: String,
    pub node: String,
}

/// Serializable description of a graph: everything except parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Topology {
    pub inputs: Vec<InputDef>,
    pub nodes: Vec<NodeDef>,
    pub outputs: Vec<OutputDef>,
    /// Seed for parameter initialization and the dropout stream.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
enum Src {
    Input(usize),
    Node(usize),
}

/// Incremental graph construction. Nodes may only reference inputs or
/// nodes added before them, so every built graph is acyclic.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    topo: Topology,
    last: Option<String>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(mut self, name: &str, shape: &[usize]) -> Self {
        self.topo.inputs.push(InputDef {
            name: name.to_string(),
            shape: shape.to_vec(),
        });
        self.last = Some(name.to_string());
        self
    }

    /// Adds a node with explicit inputs and returns its name.
    pub fn add(&mut self, name: &str, spec: LayerSpec, inputs: &[&str]) -> String {
        self.topo.nodes.push(NodeDef {
            name: name.to_string(),
            spec,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            trainable: true,
        });
        self.last = Some(name.to_string());
        name.to_string()
    }

    /// Appends a node fed by the most recently added node, auto-named
    /// `<prefix>_<kind>_<index>` when `prefix` is nonempty.
    pub fn push(&mut self, prefix: &str, spec: LayerSpec) -> String {
        let idx = self.topo.nodes.len();
        let name = if prefix.is_empty() {
            format!("{}_{idx}", spec.kind())
        } else {
            format!("{prefix}_{}_{idx}", spec.kind())
        };
        let from = self.last.clone().unwrap_or_default();
        self.add(&name, spec, &[&from])
    }

    /// Continue chaining from `name`.
    pub fn from(&mut self, name: &str) -> &mut Self {
        self.last = Some(name.to_string());
        self
    }

    pub fn last(&self) -> &str {
        self.last.as_deref().unwrap_or("")
    }

    pub fn output(&mut self, name: &str, node: &str) -> &mut Self {
        self.topo.outputs.push(OutputDef {
            name: name.to_string(),
            node: node.to_string(),
        });
        self
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn build(mut self, seed: u64) -> Result<NetworkGraph> {
        self.topo.seed = seed;
        NetworkGraph::from_topology(self.topo)
    }
}

/// Forward results keyed by output name, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs(Vec<(String, Tensor)>);

impl Outputs {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// The first declared output.
    pub fn primary(&self) -> &Tensor {
        &self.0[0].1
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.0.iter().map(|(n, t)| (n.as_str(), t))
    }
}

#[derive(Debug, Clone)]
pub struct NetworkGraph {
    topology: Topology,
    layers: Vec<Layer>,
    sources: Vec<Vec<Src>>,
    outputs: Vec<usize>,
    mode: Mode,
    rng: SplitMix64,
    caches: Option<Vec<Cache>>,
}

impl NetworkGraph {
    /// Validates the topology and initializes parameters from `topology.seed`.
    pub fn from_topology(topology: Topology) -> Result<Self> {
        if topology.inputs.is_empty() {
            return Err(Error::shape("graph has no inputs"));
        }
        let mut names: Vec<&str> = Vec::new();
        let mut shapes: Vec<Vec<usize>> = Vec::new();
        for inp in &topology.inputs {
            if names.contains(&inp.name.as_str()) {
                return Err(Error::shape(format!("duplicate name '{}'", inp.name)));
            }
            names.push(&inp.name);
        }
        let n_in = topology.inputs.len();
        let init_rng = SplitMix64::new(topology.seed);
        let mut layers = Vec::with_capacity(topology.nodes.len());
        let mut sources = Vec::with_capacity(topology.nodes.len());
        for (idx, node) in topology.nodes.iter().enumerate() {
            if names.contains(&node.name.as_str()) {
                return Err(Error::shape(format!("duplicate name '{}'", node.name)));
            }
            let mut srcs = Vec::new();
            let mut in_shapes = Vec::new();
            for r in &node.inputs {
                let pos = names.iter().position(|n| n == r).ok_or_else(|| {
                    Error::shape(format!(
                        "node '{}' references unknown or later node '{r}'",
                        node.name
                    ))
                })?;
                if pos < n_in {
                    srcs.push(Src::Input(pos));
                    in_shapes.push(topology.inputs[pos].shape.clone());
                } else {
                    srcs.push(Src::Node(pos - n_in));
                    in_shapes.push(shapes[pos - n_in].clone());
                }
            }
            let mut rng = init_rng.fork(idx as u64);
            let layer = Layer::new(node.spec.clone(), &in_shapes, &mut rng)
                .map_err(|e| Error::shape(format!("node '{}': {e}", node.name)))?;
            shapes.push(layer.output_shape().to_vec());
            layers.push(layer);
            sources.push(srcs);
            names.push(&node.name);
        }
        if topology.outputs.is_empty() {
            return Err(Error::shape("graph has no outputs"));
        }
        let mut outputs = Vec::new();
        for o in &topology.outputs {
            let pos = topology
                .nodes
                .iter()
                .position(|n| n.name == o.node)
                .ok_or_else(|| Error::shape(format!("output '{}' names unknown node '{}'", o.name, o.node)))?;
            outputs.push(pos);
        }
        let rng = SplitMix64::new(topology.seed).fork(u64::MAX);
        Ok(Self {
            topology,
            layers,
            sources,
            outputs,
            mode: Mode::Inference,
            rng,
            caches: None,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Restarts the dropout stream from `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = SplitMix64::new(seed).fork(u64::MAX);
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.topology.nodes.iter().map(|n| n.name.as_str())
    }

    /// Layer kinds in node order.
    pub fn layer_kinds(&self) -> Vec<&'static str> {
        self.layers.iter().map(|l| l.spec().kind()).collect()
    }

    pub fn layer(&self, name: &str) -> Option<&Layer> {
        self.index_of(name).map(|i| &self.layers[i])
    }

    pub fn layer_mut(&mut self, name: &str) -> Option<&mut Layer> {
        self.index_of(name).map(move |i| &mut self.layers[i])
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.topology.nodes.iter().position(|n| n.name == name)
    }

    pub fn inputs(&self) -> &[InputDef] {
        &self.topology.inputs
    }

    pub fn output_names(&self) -> Vec<&str> {
        self.topology.outputs.iter().map(|o| o.name.as_str()).collect()
    }

    /// Per-sample shape produced by an output.
    pub fn output_shape(&self, name: &str) -> Option<&[usize]> {
        let i = self.topology.outputs.iter().position(|o| o.name == name)?;
        Some(self.layers[self.outputs[i]].output_shape())
    }

    pub fn set_trainable(&mut self, node: &str, trainable: bool) -> Result<()> {
        let i = self
            .index_of(node)
            .ok_or_else(|| Error::param(format!("no node named '{node}'")))?;
        self.topology.nodes[i].trainable = trainable;
        Ok(())
    }

    /// Freezes every node whose name starts with `prefix`.
    pub fn freeze_prefix(&mut self, prefix: &str) -> usize {
        let mut count = 0;
        for n in &mut self.topology.nodes {
            if n.name.starts_with(prefix) {
                n.trainable = false;
                count += 1;
            }
        }
        count
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn trainable_param_count(&self) -> usize {
        self.layers
            .iter()
            .zip(&self.topology.nodes)
            .filter(|(_, n)| n.trainable)
            .map(|(l, _)| l.param_count())
            .sum()
    }

    /// Named parameters, `<node>.<param>`, in node order.
    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (l, n) in self.layers.iter().zip(&self.topology.nodes) {
            for (pn, p) in l.param_names().iter().zip(l.params()) {
                out.push((format!("{}.{pn}", n.name), p));
            }
        }
        out
    }

    pub fn named_grads(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (l, n) in self.layers.iter().zip(&self.topology.nodes) {
            for (pn, g) in l.param_names().iter().zip(l.grads()) {
                out.push((format!("{}.{pn}", n.name), g));
            }
        }
        out
    }

    /// Parameters followed by buffers: everything needed to restore state.
    pub fn state_records(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (l, n) in self.layers.iter().zip(&self.topology.nodes) {
            for (pn, p) in l.param_names().iter().zip(l.params()) {
                out.push((format!("{}.{pn}", n.name), p));
            }
            for (bn, b) in l.buffer_names().iter().zip(l.buffers()) {
                out.push((format!("{}.{bn}", n.name), b));
            }
        }
        out
    }

    /// Mutable access to one state record by its `state_records` name.
    pub fn state_record_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let (node, field) = name.rsplit_once('.')?;
        let i = self.index_of(node)?;
        let layer = &mut self.layers[i];
        if let Some(p) = layer.param_names().iter().position(|n| *n == field) {
            return layer.params.get_mut(p);
        }
        let b = layer.buffer_names().iter().position(|n| *n == field)?;
        layer.buffers.get_mut(b)
    }

    pub fn snapshot(&self) -> Vec<Tensor> {
        self.state_records().into_iter().map(|(_, t)| t.clone()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Tensor]) {
        let mut it = snapshot.iter();
        for l in &mut self.layers {
            for p in l.params.iter_mut().chain(l.buffers.iter_mut()) {
                *p = it.next().expect("snapshot from this graph").clone();
            }
        }
    }

    /// `(param, grad)` pairs for every trainable parameter, in node order.
    pub fn trainable_pairs(&mut self) -> Vec<(&mut Tensor, &Tensor)> {
        let mut out = Vec::new();
        for (l, n) in self.layers.iter_mut().zip(&self.topology.nodes) {
            if !n.trainable {
                continue;
            }
            let Layer { params, grads, .. } = l;
            for (p, g) in params.iter_mut().zip(grads.iter()) {
                out.push((p, &*g));
            }
        }
        out
    }

    fn bind_inputs<'a>(&self, inputs: &[(&str, &'a Tensor)]) -> Result<Vec<&'a Tensor>> {
        let mut bound = Vec::with_capacity(self.topology.inputs.len());
        let mut batch = None;
        for def in &self.topology.inputs {
            let t = inputs
                .iter()
                .find(|(n, _)| *n == def.name)
                .map(|(_, t)| *t)
                .ok_or_else(|| Error::shape(format!("missing graph input '{}'", def.name)))?;
            if t.shape().len() != def.shape.len() + 1 || t.shape()[1..] != def.shape[..] {
                return Err(Error::shape(format!(
                    "input '{}' expects per-sample shape {:?}, got {:?}",
                    def.name,
                    def.shape,
                    t.shape()
                )));
            }
            if *batch.get_or_insert(t.batch()) != t.batch() {
                return Err(Error::shape("graph inputs disagree on batch size"));
            }
            bound.push(t);
        }
        Ok(bound)
    }

    fn run(&self, inputs: &[(&str, &Tensor)], mode: Mode, rng: &mut SplitMix64) -> Result<(Vec<Tensor>, Vec<Cache>)> {
        let bound = self.bind_inputs(inputs)?;
        let mut values: Vec<Tensor> = Vec::with_capacity(self.layers.len());
        let mut caches = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let args: Vec<&Tensor> = self.sources[i]
                .iter()
                .map(|s| match *s {
                    Src::Input(k) => bound[k],
                    Src::Node(k) => &values[k],
                })
                .collect();
            let name = &self.topology.nodes[i].name;
            let (y, cache) = layer
                .forward(&args, mode, rng)
                .map_err(|e| Error::shape(format!("node '{name}': {e}")))?;
            y.ensure_finite(&format!("node '{name}'"))?;
            values.push(y);
            caches.push(cache);
        }
        Ok((values, caches))
    }

    fn collect_outputs(&self, values: &[Tensor]) -> Outputs {
        Outputs(
            self.topology
                .outputs
                .iter()
                .zip(&self.outputs)
                .map(|(o, &i)| (o.name.clone(), values[i].clone()))
                .collect(),
        )
    }

    /// Forward pass in the current mode, keeping activations for `backward`.
    pub fn forward(&mut self, inputs: &[(&str, &Tensor)]) -> Result<Outputs> {
        let mut rng = self.rng.clone();
        let (values, caches) = self.run(inputs, self.mode, &mut rng)?;
        self.rng = rng;
        if self.mode == Mode::Train {
            for (l, c) in self.layers.iter_mut().zip(&caches) {
                l.commit(c);
            }
        }
        self.caches = Some(caches);
        Ok(self.collect_outputs(&values))
    }

    /// Inference-mode forward pass on a shared graph; keeps no state.
    pub fn predict(&self, inputs: &[(&str, &Tensor)]) -> Result<Outputs> {
        let mut rng = SplitMix64::new(0);
        let (values, _) = self.run(inputs, Mode::Inference, &mut rng)?;
        Ok(self.collect_outputs(&values))
    }

    /// Backpropagates upstream gradients given per output name. Outputs
    /// without an entry contribute zero. Returns gradients for each graph
    /// input, in input order.
    pub fn backward(&mut self, upstream: &[(&str, &Tensor)]) -> Result<Vec<(String, Tensor)>> {
        let caches = self
            .caches
            .take()
            .ok_or_else(|| Error::State("backward called without a forward cache".into()))?;
        let mut node_grads: Vec<Option<Tensor>> = vec![None; self.layers.len()];
        for (name, g) in upstream {
            let pos = self
                .topology
                .outputs
                .iter()
                .position(|o| o.name == *name)
                .ok_or_else(|| Error::param(format!("no output named '{name}'")))?;
            accumulate(&mut node_grads[self.outputs[pos]], (*g).clone())?;
        }
        let mut input_grads: Vec<Option<Tensor>> = vec![None; self.topology.inputs.len()];
        for i in (0..self.layers.len()).rev() {
            let Some(g) = node_grads[i].take() else {
                let layer = &mut self.layers[i];
                layer.grads = layer.params.iter().map(|p| Tensor::zeros(p.shape())).collect();
                continue;
            };
            let name = self.topology.nodes[i].name.clone();
            let dxs = self.layers[i]
                .backward(&caches[i], &g)
                .map_err(|e| Error::shape(format!("node '{name}': {e}")))?;
            for l in self.layers[i].grads() {
                l.ensure_finite(&format!("gradient of node '{name}'"))?;
            }
            for (src, dx) in self.sources[i].clone().into_iter().zip(dxs) {
                match src {
                    Src::Input(k) => accumulate(&mut input_grads[k], dx)?,
                    Src::Node(k) => accumulate(&mut node_grads[k], dx)?,
                }
            }
        }
        Ok(self
            .topology
            .inputs
            .iter()
            .zip(input_grads)
            .map(|(d, g)| {
                let g = g.unwrap_or_else(|| Tensor::zeros(&[0]));
                (d.name.clone(), g)
            })
            .collect())
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: Tensor) -> Result<()> {
    match slot {
        None => *slot = Some(g),
        Some(acc) => {
            if acc.shape() != g.shape() {
                return Err(Error::shape("gradient shapes disagree at fan-out"));
            }
            for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
    }
    Ok(())
}
