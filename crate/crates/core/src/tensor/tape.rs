//! Wengert tape for reverse-mode differentiation.
//!
//! Operations append one node per output tensor, so insertion order is a
//! topological order by construction. `backward` walks the node list once in
//! strict reverse, popping each node's accumulated output gradient and
//! fanning it out to the node's parents through the recorded closure.
//!
//! One training step owns one tape. Recording is single-threaded; the types
//! are `Send + Sync` only so that finished tensors (parameters, feature maps)
//! can be shared by read-only parallel workers.

use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Gradient accumulator indexed by node id, alive for one backward pass.
/// Buffers are allocated lazily and released as soon as a node has been
/// visited, keeping peak memory at the live frontier of the graph.
pub(crate) struct GradStore {
    bufs: Vec<Option<Vec<f64>>>,
}

impl GradStore {
    fn new(n: usize) -> Self {
        GradStore {
            bufs: (0..n).map(|_| None).collect(),
        }
    }

    /// Mutable gradient buffer for `node`, zero-initialized on first access.
    pub(crate) fn buf(&mut self, node: usize, len: usize) -> &mut [f64] {
        let slot = &mut self.bufs[node];
        if slot.is_none() {
            *slot = Some(vec![0.0; len]);
        }
        slot.as_mut().unwrap()
    }

    /// Add `src` into the buffer for `node`.
    pub(crate) fn add(&mut self, node: usize, src: &[f64]) {
        let buf = self.buf(node, src.len());
        for (d, s) in buf.iter_mut().zip(src) {
            *d += s;
        }
    }

    fn take(&mut self, node: usize) -> Option<Vec<f64>> {
        self.bufs[node].take()
    }
}

pub(crate) type BackwardFn = Box<dyn Fn(&[f64], &mut GradStore) + Send + Sync>;

struct Node {
    backward: BackwardFn,
}

pub(crate) struct TapeCore {
    nodes: Mutex<Vec<Node>>,
}

/// Recording context for one forward/backward pass.
pub struct Tape {
    core: Arc<TapeCore>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            core: Arc::new(TapeCore {
                nodes: Mutex::new(Vec::new()),
            }),
        }
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.core.nodes.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Register `t` as a leaf on this tape. Gradients reaching the leaf
    /// accumulate into the tensor's persistent `grad` buffer.
    pub fn watch(&self, t: &Tensor) {
        if t.binding_on(&self.core).is_some() {
            return;
        }
        let handle = t.clone();
        let id = record_node(
            &self.core,
            Box::new(move |og, _| {
                if handle.requires_grad() {
                    handle.accumulate_grad(og);
                }
            }),
        );
        t.bind(Arc::downgrade(&self.core), id);
    }

}

pub(crate) fn record_node(core: &Arc<TapeCore>, backward: BackwardFn) -> usize {
    let mut nodes = core.nodes.lock().unwrap();
    nodes.push(Node { backward });
    nodes.len() - 1
}

/// Resolve the tape shared by `operands`, if any of them is bound to a live
/// one, and the node id of each operand on that tape.
///
/// Operands that require gradients but are not yet bound get registered as
/// leaves on the discovered tape; plain constants stay unbound (`None`) and
/// receive no gradient.
pub(crate) fn tape_of(operands: &[&Tensor]) -> Result<Option<(Arc<TapeCore>, Vec<Option<usize>>)>> {
    let mut tape: Option<Arc<TapeCore>> = None;
    for t in operands {
        if let Some((core, _)) = t.live_binding() {
            match &tape {
                None => tape = Some(core),
                Some(existing) => {
                    if !Arc::ptr_eq(existing, &core) {
                        return Err(Error::Contract(
                            "operands are recorded on different tapes".into(),
                        ));
                    }
                }
            }
        }
    }
    let Some(core) = tape else {
        return Ok(None);
    };
    let mut ids = Vec::with_capacity(operands.len());
    for t in operands {
        if let Some(id) = t.binding_on(&core) {
            ids.push(Some(id));
        } else if t.requires_grad() {
            let handle = (*t).clone();
            let id = record_node(
                &core,
                Box::new(move |og, _| handle.accumulate_grad(og)),
            );
            t.bind(Arc::downgrade(&core), id);
            ids.push(Some(id));
        } else {
            ids.push(None);
        }
    }
    Ok(Some((core, ids)))
}

/// Record `out` as the result of an operation with the given backward rule.
pub(crate) fn record_result(core: &Arc<TapeCore>, out: &Tensor, backward: BackwardFn) {
    let id = record_node(core, backward);
    out.bind(Arc::downgrade(core), id);
}

/// Reverse pass from a scalar loss: seeds d(loss)/d(loss) = 1 and visits
/// every node in strict reverse insertion order exactly once. Parameter
/// gradients accumulate across repeated calls until reset.
pub fn backward(loss: &Tensor) -> Result<()> {
    if loss.len() != 1 {
        return Err(Error::Contract(format!(
            "backward requires a scalar loss, got shape {:?}",
            loss.shape()
        )));
    }
    let Some((core, loss_node)) = loss.live_binding() else {
        return Err(Error::Contract(
            "loss is not connected to a live tape".into(),
        ));
    };
    let nodes = core.nodes.lock().unwrap();
    let mut store = GradStore::new(nodes.len());
    store.add(loss_node, &[1.0]);
    for i in (0..=loss_node).rev() {
        if let Some(og) = store.take(i) {
            (nodes[i].backward)(&og, &mut store);
        }
    }
    Ok(())
}
